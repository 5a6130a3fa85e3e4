//! Small derivative-free minimizers: Nelder-Mead, compass search and
//! golden-section search. Objective values of NaN are treated as `+inf`.

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size
/// `step`. Stops after `max_evals` evaluations or when the spread of
/// simplex values drops below `ftol` and its diameter below `xtol`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_evals: usize, ftol: f64, xtol: f64) -> OptResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        clean(f(x))
    };
    if n == 0 {
        let v = eval(x0, &mut evals);
        return OptResult { x: vec![], f: v, evals };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= ftol && diam <= xtol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = item.0.iter().zip(&x_best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let v = eval(&x, &mut evals);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    OptResult { x, f, evals }
}

/// Coordinate-wise pattern search: tries `+-step` along each axis, halves
/// the step when nothing improves.
pub fn compass_search<F>(mut f: F, x0: &[f64], step: f64, min_step: f64, max_evals: usize) -> OptResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut fx = clean(f(&x));
    let mut evals = 1;
    let mut h = step;
    while h >= min_step && evals < max_evals {
        let mut improved = false;
        for i in 0..x.len() {
            for s in [h, -h] {
                let mut y = x.clone();
                y[i] += s;
                let fy = clean(f(&y));
                evals += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    OptResult { x, f: fx, evals }
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns the best point seen and its value.
pub fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Bisection for the largest `s` in `[lo, hi]` with `ok(s)`, assuming
/// `ok(lo)` holds and `ok` is monotone.
pub fn bisect_largest<F>(mut ok: F, mut lo: f64, mut hi: f64, iters: usize) -> f64
where
    F: FnMut(f64) -> bool,
{
    if ok(hi) {
        return hi;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            0.5,
            20_000,
            1e-16,
            1e-10,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn nelder_mead_respects_budget_and_nan() {
        let r = nelder_mead(|x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) }, &[1.0], 0.3, 50, 0.0, 0.0);
        assert!(r.evals <= 52);
        assert!(r.f.is_finite());
    }

    #[test]
    fn compass_search_polishes() {
        let r = compass_search(|x| (x[0] - 0.3).abs() + (x[1] + 0.7).abs(), &[0.0, 0.0], 0.25, 1e-9, 10_000);
        assert!(r.f < 1e-8);
    }

    #[test]
    fn golden_and_bisection() {
        let (x, v) = golden_max(|t| -(t - 0.7).powi(2), 0.0, 2.0, 80);
        assert!((x - 0.7).abs() < 1e-8 && v <= 0.0);
        let s = bisect_largest(|s| s * s <= 2.0, 0.0, 4.0, 80);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }
}
