//! Poincaré distance, Carathéodory lower bounds from explicit families of
//! functions into the disc, and Lempert upper bounds from explicit analytic
//! discs (closed-form candidates plus a penalized disc optimizer).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{seeded_rng, DomainDescriptor, Mode};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, CVec, Mat2, SymMat2, C64, ONE, ZERO};
use crate::maps::{ball_moebius_unchecked, lambda, phi_unchecked, psi_omega, psi_unchecked};
use crate::optim::nelder_mead;
use crate::report::{Check, VerificationReport, Worst};
use crate::retractions::RetractionSpec;

/// Boundary slack allowed when certifying that a disc lies in the closure.
pub const DISC_SLACK: f64 = 1e-12;
/// An optimized disc replaces a closed-form candidate only if it improves
/// on it by more than this.
pub const CERTIFY_MARGIN: f64 = 1e-6;
/// Minimum number of boundary points used to certify a disc.
pub const MIN_GRID: usize = 256;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const ROYAL_TOL: f64 = 1e-14;

pub fn poincare(l1: C64, l2: C64) -> Result<f64> {
    for l in [l1, l2] {
        if !(l.norm() < 1.0) {
            return Err(Error::DomainViolation {
                domain: "disc".into(),
                value: l.norm(),
            });
        }
    }
    Ok(poincare_unchecked(l1, l2))
}

fn poincare_unchecked(l1: C64, l2: C64) -> f64 {
    let num = (l1 - l2).norm();
    if num == 0.0 {
        return 0.0;
    }
    // 1 - t with t = |(l1-l2)/(1-conj(l2) l1)| loses digits near the
    // boundary; use 1 - t^2 = (1-|l1|^2)(1-|l2|^2)/|1-conj(l2) l1|^2.
    let den = (ONE - l2.conj() * l1).norm();
    let t = (num / den).min(1.0);
    let one_minus_t2 = (1.0 - l1.norm_sqr()) * (1.0 - l2.norm_sqr()) / (den * den);
    0.5 * ((1.0 + t) * (1.0 + t) / one_minus_t2).ln()
}

/// `p(0, t)` for `0 <= t < 1`.
fn poincare_radius(t: f64) -> f64 {
    if t >= 1.0 {
        f64::INFINITY
    } else {
        t.atanh()
    }
}

/// An analytic map from the closed unit disc into `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscMap {
    /// `sum_k coefficients[k] lambda^k`.
    Polynomial { coefficients: Vec<CVec> },
    /// Componentwise `f_k(lambda) = (s_k lambda + z_k) / (1 + conj(z_k) s_k lambda)`.
    Moebius { scale: CVec, center: CVec },
    /// `(g1, g2, g1 g2)` for a two-dimensional disc `g`.
    Royal { base: Box<DiscMap> },
    /// Disc in the tetrablock through 0 with derivative `tangent` at 0;
    /// lies in the closure whenever `max(|t1|+|t3|, |t2|+|t3|) <= 1`.
    TetraTangent { tangent: CVec },
}

impl DiscMap {
    pub fn constant(z: CVec) -> Self {
        DiscMap::Polynomial { coefficients: vec![z] }
    }

    pub fn dim(&self) -> usize {
        match self {
            DiscMap::Polynomial { coefficients } => coefficients.first().map_or(0, CVec::dim),
            DiscMap::Moebius { scale, .. } => scale.dim(),
            DiscMap::Royal { .. } | DiscMap::TetraTangent { .. } => 3,
        }
    }

    /// Polynomial degree; `None` for the rational variants.
    pub fn degree(&self) -> Option<usize> {
        match self {
            DiscMap::Polynomial { coefficients } => Some(coefficients.len().saturating_sub(1)),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            DiscMap::Polynomial { coefficients } => coefficients.iter().skip(1).all(|c| c.max_abs() == 0.0),
            DiscMap::Moebius { scale, .. } => scale.max_abs() == 0.0,
            DiscMap::Royal { base } => base.is_constant(),
            DiscMap::TetraTangent { tangent } => tangent.max_abs() == 0.0,
        }
    }

    pub fn eval(&self, l: C64) -> CVec {
        match self {
            DiscMap::Polynomial { coefficients } => horner(coefficients, l),
            DiscMap::Moebius { scale, center } => CVec::new(
                scale
                    .iter()
                    .zip(center.iter())
                    .map(|(&s, &z)| (s * l + z) / (ONE + z.conj() * s * l))
                    .collect(),
            ),
            DiscMap::Royal { base } => {
                let g = base.eval(l);
                CVec::from([g[0], g[1], g[0] * g[1]])
            }
            DiscMap::TetraTangent { tangent } => tetra_tangent_eval(tangent, l),
        }
    }

    /// Largest domain gauge over `grid` equally spaced points of the unit
    /// circle (a NaN or dimension mismatch counts as infinite).
    pub fn max_boundary_gauge(&self, domain: &DomainDescriptor, grid: usize) -> f64 {
        if self.dim() != domain.dim() {
            return f64::INFINITY;
        }
        (0..grid)
            .map(|k| {
                let g = domain.gauge_unchecked(&self.eval(C64::from_polar(1.0, 2.0 * PI * k as f64 / grid as f64)));
                if g.is_nan() {
                    f64::INFINITY
                } else {
                    g
                }
            })
            .fold(0.0, f64::max)
    }
}

fn horner(coefficients: &[CVec], l: C64) -> CVec {
    let n = coefficients.first().map_or(0, CVec::dim);
    let mut acc = vec![ZERO; n];
    for ck in coefficients.iter().rev() {
        for (a, b) in acc.iter_mut().zip(ck.iter()) {
            *a = *a * l + b;
        }
    }
    CVec::new(acc)
}

/// `Lambda(l M(l))` with `l = zeta^2`, where `M` is the matrix Schur
/// function `M0 + c zeta K (I + zeta conj(M0) K)^(-1)`,
/// `M0 = antidiag(sqrt(-t3))`, `c = 1 - |t3|` and `K = diag(t1, t2) / c`.
/// Written directly in `l`, all square roots cancel except `q = sqrt(-t3)`.
fn tetra_tangent_eval(t: &CVec, l: C64) -> CVec {
    let cc = 1.0 - t[2].norm();
    if cc <= 0.0 {
        return CVec::from([ZERO, ZERO, t[2] * l]);
    }
    let q = (-t[2]).sqrt();
    let p = t[0] * t[1];
    let d = ONE + l * t[2].conj() * p / (cc * cc);
    let f1 = l * t[0] / d;
    let f2 = l * t[1] / d;
    let m = q - l * q.conj() * p / (d * cc);
    CVec::from([f1, f2, f1 * f2 - l * m * m])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

fn require_pair(domain: &DomainDescriptor, z: &CVec, w: &CVec) -> Result<()> {
    domain.validate()?;
    domain.require(z, Mode::Strict)?;
    domain.require(w, Mode::Strict)?;
    Ok(())
}

/// `omega_k = exp(2 pi i k g)` with `g` the golden ratio conjugate, so every
/// prefix of the sequence is spread over the circle.
fn golden_omega(k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k as f64 * GOLDEN).fract())
}

/// Lower bound for the Carathéodory distance from the first `family_size`
/// members of a fixed sequence of holomorphic functions into the disc.
/// Prefixes are nested, so the bound never decreases with `family_size`.
pub fn carath_lower(domain: &DomainDescriptor, z: &CVec, w: &CVec, family_size: usize) -> Result<f64> {
    require_pair(domain, z, w)?;
    if family_size == 0 {
        return Err(Error::invalid("family_size must be positive"));
    }
    if z == w {
        return Ok(0.0);
    }
    let value = match domain {
        DomainDescriptor::Disc => poincare_unchecked(z[0], w[0]),
        DomainDescriptor::Polydisc(n) => (0..family_size.min(*n))
            .map(|k| poincare_unchecked(z[k], w[k]))
            .fold(0.0, f64::max),
        DomainDescriptor::Ball(n) => {
            // x -> <phi_z(x), u> vanishes at z; the first member aligns u
            // with phi_z(w), the rest use coordinate directions.
            let m = ball_moebius_unchecked(z, w);
            let mut best = poincare_radius(m.norm());
            for k in 1..family_size {
                best = best.max(poincare_radius(m[(k - 1) % n].norm()));
            }
            best
        }
        DomainDescriptor::Tetrablock => tetra_family(z, w, family_size)?,
        DomainDescriptor::RIII2 => riii2_family(&SymMat2::from_cvec(z)?, &SymMat2::from_cvec(w)?, family_size)?,
        DomainDescriptor::LieBall(2) => {
            let (a, b) = (phi_unchecked(z), phi_unchecked(w));
            (0..family_size.min(2))
                .map(|k| poincare_unchecked(a[k], b[k]))
                .fold(0.0, f64::max)
        }
        DomainDescriptor::LieBall(3) => riii2_family(&psi_unchecked(z), &psi_unchecked(w), family_size)?,
        DomainDescriptor::LieBall(n) => lie_family(*n, z, w, family_size),
        DomainDescriptor::SymBidisc => (0..family_size)
            .map(|k| {
                let om = golden_omega(k);
                let f = |x: &CVec| (om * x[1] * 2.0 - x[0]) / (cr(2.0) - om * x[0]);
                poincare_unchecked(f(z), f(w))
            })
            .fold(0.0, f64::max),
        DomainDescriptor::Ellipsoid(_) | DomainDescriptor::IndicatrixE0 => {
            return Err(Error::UnsupportedDomain(domain.name()));
        }
    };
    Ok(value)
}

/// `Psi_omega` on even indices, `Psi_omega` with the first two variables
/// swapped on odd indices.
fn tetra_family(z: &CVec, w: &CVec, family_size: usize) -> Result<f64> {
    let swap = |x: &CVec| CVec::from([x[1], x[0], x[2]]);
    let mut best: f64 = 0.0;
    for k in 0..family_size {
        let om = golden_omega(k / 2);
        let (a, b) = if k % 2 == 0 { (z.clone(), w.clone()) } else { (swap(z), swap(w)) };
        let v = poincare_unchecked(psi_omega(om, &a)?, psi_omega(om, &b)?);
        best = best.max(v);
    }
    Ok(best)
}

/// The first member is `X -> u* Phi_Z(X) v`, with `Phi_Z` the matrix
/// Möbius map sending `Z` to 0 and `u, v` top singular vectors of
/// `Phi_Z(W)`; it already attains the distance. Later members are
/// `Psi_omega o Lambda` and its swapped variant.
fn riii2_family(z: &SymMat2, w: &SymMat2, family_size: usize) -> Result<f64> {
    let mut best = poincare_radius(matrix_moebius(z, w)?.sigma_max());
    for k in 1..family_size {
        let (a, b) = (lambda(z), lambda(w));
        let om = golden_omega((k - 1) / 2);
        let v = if (k - 1) % 2 == 0 {
            poincare_unchecked(psi_omega(om, &a)?, psi_omega(om, &b)?)
        } else {
            let s = |x: &CVec| CVec::from([x[1], x[0], x[2]]);
            poincare_unchecked(psi_omega(om, &s(&a))?, psi_omega(om, &s(&b))?)
        };
        best = best.max(v);
    }
    Ok(best)
}

/// `(I - Z Z*)^(-1/2) (W - Z) (I - Z* W)^(-1) (I - Z* Z)^(1/2)`.
fn matrix_moebius(z: &SymMat2, w: &SymMat2) -> Result<Mat2> {
    let zm = Mat2::from_sym(z);
    let wm = Mat2::from_sym(w);
    let zs = adjoint(&zm);
    let left = hermitian_sqrt(&Mat2::identity().sub(&zm.mul(&zs)))?.inverse(1e-300)?;
    let right = hermitian_sqrt(&Mat2::identity().sub(&zs.mul(&zm)))?;
    let mid = Mat2::identity().sub(&zs.mul(&wm)).inverse(1e-300)?;
    Ok(left.mul(&wm.sub(&zm)).mul(&mid).mul(&right))
}

fn adjoint(a: &Mat2) -> Mat2 {
    Mat2 {
        m: [[a.m[0][0].conj(), a.m[1][0].conj()], [a.m[0][1].conj(), a.m[1][1].conj()]],
    }
}

/// Square root of a positive definite Hermitian 2x2 matrix:
/// `(H + sqrt(det H) I) / sqrt(tr H + 2 sqrt(det H))`.
fn hermitian_sqrt(h: &Mat2) -> Result<Mat2> {
    let det = h.det().re;
    let tr = (h.m[0][0] + h.m[1][1]).re;
    if !(det > 0.0 && tr > 0.0) {
        return Err(Error::Singular { det });
    }
    let s = det.sqrt();
    let t = (tr + 2.0 * s).sqrt();
    Ok(Mat2 {
        m: [
            [(h.m[0][0] + s) / t, h.m[0][1] / t],
            [h.m[1][0] / t, (h.m[1][1] + s) / t],
        ],
    })
}

/// Coordinates, then `x -> x.x`, then seeded real unit functionals
/// `x -> sum r_j x_j`. Each has modulus at most the Euclidean norm, which
/// is below 1 on the Lie ball.
fn lie_family(n: usize, z: &CVec, w: &CVec, family_size: usize) -> f64 {
    let mut best: f64 = 0.0;
    for k in 0..family_size {
        let (a, b) = if k < n {
            (z[k], w[k])
        } else if k == n {
            (z.bullet_self(), w.bullet_self())
        } else {
            let mut rng = seeded_rng(k as u64);
            let r: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let f = |x: &CVec| x.iter().zip(&r).map(|(xi, ri)| xi * (ri / norm)).sum::<C64>();
            (f(z), f(w))
        };
        best = best.max(poincare_unchecked(a, b));
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LempertOptions {
    pub degree: usize,
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Boundary points used during optimization; certification uses 16 times more.
    pub grid: usize,
}

impl Default for LempertOptions {
    fn default() -> Self {
        LempertOptions {
            degree: 4,
            budget: 10_000,
            restarts: 6,
            seed: 0,
            grid: MIN_GRID,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LempertResult {
    /// `p(0, sigma)`, or `+inf` when no admissible disc was found.
    pub value: f64,
    pub sigma: f64,
    pub disc: Option<DiscMap>,
    /// Which construction produced the disc.
    pub source: String,
    pub evaluations: usize,
    pub diagnostics: Vec<String>,
}

/// Upper bound for the Lempert function with default options apart from
/// `degree` and `budget`.
pub fn lempert_upper(domain: &DomainDescriptor, z: &CVec, w: &CVec, degree: usize, budget: usize) -> Result<f64> {
    let opts = LempertOptions {
        degree,
        budget,
        ..LempertOptions::default()
    };
    Ok(lempert_upper_with(domain, z, w, &opts)?.value)
}

struct Candidate {
    sigma: f64,
    disc: DiscMap,
    source: &'static str,
}

/// Minimizes `p(0, sigma)` over discs with `f(0) = z`, `f(sigma) = w` whose
/// boundary stays in the closed domain. Closed-form candidates come first;
/// then polynomial discs of the given degree are optimized with a boundary
/// penalty. Every returned disc has been re-checked on a 16x finer grid.
pub fn lempert_upper_with(domain: &DomainDescriptor, z: &CVec, w: &CVec, opts: &LempertOptions) -> Result<LempertResult> {
    require_pair(domain, z, w)?;
    if opts.degree == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    if opts.grid < MIN_GRID {
        return Err(Error::invalid(format!("grid must be at least {MIN_GRID}")));
    }
    if z == w {
        return Ok(LempertResult {
            value: 0.0,
            sigma: 0.0,
            disc: Some(DiscMap::constant(z.clone())),
            source: "constant".into(),
            evaluations: 0,
            diagnostics: vec![],
        });
    }
    let fine = 16 * opts.grid;
    let mut diagnostics = Vec::new();
    let mut best: Option<Candidate> = None;
    for cand in candidates(domain, z, w, fine) {
        let ok = cand.sigma > 0.0
            && cand.sigma < 1.0
            && certify(domain, &cand.disc, z, w, cand.sigma, fine);
        if !ok {
            diagnostics.push(format!("candidate {} rejected by certification", cand.source));
            continue;
        }
        if best.as_ref().is_none_or(|b| cand.sigma < b.sigma) {
            best = Some(cand);
        }
    }

    let mut evaluations = 0;
    if opts.budget > 0 && opts.restarts > 0 {
        let runs = optimize_discs(domain, z, w, opts, best.as_ref());
        for run in runs {
            evaluations += run.evals;
            if let Some(c) = run.best {
                if best.as_ref().is_none_or(|b| c.sigma < b.sigma) {
                    best = Some(c);
                }
            }
        }
    }

    Ok(match best {
        Some(b) => LempertResult {
            value: poincare_radius(b.sigma),
            sigma: b.sigma,
            disc: Some(b.disc),
            source: b.source.into(),
            evaluations,
            diagnostics,
        },
        None => {
            diagnostics.push(format!(
                "no disc through the two points passed the boundary check (degree {}, budget {})",
                opts.degree, opts.budget
            ));
            LempertResult {
                value: f64::INFINITY,
                sigma: f64::NAN,
                disc: None,
                source: "none".into(),
                evaluations,
                diagnostics,
            }
        }
    })
}

/// Endpoint interpolation and boundary membership on `grid` points.
fn certify(domain: &DomainDescriptor, disc: &DiscMap, z: &CVec, w: &CVec, sigma: f64, grid: usize) -> bool {
    let scale = 1e-12 * (1.0 + w.max_abs());
    disc.eval(ZERO).dist(z) <= 1e-12 * (1.0 + z.max_abs())
        && disc.eval(cr(sigma)).dist(w) <= scale
        && disc.max_boundary_gauge(domain, grid) <= 1.0 + DISC_SLACK
}

fn candidates(domain: &DomainDescriptor, z: &CVec, w: &CVec, grid: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    let origin = z.max_abs() == 0.0;
    if origin && domain.is_balanced() {
        let g = domain.gauge_unchecked(w);
        out.push(Candidate {
            sigma: g,
            disc: DiscMap::Polynomial {
                coefficients: vec![z.clone(), w.scale(cr(1.0 / g))],
            },
            source: "linear",
        });
    }
    if let Some(sigma) = smallest_sigma(|s| {
        let d = affine_disc(z, w, s);
        d.max_boundary_gauge(domain, grid) <= 1.0
    }) {
        out.push(Candidate {
            sigma,
            disc: affine_disc(z, w, sigma),
            source: "affine",
        });
    }
    if *domain == DomainDescriptor::Polydisc(2) {
        if let Ok(g) = bidisc_geodesic(z, w) {
            out.push(Candidate {
                sigma: g.sigma,
                disc: g.disc,
                source: "bidisc_geodesic",
            });
        }
    }
    if *domain == DomainDescriptor::Tetrablock {
        out.extend(tetra_candidates(z, w, grid));
    }
    out
}

fn affine_disc(z: &CVec, w: &CVec, sigma: f64) -> DiscMap {
    DiscMap::Polynomial {
        coefficients: vec![z.clone(), (w - z).scale(cr(1.0 / sigma))],
    }
}

/// Smallest `sigma` in `(0, 1)` with `ok(sigma)`, assuming `ok` is monotone.
/// Predicates test against the exact bound so that certification, which
/// allows [`DISC_SLACK`], has room on a finer grid.
fn smallest_sigma<F: FnMut(f64) -> bool>(mut ok: F) -> Option<f64> {
    let top = 1.0 - 1e-15;
    if !ok(top) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn tetra_candidates(z: &CVec, w: &CVec, grid: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    let royal = |x: &CVec| (x[2] - x[0] * x[1]).norm() <= ROYAL_TOL;
    if royal(z) && royal(w) {
        let (a, b) = (CVec::from([z[0], z[1]]), CVec::from([w[0], w[1]]));
        if let Ok(g) = bidisc_geodesic(&a, &b) {
            out.push(Candidate {
                sigma: g.sigma,
                disc: DiscMap::Royal { base: Box::new(g.disc) },
                source: "royal_geodesic",
            });
        }
    }
    // Lambda applied to affine discs of R_III(2) between fiber points.
    let fibers = |x: &CVec| {
        let a = crate::domains::tetrablock_fiber_matrix(x).expect("dimension checked");
        if a.a12 == ZERO {
            vec![a]
        } else {
            vec![a, SymMat2::new(a.a11, -a.a12, a.a22)]
        }
    };
    for az in fibers(z) {
        for aw in fibers(w) {
            let d = SymMat2::new(aw.a11 - az.a11, aw.a12 - az.a12, aw.a22 - az.a22);
            let disc_at = |s: f64| {
                let b = SymMat2::new(d.a11 / s, d.a12 / s, d.a22 / s);
                lambda_push(&az, &b)
            };
            let fits = |s: f64| {
                (0..grid).all(|k| {
                    let l = C64::from_polar(1.0, 2.0 * PI * k as f64 / grid as f64);
                    SymMat2::new(az.a11 + d.a11 * l / s, az.a12 + d.a12 * l / s, az.a22 + d.a22 * l / s).sigma_max()
                        <= 1.0
                })
            };
            if let Some(sigma) = smallest_sigma(fits) {
                out.push(Candidate {
                    sigma,
                    disc: disc_at(sigma),
                    source: "lambda_affine",
                });
            }
        }
    }
    if z.max_abs() == 0.0 {
        if let Some(c) = tetra_tangent_candidate(w) {
            out.push(c);
        }
    }
    out
}

/// Coefficients of `Lambda(A + l B)`.
fn lambda_push(a: &SymMat2, b: &SymMat2) -> DiscMap {
    let c0 = lambda(a);
    let c1 = CVec::from([
        b.a11,
        b.a22,
        a.a11 * b.a22 + b.a11 * a.a22 - 2.0 * a.a12 * b.a12,
    ]);
    let c2 = CVec::from([ZERO, ZERO, b.a11 * b.a22 - b.a12 * b.a12]);
    DiscMap::Polynomial {
        coefficients: vec![c0, c1, c2],
    }
}

fn indicatrix_gauge(t: &CVec) -> f64 {
    DomainDescriptor::IndicatrixE0.gauge_unchecked(t)
}

/// Solves `TetraTangent(t)(sigma) = w` for `t` by fixed-point iteration and
/// bisects for the smallest `sigma` whose tangent satisfies the indicatrix
/// bound.
fn tetra_tangent_candidate(w: &CVec) -> Option<Candidate> {
    let solve = |s: f64| -> Option<CVec> {
        let mut t = w.scale(cr(1.0 / s));
        for _ in 0..500 {
            let r = w - &tetra_tangent_eval(&t, cr(s));
            if !r.is_finite() {
                return None;
            }
            if r.max_abs() <= 1e-15 * (1.0 + w.max_abs()) {
                return Some(t);
            }
            t = &t + &r.scale(cr(1.0 / s));
        }
        None
    };
    let ok = |s: f64| solve(s).is_some_and(|t| indicatrix_gauge(&t) <= 1.0);
    let sigma = smallest_sigma(ok)?;
    let t = solve(sigma)?;
    Some(Candidate {
        sigma,
        disc: DiscMap::TetraTangent { tangent: t },
        source: "tetra_tangent",
    })
}

struct RunOutcome {
    best: Option<Candidate>,
    evals: usize,
}

/// Polynomial disc of degree `d` with `f(0) = z` and `f(sigma) = w`: the
/// free parameters are `sigma` (through a logistic) and `c_2 .. c_d`; `c_1`
/// is solved from the endpoint condition.
fn poly_from_params(x: &[f64], z: &CVec, w: &CVec, degree: usize) -> (f64, DiscMap) {
    let n = z.dim();
    let sigma = 1.0 / (1.0 + (-x[0]).exp());
    let mut coeffs = vec![z.clone(), CVec::zeros(n)];
    for k in 2..=degree {
        let off = 1 + 2 * n * (k - 2);
        coeffs.push(CVec::new((0..n).map(|j| c(x[off + 2 * j], x[off + 2 * j + 1])).collect()));
    }
    let mut rhs = w - z;
    for (k, ck) in coeffs.iter().enumerate().skip(2) {
        rhs = &rhs - &ck.scale(cr(sigma.powi(k as i32)));
    }
    coeffs[1] = rhs.scale(cr(1.0 / sigma));
    (sigma, DiscMap::Polynomial { coefficients: coeffs })
}

/// Independent penalized Nelder-Mead restarts; restart `r` uses penalty
/// weight `10^(r+1)` and a start that depends only on the seed and the
/// incumbent candidate, so a larger budget only extends each trajectory.
fn optimize_discs(
    domain: &DomainDescriptor,
    z: &CVec,
    w: &CVec,
    opts: &LempertOptions,
    incumbent: Option<&Candidate>,
) -> Vec<RunOutcome> {
    let n = z.dim();
    let dim = 1 + 2 * n * (opts.degree - 1);
    let per_run = opts.budget / opts.restarts;
    let bar = incumbent.map_or(f64::INFINITY, |c| c.sigma);
    let mut x0 = vec![0.0; dim];
    x0[0] = if bar.is_finite() { (bar / (1.0 - bar)).ln() } else { 0.0 };
    if let Some(DiscMap::Polynomial { coefficients }) = incumbent.map(|c| &c.disc) {
        for (k, ck) in coefficients.iter().enumerate().skip(2).take(opts.degree.saturating_sub(1)) {
            let off = 1 + 2 * n * (k - 2);
            for j in 0..n {
                x0[off + 2 * j] = ck[j].re;
                x0[off + 2 * j + 1] = ck[j].im;
            }
        }
    }
    (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut start = x0.clone();
            if r > 0 {
                let mut rng = seeded_rng(opts.seed.wrapping_mul(0x9e37_79b9).wrapping_add(r as u64));
                for v in start.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *v += 0.1 * g;
                }
            }
            let weight = 10f64.powi(r as i32 + 1);
            let mut best: Option<Candidate> = None;
            let objective = |x: &[f64]| {
                let (sigma, disc) = poly_from_params(x, z, w, opts.degree);
                let m = disc.max_boundary_gauge(domain, opts.grid);
                let over = (m - 1.0).max(0.0);
                if over <= DISC_SLACK {
                    let beats = match &best {
                        Some(b) => sigma < b.sigma,
                        None => sigma < bar - CERTIFY_MARGIN,
                    };
                    if beats && certify(domain, &disc, z, w, sigma, 16 * opts.grid) {
                        best = Some(Candidate {
                            sigma,
                            disc,
                            source: "optimized",
                        });
                    }
                }
                poincare_radius(sigma) + weight * over
            };
            let res = nelder_mead(objective, &start, 0.2, per_run, 0.0, 1e-12);
            RunOutcome { best, evals: res.evals }
        })
        .collect()
}

/// Carathéodory lower bound and Lempert upper bound at the same pair.
pub fn sandwich(
    domain: &DomainDescriptor,
    z: &CVec,
    w: &CVec,
    family_size: usize,
    opts: &LempertOptions,
) -> Result<BoundPair> {
    let lower = carath_lower(domain, z, w, family_size)?;
    let upper = lempert_upper_with(domain, z, w, opts)?.value;
    Ok(BoundPair {
        lower,
        upper,
        gap: upper - lower,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidiscGeodesic {
    pub disc: DiscMap,
    /// `f(sigma) = w`.
    pub sigma: f64,
    /// False exactly when both components are automorphisms of the disc.
    pub unique_left_inverse: bool,
}

/// Geodesic of the bidisc with `f(0) = z` and `f(sigma) = w`: component `k`
/// is `T_{z_k}(c_k lambda)` with `T_a(u) = (u + a)/(1 + conj(a) u)` and
/// `c_k = T_{-z_k}(w_k) / sigma`, where `sigma` is the larger of the two
/// pseudo-hyperbolic distances.
pub fn bidisc_geodesic(z: &CVec, w: &CVec) -> Result<BidiscGeodesic> {
    let d = DomainDescriptor::Polydisc(2);
    require_pair(&d, z, w)?;
    if z == w {
        return Err(Error::invalid("geodesic endpoints must differ"));
    }
    let u: Vec<C64> = (0..2).map(|k| (w[k] - z[k]) / (ONE - z[k].conj() * w[k])).collect();
    let sigma = u[0].norm().max(u[1].norm());
    let scale = CVec::new(u.iter().map(|uk| uk / sigma).collect());
    let unique = scale.iter().any(|s| (s.norm() - 1.0).abs() > 1e-12);
    Ok(BidiscGeodesic {
        disc: DiscMap::Moebius {
            scale,
            center: z.clone(),
        },
        sigma,
        unique_left_inverse: unique,
    })
}

/// Checks that `R o f` stays extremal: for each pair `(l1, l2)` the
/// Carathéodory lower bound between `R(f(l1))` and `R(f(l2))` must reach
/// `p(l1, l2) - tol`. The same inequality for `f` itself is reported as
/// `source_geodesic`. A constant disc gives an empty, passing report.
pub fn pushforward_geodesic_check(
    spec: &RetractionSpec,
    f: &DiscMap,
    pairs: &[(C64, C64)],
    family_size: usize,
    tol: f64,
) -> Result<VerificationReport> {
    spec.validate()?;
    let domain = spec.domain();
    let mut report = VerificationReport::new(format!("pushforward {}", spec.label()));
    if f.is_constant() {
        report.push(Check::new("pushforward", Worst::default(), 0, tol));
        return Ok(report);
    }
    let mut src = Worst::default();
    let mut img = Worst::default();
    for &(l1, l2) in pairs {
        let p = poincare(l1, l2)?;
        let witness = CVec::from([l1, l2]);
        let (a, b) = (f.eval(l1), f.eval(l2));
        let measure = |x: &CVec, y: &CVec| match carath_lower(&domain, x, y, family_size) {
            Ok(v) => p - v,
            Err(_) => f64::INFINITY,
        };
        src = src.merge(Worst::single(measure(&a, &b), witness.clone()));
        let (ra, rb) = (spec.apply(&a), spec.apply(&b));
        let v = match (ra, rb) {
            (Ok(ra), Ok(rb)) => measure(&ra, &rb),
            _ => f64::INFINITY,
        };
        img = img.merge(Worst::single(v, witness));
    }
    report.push(Check::new("source_geodesic", src, pairs.len(), tol));
    report.push(Check::new("pushforward", img, pairs.len(), tol));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disc_point(r: f64, t: f64) -> C64 {
        C64::from_polar(r, t)
    }

    #[test]
    fn poincare_examples() {
        assert_eq!(poincare(ZERO, ZERO).unwrap(), 0.0);
        assert!((poincare(ZERO, cr(0.5)).unwrap() - 0.5f64.atanh()).abs() < 1e-15);
        assert!((poincare(ZERO, cr(0.5)).unwrap() - 0.549_306_144_334_054_8).abs() < 1e-12);
        assert!(poincare(cr(1.0), ZERO).is_err());
    }

    #[test]
    fn poincare_symmetry_and_triangle() {
        let mut rng = seeded_rng(3);
        let mut pt = || disc_point(rand::Rng::random::<f64>(&mut rng).sqrt() * 0.999, rand::Rng::random::<f64>(&mut rng) * 2.0 * PI);
        for _ in 0..1000 {
            let (a, b, c) = (pt(), pt(), pt());
            let ab = poincare(a, b).unwrap();
            assert!((ab - poincare(b, a).unwrap()).abs() <= 1e-14 * (1.0 + ab));
            let tri = ab - poincare(a, c).unwrap() - poincare(c, b).unwrap();
            assert!(tri <= 1e-12, "{tri}");
        }
    }

    #[test]
    fn polydisc_and_tetrablock_lower_bounds() {
        let (a, b) = (c(0.3, 0.4), c(-0.6, 0.1));
        let d2 = DomainDescriptor::Polydisc(2);
        let v = carath_lower(&d2, &CVec::zeros(2), &CVec::from([a, b]), 2).unwrap();
        assert!((v - b.norm().atanh()).abs() < 1e-15);
        let e = DomainDescriptor::Tetrablock;
        let x = CVec::from([a, b, a * b]);
        let only_psi = carath_lower(&e, &CVec::zeros(3), &x, 1).unwrap();
        assert!((only_psi - b.norm().atanh()).abs() < 1e-14);
        let both = carath_lower(&e, &CVec::zeros(3), &x, 2).unwrap();
        assert!((both - a.norm().max(b.norm()).atanh()).abs() < 1e-14);
        assert_eq!(carath_lower(&e, &x, &x, 4).unwrap(), 0.0);
        assert!(matches!(
            carath_lower(&DomainDescriptor::IndicatrixE0, &CVec::zeros(3), &x, 1),
            Err(Error::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn ball_and_riii2_lower_bounds_are_exact_at_origin() {
        let w = CVec::from([c(0.2, 0.1), c(-0.3, 0.4)]);
        let v = carath_lower(&DomainDescriptor::Ball(2), &CVec::zeros(2), &w, 1).unwrap();
        assert!((v - w.norm().atanh()).abs() < 1e-14);
        let a = SymMat2::new(c(0.1, 0.2), c(0.3, -0.1), c(-0.2, 0.05));
        let v = carath_lower(&DomainDescriptor::RIII2, &CVec::zeros(3), &a.to_cvec(), 1).unwrap();
        assert!((v - a.sigma_max().atanh()).abs() < 1e-14);
    }

    #[test]
    fn matrix_moebius_is_invariant_distance() {
        // Phi_Z(W) and Phi_W(Z) have the same norm.
        let z = SymMat2::new(c(0.1, 0.2), c(0.3, -0.1), c(-0.2, 0.05));
        let w = SymMat2::new(c(-0.3, 0.1), c(0.0, 0.2), c(0.4, 0.1));
        let a = matrix_moebius(&z, &w).unwrap().sigma_max();
        let b = matrix_moebius(&w, &z).unwrap().sigma_max();
        assert!((a - b).abs() < 1e-13, "{a} {b}");
    }

    #[test]
    fn lempert_examples() {
        let d2 = DomainDescriptor::Polydisc(2);
        let (a, b) = (c(0.5, 0.2), c(0.1, -0.3));
        let u = lempert_upper(&d2, &CVec::zeros(2), &CVec::from([a, b]), 4, 0).unwrap();
        assert!((u - a.norm().atanh()).abs() < 1e-12);
        let e = DomainDescriptor::Tetrablock;
        let x = CVec::from([a, b, a * b]);
        let u = lempert_upper(&e, &CVec::zeros(3), &x, 4, 0).unwrap();
        assert!((u - a.norm().atanh()).abs() < 1e-12);
        assert_eq!(lempert_upper(&e, &x, &x, 4, 0).unwrap(), 0.0);
    }

    #[test]
    fn royal_pairs_off_origin_close() {
        let e = DomainDescriptor::Tetrablock;
        let (a, b, a2, b2) = (c(0.2, 0.1), c(-0.4, 0.3), c(0.5, -0.2), c(0.1, 0.1));
        let z = CVec::from([a, b, a * b]);
        let w = CVec::from([a2, b2, a2 * b2]);
        let bp = sandwich(&e, &z, &w, 64, &LempertOptions { budget: 0, ..Default::default() }).unwrap();
        assert!(bp.gap.abs() < 1e-9, "{bp:?}");
    }

    #[test]
    fn tetra_tangent_disc_matches_indicatrix() {
        let e = DomainDescriptor::Tetrablock;
        let mut rng = seeded_rng(9);
        for _ in 0..20 {
            let x = crate::domains::gaussian_cvec(&mut rng, 3);
            let g = indicatrix_gauge(&x);
            let s = 1e-3;
            let w = x.scale(cr(s / g * 0.5));
            let r = lempert_upper_with(&e, &CVec::zeros(3), &w, &LempertOptions { budget: 0, ..Default::default() })
                .unwrap();
            let ratio = r.value / (s * 0.5);
            assert!((ratio - 1.0).abs() < 0.01, "{ratio} {}", r.source);
        }
        let t = CVec::from([c(0.2, 0.1), c(-0.3, 0.0), c(0.0, 0.4)]);
        let d = DiscMap::TetraTangent { tangent: t.scale(cr(1.0 / indicatrix_gauge(&t))) };
        assert!(d.max_boundary_gauge(&e, 4096) <= 1.0 + 1e-12);
    }

    #[test]
    fn lempert_preconditions() {
        let d = DomainDescriptor::Disc;
        let small_grid = LempertOptions { grid: 10, ..Default::default() };
        assert!(lempert_upper_with(&d, &CVec::zeros(1), &CVec::from([cr(0.5)]), &small_grid).is_err());
        assert!(lempert_upper(&d, &CVec::zeros(1), &CVec::from([cr(1.5)]), 4, 0).is_err());
        assert!(lempert_upper(&d, &CVec::zeros(1), &CVec::from([cr(0.5)]), 0, 0).is_err());
    }

    #[test]
    fn bidisc_geodesic_tags() {
        let a = c(0.3, -0.4);
        let g = bidisc_geodesic(&CVec::zeros(2), &CVec::from([a, ZERO])).unwrap();
        assert!(g.unique_left_inverse);
        assert!((g.sigma - a.norm()).abs() < 1e-15);
        let f = g.disc.eval(cr(0.7));
        assert!((f[0] - a / a.norm() * 0.7).norm() < 1e-15 && f[1] == ZERO);
        let cc = c(0.2, 0.5);
        let g = bidisc_geodesic(&CVec::zeros(2), &CVec::from([cc, cc])).unwrap();
        assert!(!g.unique_left_inverse);
        assert!(bidisc_geodesic(&CVec::from([cc, cc]), &CVec::from([cc, cc])).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let pairs: Vec<(C64, C64)> = (0..20)
            .map(|k| (disc_point(0.3, k as f64), disc_point(0.8, 2.0 * k as f64 + 1.0)))
            .collect();
        let base = bidisc_geodesic(&CVec::zeros(2), &CVec::from([c(0.6, 0.0), c(0.1, 0.2)])).unwrap();
        let royal = DiscMap::Royal { base: Box::new(base.disc) };
        let rep = pushforward_geodesic_check(&RetractionSpec::TetraRoyal, &royal, &pairs, 8, 1e-10).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let sym = DiscMap::Polynomial {
            coefficients: vec![CVec::zeros(3), CVec::from([ZERO, ZERO, ONE])],
        };
        let rep = pushforward_geodesic_check(&RetractionSpec::TetraSym, &sym, &pairs, 8, 1e-10).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let konst = DiscMap::constant(CVec::from([cr(0.1), ZERO, ZERO]));
        let rep = pushforward_geodesic_check(&RetractionSpec::TetraRoyal, &konst, &pairs, 8, 1e-10).unwrap();
        assert!(rep.passed() && rep.checks[0].samples == 0);
    }

    #[test]
    fn lower_never_exceeds_upper_on_lie_ball() {
        let d = DomainDescriptor::LieBall(3);
        let pts = d.sample_interior_many(10, 5);
        for pair in pts.chunks(2) {
            let bp = sandwich(&d, &pair[0], &pair[1], 8, &LempertOptions { budget: 600, ..Default::default() }).unwrap();
            assert!(bp.lower <= bp.upper + 1e-9, "{bp:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn carath_monotone_in_family_size(seed in 0u64..1000, k in 1usize..12) {
            let e = DomainDescriptor::Tetrablock;
            let pts = e.sample_interior_many(2, seed);
            let small = carath_lower(&e, &pts[0], &pts[1], k).unwrap();
            let big = carath_lower(&e, &pts[0], &pts[1], k + 3).unwrap();
            prop_assert!(small <= big);
        }

        #[test]
        fn lempert_non_increasing_in_budget(seed in 0u64..1000) {
            let e = DomainDescriptor::Tetrablock;
            let pts = e.sample_interior_many(2, seed);
            let opts = |budget| LempertOptions { budget, restarts: 2, degree: 2, ..Default::default() };
            let a = lempert_upper_with(&e, &pts[0], &pts[1], &opts(60)).unwrap().value;
            let b = lempert_upper_with(&e, &pts[0], &pts[1], &opts(240)).unwrap().value;
            prop_assert!(b <= a);
        }

        #[test]
        fn sandwich_ordered_on_bidisc(seed in 0u64..1000) {
            let d = DomainDescriptor::Polydisc(2);
            let pts = d.sample_interior_many(2, seed);
            let bp = sandwich(&d, &pts[0], &pts[1], 2, &LempertOptions { budget: 0, ..Default::default() }).unwrap();
            prop_assert!(bp.lower <= bp.upper + 1e-9);
            prop_assert!(bp.gap.abs() <= 1e-9);
        }
    }
}
