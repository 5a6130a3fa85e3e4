//! Membership predicates, gauges and seeded samplers for the supported
//! domains.
//!
//! Every domain exposes a *gauge*: a continuous function that is `< 1`
//! exactly on the domain and `<= 1` on its closure. For the balanced
//! domains it is the Minkowski functional (absolutely homogeneous); for the
//! tetrablock it is the largest singular value of a `Lambda`-fiber matrix,
//! for the symmetrized bidisc the larger root modulus, and for the
//! ellipsoid the weighted power sum.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, principal_sqrt, CVec, SymMat2, C64};

/// Default slack used by closure tests.
pub const CLOSURE_TOL: f64 = 1e-12;

/// How strictly a precondition "z in D" is enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Strict,
    /// Accept `gauge <= 1 + tol`.
    Closure(f64),
}

impl Mode {
    pub fn closure() -> Self {
        Mode::Closure(CLOSURE_TOL)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DomainDescriptor {
    Disc,
    Polydisc(usize),
    Ball(usize),
    LieBall(usize),
    /// 2x2 symmetric matrices with operator norm `< 1`, coordinates `(a11, a12, a22)`.
    RIII2,
    Tetrablock,
    /// Symmetrized bidisc, coordinates `(s, p)`.
    SymBidisc,
    Ellipsoid(Vec<u32>),
    /// Kobayashi indicatrix of the tetrablock at the origin.
    IndicatrixE0,
}

impl DomainDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainDescriptor::Polydisc(n) | DomainDescriptor::Ball(n) | DomainDescriptor::LieBall(n) => {
                if *n == 0 {
                    return Err(Error::invalid("dimension must be at least 1"));
                }
            }
            DomainDescriptor::Ellipsoid(p) => validate_exponents(p)?,
            _ => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainDescriptor::Disc => 1,
            DomainDescriptor::Polydisc(n) | DomainDescriptor::Ball(n) | DomainDescriptor::LieBall(n) => *n,
            DomainDescriptor::RIII2 | DomainDescriptor::Tetrablock | DomainDescriptor::IndicatrixE0 => 3,
            DomainDescriptor::SymBidisc => 2,
            DomainDescriptor::Ellipsoid(p) => p.len(),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// True when the gauge is a norm-like Minkowski functional, i.e.
    /// `gauge(t z) = |t| gauge(z)`.
    pub fn is_balanced(&self) -> bool {
        matches!(
            self,
            DomainDescriptor::Disc
                | DomainDescriptor::Polydisc(_)
                | DomainDescriptor::Ball(_)
                | DomainDescriptor::LieBall(_)
                | DomainDescriptor::RIII2
                | DomainDescriptor::IndicatrixE0
        )
    }

    pub fn gauge(&self, z: &CVec) -> Result<f64> {
        z.expect_dim(self.dim())?;
        Ok(self.gauge_unchecked(z))
    }

    pub(crate) fn gauge_unchecked(&self, z: &CVec) -> f64 {
        match self {
            DomainDescriptor::Disc => z[0].norm(),
            DomainDescriptor::Polydisc(_) => z.max_abs(),
            DomainDescriptor::Ball(_) => z.norm(),
            DomainDescriptor::LieBall(_) => lie_norm(z),
            DomainDescriptor::RIII2 => SymMat2::new(z[0], z[1], z[2]).sigma_max(),
            DomainDescriptor::Tetrablock => tetrablock_gauge_unchecked(z),
            DomainDescriptor::SymBidisc => sym_bidisc_gauge(z[0], z[1]),
            DomainDescriptor::Ellipsoid(p) => ellipsoid_sum_unchecked(z, p),
            DomainDescriptor::IndicatrixE0 => indicatrix_gauge_unchecked(z),
        }
    }

    /// Strict membership, dispatched to the literal defining predicate of
    /// each domain.
    pub fn contains(&self, z: &CVec) -> Result<bool> {
        z.expect_dim(self.dim())?;
        Ok(match self {
            DomainDescriptor::Disc => in_disc(z[0]),
            DomainDescriptor::Polydisc(n) => in_polydisc(z, *n)?,
            DomainDescriptor::Ball(n) => in_ball(z, *n)?,
            DomainDescriptor::LieBall(n) => in_lie_ball(z, *n)?,
            DomainDescriptor::RIII2 => in_riii2(&SymMat2::from_cvec(z)?),
            DomainDescriptor::Tetrablock => in_tetrablock(z)?,
            DomainDescriptor::SymBidisc => in_sym_bidisc(z[0], z[1]),
            DomainDescriptor::Ellipsoid(p) => in_ellipsoid(z, p)?,
            DomainDescriptor::IndicatrixE0 => gauge_indicatrix_e0(z)? < 1.0,
        })
    }

    pub fn in_closure(&self, z: &CVec, tol: f64) -> Result<bool> {
        Ok(self.gauge(z)? <= 1.0 + tol)
    }

    /// Fails with [`Error::DomainViolation`] unless `z` passes the
    /// membership test selected by `mode`.
    pub fn require(&self, z: &CVec, mode: Mode) -> Result<()> {
        let ok = match mode {
            Mode::Strict => self.contains(z)?,
            Mode::Closure(tol) => self.in_closure(z, tol)?,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                domain: self.name(),
                value: self.gauge_unchecked(z),
            })
        }
    }

    /// One interior point drawn from `rng`.
    ///
    /// Balanced domains use a Gaussian direction normalized by the gauge and
    /// a radius `u^(1/2d)`; the tetrablock and symmetrized bidisc are images
    /// of samples of `R_III(2)` and the bidisc; the ellipsoid takes roots of
    /// ball samples with a random branch per coordinate.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        match self {
            DomainDescriptor::Tetrablock => {
                let a = DomainDescriptor::RIII2.sample_interior(rng);
                CVec::from([a[0], a[2], a[0] * a[2] - a[1] * a[1]])
            }
            DomainDescriptor::SymBidisc => {
                let w = DomainDescriptor::Polydisc(2).sample_interior(rng);
                CVec::from([w[0] + w[1], w[0] * w[1]])
            }
            DomainDescriptor::Ellipsoid(p) => {
                let w = DomainDescriptor::Ball(p.len()).sample_interior(rng);
                let z: Vec<C64> = w
                    .iter()
                    .zip(p.iter())
                    .map(|(wj, &pj)| {
                        let k = rng.random_range(0..pj) as f64;
                        let root_of_unity = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k / pj as f64);
                        wj.powf(1.0 / pj as f64) * root_of_unity
                    })
                    .collect();
                CVec::new(z)
            }
            _ => {
                let d = self.dim();
                loop {
                    let v = gaussian_cvec(rng, d);
                    let g = self.gauge_unchecked(&v);
                    if g <= 1e-300 || !g.is_finite() {
                        continue;
                    }
                    let u: f64 = rng.random::<f64>();
                    let r = u.powf(1.0 / (2.0 * d as f64));
                    let z = v.scale(cr(r / g));
                    if self.gauge_unchecked(&z) < 1.0 {
                        return z;
                    }
                }
            }
        }
    }

    pub fn sample_interior_many(&self, count: usize, seed: u64) -> Vec<CVec> {
        let mut rng = seeded_rng(seed);
        (0..count).map(|_| self.sample_interior(&mut rng)).collect()
    }
}

fn validate_exponents(p: &[u32]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid("ellipsoid needs at least one exponent"));
    }
    if p.contains(&0) {
        return Err(Error::invalid("ellipsoid exponents must be positive integers"));
    }
    if !p.iter().any(|&pj| pj >= 2) {
        return Err(Error::invalid("ellipsoid needs at least one exponent >= 2"));
    }
    Ok(())
}

impl fmt::Display for DomainDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainDescriptor::Disc => write!(f, "disc"),
            DomainDescriptor::Polydisc(n) => write!(f, "polydisc:{n}"),
            DomainDescriptor::Ball(n) => write!(f, "ball:{n}"),
            DomainDescriptor::LieBall(n) => write!(f, "lie:{n}"),
            DomainDescriptor::RIII2 => write!(f, "riii2"),
            DomainDescriptor::Tetrablock => write!(f, "tetrablock"),
            DomainDescriptor::SymBidisc => write!(f, "symbidisc"),
            DomainDescriptor::Ellipsoid(p) => {
                let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "ellipsoid:{}", ps.join(","))
            }
            DomainDescriptor::IndicatrixE0 => write!(f, "indicatrix-e0"),
        }
    }
}

impl FromStr for DomainDescriptor {
    type Err = Error;

    /// Parses `disc`, `polydisc:N`, `ball:N`, `lie:N`, `riii2`,
    /// `tetrablock`, `symbidisc`, `ellipsoid:p1,p2,...`, `indicatrix-e0`.
    /// A space may replace the colon (`lie 3`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.split_once([':', ' ']) {
            Some((h, a)) => (h.trim().to_string(), Some(a.trim().to_string())),
            None => (s.clone(), None),
        };
        let need_n = |arg: &Option<String>| -> Result<usize> {
            arg.as_deref()
                .ok_or_else(|| Error::Parse(format!("domain `{head}` needs a dimension")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let d = match head.as_str() {
            "disc" => DomainDescriptor::Disc,
            "bidisc" => DomainDescriptor::Polydisc(2),
            "polydisc" => DomainDescriptor::Polydisc(need_n(&arg)?),
            "ball" => DomainDescriptor::Ball(need_n(&arg)?),
            "lie" | "lieball" | "lie-ball" => DomainDescriptor::LieBall(need_n(&arg)?),
            "riii2" | "r3" => DomainDescriptor::RIII2,
            "tetrablock" | "e" => DomainDescriptor::Tetrablock,
            "symbidisc" | "g2" => DomainDescriptor::SymBidisc,
            "ellipsoid" => {
                let a = arg.ok_or_else(|| Error::Parse("ellipsoid needs exponents".into()))?;
                let p = a
                    .split(',')
                    .map(|x| x.trim().parse::<u32>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<Vec<u32>>>()?;
                DomainDescriptor::Ellipsoid(p)
            }
            "indicatrix-e0" | "indicatrix" => DomainDescriptor::IndicatrixE0,
            other => return Err(Error::Parse(format!("unknown domain `{other}`"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl Serialize for DomainDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DomainDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_cvec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::new(
        (0..n)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    )
}

pub fn in_disc(z: C64) -> bool {
    z.norm() < 1.0
}

pub fn in_polydisc(z: &CVec, n: usize) -> Result<bool> {
    z.expect_dim(n)?;
    Ok(z.max_abs() < 1.0)
}

pub fn in_ball(z: &CVec, n: usize) -> Result<bool> {
    z.expect_dim(n)?;
    Ok(z.norm_sqr() < 1.0)
}

/// `2||z||^2 - |z . z|^2`, the quantity that must stay below 1 in `L_n`.
pub fn lie_defining_value(z: &CVec) -> f64 {
    2.0 * z.norm_sqr() - z.bullet_self().norm_sqr()
}

pub fn in_lie_ball(z: &CVec, n: usize) -> Result<bool> {
    z.expect_dim(n)?;
    Ok(z.norm_sqr() < 1.0 && lie_defining_value(z) < 1.0)
}

/// Minkowski functional of `L_n`: `sqrt(||z||^2 + sqrt(||z||^4 - |z.z|^2))`.
///
/// With `z = x + iy`, `||z||^4 - |z.z|^2 = 4 sum_{j<k} (x_j y_k - x_k y_j)^2`,
/// which avoids the cancellation near the Shilov boundary.
pub fn lie_norm(z: &CVec) -> f64 {
    let a = z.norm_sqr();
    let e = z.entries();
    let mut wedge = 0.0;
    for j in 0..e.len() {
        for k in j + 1..e.len() {
            let m = e[j].re * e[k].im - e[k].re * e[j].im;
            wedge += m * m;
        }
    }
    (a + 2.0 * wedge.sqrt()).sqrt()
}

pub fn in_riii2(a: &SymMat2) -> bool {
    a.sigma_max() < 1.0
}

/// The `Lambda`-fiber matrix over `x` built with the principal root
/// `a12 = sqrt(x1 x2 - x3)`.
pub fn tetrablock_fiber_matrix(x: &CVec) -> Result<SymMat2> {
    x.expect_dim(3)?;
    Ok(SymMat2::new(x[0], principal_sqrt(x[0] * x[1] - x[2]), x[1]))
}

pub fn in_tetrablock(x: &CVec) -> Result<bool> {
    Ok(in_riii2(&tetrablock_fiber_matrix(x)?))
}

/// Largest singular value of either fiber matrix over `x`, computed without
/// the square root: `||A||_F^2 = |x1|^2 + |x2|^2 + 2|x1 x2 - x3|` and
/// `|det A| = |x3|`.
pub fn tetrablock_gauge(x: &CVec) -> Result<f64> {
    x.expect_dim(3)?;
    Ok(tetrablock_gauge_unchecked(x))
}

fn tetrablock_gauge_unchecked(x: &CVec) -> f64 {
    let frob = x[0].norm_sqr() + x[1].norm_sqr() + 2.0 * (x[0] * x[1] - x[2]).norm();
    crate::linalg::singular_values_from(frob, x[2].norm()).0
}

/// Roots of `t^2 - s t + p`.
pub fn sym_bidisc_roots(s: C64, p: C64) -> (C64, C64) {
    let r = (s * s - 4.0 * p).sqrt();
    let big = if (s + r).norm() >= (s - r).norm() { s + r } else { s - r };
    let t1 = big * 0.5;
    let t2 = if t1.norm() > 0.0 { p / t1 } else { (s - r) * 0.5 };
    (t1, t2)
}

pub fn sym_bidisc_gauge(s: C64, p: C64) -> f64 {
    let (t1, t2) = sym_bidisc_roots(s, p);
    t1.norm().max(t2.norm())
}

pub fn in_sym_bidisc(s: C64, p: C64) -> bool {
    sym_bidisc_gauge(s, p) < 1.0
}

pub fn ellipsoid_sum(z: &CVec, p: &[u32]) -> Result<f64> {
    z.expect_dim(p.len())?;
    Ok(ellipsoid_sum_unchecked(z, p))
}

fn ellipsoid_sum_unchecked(z: &CVec, p: &[u32]) -> f64 {
    z.iter()
        .zip(p.iter())
        .map(|(zj, &pj)| zj.norm_sqr().powi(pj as i32))
        .sum()
}

pub fn in_ellipsoid(z: &CVec, p: &[u32]) -> Result<bool> {
    Ok(ellipsoid_sum(z, p)? < 1.0)
}

/// `max(|z1| + |z3|, |z2| + |z3|)`.
pub fn gauge_indicatrix_e0(z: &CVec) -> Result<f64> {
    z.expect_dim(3)?;
    Ok(indicatrix_gauge_unchecked(z))
}

fn indicatrix_gauge_unchecked(z: &CVec) -> f64 {
    let z3 = z[2].norm();
    (z[0].norm() + z3).max(z[1].norm() + z3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Shilov,
    Topological,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: CVec,
    pub stratum: Stratum,
}

/// Points `omega * x` with `|omega| = 1` and `x` a real unit vector.
pub fn sample_shilov_lie(n: usize, count: usize, seed: u64) -> Result<Vec<BoundarySample>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let omega = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let point = CVec::new(x.iter().map(|v| omega * (v / norm)).collect());
        out.push(BoundarySample {
            point,
            stratum: Stratum::Shilov,
        });
    }
    Ok(out)
}

/// Gauge-sphere points `v / gauge(v)` of a balanced domain.
pub fn sample_topological_boundary(
    domain: &DomainDescriptor,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundarySample>> {
    if !domain.is_balanced() {
        return Err(Error::UnsupportedDomain(domain.name()));
    }
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = gaussian_cvec(&mut rng, domain.dim());
        let g = domain.gauge_unchecked(&v);
        if g <= 1e-300 {
            continue;
        }
        out.push(BoundarySample {
            point: v.scale(cr(1.0 / g)),
            stratum: Stratum::Topological,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{I, ONE, ZERO};
    use proptest::prelude::*;

    #[test]
    fn lie_ball_examples() {
        assert!(in_lie_ball(&CVec::zeros(3), 3).unwrap());
        let v1 = CVec::from([cr(0.5), c(0.0, -0.5), ZERO]);
        assert_eq!(lie_defining_value(&v1), 1.0);
        assert!(!in_lie_ball(&v1, 3).unwrap());
        let p = CVec::from([cr(0.5), ZERO, ZERO]);
        assert!((lie_defining_value(&p) - 0.4375).abs() < 1e-15);
        assert!(in_lie_ball(&p, 3).unwrap());
        assert!(matches!(
            in_lie_ball(&p, 2),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn riii2_examples() {
        assert!(in_riii2(&SymMat2::ZERO));
        let d = SymMat2::diag(c(0.3, 0.4), cr(-0.9));
        assert!((d.sigma_max() - 0.9).abs() < 1e-15);
        assert!(in_riii2(&d));
        assert!(!in_riii2(&SymMat2::antidiag(ONE)));
    }

    #[test]
    fn tetrablock_examples() {
        assert!(in_tetrablock(&CVec::zeros(3)).unwrap());
        let (a, b) = (c(0.6, -0.3), c(-0.2, 0.85));
        assert!(in_tetrablock(&CVec::from([a, b, a * b])).unwrap());
        let x = CVec::from([ZERO, ZERO, cr(0.5)]);
        let m = tetrablock_fiber_matrix(&x).unwrap();
        assert!((m.a12 - I * (0.5f64).sqrt()).norm() < 1e-15);
        assert!((m.sigma_max() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(in_tetrablock(&x).unwrap());
        assert!(!in_tetrablock(&CVec::from([ZERO, ZERO, ONE])).unwrap());
    }

    #[test]
    fn sym_bidisc_examples() {
        assert!(in_sym_bidisc(ZERO, ZERO));
        assert!(in_sym_bidisc(cr(1.0), cr(0.25)));
        assert!(!in_sym_bidisc(cr(2.0), cr(1.0)));
    }

    #[test]
    fn ellipsoid_examples() {
        assert!(in_ellipsoid(&CVec::zeros(2), &[2, 1]).unwrap());
        let z = CVec::from([cr(0.9), cr(0.3)]);
        assert!((ellipsoid_sum(&z, &[2, 1]).unwrap() - 0.7461).abs() < 1e-15);
        assert!(in_ellipsoid(&z, &[2, 1]).unwrap());
        assert!(!in_ellipsoid(&CVec::from([ONE, ZERO]), &[2, 1]).unwrap());
        assert!(in_ellipsoid(&z, &[2]).is_err());
        assert!("ellipsoid:1,1".parse::<DomainDescriptor>().is_err());
    }

    #[test]
    fn indicatrix_examples() {
        assert_eq!(gauge_indicatrix_e0(&CVec::zeros(3)).unwrap(), 0.0);
        let q = CVec::from([cr(0.25), cr(0.25), cr(0.25)]);
        assert_eq!(gauge_indicatrix_e0(&q).unwrap(), 0.5);
        let z = CVec::from([cr(0.3), cr(0.1), cr(0.5)]);
        assert!((gauge_indicatrix_e0(&z).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn standard_gauges() {
        let d = DomainDescriptor::Polydisc(2);
        assert!(d.contains(&CVec::zeros(2)).unwrap());
        assert!(!d.contains(&CVec::from([ONE, ZERO])).unwrap());
        let b = DomainDescriptor::Ball(2);
        assert!(!b.contains(&CVec::from([cr(0.6), cr(0.8)])).unwrap());
        assert!(b.in_closure(&CVec::from([cr(0.6), cr(0.8)]), CLOSURE_TOL).unwrap());
        assert!(DomainDescriptor::Disc.contains(&CVec::from([cr(0.99)])).unwrap());
    }

    #[test]
    fn shilov_samples_satisfy_boundary_equations() {
        for n in 1..=4 {
            for s in sample_shilov_lie(n, 200, 11).unwrap() {
                assert!((s.point.bullet_self().norm() - 1.0).abs() < 1e-12);
                assert!((s.point.norm() - 1.0).abs() < 1e-12);
                assert!((lie_defining_value(&s.point) - 1.0).abs() < 1e-12);
            }
        }
        assert!(sample_shilov_lie(3, 0, 1).is_err());
    }

    #[test]
    fn samples_are_interior_and_deterministic() {
        let domains = [
            DomainDescriptor::Disc,
            DomainDescriptor::Polydisc(3),
            DomainDescriptor::Ball(4),
            DomainDescriptor::LieBall(5),
            DomainDescriptor::RIII2,
            DomainDescriptor::Tetrablock,
            DomainDescriptor::SymBidisc,
            DomainDescriptor::Ellipsoid(vec![2, 1, 3]),
            DomainDescriptor::IndicatrixE0,
        ];
        for d in &domains {
            let a = d.sample_interior_many(500, 3);
            assert_eq!(a, d.sample_interior_many(500, 3));
            for z in &a {
                assert!(d.contains(z).unwrap(), "{d} sample {z} not inside");
            }
        }
    }

    #[test]
    fn descriptor_string_round_trip() {
        for s in ["disc", "polydisc:3", "ball:2", "lie:3", "riii2", "tetrablock", "symbidisc", "ellipsoid:2,1", "indicatrix-e0"] {
            let d: DomainDescriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert_eq!("lie 3".parse::<DomainDescriptor>().unwrap(), DomainDescriptor::LieBall(3));
        assert!("lie:0".parse::<DomainDescriptor>().is_err());
        assert!("moon".parse::<DomainDescriptor>().is_err());
    }

    fn cvec_strategy(n: usize, r: f64) -> impl Strategy<Value = CVec> {
        prop::collection::vec((-r..r, -r..r), n)
            .prop_map(|v| CVec::new(v.into_iter().map(|(a, b)| c(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn lie_ball_inside_ball_and_matches_gauge(z in cvec_strategy(3, 0.8)) {
            let lie = in_lie_ball(&z, 3).unwrap();
            if lie {
                prop_assert!(in_ball(&z, 3).unwrap());
            }
            let g = lie_norm(&z);
            if (g - 1.0).abs() > 1e-9 {
                prop_assert_eq!(lie, g < 1.0);
            }
        }

        #[test]
        fn tetrablock_swap_invariant(z in cvec_strategy(3, 1.0)) {
            let swapped = CVec::from([z[1], z[0], z[2]]);
            let (g, gs) = (tetrablock_gauge(&z).unwrap(), tetrablock_gauge(&swapped).unwrap());
            prop_assert!((g - gs).abs() < 1e-12);
            let lit = tetrablock_fiber_matrix(&z).unwrap().sigma_max();
            prop_assert!((g - lit).abs() < 1e-9);
            if (g - 1.0).abs() > 1e-9 {
                prop_assert_eq!(in_tetrablock(&z).unwrap(), in_tetrablock(&swapped).unwrap());
            }
        }

        #[test]
        fn indicatrix_gauge_is_norm_like(z in cvec_strategy(3, 1.0), w in cvec_strategy(3, 1.0), t in (-2.0f64..2.0, -2.0f64..2.0)) {
            let t = c(t.0, t.1);
            let g = |v: &CVec| gauge_indicatrix_e0(v).unwrap();
            prop_assert!((g(&z.scale(t)) - t.norm() * g(&z)).abs() < 1e-12);
            prop_assert!(g(&(&z + &w)) <= g(&z) + g(&w) + 1e-12);
        }

        #[test]
        fn diagonal_riii2_membership(a in (-1.2f64..1.2, -1.2f64..1.2), b in (-1.2f64..1.2, -1.2f64..1.2)) {
            let (a, b) = (c(a.0, a.1), c(b.0, b.1));
            let m = SymMat2::diag(a, b);
            if (a.norm() - 1.0).abs() > 1e-12 && (b.norm() - 1.0).abs() > 1e-12 {
                prop_assert_eq!(in_riii2(&m), a.norm() < 1.0 && b.norm() < 1.0);
            }
        }
    }
}
