//! Retraction families and a sampling verifier.
//!
//! A [`RetractionSpec`] names a family with its parameters. `apply` checks
//! the input against the family's domain; the verifier evaluates without
//! that check so that image violations are measured rather than thrown.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{seeded_rng, DomainDescriptor, Mode};
use crate::error::{Error, Result};
use crate::linalg::{cr, principal_sqrt, CVec, Mat3, SymMat2, C64, I, ONE, ZERO};
use crate::maps::{ball_moebius_unchecked, ellipsoid_power, lambda, psi_omega, RootBranch, BRANCH_GUARD};
use crate::report::{worst_over, Check, VerificationReport};

/// Default tolerance of the verifier.
pub const VERIFY_TOL: f64 = 1e-10;

const PARAM_TOL: f64 = 1e-12;

pub fn bidisc_ra(a: C64, z: &CVec) -> Result<CVec> {
    check_closed_disc(a)?;
    DomainDescriptor::Polydisc(2).require(z, Mode::Strict)?;
    Ok(ra(a, z))
}

fn ra(a: C64, z: &CVec) -> CVec {
    CVec::from([z[0], a * z[0]])
}

/// `(t z1 + (1 - t) conj(a) z2) (1, a)`, defined for `|a| = 1`.
pub fn bidisc_rat(a: C64, t: f64, z: &CVec) -> Result<CVec> {
    check_unimodular(a)?;
    check_unit_interval(t)?;
    DomainDescriptor::Polydisc(2).require(z, Mode::Strict)?;
    Ok(rat(a, t, z))
}

fn rat(a: C64, t: f64, z: &CVec) -> CVec {
    let s = z[0] * t + a.conj() * z[1] * (1.0 - t);
    CVec::from([s, s * a])
}

/// Pairwise map `(z_{2k-1}, z_{2k}) -> ((z_{2k-1} - i z_{2k})/2, (z_{2k} + i z_{2k-1})/2)`
/// on `L_{2n}`, `n >= 2`.
pub fn lie_even_retraction(z: &CVec) -> Result<CVec> {
    let d = z.dim();
    if !d.is_multiple_of(2) || d < 4 {
        return Err(Error::invalid(format!("need an even dimension >= 4, got {d}")));
    }
    DomainDescriptor::LieBall(d).require(z, Mode::Strict)?;
    Ok(lie_even(z))
}

fn lie_even(z: &CVec) -> CVec {
    let mut out = Vec::with_capacity(z.dim());
    for k in 0..z.dim() / 2 {
        let (x, y) = (z[2 * k], z[2 * k + 1]);
        out.push((x - I * y) * 0.5);
        out.push((y + I * x) * 0.5);
    }
    CVec::new(out)
}

pub fn tetra_royal(z: &CVec) -> Result<CVec> {
    DomainDescriptor::Tetrablock.require(z, Mode::Strict)?;
    Ok(royal(z))
}

fn royal(z: &CVec) -> CVec {
    CVec::from([z[0], z[1], z[0] * z[1]])
}

pub fn tetra_sym(z: &CVec) -> Result<CVec> {
    DomainDescriptor::Tetrablock.require(z, Mode::Strict)?;
    Ok(sym(z))
}

fn sym(z: &CVec) -> CVec {
    let m = (z[0] + z[1]) * 0.5;
    CVec::from([m, m, z[2]])
}

pub fn indicatrix_rt(t: f64, z: &CVec) -> Result<CVec> {
    check_unit_interval(t)?;
    DomainDescriptor::IndicatrixE0.require(z, Mode::Strict)?;
    Ok(rt(t, z))
}

fn rt(t: f64, z: &CVec) -> CVec {
    CVec::from([z[0], z[0] * t, z[2]])
}

pub fn indicatrix_proj12(z: &CVec) -> Result<CVec> {
    DomainDescriptor::IndicatrixE0.require(z, Mode::Strict)?;
    Ok(CVec::from([z[0], z[1], ZERO]))
}

fn check_closed_disc(a: C64) -> Result<()> {
    if !(a.norm() <= 1.0 + PARAM_TOL) {
        return Err(Error::invalid(format!("|a| must be <= 1, got {}", a.norm())));
    }
    Ok(())
}

fn check_unimodular(a: C64) -> Result<()> {
    if !((a.norm() - 1.0).abs() <= PARAM_TOL) {
        return Err(Error::invalid(format!(
            "|a| must be 1 (otherwise the map is not idempotent), got {}",
            a.norm()
        )));
    }
    Ok(())
}

fn check_unit_interval(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

/// Affine subspace `point + span(directions)` of `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSlice {
    pub point: CVec,
    pub directions: Vec<CVec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsoidLiftParams {
    pub p: Vec<u32>,
    pub slice: AffineSlice,
    /// A point of the slice (inside the ball) where the root branch is pinned.
    pub basepoint: CVec,
    pub branch: Vec<u32>,
}

/// `R = Phi o r o pi` on an ellipsoid: `pi` is the power map, `r` the
/// retraction of the ball onto `V n B_n`, `Phi` a root branch over that
/// slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidLiftParams", into = "EllipsoidLiftParams")]
pub struct EllipsoidLift {
    params: EllipsoidLiftParams,
    /// Point of `V` closest to the origin.
    center: CVec,
    /// Orthonormal basis of the direction space of `V`.
    basis: Vec<CVec>,
    root: RootBranch,
}

impl From<EllipsoidLift> for EllipsoidLiftParams {
    fn from(l: EllipsoidLift) -> Self {
        l.params
    }
}

impl TryFrom<EllipsoidLiftParams> for EllipsoidLift {
    type Error = Error;
    fn try_from(p: EllipsoidLiftParams) -> Result<Self> {
        EllipsoidLift::new(p)
    }
}

impl EllipsoidLift {
    pub fn new(params: EllipsoidLiftParams) -> Result<Self> {
        let n = params.p.len();
        DomainDescriptor::Ellipsoid(params.p.clone()).validate()?;
        params.slice.point.expect_dim(n)?;
        let basis = orthonormalize(&params.slice.directions, n)?;
        let center = &params.slice.point - &project(&basis, &params.slice.point);
        let rho2 = 1.0 - center.norm_sqr();
        if rho2 <= 0.0 {
            return Err(Error::invalid("the slice misses the unit ball"));
        }
        // Over the slice, w_j = c_j + <t, column j> with |t| < rho, so the
        // smallest |w_j| is |c_j| - rho * |column j|.
        let rho = rho2.sqrt();
        for (j, &pj) in params.p.iter().enumerate() {
            if pj < 2 {
                continue;
            }
            let col = basis.iter().map(|u| u[j].norm_sqr()).sum::<f64>().sqrt();
            let margin = center[j].norm() - rho * col;
            if margin <= BRANCH_GUARD {
                return Err(Error::BranchAmbiguity(format!(
                    "slice meets the branch locus z_{} = 0 (margin {margin:e})",
                    j + 1
                )));
            }
        }
        let off = &params.basepoint - &center;
        if (&off - &project(&basis, &off)).norm() > 1e-12 || params.basepoint.norm() >= 1.0 {
            return Err(Error::invalid("basepoint must lie on the slice inside the ball"));
        }
        let root = RootBranch::new(params.p.clone(), params.basepoint.clone(), params.branch.clone())?;
        Ok(EllipsoidLift {
            params,
            center,
            basis,
            root,
        })
    }

    pub fn params(&self) -> &EllipsoidLiftParams {
        &self.params
    }

    /// Retraction of the ball onto the slice: `phi_c o P_U o phi_c`.
    pub fn ball_retraction(&self, w: &CVec) -> CVec {
        let v = ball_moebius_unchecked(&self.center, w);
        ball_moebius_unchecked(&self.center, &project(&self.basis, &v))
    }

    pub fn apply(&self, z: &CVec) -> Result<CVec> {
        DomainDescriptor::Ellipsoid(self.params.p.clone()).require(z, Mode::Strict)?;
        self.eval(z)
    }

    fn eval(&self, z: &CVec) -> Result<CVec> {
        let w = ellipsoid_power(z, &self.params.p)?;
        self.root.root(&self.ball_retraction(&w))
    }

    /// A point `Phi(w)` with `w` drawn from the slice.
    fn sample_retract<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let rho = (1.0 - self.center.norm_sqr()).sqrt();
        let t = DomainDescriptor::Ball(self.basis.len().max(1)).sample_interior(rng);
        let mut w = self.center.clone();
        for (tk, u) in t.iter().zip(&self.basis) {
            w = &w + &u.scale(tk * rho);
        }
        self.root.root(&w).unwrap_or_else(|_| CVec::new(vec![C64::new(f64::NAN, 0.0); w.dim()]))
    }
}

fn orthonormalize(dirs: &[CVec], n: usize) -> Result<Vec<CVec>> {
    let mut basis: Vec<CVec> = Vec::new();
    for d in dirs {
        d.expect_dim(n)?;
        let mut v = d.clone();
        for u in &basis {
            v = &v - &u.scale(v.inner(u));
        }
        let nv = v.norm();
        if nv <= 1e-10 * d.norm().max(1e-300) {
            return Err(Error::invalid("slice directions are linearly dependent"));
        }
        basis.push(v.scale(cr(1.0 / nv)));
    }
    Ok(basis)
}

fn project(basis: &[CVec], z: &CVec) -> CVec {
    let mut out = CVec::zeros(z.dim());
    for u in basis {
        out = &out + &u.scale(z.inner(u));
    }
    out
}

/// Retraction of the tetrablock whose fibers are lifted through `Lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRetraction {
    Identity,
    TetraSym,
}

impl InnerRetraction {
    fn eval(&self, x: &CVec) -> CVec {
        match self {
            InnerRetraction::Identity => x.clone(),
            InnerRetraction::TetraSym => sym(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaLiftParams {
    pub inner: InnerRetraction,
    pub basepoint: SymMat2,
    /// Half-width of the polydisc patch around `Lambda(basepoint)`.
    pub radius: f64,
}

/// `A -> i_j(R(Lambda(A)))` for `Lambda(A)` in a polydisc patch `P` around
/// `x0 = Lambda(A0)` that stays away from `Lambda` of the diagonal
/// matrices. The section `i_j` is the continuation of the fiber through
/// `A0` along segments of `P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LambdaLiftParams", into = "LambdaLiftParams")]
pub struct LambdaLift {
    params: LambdaLiftParams,
    x0: CVec,
    /// Lower bound of `|x1 x2 - x3|` on the closed patch.
    min_disc: f64,
}

impl From<LambdaLift> for LambdaLiftParams {
    fn from(l: LambdaLift) -> Self {
        l.params
    }
}

impl TryFrom<LambdaLiftParams> for LambdaLift {
    type Error = Error;
    fn try_from(p: LambdaLiftParams) -> Result<Self> {
        LambdaLift::new(p)
    }
}

impl LambdaLift {
    pub fn new(params: LambdaLiftParams) -> Result<Self> {
        let rho = params.radius;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("patch radius must be positive"));
        }
        let a0 = params.basepoint;
        DomainDescriptor::RIII2.require(&a0.to_cvec(), Mode::Strict)?;
        let x0 = lambda(&a0);
        if params.inner.eval(&x0).dist(&x0) > PARAM_TOL {
            return Err(Error::invalid("Lambda(basepoint) is not fixed by the inner retraction"));
        }
        // |d(x) - d(x0)| <= rho (|x01| + |x02| + rho + 1) on the patch.
        let d0 = (x0[0] * x0[1] - x0[2]).norm();
        let min_disc = d0 - rho * (x0[0].norm() + x0[1].norm() + rho + 1.0);
        if min_disc <= BRANCH_GUARD {
            return Err(Error::BranchAmbiguity(format!(
                "patch may meet the royal variety (lower bound {min_disc:e})"
            )));
        }
        Ok(LambdaLift { params, x0, min_disc })
    }

    pub fn params(&self) -> &LambdaLiftParams {
        &self.params
    }

    pub fn patch_center(&self) -> &CVec {
        &self.x0
    }

    fn in_patch(&self, x: &CVec) -> bool {
        (0..3).all(|k| (x[k] - self.x0[k]).norm() < self.params.radius)
    }

    pub fn apply(&self, a: &SymMat2) -> Result<SymMat2> {
        DomainDescriptor::RIII2.require(&a.to_cvec(), Mode::Strict)?;
        self.eval(a)
    }

    fn eval(&self, a: &SymMat2) -> Result<SymMat2> {
        self.section(&self.params.inner.eval(&lambda(a)))
    }

    /// The continued fiber point over `y` in the patch.
    pub fn section(&self, y: &CVec) -> Result<SymMat2> {
        y.expect_dim(3)?;
        if !self.in_patch(y) {
            let far = (0..3).map(|k| (y[k] - self.x0[k]).norm()).fold(0.0, f64::max);
            return Err(Error::DomainViolation {
                domain: "lambda-lift patch".into(),
                value: far / self.params.radius,
            });
        }
        let x0 = &self.x0;
        let dx: Vec<C64> = (0..3).map(|k| y[k] - x0[k]).collect();
        let variation = dx[0].norm() * x0[1].norm()
            + dx[1].norm() * x0[0].norm()
            + dx[0].norm() * dx[1].norm()
            + dx[2].norm();
        let steps = ((4.0 * variation / self.min_disc).ceil() as usize + 1).min(1_000_000);
        let mut r = self.params.basepoint.a12;
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let x: Vec<C64> = (0..3).map(|j| x0[j] + dx[j] * s).collect();
            let d = x[0] * x[1] - x[2];
            if d.norm() < BRANCH_GUARD {
                return Err(Error::BranchAmbiguity("continuation met the royal variety".into()));
            }
            let q = principal_sqrt(d);
            r = if (q - r).norm() <= (q + r).norm() { q } else { -q };
        }
        Ok(SymMat2::new(y[0], r, y[1]))
    }

    /// `A0` plus a small perturbation, kept inside `R_III(2)` with
    /// `Lambda(A)` in the patch.
    fn sample_input<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let a0 = self.params.basepoint;
        let h = self.params.radius / 4.0;
        loop {
            let a = SymMat2::new(
                a0.a11 + disc_point(rng, h),
                a0.a12 + disc_point(rng, h),
                a0.a22 + disc_point(rng, h),
            );
            if a.sigma_max() < 1.0 && self.in_patch(&lambda(&a)) {
                return a.to_cvec();
            }
        }
    }

    fn sample_retract<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        loop {
            let x: Vec<C64> = (0..3).map(|k| self.x0[k] + disc_point(rng, self.params.radius)).collect();
            let x = CVec::new(x);
            if !DomainDescriptor::Tetrablock.contains(&x).unwrap_or(false) {
                continue;
            }
            let y = self.params.inner.eval(&x);
            if let Ok(m) = self.section(&y) {
                return m.to_cvec();
            }
        }
    }
}

fn disc_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random_range(0.0..TAU))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RetractionSpec {
    BidiscRa { a: C64 },
    BidiscRat { a: C64, t: f64 },
    /// The retraction of `L_{2n}`.
    LieEven { n: usize },
    TetraRoyal,
    TetraSym,
    IndicatrixProj12,
    IndicatrixRt { t: f64 },
    EllipsoidLift(EllipsoidLift),
    LambdaLift(LambdaLift),
    Linear3 { matrix: Mat3 },
}

impl RetractionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            RetractionSpec::BidiscRa { a } => check_closed_disc(*a),
            RetractionSpec::BidiscRat { a, t } => {
                check_unimodular(*a)?;
                check_unit_interval(*t)
            }
            RetractionSpec::LieEven { n } => {
                if *n < 2 {
                    return Err(Error::invalid(format!("LieEven needs n >= 2, got {n}")));
                }
                Ok(())
            }
            RetractionSpec::IndicatrixRt { t } => check_unit_interval(*t),
            RetractionSpec::Linear3 { matrix } => check_linear_retraction(matrix),
            _ => Ok(()),
        }
    }

    pub fn domain(&self) -> DomainDescriptor {
        match self {
            RetractionSpec::BidiscRa { .. } | RetractionSpec::BidiscRat { .. } => DomainDescriptor::Polydisc(2),
            RetractionSpec::LieEven { n } => DomainDescriptor::LieBall(2 * n),
            RetractionSpec::TetraRoyal | RetractionSpec::TetraSym => DomainDescriptor::Tetrablock,
            RetractionSpec::IndicatrixProj12 | RetractionSpec::IndicatrixRt { .. } | RetractionSpec::Linear3 { .. } => {
                DomainDescriptor::IndicatrixE0
            }
            RetractionSpec::EllipsoidLift(l) => DomainDescriptor::Ellipsoid(l.params.p.clone()),
            RetractionSpec::LambdaLift(_) => DomainDescriptor::RIII2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RetractionSpec::BidiscRa { a } => format!("bidisc_ra(a={a})"),
            RetractionSpec::BidiscRat { a, t } => format!("bidisc_rat(a={a}, t={t})"),
            RetractionSpec::LieEven { n } => format!("lie_even(n={n})"),
            RetractionSpec::TetraRoyal => "tetra_royal".into(),
            RetractionSpec::TetraSym => "tetra_sym".into(),
            RetractionSpec::IndicatrixProj12 => "indicatrix_proj12".into(),
            RetractionSpec::IndicatrixRt { t } => format!("indicatrix_rt(t={t})"),
            RetractionSpec::EllipsoidLift(l) => format!("ellipsoid_lift(p={:?})", l.params.p),
            RetractionSpec::LambdaLift(l) => format!("lambda_lift({:?})", l.params.inner),
            RetractionSpec::Linear3 { .. } => "linear3".into(),
        }
    }

    /// Validates parameters and the input, then evaluates.
    pub fn apply(&self, z: &CVec) -> Result<CVec> {
        self.validate()?;
        self.domain().require(z, Mode::Strict)?;
        self.eval(z)
    }

    /// Evaluation without the domain check on `z`.
    pub(crate) fn eval(&self, z: &CVec) -> Result<CVec> {
        z.expect_dim(self.domain().dim())?;
        Ok(match self {
            RetractionSpec::BidiscRa { a } => ra(*a, z),
            RetractionSpec::BidiscRat { a, t } => rat(*a, *t, z),
            RetractionSpec::LieEven { .. } => lie_even(z),
            RetractionSpec::TetraRoyal => royal(z),
            RetractionSpec::TetraSym => sym(z),
            RetractionSpec::IndicatrixProj12 => CVec::from([z[0], z[1], ZERO]),
            RetractionSpec::IndicatrixRt { t } => rt(*t, z),
            RetractionSpec::EllipsoidLift(l) => l.eval(z)?,
            RetractionSpec::LambdaLift(l) => l.eval(&SymMat2::from_cvec(z)?)?.to_cvec(),
            RetractionSpec::Linear3 { matrix } => matrix.apply_vec(z)?,
        })
    }

    /// A seeded point of the domain (of the patch for lifted retractions).
    pub fn sample_input<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        match self {
            RetractionSpec::LambdaLift(l) => l.sample_input(rng),
            _ => self.domain().sample_interior(rng),
        }
    }

    /// A seeded point of the retract, from an explicit parametrization
    /// where one is known.
    pub fn sample_retract<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        match self {
            RetractionSpec::BidiscRa { a } | RetractionSpec::BidiscRat { a, .. } => {
                let l = disc_point(rng, 1.0);
                CVec::from([l, l * a])
            }
            RetractionSpec::LieEven { n } => {
                let w = DomainDescriptor::Ball(*n).sample_interior(rng).scale(cr(0.5));
                CVec::new(w.iter().flat_map(|wk| [*wk, I * wk]).collect())
            }
            RetractionSpec::TetraRoyal => {
                let (a, b) = (disc_point(rng, 1.0), disc_point(rng, 1.0));
                CVec::from([a, b, a * b])
            }
            RetractionSpec::TetraSym => {
                let g = DomainDescriptor::SymBidisc.sample_interior(rng);
                CVec::from([g[0] * 0.5, g[0] * 0.5, g[1]])
            }
            RetractionSpec::IndicatrixProj12 => {
                CVec::from([disc_point(rng, 1.0), disc_point(rng, 1.0), ZERO])
            }
            RetractionSpec::IndicatrixRt { t } => {
                let z = DomainDescriptor::IndicatrixE0.sample_interior(rng);
                CVec::from([z[0], z[0] * *t, z[2]])
            }
            RetractionSpec::EllipsoidLift(l) => l.sample_retract(rng),
            RetractionSpec::LambdaLift(l) => l.sample_retract(rng),
            RetractionSpec::Linear3 { matrix } => {
                let z = DomainDescriptor::IndicatrixE0.sample_interior(rng);
                matrix.apply_vec(&z).expect("dimension 3")
            }
        }
    }
}

fn check_linear_retraction(m: &Mat3) -> Result<()> {
    if !m.rows.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    let err = m.mul(m).max_abs_diff(m);
    if err > PARAM_TOL {
        return Err(Error::invalid(format!("matrix is not idempotent (|R^2 - R| = {err:e})")));
    }
    // For an idempotent matrix the rank equals the trace.
    let tr = m.rows[0][0] + m.rows[1][1] + m.rows[2][2];
    if (tr - 2.0).norm() > 1e-9 {
        return Err(Error::invalid(format!("matrix must have rank 2 (trace {tr})")));
    }
    Ok(())
}

fn nan_vec(n: usize) -> CVec {
    CVec::new(vec![C64::new(f64::NAN, f64::NAN); n])
}

fn eval_or_nan(spec: &RetractionSpec, z: &CVec) -> CVec {
    spec.eval(z).unwrap_or_else(|_| nan_vec(z.dim()))
}

/// Samples the domain and the retract and reports three checks: `image`
/// (`max(0, gauge(R z) - 1)`), `idempotence` (`|R R z - R z|`) and `fixing`
/// (`|R v - v|` on retract samples).
pub fn verify_retraction(
    spec: &RetractionSpec,
    domain: &DomainDescriptor,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    spec.validate()?;
    if spec.domain() != *domain {
        return Err(Error::invalid(format!(
            "{} acts on {}, not {}",
            spec.label(),
            spec.domain(),
            domain
        )));
    }
    let mut rng = seeded_rng(seed);
    let inputs: Vec<CVec> = (0..samples).map(|_| spec.sample_input(&mut rng)).collect();
    let fixed: Vec<CVec> = (0..samples).map(|_| spec.sample_retract(&mut rng)).collect();

    let mut report = VerificationReport::new(spec.label());
    let image = worst_over(&inputs, |z| {
        let w = eval_or_nan(spec, z);
        (domain.gauge_unchecked(&w) - 1.0).max(0.0)
    });
    report.push(Check::new("image", image, samples, tol));
    let idem = worst_over(&inputs, |z| {
        let w = eval_or_nan(spec, z);
        eval_or_nan(spec, &w).dist(&w)
    });
    report.push(Check::new("idempotence", idem, samples, tol));
    let fix = worst_over(&fixed, |v| eval_or_nan(spec, v).dist(v));
    report.push(Check::new("fixing", fix, samples, tol));
    Ok(report)
}

/// Checks that `R_1 o R_2` is the identity on the retract of `R_1` and
/// `R_2 o R_1` on the retract of `R_2`. Both must fix `common`.
pub fn compose_retracts_check(
    r1: &RetractionSpec,
    r2: &RetractionSpec,
    common: &CVec,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    r1.validate()?;
    r2.validate()?;
    if r1.domain() != r2.domain() {
        return Err(Error::invalid("retractions act on different domains"));
    }
    for r in [r1, r2] {
        let moved = r.eval(common)?.dist(common);
        if moved > tol {
            return Err(Error::invalid(format!("{} moves the common point by {moved:e}", r.label())));
        }
    }
    let mut rng = seeded_rng(seed);
    let m1: Vec<CVec> = (0..samples).map(|_| r1.sample_retract(&mut rng)).collect();
    let m2: Vec<CVec> = (0..samples).map(|_| r2.sample_retract(&mut rng)).collect();
    let mut report = VerificationReport::new(format!("{} vs {}", r1.label(), r2.label()));
    let w1 = worst_over(&m1, |v| eval_or_nan(r1, &eval_or_nan(r2, v)).dist(v));
    report.push(Check::new("r1_after_r2_on_m1", w1, samples, tol));
    let w2 = worst_over(&m2, |v| eval_or_nan(r2, &eval_or_nan(r1, v)).dist(v));
    report.push(Check::new("r2_after_r1_on_m2", w2, samples, tol));
    Ok(report)
}

/// `max |Psi_omega(R z) - Psi_omega(z)|` over tetrablock samples for
/// `R = tetra_sym`, one check per `omega`.
pub fn tetra_sym_left_inverse_check(omegas: &[C64], samples: usize, seed: u64, tol: f64) -> Result<VerificationReport> {
    let inputs = DomainDescriptor::Tetrablock.sample_interior_many(samples, seed);
    let mut report = VerificationReport::new("psi_omega o tetra_sym vs psi_omega");
    for (k, &om) in omegas.iter().enumerate() {
        psi_omega(om, &CVec::zeros(3))?;
        let w = worst_over(&inputs, |z| match (psi_omega(om, &sym(z)), psi_omega(om, z)) {
            (Ok(a), Ok(b)) => (a - b).norm(),
            _ => f64::NAN,
        });
        report.push(Check::new(
            format!("omega[{k}]=({:.6},{:.6})", om.re, om.im),
            w,
            samples,
            tol,
        ));
    }
    Ok(report)
}

/// Fixed points of `lambda -> -lambda` inside the annulus `1/r < |lambda| < r`.
/// The only fixed point in the plane is 0, so this is always empty.
pub fn annulus_negation_fixed_points(r: f64) -> Result<Vec<C64>> {
    if !(r > 1.0) {
        return Err(Error::invalid("annulus needs r > 1"));
    }
    // -l = l  <=>  l = 0
    let candidates = [ZERO];
    Ok(candidates
        .into_iter()
        .filter(|l| l.norm() > 1.0 / r && l.norm() < r)
        .collect())
}

/// Smallest `|(-l) - l|` over a polar grid of the annulus.
pub fn annulus_negation_min_displacement(r: f64, grid: usize) -> Result<f64> {
    if !(r > 1.0) || grid < 2 {
        return Err(Error::invalid("annulus needs r > 1 and grid >= 2"));
    }
    let mut best = f64::INFINITY;
    for i in 0..grid {
        let rad = 1.0 / r + (r - 1.0 / r) * (i as f64 + 0.5) / grid as f64;
        for j in 0..grid {
            let l = C64::from_polar(rad, TAU * j as f64 / grid as f64);
            best = best.min((-l - l).norm());
        }
    }
    Ok(best)
}

/// Worst case of `|f(R z) - f(z)|` for an arbitrary scalar function, the
/// necessary condition for `f` to be a left inverse of a geodesic lying in
/// the retract.
pub fn necessary_condition_check<F>(
    spec: &RetractionSpec,
    f: F,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Check>
where
    F: Fn(&CVec) -> Result<C64> + Sync,
{
    spec.validate()?;
    let mut rng = seeded_rng(seed);
    let inputs: Vec<CVec> = (0..samples).map(|_| spec.sample_input(&mut rng)).collect();
    let w = worst_over(&inputs, |z| match (spec.eval(z), f(z)) {
        (Ok(rz), Ok(fz)) => f(&rz).map(|v| (v - fz).norm()).unwrap_or(f64::NAN),
        _ => f64::NAN,
    });
    Ok(Check::new("f_after_r", w, samples, tol))
}

/// The default ellipsoid example: `E(2, 1)` lifted from the slice `{w1 = 1/2}`.
pub fn ellipsoid_example() -> EllipsoidLift {
    EllipsoidLift::new(EllipsoidLiftParams {
        p: vec![2, 1],
        slice: AffineSlice {
            point: CVec::from([cr(0.5), ZERO]),
            directions: vec![CVec::from([ZERO, ONE])],
        },
        basepoint: CVec::from([cr(0.5), ZERO]),
        branch: vec![0, 0],
    })
    .expect("valid example")
}

/// The default lifted tetrablock example around `A0 = [[0.2, 0.3i], [0.3i, 0.2]]`.
pub fn lambda_lift_example(inner: InnerRetraction) -> LambdaLift {
    LambdaLift::new(LambdaLiftParams {
        inner,
        basepoint: SymMat2::new(cr(0.2), C64::new(0.0, 0.3), cr(0.2)),
        radius: 0.05,
    })
    .expect("valid example")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{in_lie_ball, in_sym_bidisc, in_tetrablock, gauge_indicatrix_e0};
    use crate::linalg::c;
    use crate::maps::omega_grid;

    #[test]
    fn bidisc_examples() {
        assert_eq!(bidisc_ra(I, &CVec::zeros(2)).unwrap(), CVec::zeros(2));
        let z = CVec::from([cr(0.5), cr(0.9)]);
        assert_eq!(bidisc_ra(I, &z).unwrap(), CVec::from([cr(0.5), c(0.0, 0.5)]));
        let a = C64::from_polar(1.0, 0.7);
        let z = CVec::from([c(0.1, -0.3), c(0.6, 0.2)]);
        assert!(bidisc_rat(a, 1.0, &z).unwrap().dist(&bidisc_ra(a, &z).unwrap()) < 1e-15);
        let r = bidisc_rat(ONE, 0.5, &CVec::from([cr(0.2), cr(0.6)])).unwrap();
        assert!(r.dist(&CVec::from([cr(0.4), cr(0.4)])) < 1e-15);
        assert!(bidisc_rat(cr(0.5), 0.5, &z).is_err());
        for k in 0..20 {
            let l = C64::from_polar(0.05 * k as f64, 0.3 * k as f64);
            let v = CVec::from([l, a * l]);
            assert!(bidisc_rat(a, 0.3, &v).unwrap().dist(&v) < 1e-15);
        }
    }

    #[test]
    fn non_unimodular_rat_is_not_idempotent() {
        // Second application rescales by t + (1 - t)|a|^2.
        let (a, t) = (cr(0.5), 0.5);
        let z = CVec::from([cr(0.3), cr(0.4)]);
        let once = rat(a, t, &z);
        let twice = rat(a, t, &once);
        let factor = t + (1.0 - t) * a.norm_sqr();
        assert!(twice.dist(&once.scale(cr(factor))) < 1e-15);
        assert!(twice.dist(&once) > 0.05);
    }

    #[test]
    fn lie_even_examples() {
        assert_eq!(lie_even_retraction(&CVec::zeros(4)).unwrap(), CVec::zeros(4));
        let w = c(0.3, 0.2);
        let v = CVec::from([w, I * w, ZERO, ZERO]);
        assert!(lie_even_retraction(&v).unwrap().dist(&v) < 1e-15);
        assert!(lie_even_retraction(&CVec::zeros(3)).is_err());
        assert!(lie_even_retraction(&CVec::zeros(2)).is_err());
    }

    #[test]
    fn lie_even_fixed_set_threshold() {
        let mut rng = seeded_rng(5);
        for n in 2..=4 {
            for _ in 0..300 {
                let dir = crate::domains::gaussian_cvec(&mut rng, n);
                for s in [0.25 - 1e-3, 0.25 + 1e-3] {
                    let w = dir.scale(cr((s / dir.norm_sqr()).sqrt()));
                    let v = CVec::new(w.iter().flat_map(|x| [*x, I * x]).collect());
                    assert!(lie_even(&v).dist(&v) < 1e-15);
                    assert_eq!(in_lie_ball(&v, 2 * n).unwrap(), s < 0.25);
                }
            }
        }
    }

    #[test]
    fn tetra_examples() {
        assert_eq!(tetra_royal(&CVec::zeros(3)).unwrap(), CVec::zeros(3));
        let (a, b) = (c(0.3, 0.4), c(-0.5, 0.1));
        let v = CVec::from([a, b, a * b]);
        assert_eq!(tetra_royal(&v).unwrap(), v);
        let s = CVec::from([c(0.2, 0.1), c(0.2, 0.1), cr(0.3)]);
        assert_eq!(tetra_sym(&s).unwrap(), s);
        for z in DomainDescriptor::Tetrablock.sample_interior_many(10_000, 9) {
            assert!(in_tetrablock(&royal(&z)).unwrap());
            let r = sym(&z);
            assert!(in_tetrablock(&r).unwrap());
            assert!(in_sym_bidisc(r[0] * 2.0, r[2]));
        }
    }

    #[test]
    fn indicatrix_examples() {
        let z = CVec::from([cr(0.2), cr(0.7), cr(0.1)]);
        let r = indicatrix_rt(1.0, &z).unwrap();
        assert_eq!(r, CVec::from([cr(0.2), cr(0.2), cr(0.1)]));
        assert!((gauge_indicatrix_e0(&z).unwrap() - 0.8).abs() < 1e-15);
        assert!((gauge_indicatrix_e0(&r).unwrap() - 0.3).abs() < 1e-15);
        let p = indicatrix_proj12(&CVec::from([cr(0.3), cr(0.4), cr(0.2)])).unwrap();
        assert_eq!(p, CVec::from([cr(0.3), cr(0.4), ZERO]));
        assert!(indicatrix_rt(1.5, &z).is_err());
        for z in DomainDescriptor::IndicatrixE0.sample_interior_many(2000, 1) {
            for t in [0.0, 0.3, 1.0] {
                let g = gauge_indicatrix_e0(&z).unwrap();
                assert!(gauge_indicatrix_e0(&rt(t, &z)).unwrap() <= g);
                assert!(gauge_indicatrix_e0(&indicatrix_proj12(&z).unwrap()).unwrap() <= g);
            }
        }
    }

    #[test]
    fn ellipsoid_lift_example() {
        let l = ellipsoid_example();
        let r2 = 0.5f64.sqrt();
        for k in 0..50 {
            let w = C64::from_polar(0.8 * k as f64 / 50.0, k as f64);
            let v = CVec::from([cr(r2), w]);
            assert!(l.apply(&v).unwrap().dist(&v) < 1e-12);
        }
        // All-ones exponents collapse to the ball retraction.
        let b = EllipsoidLift::new(EllipsoidLiftParams {
            p: vec![1, 1, 2],
            slice: AffineSlice {
                point: CVec::from([cr(0.1), ZERO, cr(0.6)]),
                directions: vec![CVec::from([ONE, I, ZERO])],
            },
            basepoint: CVec::from([cr(0.1), ZERO, cr(0.6)]),
            branch: vec![0, 0, 1],
        })
        .unwrap();
        let z = CVec::from([c(0.2, 0.1), cr(-0.3), c(0.1, 0.0)]);
        let w = ellipsoid_power(&z, &[1, 1, 2]).unwrap();
        let out = b.apply(&z).unwrap();
        let rw = b.ball_retraction(&w);
        assert!((out[0] - rw[0]).norm() < 1e-15 && (out[1] - rw[1]).norm() < 1e-15);
        assert!((out[2] * out[2] - rw[2]).norm() < 1e-14);
    }

    #[test]
    fn ellipsoid_lift_refuses_slices_through_the_locus() {
        let bad = EllipsoidLiftParams {
            p: vec![2, 1],
            slice: AffineSlice {
                point: CVec::from([cr(0.1), ZERO]),
                directions: vec![CVec::from([ONE, ONE])],
            },
            basepoint: CVec::from([cr(0.1), ZERO]),
            branch: vec![0, 0],
        };
        assert!(matches!(EllipsoidLift::new(bad), Err(Error::BranchAmbiguity(_))));
    }

    #[test]
    fn lambda_lift_examples() {
        let l = lambda_lift_example(InnerRetraction::Identity);
        let a0 = l.params().basepoint;
        assert!(l.apply(&a0).unwrap().dist(&a0) < 1e-15);
        let mut rng = seeded_rng(3);
        for _ in 0..500 {
            let a = SymMat2::from_cvec(&l.sample_input(&mut rng)).unwrap();
            let r = l.apply(&a).unwrap();
            assert!(lambda(&r).dist(&lambda(&a)) < 1e-12);
            assert!(l.apply(&r).unwrap().dist(&r) < 1e-12);
        }
        let far = SymMat2::new(cr(0.5), cr(0.1), cr(0.0));
        assert!(matches!(l.apply(&far), Err(Error::DomainViolation { .. })));
        let bad = LambdaLiftParams {
            inner: InnerRetraction::Identity,
            basepoint: SymMat2::new(cr(0.2), cr(0.01), cr(0.2)),
            radius: 0.05,
        };
        assert!(matches!(LambdaLift::new(bad), Err(Error::BranchAmbiguity(_))));
    }

    #[test]
    fn verifier_passes_constructed_families() {
        let specs = vec![
            RetractionSpec::BidiscRa { a: c(0.3, 0.4) },
            RetractionSpec::BidiscRat { a: C64::from_polar(1.0, 1.0), t: 0.25 },
            RetractionSpec::LieEven { n: 2 },
            RetractionSpec::LieEven { n: 3 },
            RetractionSpec::TetraRoyal,
            RetractionSpec::TetraSym,
            RetractionSpec::IndicatrixProj12,
            RetractionSpec::IndicatrixRt { t: 0.5 },
            RetractionSpec::EllipsoidLift(ellipsoid_example()),
            RetractionSpec::LambdaLift(lambda_lift_example(InnerRetraction::Identity)),
            RetractionSpec::LambdaLift(lambda_lift_example(InnerRetraction::TetraSym)),
            RetractionSpec::Linear3 {
                matrix: Mat3::from_rows([[ONE, ZERO, ZERO], [cr(0.5), ZERO, ZERO], [ZERO, ZERO, ONE]]),
            },
        ];
        for s in &specs {
            let rep = verify_retraction(s, &s.domain(), 2000, 17, VERIFY_TOL).unwrap();
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn verifier_rejects_invalid_specs_and_flags_non_retractions() {
        let bad = RetractionSpec::BidiscRat { a: cr(0.5), t: 0.5 };
        assert!(verify_retraction(&bad, &bad.domain(), 10, 1, VERIFY_TOL).is_err());
        assert!(RetractionSpec::LieEven { n: 1 }.validate().is_err());
        let s = RetractionSpec::TetraRoyal;
        assert!(verify_retraction(&s, &DomainDescriptor::RIII2, 10, 1, VERIFY_TOL).is_err());
        // Projection onto span{e1, e2 + e3} along e3: (0, 1, 0) has gauge 1, its image gauge 2.
        let m = Mat3::from_rows([[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ONE, ZERO]]);
        let spec = RetractionSpec::Linear3 { matrix: m };
        let rep = verify_retraction(&spec, &spec.domain(), 2000, 2, VERIFY_TOL).unwrap();
        assert!(!rep.check("image").unwrap().passed);
        assert!(rep.check("idempotence").unwrap().passed);
        let e2 = CVec::from([ZERO, ONE, ZERO]);
        assert_eq!(gauge_indicatrix_e0(&m.apply_vec(&e2).unwrap()).unwrap(), 2.0);
        assert_eq!(gauge_indicatrix_e0(&m.apply_vec(&CVec::from([ZERO, ZERO, ONE])).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn verifier_is_deterministic() {
        let s = RetractionSpec::Linear3 {
            matrix: Mat3::from_rows([[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ONE, ZERO]]),
        };
        let a = verify_retraction(&s, &s.domain(), 3000, 99, VERIFY_TOL).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| verify_retraction(&s, &s.domain(), 3000, 99, VERIFY_TOL).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn compose_examples() {
        let zero = CVec::zeros(3);
        let r = RetractionSpec::TetraRoyal;
        assert!(compose_retracts_check(&r, &r, &zero, 1000, 1, VERIFY_TOL).unwrap().passed());
        let s = RetractionSpec::TetraSym;
        assert!(compose_retracts_check(&s, &s, &zero, 1000, 1, VERIFY_TOL).unwrap().passed());
        assert!(!compose_retracts_check(&r, &s, &zero, 1000, 1, VERIFY_TOL).unwrap().passed());
        // R_t only reads z1 and z3, so any two of them undo each other on their images.
        let (a, b) = (RetractionSpec::IndicatrixRt { t: 0.2 }, RetractionSpec::IndicatrixRt { t: 0.9 });
        assert!(compose_retracts_check(&a, &b, &zero, 1000, 1, VERIFY_TOL).unwrap().passed());
        let p = RetractionSpec::IndicatrixProj12;
        assert!(!compose_retracts_check(&p, &a, &zero, 1000, 1, VERIFY_TOL).unwrap().passed());
    }

    #[test]
    fn psi_omega_after_tetra_sym_depends_on_omega() {
        let rep = tetra_sym_left_inverse_check(&omega_grid(16), 2000, 4, VERIFY_TOL).unwrap();
        assert_eq!(rep.checks.len(), 16);
        assert!(rep.checks.iter().all(|c| !c.passed));
        // On the retract itself the identity holds trivially.
        for om in omega_grid(16) {
            for v in DomainDescriptor::SymBidisc.sample_interior_many(200, 8) {
                let x = CVec::from([v[0] * 0.5, v[0] * 0.5, v[1]]);
                assert!((psi_omega(om, &sym(&x)).unwrap() - psi_omega(om, &x).unwrap()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn annulus_negation_has_no_fixed_points() {
        for r in [1.5, 2.0, 10.0] {
            assert!(annulus_negation_fixed_points(r).unwrap().is_empty());
            let d = annulus_negation_min_displacement(r, 64).unwrap();
            assert!(d >= 2.0 / r);
        }
    }

    #[test]
    fn spec_serde_round_trip() {
        let specs = vec![
            RetractionSpec::TetraRoyal,
            RetractionSpec::BidiscRat { a: ONE, t: 0.5 },
            RetractionSpec::EllipsoidLift(ellipsoid_example()),
            RetractionSpec::LambdaLift(lambda_lift_example(InnerRetraction::TetraSym)),
        ];
        for s in specs {
            let js = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<RetractionSpec>(&js).unwrap(), s);
        }
        let js = r#"{"family":"bidisc_ra","a":[0.5,0],"extra":1}"#;
        assert!(serde_json::from_str::<RetractionSpec>(js).is_err());
    }
}
