//! Explicit holomorphic maps between the domains: the Cayley-type maps
//! `phi: L_2 -> D^2` and `psi: L_3 -> R_III(2)`, the proper map `Lambda`
//! onto the tetrablock with its fibers, the matrix Moebius automorphisms of
//! `R_III(2)`, the left inverses `Psi_omega`, power maps of ellipsoids with
//! branch continuation, and ball automorphisms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domains::{DomainDescriptor, Mode};
use crate::error::{Error, Result};
use crate::linalg::{cr, principal_sqrt, CVec, Mat2, Mat3, SymMat2, C64, I, ONE, ZERO};

/// Determinant guard for the explicit 2x2 inverse in `Psi_lambda`.
pub const DET_GUARD: f64 = 1e-14;
/// Minimal modulus of the `Psi_omega` denominator.
pub const DENOM_GUARD: f64 = 1e-14;
/// Minimal distance between a continuation segment and a branch point.
pub const BRANCH_GUARD: f64 = 1e-10;

const UNIMODULAR_TOL: f64 = 1e-12;

pub fn phi(z: &CVec, mode: Mode) -> Result<CVec> {
    DomainDescriptor::LieBall(2).require(z, mode)?;
    Ok(phi_unchecked(z))
}

pub(crate) fn phi_unchecked(z: &CVec) -> CVec {
    CVec::from([z[0] + I * z[1], -z[0] + I * z[1]])
}

pub fn phi_inv(w: &CVec, mode: Mode) -> Result<CVec> {
    DomainDescriptor::Polydisc(2).require(w, mode)?;
    Ok(phi_inv_unchecked(w))
}

pub(crate) fn phi_inv_unchecked(w: &CVec) -> CVec {
    CVec::from([(w[0] - w[1]) * 0.5, -I * (w[0] + w[1]) * 0.5])
}

pub fn psi(z: &CVec, mode: Mode) -> Result<SymMat2> {
    DomainDescriptor::LieBall(3).require(z, mode)?;
    Ok(psi_unchecked(z))
}

pub(crate) fn psi_unchecked(z: &CVec) -> SymMat2 {
    SymMat2::new(z[0] + I * z[1], z[2], -z[0] + I * z[1])
}

pub fn psi_inv(a: &SymMat2) -> CVec {
    CVec::from([(a.a11 - a.a22) * 0.5, -I * (a.a11 + a.a22) * 0.5, a.a12])
}

pub fn lambda(a: &SymMat2) -> CVec {
    CVec::from([a.a11, a.a22, a.a11 * a.a22 - a.a12 * a.a12])
}

/// Complex Jacobian of `Lambda` in the coordinates `(a11, a12, a22)`.
pub fn lambda_jacobian(a: &SymMat2) -> Mat3 {
    Mat3::from_rows([
        [ONE, ZERO, ZERO],
        [ZERO, ZERO, ONE],
        [a.a22, -2.0 * a.a12, a.a11],
    ])
}

/// Critical points of `Lambda` are the diagonal matrices.
pub fn is_critical_lambda(a: &SymMat2) -> bool {
    a.a12 == ZERO
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberResult {
    pub points: Vec<SymMat2>,
    /// Number of preimages counted with multiplicity.
    pub multiplicity: usize,
}

/// Both matrices over `x`, or the single diagonal one when
/// `x1 x2 - x3 = 0`.
pub fn lambda_fiber(x: &CVec, mode: Mode) -> Result<FiberResult> {
    DomainDescriptor::Tetrablock.require(x, mode)?;
    let d = x[0] * x[1] - x[2];
    let points = if d == ZERO {
        vec![SymMat2::diag(x[0], x[1])]
    } else {
        let r = principal_sqrt(d);
        vec![SymMat2::new(x[0], r, x[1]), SymMat2::new(x[0], -r, x[1])]
    };
    Ok(FiberResult {
        points,
        multiplicity: 2,
    })
}

const J: Mat2 = Mat2 {
    m: [[ZERO, ONE], [ONE, ZERO]],
};

/// `(A - lambda J)(I - conj(lambda) J A)^(-1)` as a full 2x2 matrix.
pub fn aut_riii2_matrix(lam: C64, a: &SymMat2) -> Result<Mat2> {
    let am = Mat2::from_sym(a);
    let left = am.sub(&scale2(&J, lam));
    let right = Mat2::identity().sub(&scale2(&J.mul(&am), lam.conj()));
    Ok(left.mul(&right.inverse(DET_GUARD)?))
}

/// Automorphism `Psi_lambda` of `R_III(2)`; sends `antidiag(lambda)` to 0.
pub fn aut_riii2(lam: C64, a: &SymMat2) -> Result<SymMat2> {
    if lam.norm() >= 1.0 || !lam.is_finite() {
        return Err(Error::invalid(format!("|lambda| must be < 1, got {}", lam.norm())));
    }
    let m = aut_riii2_matrix(lam, a)?;
    Ok(SymMat2::new(m.m[0][0], (m.m[0][1] + m.m[1][0]) * 0.5, m.m[1][1]))
}

fn scale2(m: &Mat2, s: C64) -> Mat2 {
    let mut r = m.m;
    r.iter_mut().flatten().for_each(|v| *v *= s);
    Mat2 { m: r }
}

/// `Psi_omega(z) = (omega z3 - z2) / (omega z1 - 1)`.
pub fn psi_omega(omega: C64, z: &CVec) -> Result<C64> {
    check_unimodular(omega)?;
    z.expect_dim(3)?;
    let den = omega * z[0] - 1.0;
    if den.norm() < DENOM_GUARD {
        return Err(Error::Singular { det: den.norm() });
    }
    Ok((omega * z[2] - z[1]) / den)
}

fn check_unimodular(omega: C64) -> Result<()> {
    if (omega.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::invalid(format!("|omega| must be 1, got {}", omega.norm())));
    }
    Ok(())
}

pub fn symmetrization(z: C64, w: C64) -> (C64, C64) {
    (z + w, z * w)
}

pub fn ellipsoid_power(z: &CVec, p: &[u32]) -> Result<CVec> {
    z.expect_dim(p.len())?;
    Ok(CVec::new(
        z.iter().zip(p).map(|(zj, &pj)| zj.powi(pj as i32)).collect(),
    ))
}

/// A branch of the inverse of the power map, pinned at a basepoint `x0` of
/// the target by the root indices `k_j`: the root at `x0` is
/// `principal(x0_j^(1/p_j)) * exp(2 pi i k_j / p_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootBranch {
    pub p: Vec<u32>,
    pub basepoint: CVec,
    pub branch: Vec<u32>,
}

impl RootBranch {
    pub fn new(p: Vec<u32>, basepoint: CVec, branch: Vec<u32>) -> Result<Self> {
        DomainDescriptor::Ellipsoid(p.clone()).validate()?;
        basepoint.expect_dim(p.len())?;
        if branch.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: branch.len(),
            });
        }
        for (j, (&k, &pj)) in branch.iter().zip(&p).enumerate() {
            if k >= pj {
                return Err(Error::invalid(format!("branch index {k} out of range for p_{} = {pj}", j + 1)));
            }
            if pj >= 2 && basepoint[j].norm() < BRANCH_GUARD {
                return Err(Error::BranchAmbiguity(format!(
                    "basepoint coordinate {} sits on the branch locus",
                    j + 1
                )));
            }
        }
        Ok(RootBranch { p, basepoint, branch })
    }

    /// Root of the basepoint itself.
    pub fn base_root(&self) -> CVec {
        CVec::new(
            (0..self.p.len())
                .map(|j| root_at(self.basepoint[j], self.p[j], self.branch[j]))
                .collect(),
        )
    }

    /// Continues the branch along the segment from the basepoint to `x`.
    pub fn root(&self, x: &CVec) -> Result<CVec> {
        self.root_along(std::slice::from_ref(x))
    }

    /// Continues the branch along the polyline basepoint, `path[0]`, ...,
    /// `path[last]` and returns the root over the final vertex.
    pub fn root_along(&self, path: &[CVec]) -> Result<CVec> {
        let n = self.p.len();
        let mut prev = self.basepoint.clone();
        let mut z = self.base_root();
        for x in path {
            x.expect_dim(n)?;
            for j in 0..n {
                if self.p[j] == 1 {
                    z[j] = x[j];
                    continue;
                }
                if segment_distance_to_origin(prev[j], x[j]) < BRANCH_GUARD {
                    return Err(Error::BranchAmbiguity(format!(
                        "continuation path passes through z_{} = 0",
                        j + 1
                    )));
                }
                // A segment missing 0 turns by exactly Arg(x/prev), which lies in (-pi, pi).
                let ratio = x[j] / prev[j];
                z[j] *= ratio.powf(1.0 / self.p[j] as f64);
            }
            prev = x.clone();
        }
        Ok(z)
    }
}

fn root_at(x: C64, p: u32, k: u32) -> C64 {
    if p == 1 {
        return x;
    }
    x.powf(1.0 / p as f64) * C64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64)
}

pub(crate) fn segment_distance_to_origin(a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.conj() * d).re / len2).clamp(0.0, 1.0);
    (a + d * t).norm()
}

/// Convenience wrapper: root of `x` continued from `basepoint` with root
/// indices `branch`.
pub fn ellipsoid_root(x: &CVec, p: &[u32], basepoint: &CVec, branch: &[u32]) -> Result<CVec> {
    RootBranch::new(p.to_vec(), basepoint.clone(), branch.to_vec())?.root(x)
}

/// Involutive automorphism of the unit ball exchanging 0 and `a`:
/// `(a - P_a z - s_a Q_a z) / (1 - <z, a>)` with `s_a = sqrt(1 - |a|^2)`.
/// For `a = 0` this is `z -> -z`.
pub fn ball_moebius(a: &CVec, z: &CVec) -> Result<CVec> {
    let n = a.dim();
    z.expect_dim(n)?;
    DomainDescriptor::Ball(n).require(a, Mode::Strict)?;
    DomainDescriptor::Ball(n).require(z, Mode::closure())?;
    Ok(ball_moebius_unchecked(a, z))
}

pub(crate) fn ball_moebius_unchecked(a: &CVec, z: &CVec) -> CVec {
    let aa = a.norm_sqr();
    if aa == 0.0 {
        return -z;
    }
    let za = z.inner(a);
    let pz = a.scale(za / aa);
    let qz = z - &pz;
    let s = (1.0 - aa).sqrt();
    let num = &(a - &pz) - &qz.scale(cr(s));
    num.scale(ONE / (ONE - za))
}

/// Tagged description of one of the explicit maps, evaluable on `CVec`s
/// (matrices of `R_III(2)` are passed as `(a11, a12, a22)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapDescriptor {
    PhiL2ToBidisc,
    PsiL3ToRIII2,
    LambdaToE,
    Symmetrization,
    EllipsoidPower { p: Vec<u32> },
    EllipsoidRoot(RootBranch),
    AutRIII2 { lambda: C64 },
    LeftInversePsiOmega { omega: C64 },
    BallMoebius { a: CVec },
}

impl MapDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            MapDescriptor::EllipsoidPower { p } => DomainDescriptor::Ellipsoid(p.clone()).validate(),
            MapDescriptor::EllipsoidRoot(b) => RootBranch::new(b.p.clone(), b.basepoint.clone(), b.branch.clone()).map(|_| ()),
            MapDescriptor::AutRIII2 { lambda } => {
                if lambda.norm() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("|lambda| must be < 1"))
                }
            }
            MapDescriptor::LeftInversePsiOmega { omega } => check_unimodular(*omega),
            MapDescriptor::BallMoebius { a } => DomainDescriptor::Ball(a.dim().max(1)).require(a, Mode::Strict),
            _ => Ok(()),
        }
    }

    pub fn source(&self) -> DomainDescriptor {
        match self {
            MapDescriptor::PhiL2ToBidisc => DomainDescriptor::LieBall(2),
            MapDescriptor::PsiL3ToRIII2 => DomainDescriptor::LieBall(3),
            MapDescriptor::LambdaToE | MapDescriptor::AutRIII2 { .. } => DomainDescriptor::RIII2,
            MapDescriptor::Symmetrization => DomainDescriptor::Polydisc(2),
            MapDescriptor::EllipsoidPower { p } => DomainDescriptor::Ellipsoid(p.clone()),
            MapDescriptor::EllipsoidRoot(b) => DomainDescriptor::Ball(b.p.len()),
            MapDescriptor::LeftInversePsiOmega { .. } => DomainDescriptor::Tetrablock,
            MapDescriptor::BallMoebius { a } => DomainDescriptor::Ball(a.dim()),
        }
    }

    pub fn target(&self) -> DomainDescriptor {
        match self {
            MapDescriptor::PhiL2ToBidisc => DomainDescriptor::Polydisc(2),
            MapDescriptor::PsiL3ToRIII2 | MapDescriptor::AutRIII2 { .. } => DomainDescriptor::RIII2,
            MapDescriptor::LambdaToE => DomainDescriptor::Tetrablock,
            MapDescriptor::Symmetrization => DomainDescriptor::SymBidisc,
            MapDescriptor::EllipsoidPower { p } => DomainDescriptor::Ball(p.len()),
            MapDescriptor::EllipsoidRoot(b) => DomainDescriptor::Ellipsoid(b.p.clone()),
            MapDescriptor::LeftInversePsiOmega { .. } => DomainDescriptor::Disc,
            MapDescriptor::BallMoebius { a } => DomainDescriptor::Ball(a.dim()),
        }
    }

    pub fn apply(&self, z: &CVec) -> Result<CVec> {
        match self {
            MapDescriptor::PhiL2ToBidisc => phi(z, Mode::closure()),
            MapDescriptor::PsiL3ToRIII2 => Ok(psi(z, Mode::closure())?.to_cvec()),
            MapDescriptor::LambdaToE => Ok(lambda(&SymMat2::from_cvec(z)?)),
            MapDescriptor::Symmetrization => {
                z.expect_dim(2)?;
                let (s, p) = symmetrization(z[0], z[1]);
                Ok(CVec::from([s, p]))
            }
            MapDescriptor::EllipsoidPower { p } => ellipsoid_power(z, p),
            MapDescriptor::EllipsoidRoot(b) => b.root(z),
            MapDescriptor::AutRIII2 { lambda } => Ok(aut_riii2(*lambda, &SymMat2::from_cvec(z)?)?.to_cvec()),
            MapDescriptor::LeftInversePsiOmega { omega } => Ok(CVec::from([psi_omega(*omega, z)?])),
            MapDescriptor::BallMoebius { a } => ball_moebius(a, z),
        }
    }
}

/// `v_2 = (1 - a, -i(1 + a)) / 2`, the point of `L_2` with `phi(v_2) = (1, a)`.
pub fn l2_line_point(a: C64) -> CVec {
    CVec::from([(ONE - a) * 0.5, -I * (ONE + a) * 0.5])
}

/// Unimodular `omega_k = exp(2 pi i k / m)`.
pub fn omega_grid(m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect()
}
