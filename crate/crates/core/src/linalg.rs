//! Small complex vector and matrix types shared by every module.
//!
//! Points of `R_III(2)` are stored as [`SymMat2`]; when a flat coordinate
//! vector is needed the order is `(a11, a12, a22)`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A point (or tangent vector) of `C^n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CVec(Vec<C64>);

impl CVec {
    pub fn new(entries: Vec<C64>) -> Self {
        CVec(entries)
    }

    pub fn zeros(n: usize) -> Self {
        CVec(vec![ZERO; n])
    }

    pub fn from_real(xs: &[f64]) -> Self {
        CVec(xs.iter().map(|&x| cr(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The complex bilinear square `z1^2 + ... + zn^2` (no conjugation).
    pub fn bullet_self(&self) -> C64 {
        self.0.iter().map(|z| z * z).sum()
    }

    /// Hermitian inner product `<self, other> = sum self_j * conj(other_j)`.
    pub fn inner(&self, other: &CVec) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn scale(&self, s: C64) -> CVec {
        CVec(self.0.iter().map(|z| z * s).collect())
    }

    pub fn dist(&self, other: &CVec) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn expect_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim(),
            });
        }
        Ok(())
    }

    /// Lexicographic order on `(re, im)` of each entry, used to break ties
    /// between equally bad witnesses.
    pub fn lex_cmp(&self, other: &CVec) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            let o = a
                .re
                .total_cmp(&b.re)
                .then_with(|| a.im.total_cmp(&b.im));
            if o != std::cmp::Ordering::Equal {
                return o;
            }
        }
        self.dim().cmp(&other.dim())
    }
}

impl From<Vec<C64>> for CVec {
    fn from(v: Vec<C64>) -> Self {
        CVec(v)
    }
}

impl<const N: usize> From<[C64; N]> for CVec {
    fn from(v: [C64; N]) -> Self {
        CVec(v.to_vec())
    }
}

impl Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add<&CVec> for &CVec {
    type Output = CVec;
    fn add(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&CVec> for &CVec {
    type Output = CVec;
    fn sub(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Mul<C64> for &CVec {
    type Output = CVec;
    fn mul(self, rhs: C64) -> CVec {
        self.scale(rhs)
    }
}

impl Mul<f64> for &CVec {
    type Output = CVec;
    fn mul(self, rhs: f64) -> CVec {
        self.scale(cr(rhs))
    }
}

impl Neg for &CVec {
    type Output = CVec;
    fn neg(self) -> CVec {
        CVec(self.0.iter().map(|z| -z).collect())
    }
}

impl fmt::Display for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, ")")
    }
}

/// Accepts either a JSON array of `[re, im]` pairs or a comma separated
/// list of complex literals such as `0.5, -0.5i, 0`.
/// A complex literal such as `0.5`, `-i`, `1+2i`, `-i/2` or `3e-1-0.2i`;
/// the Unicode minus sign is accepted and a trailing `/d` divides by the
/// real number `d`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::Parse(format!("bad complex literal `{s}`"));
    let t: String = s.chars().filter(|ch| !ch.is_whitespace()).map(|ch| if ch == '\u{2212}' { '-' } else { ch }).collect();
    let (num, den) = match t.rsplit_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let z = match num {
        "i" | "+i" => I,
        "-i" => -I,
        _ => C64::from_str(num).map_err(|_| bad())?,
    } / den;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(bad());
    }
    Ok(z)
}

impl FromStr for CVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('[') {
            let pairs: Vec<[f64; 2]> =
                serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()))?;
            let v = CVec(pairs.iter().map(|p| c(p[0], p[1])).collect());
            if !v.is_finite() {
                return Err(Error::Parse("non-finite coordinate".into()));
            }
            return Ok(v);
        }
        let t = t.trim_start_matches('(').trim_end_matches(')');
        if t.trim().is_empty() {
            return Err(Error::Parse("empty point".into()));
        }
        let mut out = Vec::new();
        for part in t.split(',') {
            let p: String = part.chars().filter(|ch| !ch.is_whitespace()).collect();
            let z = parse_complex(&p)?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Parse(format!("non-finite coordinate `{p}`")));
            }
            out.push(z);
        }
        Ok(CVec(out))
    }
}

impl Serialize for CVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for z in &self.0 {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for CVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Ok(CVec(pairs.into_iter().map(|p| c(p[0], p[1])).collect()))
    }
}

/// A 2x2 complex symmetric matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: C64,
    pub a12: C64,
    pub a22: C64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 {
        a11: ZERO,
        a12: ZERO,
        a22: ZERO,
    };

    pub fn new(a11: C64, a12: C64, a22: C64) -> Self {
        SymMat2 { a11, a12, a22 }
    }

    pub fn diag(a: C64, b: C64) -> Self {
        SymMat2::new(a, ZERO, b)
    }

    pub fn antidiag(t: C64) -> Self {
        SymMat2::new(ZERO, t, ZERO)
    }

    pub fn det(&self) -> C64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.a11.norm_sqr() + 2.0 * self.a12.norm_sqr() + self.a22.norm_sqr()
    }

    /// Both singular values, largest first, from the eigenvalues of `A^* A`:
    /// `s^2 = (T +- sqrt(T^2 - 4|det A|^2)) / 2` with `T = ||A||_F^2`.
    pub fn singular_values(&self) -> (f64, f64) {
        singular_values_from(self.frobenius_sqr(), self.det().norm())
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values().0
    }

    pub fn to_cvec(&self) -> CVec {
        CVec(vec![self.a11, self.a12, self.a22])
    }

    pub fn from_cvec(v: &CVec) -> Result<Self> {
        v.expect_dim(3)?;
        Ok(SymMat2::new(v[0], v[1], v[2]))
    }

    pub fn dist(&self, other: &SymMat2) -> f64 {
        self.to_cvec().dist(&other.to_cvec())
    }
}

/// Singular values of a 2x2 matrix from `T = ||A||_F^2` and `|det A|`.
pub(crate) fn singular_values_from(frob_sqr: f64, abs_det: f64) -> (f64, f64) {
    let disc = (frob_sqr - 2.0 * abs_det).max(0.0) * (frob_sqr + 2.0 * abs_det);
    let big = 0.5 * (frob_sqr + disc.sqrt());
    let s1 = big.sqrt();
    // s1 * s2 = |det| is better conditioned than the difference formula
    let s2 = if s1 > 0.0 { abs_det / s1 } else { 0.0 };
    (s1, s2)
}

/// A general 2x2 complex matrix, used for intermediate products.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub fn identity() -> Self {
        Mat2 {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn from_sym(a: &SymMat2) -> Self {
        Mat2 {
            m: [[a.a11, a.a12], [a.a12, a.a22]],
        }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let mut r = [[ZERO; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        Mat2 { m: r }
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let mut r = self.m;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= o.m[i][j];
            }
        }
        Mat2 { m: r }
    }

    /// Explicit inverse; fails when `|det| < det_guard`.
    pub fn inverse(&self, det_guard: f64) -> Result<Mat2> {
        let d = self.det();
        if d.norm() < det_guard {
            return Err(Error::Singular { det: d.norm() });
        }
        let inv = ONE / d;
        Ok(Mat2 {
            m: [
                [self.m[1][1] * inv, -self.m[0][1] * inv],
                [-self.m[1][0] * inv, self.m[0][0] * inv],
            ],
        })
    }

    pub fn sigma_max(&self) -> f64 {
        let f: f64 = self.m.iter().flatten().map(|z| z.norm_sqr()).sum();
        singular_values_from(f, self.det().norm()).0
    }
}

/// A 3x3 complex matrix acting on column vectors of `C^3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat3 {
    pub rows: [[C64; 3]; 3],
}

impl Mat3 {
    pub fn identity() -> Self {
        let mut rows = [[ZERO; 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Mat3 { rows }
    }

    pub fn from_rows(rows: [[C64; 3]; 3]) -> Self {
        Mat3 { rows }
    }

    /// Matrix with the given vectors as columns.
    pub fn from_columns(cols: [[C64; 3]; 3]) -> Self {
        let mut rows = [[ZERO; 3]; 3];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                rows[i][j] = *v;
            }
        }
        Mat3 { rows }
    }

    pub fn column(&self, j: usize) -> [C64; 3] {
        [self.rows[0][j], self.rows[1][j], self.rows[2][j]]
    }

    pub fn apply(&self, z: &[C64; 3]) -> [C64; 3] {
        let mut out = [ZERO; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rows[i][0] * z[0] + self.rows[i][1] * z[1] + self.rows[i][2] * z[2];
        }
        out
    }

    pub fn apply_vec(&self, z: &CVec) -> Result<CVec> {
        z.expect_dim(3)?;
        Ok(CVec::from(self.apply(&[z[0], z[1], z[2]])))
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut rows = [[ZERO; 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.rows[i][k] * o.rows[k][j]).sum();
            }
        }
        Mat3 { rows }
    }

    pub fn max_abs_diff(&self, o: &Mat3) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.rows[i][j] - o.rows[i][j]).norm());
            }
        }
        m
    }

    pub fn det(&self) -> C64 {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    /// Solves `self * x = b` by Cramer's rule.
    pub fn solve(&self, b: &[C64; 3], det_guard: f64) -> Result<[C64; 3]> {
        let d = self.det();
        if d.norm() < det_guard {
            return Err(Error::Singular { det: d.norm() });
        }
        let mut x = [ZERO; 3];
        for (k, xk) in x.iter_mut().enumerate() {
            let mut m = *self;
            for i in 0..3 {
                m.rows[i][k] = b[i];
            }
            *xk = m.det() / d;
        }
        Ok(x)
    }
}

/// Principal square root that also handles `-0.0` imaginary parts the same
/// way as `+0.0`, so that roots of negative reals land on `+i`.
pub fn principal_sqrt(z: C64) -> C64 {
    let z = C64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
    z.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_literal_list_and_json() {
        let a: CVec = "0.5, -0.5i, 0".parse().unwrap();
        assert_eq!(a, CVec::from([c(0.5, 0.0), c(0.0, -0.5), ZERO]));
        let b: CVec = "[[0.5,0],[0,-0.5],[0,0]]".parse().unwrap();
        assert_eq!(a, b);
        assert!("0.5, x".parse::<CVec>().is_err());
        assert!("".parse::<CVec>().is_err());
        let v: CVec = "(1/2, −i/2, 0)".parse().unwrap();
        assert_eq!(v, CVec::from([c(0.5, 0.0), c(0.0, -0.5), ZERO]));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("i").unwrap(), I);
        assert!(parse_complex("1/0").is_err());
        assert!(parse_complex("1/x").is_err());
    }

    #[test]
    fn singular_values_of_diagonal_and_antidiagonal() {
        let (s1, s2) = SymMat2::diag(cr(0.3), c(0.0, -0.7)).singular_values();
        assert!((s1 - 0.7).abs() < 1e-15 && (s2 - 0.3).abs() < 1e-15);
        let (s1, s2) = SymMat2::antidiag(ONE).singular_values();
        assert!((s1 - 1.0).abs() < 1e-15 && (s2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cramer_solve_recovers_rhs() {
        let m = Mat3::from_rows([
            [c(1.0, 0.5), cr(2.0), ZERO],
            [ZERO, c(0.0, 1.0), cr(-1.0)],
            [cr(0.25), ZERO, cr(3.0)],
        ]);
        let b = [cr(1.0), c(0.0, 2.0), cr(-0.5)];
        let x = m.solve(&b, 1e-14).unwrap();
        let back = m.apply(&x);
        for k in 0..3 {
            assert!((back[k] - b[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn principal_sqrt_of_negative_real_is_upper() {
        let r = principal_sqrt(c(-0.5, -0.0));
        assert!((r - c(0.0, 0.5f64.sqrt())).norm() < 1e-15);
    }
}
