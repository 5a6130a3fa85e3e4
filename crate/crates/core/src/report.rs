//! Verification reports: per-check worst violation with a witness point.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::CVec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_violation: f64,
    pub witness: CVec,
    pub samples: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, worst: Worst, samples: usize, tolerance: f64) -> Self {
        let passed = worst.violation <= tolerance;
        Check {
            name: name.into(),
            max_violation: worst.violation,
            witness: worst.witness.unwrap_or_else(|| CVec::zeros(0)),
            samples,
            tolerance,
            passed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub subject: String,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(subject: impl Into<String>) -> Self {
        VerificationReport {
            subject: subject.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Running maximum of a violation. Ties go to the lexicographically
/// smallest witness, which makes the merge order-independent.
#[derive(Clone, Debug, PartialEq)]
pub struct Worst {
    pub violation: f64,
    pub witness: Option<CVec>,
}

impl Default for Worst {
    fn default() -> Self {
        Worst {
            violation: 0.0,
            witness: None,
        }
    }
}

impl Worst {
    pub fn single(violation: f64, witness: CVec) -> Self {
        // NaN means the check could not be evaluated; count it as unbounded.
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        Worst {
            violation,
            witness: Some(witness),
        }
    }

    pub fn merge(self, other: Worst) -> Worst {
        match (&self.witness, &other.witness) {
            (None, _) => return other,
            (_, None) => return self,
            _ => {}
        }
        match self.violation.total_cmp(&other.violation) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal => {
                let a = self.witness.as_ref().unwrap();
                let b = other.witness.as_ref().unwrap();
                if b.lex_cmp(a) == Ordering::Less {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Evaluates `violation` on every input in parallel and reduces to the
/// worst case. The result does not depend on the thread count.
pub fn worst_over<F>(inputs: &[CVec], violation: F) -> Worst
where
    F: Fn(&CVec) -> f64 + Sync,
{
    inputs
        .par_iter()
        .map(|z| Worst::single(violation(z), z.clone()))
        .reduce(Worst::default, Worst::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;

    #[test]
    fn merge_prefers_larger_then_lexicographically_smaller() {
        let a = Worst::single(1.0, CVec::from([cr(0.2)]));
        let b = Worst::single(1.0, CVec::from([cr(0.1)]));
        let c = Worst::single(0.5, CVec::from([cr(-1.0)]));
        assert_eq!(a.clone().merge(b.clone()), b);
        assert_eq!(b.clone().merge(a.clone()), b);
        assert_eq!(c.clone().merge(a.clone()), a);
        assert_eq!(Worst::default().merge(c.clone()), c);
        assert!(Worst::single(f64::NAN, CVec::zeros(1)).violation.is_infinite());
    }

    #[test]
    fn worst_over_is_deterministic() {
        let xs: Vec<CVec> = (0..1000).map(|k| CVec::from([cr((k % 7) as f64)])).collect();
        let w = worst_over(&xs, |z| z[0].re);
        assert_eq!(w.violation, 6.0);
        assert_eq!(w.witness.unwrap(), CVec::from([cr(6.0)]));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let w1 = pool.install(|| worst_over(&xs, |z| (z[0].re - 3.0).abs()));
        let w2 = worst_over(&xs, |z| (z[0].re - 3.0).abs());
        assert_eq!(w1, w2);
        assert_eq!(w1.witness.unwrap(), CVec::from([cr(0.0)]));
    }

    #[test]
    fn check_pass_flag_follows_tolerance() {
        let c = Check::new("x", Worst::single(1e-11, CVec::zeros(1)), 1, 1e-10);
        assert!(c.passed);
        let c = Check::new("x", Worst::single(1e-9, CVec::zeros(1)), 1, 1e-10);
        assert!(!c.passed);
    }
}
