//! Structured outcomes of verification sweeps.

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;
use serde::{Deserialize, Serialize};

use crate::symmat::{SquareMat, SymMat};

/// Input achieving the extreme slack of a sweep, stored in full so a report
/// can be re-evaluated independently of the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Single matrix input (majorization gaps, cone membership, ...).
    Matrix { a: SymMat },
    /// Two-matrix input, e.g. (A, P) for monotonicity gaps.
    MatrixPair { a: SymMat, b: SymMat },
    /// Matrix plus one scalar parameter, e.g. (A, η) for tameness.
    MatrixParam { a: SymMat, param: f64 },
    /// Matrix plus an index pair, e.g. (A, k, ℓ) for mean chains.
    MatrixIndices { a: SymMat, k: usize, l: usize },
    /// Conjugating orthogonal matrix plus the offending monomial exponent.
    TauMonomial {
        tau: SquareMat,
        exponents: Vec<usize>,
        coefficient: f64,
    },
    /// Grid node by multi-index and coordinates, with the value measured
    /// there.
    Node {
        index: Vec<usize>,
        point: Vec<f64>,
        value: f64,
    },
    /// Free-form description when no structured input applies.
    Text { note: String },
}

/// Outcome of one verification suite over one operator/input family.
///
/// `passed` ⇔ `min_slack ≥ −tolerance` whenever the suite actually ran;
/// a suite that could not run reports `skipped = Some(reason)` with
/// `passed = true` and `min_slack = 0` so that aggregation stays monotone.
/// `elapsed` is never serialized: reports must be byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: String,
    /// Operator spec string, or "-" when the suite is operator-independent.
    pub operator: String,
    pub samples: usize,
    pub min_slack: f64,
    pub max_slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Option<Duration>,
}

impl CheckReport {
    pub fn evaluated(
        suite: &str,
        operator: &str,
        samples: usize,
        min_slack: f64,
        max_slack: f64,
        tolerance: f64,
    ) -> Self {
        CheckReport {
            suite: String::from(suite),
            operator: String::from(operator),
            samples,
            min_slack,
            max_slack,
            tolerance,
            passed: min_slack >= -tolerance,
            skipped: None,
            witness: None,
            notes: Vec::new(),
            elapsed: None,
        }
    }

    pub fn skipped_with_reason(suite: &str, operator: &str, reason: String) -> Self {
        CheckReport {
            suite: String::from(suite),
            operator: String::from(operator),
            samples: 0,
            min_slack: 0.0,
            max_slack: 0.0,
            tolerance: 0.0,
            passed: true,
            skipped: Some(reason),
            witness: None,
            notes: Vec::new(),
            elapsed: None,
        }
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn push_note(&mut self, note: String) {
        self.notes.push(note);
    }
}

/// Running (min, max) slack tracker that keeps the witness of the minimum.
#[derive(Debug, Clone)]
pub struct SlackTracker {
    pub min_slack: f64,
    pub max_slack: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
}

impl SlackTracker {
    pub fn new() -> Self {
        SlackTracker {
            min_slack: f64::INFINITY,
            max_slack: f64::NEG_INFINITY,
            witness: None,
            samples: 0,
        }
    }

    pub fn observe(&mut self, slack: f64, witness: impl FnOnce() -> Witness) {
        self.samples += 1;
        if slack < self.min_slack {
            self.min_slack = slack;
            self.witness = Some(witness());
        }
        if slack > self.max_slack {
            self.max_slack = slack;
        }
    }

    /// Finishes into a report; an empty tracker reports zero slack.
    pub fn into_report(self, suite: &str, operator: &str, tolerance: f64) -> CheckReport {
        let (lo, hi) = if self.samples == 0 {
            (0.0, 0.0)
        } else {
            (self.min_slack, self.max_slack)
        };
        let mut r = CheckReport::evaluated(suite, operator, self.samples, lo, hi, tolerance);
        r.witness = self.witness;
        r
    }
}

impl Default for SlackTracker {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn pass_flag_follows_tolerance() {
        let r = CheckReport::evaluated("s", "det:n=2", 10, -1e-12, 3.0, 1e-9);
        assert!(r.passed);
        let r = CheckReport::evaluated("s", "det:n=2", 10, -1e-6, 3.0, 1e-9);
        assert!(!r.passed);
    }

    #[test]
    fn elapsed_never_serialized() {
        let mut r = CheckReport::evaluated("s", "-", 1, 0.0, 0.0, 0.0);
        r.elapsed = Some(Duration::from_secs(5));
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("elapsed"));
        let back: CheckReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.elapsed, None);
    }

    #[test]
    fn tracker_keeps_min_witness() {
        let mut t = SlackTracker::new();
        t.observe(2.0, || Witness::Text { note: "a".to_string() });
        t.observe(-1.0, || Witness::Text { note: "b".to_string() });
        t.observe(5.0, || Witness::Text { note: "c".to_string() });
        let r = t.into_report("s", "-", 1e-9);
        assert_eq!(r.min_slack, -1.0);
        assert_eq!(r.max_slack, 5.0);
        assert_eq!(r.witness, Some(Witness::Text { note: "b".to_string() }));
        assert!(!r.passed);
    }
}
