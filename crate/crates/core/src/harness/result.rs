use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        })
    }
}

/// A target value, or a closed interval `[lo, hi]` (serialized as a pair).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Value(f64),
    Interval([f64; 2]),
}

impl Expected {
    pub fn admits(&self, observed: f64, tolerance: f64) -> bool {
        match *self {
            Expected::Value(v) => (observed - v).abs() <= tolerance,
            Expected::Interval([lo, hi]) => observed >= lo - tolerance && observed <= hi + tolerance,
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Value(v) => write!(f, "{v:.12e}"),
            Expected::Interval([lo, hi]) => write!(f, "[{lo:.12e}, {hi:.12e}]"),
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub paper_ref: String,
    pub status: Status,
    pub observed: f64,
    pub expected: Expected,
    pub tolerance: f64,
    pub runtime_ms: u64,
    pub notes: String,
}

impl CheckResult {
    /// Pass iff `expected` admits `observed` within `tolerance`. Non-finite
    /// observations fail.
    pub fn compare(
        name: impl Into<String>,
        paper_ref: impl Into<String>,
        observed: f64,
        expected: Expected,
        tolerance: f64,
    ) -> Self {
        let status = if observed.is_finite() && expected.admits(observed, tolerance) {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckResult {
            name: name.into(),
            paper_ref: paper_ref.into(),
            status,
            observed,
            expected,
            tolerance,
            runtime_ms: 0,
            notes: String::new(),
        }
    }

    pub fn skipped(name: impl Into<String>, paper_ref: impl Into<String>, reason: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            paper_ref: paper_ref.into(),
            status: Status::Skipped,
            observed: 0.0,
            expected: Expected::Value(0.0),
            tolerance: 0.0,
            runtime_ms: 0,
            notes: reason.into(),
        }
    }

    pub fn failed(name: impl Into<String>, paper_ref: impl Into<String>, reason: impl Into<String>) -> Self {
        CheckResult {
            status: Status::Fail,
            ..Self::skipped(name, paper_ref, reason)
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }
}
