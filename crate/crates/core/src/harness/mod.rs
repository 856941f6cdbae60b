//! Theorem-check suite: result types, registry, runner and report emitters.

pub mod checks;
mod result;
mod source;
mod suite;

pub use result::{CheckResult, Expected, Status};
pub use source::{parse_csv, parse_source};
pub use suite::{
    emit_report, render_report, run_suite, run_suite_with, ReportFormat, SuiteOptions, SuiteReport, Summary,
};

use crate::group::GroupKind;

/// Default comparison tolerance for checks on a model of the given kind.
pub fn default_tolerance(kind: GroupKind) -> f64 {
    match kind {
        GroupKind::Finite => 1e-9,
        GroupKind::LatticeTruncated => 1e-6,
        GroupKind::Quadrature => 5e-2,
    }
}
