use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{registry, CheckContext, CheckDef, Exponents};
use super::{default_tolerance, CheckResult, Status};
use crate::error::{LtpError, Result};
use crate::group::{build_group, GroupSpec};
use crate::lp::Exponent;
use crate::numeric::stream_id;
use crate::tempered::IterConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

/// Outcome of a full suite run on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub spec: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn new(spec: String, seed: u64, checks: Vec<CheckResult>) -> Self {
        let mut summary = Summary::default();
        for c in &checks {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Skipped => summary.skipped += 1,
            }
        }
        SuiteReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            seed,
            checks,
            summary,
        }
    }
}

/// Knobs beyond the model, exponents and seed.
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Per-check tolerance overrides, keyed by check name without the
    /// exponent suffix.
    pub tol_overrides: BTreeMap<String, f64>,
    /// Record wall-clock time per check. Off by default so reports stay
    /// byte-identical across runs.
    pub timings: bool,
    pub iter: IterConfig,
}

/// Runs every registered check on the model built from `spec`.
pub fn run_suite(
    spec: &GroupSpec,
    p_list: &[Exponent],
    seed: u64,
    tol_overrides: &BTreeMap<String, f64>,
) -> Result<SuiteReport> {
    let options = SuiteOptions {
        tol_overrides: tol_overrides.clone(),
        ..SuiteOptions::default()
    };
    run_suite_with(spec, p_list, seed, &options)
}

struct Job<'a> {
    def: &'a CheckDef,
    name: String,
    p: Exponent,
}

pub fn run_suite_with(spec: &GroupSpec, p_list: &[Exponent], seed: u64, options: &SuiteOptions) -> Result<SuiteReport> {
    let group = build_group(spec)?;
    let default_p = match p_list.first() {
        Some(p) => *p,
        None => Exponent::new(2.0)?,
    };
    let mut jobs = Vec::new();
    for def in registry() {
        match def.exponents {
            Exponents::Each => {
                for &p in p_list {
                    jobs.push(Job {
                        def,
                        name: format!("{}[p={}]", def.name, p.p()),
                        p,
                    });
                }
            }
            Exponents::Fixed(v) => jobs.push(Job {
                def,
                name: format!("{}[p={v}]", def.name),
                p: Exponent::new(v)?,
            }),
            Exponents::None => jobs.push(Job {
                def,
                name: def.name.to_string(),
                p: default_p,
            }),
        }
    }

    let checks: Vec<CheckResult> = jobs
        .par_iter()
        .map(|job| {
            let start = Instant::now();
            let mut result = run_one(job, &group, seed, options);
            if options.timings {
                result.runtime_ms = start.elapsed().as_millis() as u64;
            }
            result
        })
        .collect();
    Ok(SuiteReport::new(group.spec().to_string(), seed, checks))
}

fn run_one(job: &Job, group: &std::sync::Arc<crate::GroupModel>, seed: u64, options: &SuiteOptions) -> CheckResult {
    let def = job.def;
    if let Some(reason) = def.skip_reason(group, job.p) {
        return CheckResult::skipped(&job.name, def.paper_ref, reason);
    }
    let tolerance = options
        .tol_overrides
        .get(def.name)
        .copied()
        .or(def.tolerance)
        .unwrap_or_else(|| default_tolerance(group.kind()));
    let ctx = CheckContext {
        group,
        p: job.p,
        seed,
        stream: stream_id(&job.name),
        cfg: IterConfig {
            seed,
            ..options.iter
        },
    };
    match (def.run)(&ctx) {
        Ok(m) => CheckResult::compare(&job.name, def.paper_ref, m.observed, m.expected, tolerance).with_notes(m.notes),
        Err(e) => CheckResult::failed(&job.name, def.paper_ref, format!("error: {e}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = LtpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(LtpError::parse(other, "expected json, csv or markdown")),
        }
    }
}

/// Renders the report; JSON is pretty-printed with a trailing newline.
pub fn render_report(report: &SuiteReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| LtpError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| LtpError::Io(e.to_string());
            w.write_record(["name", "paper_ref", "status", "observed", "expected", "tolerance", "runtime_ms", "notes"])
                .map_err(io)?;
            for c in &report.checks {
                w.write_record([
                    c.name.clone(),
                    c.paper_ref.clone(),
                    c.status.to_string(),
                    format!("{:e}", c.observed),
                    c.expected.to_string(),
                    format!("{:e}", c.tolerance),
                    c.runtime_ms.to_string(),
                    c.notes.clone(),
                ])
                .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| LtpError::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| LtpError::Io(e.to_string()))
        }
        ReportFormat::Markdown => {
            let mut s = String::new();
            let _ = writeln!(s, "# Suite report: `{}` (seed {})\n", report.spec, report.seed);
            let _ = writeln!(
                s,
                "{} pass, {} fail, {} skipped\n",
                report.summary.pass, report.summary.fail, report.summary.skipped
            );
            s.push_str("| check | status | observed | expected | tolerance | notes |\n");
            s.push_str("|---|---|---|---|---|---|\n");
            for c in &report.checks {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.6e} | {} | {:.1e} | {} |",
                    c.name,
                    c.status,
                    c.observed,
                    c.expected,
                    c.tolerance,
                    c.notes.replace('|', "\\|")
                );
            }
            Ok(s)
        }
    }
}

/// Writes the rendered report to `path`.
pub fn emit_report(report: &SuiteReport, path: &Path, format: ReportFormat) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}
