use std::collections::BTreeMap;

use jsonschema::JSONSchema;
use serde_json::{json, Value};

use ltp_core::harness::checks::registry;
use ltp_core::harness::{render_report, run_suite, ReportFormat, Status, SuiteReport};
use ltp_core::Exponent;

fn exponents(ps: &[f64]) -> Vec<Exponent> {
    ps.iter().map(|&p| Exponent::new(p).unwrap()).collect()
}

fn report(spec: &str, ps: &[f64], seed: u64) -> SuiteReport {
    run_suite(&spec.parse().unwrap(), &exponents(ps), seed, &BTreeMap::new()).unwrap()
}

fn schema() -> Value {
    let number_or_pair = json!({
        "oneOf": [
            {"type": "number"},
            {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
        ]
    });
    json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["version", "spec", "seed", "checks", "summary"],
        "properties": {
            "version": {"type": "string"},
            "spec": {"type": "string"},
            "seed": {"type": "integer", "minimum": 0},
            "checks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["name", "paper_ref", "status", "observed", "expected", "tolerance", "runtime_ms", "notes"],
                    "properties": {
                        "name": {"type": "string", "minLength": 1},
                        "paper_ref": {"type": "string", "minLength": 1},
                        "status": {"enum": ["pass", "fail", "skipped"]},
                        "observed": {"type": "number"},
                        "expected": number_or_pair,
                        "tolerance": {"type": "number", "minimum": 0},
                        "runtime_ms": {"type": "integer", "minimum": 0},
                        "notes": {"type": "string"}
                    }
                }
            },
            "summary": {
                "type": "object",
                "additionalProperties": false,
                "required": ["pass", "fail", "skipped"],
                "properties": {
                    "pass": {"type": "integer", "minimum": 0},
                    "fail": {"type": "integer", "minimum": 0},
                    "skipped": {"type": "integer", "minimum": 0}
                }
            }
        }
    })
}

fn assert_valid(json_text: &str) {
    let schema = schema();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let instance: Value = serde_json::from_str(json_text).unwrap();
    if let Err(errors) = compiled.validate(&instance) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    };
}

#[test]
fn cyclic16_report_matches_schema_and_round_trips() {
    let r = report("cyclic:16", &[1.0, 1.5, 2.0, 3.0], 3);
    let text = render_report(&r, ReportFormat::Json).unwrap();
    assert_valid(&text);
    let back: SuiteReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(render_report(&back, ReportFormat::Json).unwrap(), text);
    assert_eq!(r.summary.fail, 0, "{text}");
}

#[test]
fn every_model_family_passes_and_validates() {
    for spec in [
        "cyclic:8@probability",
        "dihedral:3",
        "symmetric:3",
        "product:cyclic:2+cyclic:3",
        "z:32",
        "z2:8",
        "circle:16",
        "r:0.25:4",
    ] {
        let r = report(spec, &[1.0, 2.0, 3.0], 1);
        let text = render_report(&r, ReportFormat::Json).unwrap();
        assert_valid(&text);
        let failures: Vec<_> = r.checks.iter().filter(|c| c.status == Status::Fail).collect();
        assert!(failures.is_empty(), "{spec}: {failures:#?}");
    }
}

#[test]
fn every_registered_check_appears_once_per_exponent() {
    let r = report("cyclic:6", &[1.5, 2.0], 0);
    for def in registry() {
        let hits = r
            .checks
            .iter()
            .filter(|c| c.name == def.name || c.name.starts_with(&format!("{}[", def.name)))
            .count();
        assert!(hits >= 1, "{} missing from report", def.name);
    }
    let mut names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    let total = names.len();
    names.dedup();
    assert_eq!(names.len(), total);
    let s = r.summary;
    assert_eq!(s.pass + s.fail + s.skipped, total);
}

#[test]
fn skipped_checks_say_why() {
    let r = report("dihedral:4", &[2.0], 0);
    let skipped: Vec<_> = r.checks.iter().filter(|c| c.status == Status::Skipped).collect();
    // the spectral family needs an abelian model
    assert!(skipped.iter().any(|c| c.name.starts_with("parseval")));
    assert!(skipped.iter().all(|c| !c.notes.is_empty()));
}

#[test]
fn same_seed_same_bytes_other_seed_other_samples() {
    let a = render_report(&report("product:cyclic:2+cyclic:4", &[1.5, 3.0], 11), ReportFormat::Json).unwrap();
    let b = render_report(&report("product:cyclic:2+cyclic:4", &[1.5, 3.0], 11), ReportFormat::Json).unwrap();
    let c = render_report(&report("product:cyclic:2+cyclic:4", &[1.5, 3.0], 12), ReportFormat::Json).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn csv_has_one_row_per_check() {
    let r = report("cyclic:5", &[2.0], 0);
    let text = render_report(&r, ReportFormat::Csv).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.records().count(), r.checks.len());
    let md = render_report(&r, ReportFormat::Markdown).unwrap();
    assert_eq!(md.lines().filter(|l| l.starts_with("| ")).count(), r.checks.len() + 1);
}
