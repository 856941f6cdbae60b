use std::collections::HashMap;
use std::process::{Command, Output};

fn ltp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltp"))
        .args(args)
        .output()
        .expect("spawn ltp")
}

fn fields(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn num(map: &HashMap<String, String>, key: &str) -> f64 {
    map[key].parse().unwrap_or_else(|_| panic!("{key} = {}", map[key]))
}

#[test]
fn norm_of_two_point_box_on_z4() {
    let out = ltp(&["norm", "--group", "cyclic:4@counting", "--f", "1,1,0,0", "--p", "2"]);
    assert!(out.status.success());
    let m = fields(&out);
    // |1 + ω| peaks at ω = 1
    assert!((num(&m, "lower") - 2.0).abs() < 1e-12);
    assert!((num(&m, "upper") - 2.0).abs() < 1e-12);
}

#[test]
fn norm_of_unit_box_on_lattice() {
    let out = ltp(&["norm", "--group", "z:64@counting", "--f", "box:1", "--p", "2"]);
    assert!(out.status.success());
    let m = fields(&out);
    // symbol 1 + 2cos θ, sup 3 at θ = 0
    assert!((num(&m, "lower") - 3.0).abs() < 1e-6);
    assert!((num(&m, "upper") - 3.0).abs() < 1e-6);
}

#[test]
fn norm_of_zero() {
    let out = ltp(&["norm", "--group", "cyclic:4@counting", "--f", "0,0,0,0", "--p", "2"]);
    assert!(out.status.success());
    let m = fields(&out);
    assert_eq!(num(&m, "lower"), 0.0);
    assert_eq!(num(&m, "upper"), 0.0);
}

#[test]
fn parse_errors_exit_2() {
    assert_eq!(ltp(&["norm", "--group", "bogus", "--f", "1"]).status.code(), Some(2));
    assert_eq!(ltp(&["norm", "--group", "cyclic:4", "--f", "1,1,0"]).status.code(), Some(2));
    assert_eq!(ltp(&["norm", "--group", "cyclic:4", "--f", "1,0,0,0", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(ltp(&["suite", "--group", "cyclic:4", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(ltp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn small_window_exits_3() {
    let out = ltp(&["folner", "--group", "z:4", "--c-radius", "1", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn folner_on_plane_lattice() {
    let out = ltp(&["folner", "--group", "z2:16", "--c-radius", "1", "--epsilon", "0.1"]);
    assert!(out.status.success());
    let m = fields(&out);
    // (2L+1-1)^2 / (2L+1)^2 >= 0.9 first holds at L = 10
    assert_eq!(m["half_side"], "10");
    assert_eq!(m["k_size"], "441");
    assert_eq!(m["recount_matches"], "true");
}

#[test]
fn spectral_prints_both_sides() {
    let out = ltp(&["spectral", "--group", "cyclic:4", "--f", "1,1,0,0"]);
    assert!(out.status.success());
    let m = fields(&out);
    assert!((num(&m, "lhs") - 3.0).abs() < 1e-12);
    assert!((num(&m, "rhs") - 3.0).abs() < 1e-12);
    assert!(num(&m, "difference").abs() < 1e-12);
}

fn suite_json(args: &[&str], threads: &str) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ltp"))
        .args(args)
        .env("LTP_THREADS", threads)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn suite_json_is_thread_independent() {
    let args = ["suite", "--group", "cyclic:12@counting", "--p", "1.5,2,3", "--seed", "5"];
    let one = suite_json(&args, "1");
    let eight = suite_json(&args, "8");
    assert_eq!(one, eight);
    let v: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(v["summary"]["fail"], 0);
    assert_eq!(v["seed"], 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("ltp.conf");
    std::fs::write(&conf, "# defaults\ngroup=cyclic:8\np=2\nseed=9\n").unwrap();
    let conf = conf.to_str().unwrap();

    let from_file = suite_json(&["--config", conf, "suite"], "2");
    let v: serde_json::Value = serde_json::from_str(&from_file).unwrap();
    assert_eq!(v["spec"], "cyclic:8@counting");
    assert_eq!(v["seed"], 9);

    let overridden = suite_json(&["--config", conf, "suite", "--group", "cyclic:4", "--seed", "1"], "2");
    let v: serde_json::Value = serde_json::from_str(&overridden).unwrap();
    assert_eq!(v["spec"], "cyclic:4@counting");
    assert_eq!(v["seed"], 1);
}

#[test]
fn tolerance_override_reaches_report() {
    let json = suite_json(&["suite", "--group", "cyclic:4", "--tol-parseval=1e-3", "--tol-associativity", "1e-4"], "2");
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let checks = v["checks"].as_array().unwrap();
    let tol = |name: &str| {
        checks.iter().find(|c| c["name"] == name).unwrap()["tolerance"].as_f64().unwrap()
    };
    assert_eq!(tol("parseval"), 1e-3);
    assert_eq!(tol("associativity"), 1e-4);
}

#[test]
fn report_formats_write_files() {
    let dir = tempfile::tempdir().unwrap();
    for (fmt, head) in [("csv", "name,"), ("markdown", "# Suite report")] {
        let path = dir.path().join(format!("r.{fmt}"));
        let out = ltp(&["suite", "--group", "cyclic:3", "--format", fmt, "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(std::fs::read_to_string(&path).unwrap().starts_with(head));
    }
}

#[test]
fn config_accepts_iteration_and_tolerance_keys() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("ltp.conf");
    std::fs::write(&conf, "tol=1e-12\nmax_iters=900\nrestarts=2\ntol_parseval=0.5\n").unwrap();
    let conf = conf.to_str().unwrap();

    let out = ltp(&["--config", conf, "norm", "--group", "dihedral:3", "--f", "1,2,0,0,1,0", "--p", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = fields(&out);
    assert!(num(&m, "lower") <= num(&m, "upper"));

    let json = suite_json(&["--config", conf, "suite", "--group", "cyclic:4"], "1");
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let parseval = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "parseval").unwrap();
    assert_eq!(parseval["tolerance"], 0.5);
}

#[test]
fn unknown_config_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("ltp.conf");
    std::fs::write(&conf, "grop=cyclic:4\n").unwrap();
    let out = ltp(&["--config", conf.to_str().unwrap(), "suite", "--group", "cyclic:4"]);
    assert_eq!(out.status.code(), Some(2));
}
