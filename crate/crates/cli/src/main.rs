//! `ltp`: batch driver for the tempered-norm toolkit.
//!
//! Every flag may also come from a `key=value` file given with `--config`
//! (keys are flag names without the leading dashes); flags on the command
//! line win. `LTP_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use ltp_core::amenability::{find_folner, lattice_box};
use ltp_core::harness::{emit_report, parse_source, render_report, run_suite_with, ReportFormat, SuiteOptions};
use ltp_core::lp::{ess_sup, lp_norm, weighted_l1_norm};
use ltp_core::spectral::build_dual;
use ltp_core::tempered::{svd_norm, tempered_norm, IterConfig, SVD_CAP};
use ltp_core::{build_group, Exponent, GroupSpec, LtpError};

const EXIT_FAILURES: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ltp", version, about = "Tempered convolution norms on desk-scale group models")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file mirroring the command-line flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the check suite on one model and emit a report.
    Suite(SuiteArgs),
    /// Bracket the tempered norm of one function.
    Norm(NormArgs),
    /// Fourier transform and both sides of the restricted isometry.
    Spectral(SpectralArgs),
    /// Smallest box Følner set for a centred box C on a lattice.
    Folner(FolnerArgs),
}

#[derive(Args, Debug, Clone)]
struct IterArgs {
    /// relative stopping tolerance of the iterative norm estimators
    #[arg(long, alias = "tol", default_value_t = IterConfig::default().tol)]
    iter_tol: f64,
    #[arg(long, default_value_t = IterConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = IterConfig::default().restarts)]
    restarts: usize,
}

impl IterArgs {
    fn config(&self, seed: u64) -> IterConfig {
        IterConfig {
            tol: self.iter_tol,
            max_iters: self.max_iters,
            restarts: self.restarts,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long)]
    group: String,
    /// comma-separated exponents
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
    /// record per-check wall time (makes reports run-dependent)
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[arg(long)]
    group: String,
    /// inline values, a CSV path, or dirac | box:R | gauss:S | random:SEED
    #[arg(long)]
    f: String,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args, Debug)]
struct SpectralArgs {
    #[arg(long)]
    group: String,
    #[arg(long)]
    f: String,
}

#[derive(Args, Debug)]
struct FolnerArgs {
    #[arg(long)]
    group: String,
    #[arg(long, default_value_t = 1)]
    c_radius: usize,
    #[arg(long)]
    epsilon: f64,
}

/// Splits `--tol-NAME V` / `--tol-NAME=V` out of the argument list.
fn take_tolerances(args: Vec<String>) -> Result<(Vec<String>, BTreeMap<String, f64>), LtpError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = BTreeMap::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--tol-") else {
            rest.push(arg);
            continue;
        };
        let (name, value) = match body.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| LtpError::SpecParse {
                        input: arg.clone(),
                        reason: "missing tolerance value".into(),
                    })?;
                (body.to_string(), v)
            }
        };
        let tol: f64 = value.parse().map_err(|_| LtpError::SpecParse {
            input: value.clone(),
            reason: format!("tolerance for `{name}` is not a number"),
        })?;
        if !(tol >= 0.0) {
            return Err(LtpError::SpecParse {
                input: value,
                reason: "tolerance must be nonnegative".into(),
            });
        }
        tols.insert(name.replace('-', "_"), tol);
    }
    Ok((rest, tols))
}

/// `key=value` lines as flags, `#` comments allowed. `true`/`false` values
/// toggle switches.
fn config_args(path: &PathBuf) -> Result<Vec<String>, LtpError> {
    let body = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in body.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| LtpError::SpecParse {
            input: line.to_string(),
            reason: "expected key=value".into(),
        })?;
        let key = key.trim().replace('_', "-");
        match value.trim() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => out.push(format!("--{key}={v}")),
        }
    }
    Ok(out)
}

/// Inserts config-file flags right after the subcommand so that explicit
/// flags, which come later, take precedence.
fn merge_config(args: Vec<String>) -> Result<Vec<String>, LtpError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next().map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let extra = config_args(&path)?;
    let known: Vec<String> = ["suite", "norm", "spectral", "folner"]
        .iter()
        .flat_map(|s| accepted_flags(s))
        .collect();
    for a in &extra {
        let name = a.trim_start_matches("--").split('=').next().unwrap_or("");
        if !name.starts_with("tol-") && !known.iter().any(|k| k == name) {
            return Err(LtpError::SpecParse {
                input: name.replace('-', "_"),
                reason: format!("unknown key in {}", path.display()),
            });
        }
    }
    let sub = rest
        .iter()
        .position(|a| matches!(a.as_str(), "suite" | "norm" | "spectral" | "folner"));
    match sub {
        Some(i) => {
            // one file can serve every subcommand: keep only the keys this one takes
            let accepted = accepted_flags(&rest[i]);
            let extra = extra.into_iter().filter(|a| {
                let name = a.trim_start_matches("--").split('=').next().unwrap_or("");
                if name.starts_with("tol-") {
                    rest[i] == "suite"
                } else {
                    accepted.iter().any(|f| f == name)
                }
            });
            rest.splice(i + 1..i + 1, extra.collect::<Vec<_>>());
        }
        None => rest.extend(extra),
    }
    Ok(rest)
}

fn accepted_flags(subcommand: &str) -> Vec<String> {
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(subcommand) else {
        return Vec::new();
    };
    sub.get_arguments()
        .flat_map(|a| {
            let mut names: Vec<String> = a.get_long().into_iter().map(String::from).collect();
            names.extend(a.get_all_aliases().unwrap_or_default().into_iter().map(String::from));
            names
        })
        .collect()
}

fn exponents(text: &str) -> Result<Vec<Exponent>, LtpError> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| LtpError::SpecParse {
                input: t.to_string(),
                reason: "exponent is not a number".into(),
            })?;
            Exponent::new(v)
        })
        .collect()
}

fn group_spec(text: &str) -> Result<GroupSpec, LtpError> {
    text.parse()
}

fn exit_for(err: &LtpError) -> u8 {
    match err {
        LtpError::SpecParse { .. } | LtpError::InvalidExponent(_) | LtpError::InvalidArgument(_) => EXIT_PARSE,
        LtpError::Resource { .. } | LtpError::WindowTooSmall { .. } | LtpError::Io(_) => EXIT_RESOURCE,
        _ => EXIT_FAILURES,
    }
}

fn run_suite_cmd(args: SuiteArgs, tols: BTreeMap<String, f64>) -> Result<u8, LtpError> {
    let spec = group_spec(&args.group)?;
    let p_list = exponents(&args.p)?;
    let format: ReportFormat = args.format.parse()?;
    let options = SuiteOptions {
        tol_overrides: tols,
        timings: args.timings,
        iter: args.iter.config(args.seed),
    };
    let report = run_suite_with(&spec, &p_list, args.seed, &options)?;
    match &args.out {
        Some(path) => {
            emit_report(&report, path, format)?;
            eprintln!(
                "{}: {} pass, {} fail, {} skipped -> {}",
                report.spec,
                report.summary.pass,
                report.summary.fail,
                report.summary.skipped,
                path.display()
            );
        }
        None => print!("{}", render_report(&report, format)?),
    }
    Ok(if report.summary.fail > 0 { EXIT_FAILURES } else { 0 })
}

fn run_norm_cmd(args: NormArgs) -> Result<u8, LtpError> {
    let group = build_group(&group_spec(&args.group)?)?;
    let f = parse_source(&args.f, &group)?;
    let cfg = args.iter.config(args.seed);
    for p in exponents(&args.p)? {
        let est = tempered_norm(&f, p, &cfg)?;
        println!("p: {}", p.p());
        println!("method: {}", est.method.as_str());
        println!("lower: {}", est.lower);
        println!("upper: {}", est.upper);
        println!("iterations: {}", est.iterations);
        println!("converged: {}", est.converged);
        println!("lp_norm: {}", lp_norm(&f, p));
        println!("weighted_l1: {}", weighted_l1_norm(&f, p));
    }
    Ok(0)
}

fn run_spectral_cmd(args: SpectralArgs) -> Result<u8, LtpError> {
    let group = build_group(&group_spec(&args.group)?)?;
    let f = parse_source(&args.f, &group)?;
    let dual = build_dual(&group)?;
    let fh = dual.fourier(&f)?;
    println!("# k  re(f^)  im(f^)");
    for (k, z) in fh.values().iter().enumerate() {
        println!("{k} {} {}", z.re, z.im);
    }
    let iso = dual.plancherel_restricted_isometry(&f)?;
    let route = if dual.size() <= SVD_CAP { "svd" } else { "spectral" };
    println!("tempered_norm_route: {route}");
    if group.size() <= SVD_CAP {
        println!("tempered_norm_f: {}", svd_norm(&f)?.lower);
    }
    println!("sup_f: {}", ess_sup(&f));
    println!("sup_fhat: {}", ess_sup(&fh));
    println!("lhs: {}", iso.lhs);
    println!("rhs: {}", iso.rhs);
    println!("difference: {}", (iso.lhs - iso.rhs).abs());
    Ok(0)
}

fn run_folner_cmd(args: FolnerArgs) -> Result<u8, LtpError> {
    let group = build_group(&group_spec(&args.group)?)?;
    let c = lattice_box(&group, args.c_radius)?;
    let cert = find_folner(&group, &c, args.epsilon)?;
    let (num, den) = cert.worst_count();
    println!("half_side: {}", cert.half_side().unwrap_or(0));
    println!("k_size: {}", cert.k().len());
    println!("c_size: {}", cert.c().len());
    println!("worst_ratio: {num}/{den} = {}", cert.worst_ratio());
    println!("recount_matches: {}", cert.recount() == cert.counts());
    Ok(0)
}

fn configure_threads() -> Result<(), LtpError> {
    let Ok(text) = std::env::var("LTP_THREADS") else { return Ok(()) };
    let n: usize = text.trim().parse().map_err(|_| LtpError::SpecParse {
        input: text.clone(),
        reason: "LTP_THREADS must be a positive integer".into(),
    })?;
    if n == 0 {
        return Err(LtpError::SpecParse {
            input: text,
            reason: "LTP_THREADS must be a positive integer".into(),
        });
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| LtpError::InvalidArgument(e.to_string()))
}

fn run() -> Result<u8, LtpError> {
    configure_threads()?;
    let raw: Vec<String> = std::env::args().collect();
    let merged = merge_config(raw)?;
    let (args, tols) = take_tolerances(merged)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    if !tols.is_empty() && !matches!(cli.command, Command::Suite(_)) {
        return Err(LtpError::SpecParse {
            input: tols.keys().cloned().collect::<Vec<_>>().join(","),
            reason: "tolerance overrides apply to `suite` only".into(),
        });
    }
    match cli.command {
        Command::Suite(a) => run_suite_cmd(a, tols),
        Command::Norm(a) => run_norm_cmd(a),
        Command::Spectral(a) => run_spectral_cmd(a),
        Command::Folner(a) => run_folner_cmd(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
