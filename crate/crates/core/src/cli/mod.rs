//! Command-line front end for the `advbound` binary.
//!
//! Reports are JSON by default, wrapped in a versioned envelope; `--format
//! csv` writes a flat table instead. Identical invocations produce identical
//! bytes unless `--timing` asks for the wall-clock to be embedded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    adv, adv_pm, bound_solve_options, gamma2, madv_fixed_c, madv_sweep, BoundReport, BoundStatus, SweepOptions,
    ADV_CERT_TOL, GAMMA2_CONFIDENCE,
};
use crate::conic::SolveOptions;
use crate::dpt::{self, DptParams, ErrorMode};
use crate::error::{Error, Result};
use crate::gram::{build_gram_set, FiniteFunction, SigmaChoice};
use crate::verify::{run_suite, Suite, SuiteReport};

pub const SCHEMA: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "advbound",
    version,
    about = "Adversary bounds, witness checks and direct product calculators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Embed the wall-clock time in the JSON report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Compute one bound for a function.
    Bound(BoundArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Evaluate a direct product formula over a range of k.
    Dpt(DptArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BoundKind {
    Gamma2,
    Adv,
    AdvPm,
    Madv,
    MadvSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SigmaArg {
    #[value(name = "F")]
    #[serde(rename = "F")]
    F,
    #[value(name = "sigma_f")]
    #[serde(rename = "sigma_f")]
    SigmaF,
}

impl From<SigmaArg> for SigmaChoice {
    fn from(s: SigmaArg) -> Self {
        match s {
            SigmaArg::F => SigmaChoice::F,
            SigmaArg::SigmaF => SigmaChoice::SigmaF,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MatrixArg {
    #[value(name = "JminusF")]
    JminusF,
    #[value(name = "JminusSigma")]
    JminusSigma,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    /// Builtin `NAME:n` or a function file.
    #[arg(long)]
    pub function: String,
    #[arg(long, value_enum)]
    pub bound: BoundKind,
    #[arg(long, value_enum, default_value_t = SigmaArg::F)]
    pub sigma: SigmaArg,
    /// Matrix for `gamma2`.
    #[arg(long, value_enum, default_value_t = MatrixArg::JminusF)]
    pub matrix: MatrixArg,
    /// Multiplicative parameter for `madv`.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_suite, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Formula {
    ProductSigma,
    Sdpt,
    Xor,
    Phase,
    Threshold,
    Error,
}

#[derive(Debug, Args, Serialize)]
pub struct DptArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    /// A single `N` or an inclusive range `A..B`.
    #[arg(long, value_parser = parse_k_range)]
    pub k: Option<KRange>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub adv: Option<f64>,
    #[arg(long)]
    pub q14: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub cap_k: Option<u32>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<ErrorMode>,
    #[arg(long)]
    pub eps: Option<f64>,
}

fn parse_mode(s: &str) -> std::result::Result<ErrorMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KRange {
    pub start: u32,
    pub end: u32,
}

pub fn parse_k_range(s: &str) -> std::result::Result<KRange, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad k {t:?}: {e}"));
    let (start, end) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let k = num(s)?;
            (k, k)
        }
    };
    if start == 0 || end < start {
        return Err(format!("k range {s:?} must satisfy 1 <= A <= B"));
    }
    Ok(KRange { start, end })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            emit_error("usage", &e.to_string());
            return EXIT_USAGE;
        }
    };
    if let Err(e) = configure_threads() {
        emit_error("usage", &e.to_string());
        return EXIT_USAGE;
    }
    let started = Instant::now();
    let outcome = execute(&cli);
    let elapsed = started.elapsed().as_secs_f64();
    eprintln!("elapsed: {elapsed:.3} s");
    match outcome.and_then(|(report, code)| {
        write_output(&cli, &report, elapsed)?;
        Ok(code)
    }) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            emit_error(
                if code == EXIT_SOLVER { "solver" } else { "invalid_input" },
                &e.to_string(),
            );
            code
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ADVBOUND_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Precondition(format!("ADVBOUND_THREADS must be a positive integer (got {raw:?})")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver(_) | Error::NonConvergence { .. } => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

fn emit_error(kind: &str, message: &str) {
    let obj = json!({
        "schema": SCHEMA,
        "tool": "advbound",
        "version": env!("CARGO_PKG_VERSION"),
        "error": { "kind": kind, "message": message.trim_end() },
    });
    let text = serde_json::to_string_pretty(&obj).expect("error object serializes");
    let _ = writeln!(std::io::stdout(), "{text}");
}

/// A finished command: its payload and CSV projection.
pub struct Report {
    pub command: &'static str,
    pub json: Value,
    pub csv: Vec<Vec<String>>,
}

fn execute(cli: &Cli) -> Result<(Report, i32)> {
    match &cli.command {
        Command::Bound(a) => run_bound(a),
        Command::Verify(a) => run_verify(a),
        Command::Dpt(a) => run_dpt(a),
    }
}

pub fn run_bound(a: &BoundArgs) -> Result<(Report, i32)> {
    let func = FiniteFunction::resolve(&a.function)?;
    let gs = build_gram_set(&func)?;
    let sigma = gs.sigma(a.sigma.into())?;
    let report: BoundReport = match a.bound {
        BoundKind::Gamma2 => {
            let m = match a.matrix {
                MatrixArg::JminusF => gs.j_minus(&gs.f)?,
                MatrixArg::JminusSigma => gs.j_minus(sigma)?,
            };
            gamma2(m.matrix(), a.seed)?
        }
        BoundKind::Adv => adv(sigma, &gs.deltas, a.seed)?,
        BoundKind::AdvPm => adv_pm(sigma, &gs.f, &gs.deltas, a.seed)?,
        BoundKind::Madv => {
            let c =
                a.c.ok_or_else(|| Error::Precondition("--c is required for madv".into()))?;
            madv_fixed_c(sigma, &gs.deltas, c)?
        }
        BoundKind::MadvSweep => madv_sweep(sigma, &gs.deltas, &SweepOptions::default())?,
    };
    let code = if report.status == BoundStatus::Stalled {
        EXIT_SOLVER
    } else {
        EXIT_OK
    };
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let csv = vec![
        [
            "function",
            "bound",
            "sigma",
            "c",
            "value",
            "lower",
            "upper",
            "gap",
            "status",
            "iterations",
            "witness_digest",
        ]
        .map(String::from)
        .to_vec(),
        vec![
            a.function.clone(),
            report.name.clone(),
            SigmaChoice::from(a.sigma).label().into(),
            opt(report.c),
            report.value.to_string(),
            opt(report.lower),
            opt(report.upper),
            report.gap.to_string(),
            serde_json::to_value(report.status)?.as_str().unwrap_or_default().into(),
            report.iterations.to_string(),
            report.witness_digest.clone(),
        ],
    ];
    let mut json = serde_json::to_value(&report)?;
    json["domain"] = serde_json::to_value(&gs.index)?;
    Ok((
        Report {
            command: "bound",
            json,
            csv,
        },
        code,
    ))
}

pub fn run_verify(a: &VerifyArgs) -> Result<(Report, i32)> {
    let report: SuiteReport = run_suite(a.suite, a.seed)?;
    let mut csv = vec![[
        "suite",
        "claim",
        "instance",
        "check",
        "slack",
        "tolerance",
        "passed",
        "error",
    ]
    .map(String::from)
    .to_vec()];
    for c in &report.checks {
        csv.push(vec![
            c.suite.clone(),
            c.claim.clone(),
            c.instance.clone(),
            c.check.name.clone(),
            c.check.slack.to_string(),
            c.check.tolerance.to_string(),
            c.check.passed.to_string(),
            c.error.clone().unwrap_or_default(),
        ]);
    }
    let code = if report.all_passed() { EXIT_OK } else { EXIT_VERIFY };
    Ok((
        Report {
            command: "verify",
            json: serde_json::to_value(&report)?,
            csv,
        },
        code,
    ))
}

#[derive(Clone, Debug, Serialize)]
struct DptRow {
    formula: Formula,
    k: Option<u32>,
    delta: Option<f64>,
    adv: Option<f64>,
    q14: Option<f64>,
    gamma: Option<f64>,
    d: Option<f64>,
    lambda: Option<f64>,
    #[serde(rename = "K")]
    cap_k: Option<u32>,
    mu: Option<f64>,
    mode: Option<ErrorMode>,
    eps: Option<f64>,
    variant: &'static str,
    value: f64,
    vacuous: bool,
}

fn need<T: Copy>(v: Option<T>, flag: &str, formula: Formula) -> Result<T> {
    v.ok_or_else(|| Error::Precondition(format!("--{flag} is required for formula {formula:?}")))
}

pub fn run_dpt(a: &DptArgs) -> Result<(Report, i32)> {
    let f = a.formula;
    let ks: Vec<Option<u32>> = if f == Formula::Error {
        vec![None]
    } else {
        let r = need(a.k, "k", f)?;
        (r.start..=r.end).map(Some).collect()
    };
    let mut rows = Vec::new();
    for k in ks {
        let base = DptRow {
            formula: f,
            k,
            delta: a.delta,
            adv: a.adv,
            q14: a.q14,
            gamma: a.gamma,
            d: a.d,
            lambda: a.lambda,
            cap_k: a.cap_k,
            mu: a.mu,
            mode: a.mode,
            eps: a.eps,
            variant: "",
            value: 0.0,
            vacuous: false,
        };
        let row = |variant, value: f64, vacuous| DptRow {
            variant,
            value,
            vacuous,
            ..base.clone()
        };
        let lower = |variant, value: f64| row(variant, value, !(value > 0.0));
        let params = || -> Result<DptParams> {
            Ok(DptParams {
                k: k.unwrap_or(1),
                delta: need(a.delta, "delta", f)?,
                ..Default::default()
            })
        };
        match f {
            Formula::ProductSigma => {
                let p = DptParams {
                    gamma: need(a.gamma, "gamma", f)?,
                    d: need(a.d, "d", f)?,
                    lambda: need(a.lambda, "lambda", f)?,
                    ..params()?
                };
                let b = dpt::product_sigma_bound(&p)?;
                rows.push(row("product_sigma", b.value, b.vacuous));
            }
            Formula::Sdpt | Formula::Xor => {
                let adv = need(a.adv, "adv", f)?;
                let calc = if f == Formula::Sdpt {
                    dpt::sdpt_bounds
                } else {
                    dpt::xor_bounds
                };
                let (m, q) = calc(&params()?, adv, a.q14)?;
                rows.push(lower("adv", m));
                if let Some(q) = q {
                    rows.push(lower("q14", q));
                }
            }
            Formula::Phase => {
                let adv = need(a.adv, "adv", f)?;
                let mut p = params()?;
                p.gamma = match a.gamma {
                    Some(g) => g,
                    None if adv > 0.0 && p.delta > 0.0 => 1.0 / (p.delta * adv),
                    None => {
                        return Err(Error::Precondition(
                            "--gamma is required for formula Phase when delta or adv is zero".into(),
                        ))
                    }
                };
                let (general, special) = dpt::phase_sdpt_bound(&p, adv)?;
                rows.push(row("general", general.value, general.vacuous));
                rows.push(lower("specialized", special));
            }
            Formula::Threshold => {
                let p = DptParams {
                    cap_k: need(a.cap_k, "K", f)?,
                    mu: need(a.mu, "mu", f)?,
                    ..params()?
                };
                let (tail, _) = dpt::threshold_tail(&p)?;
                rows.push(row("tail", tail, tail >= 1.0));
            }
            Formula::Error => {
                let v = dpt::error_convert(need(a.mode, "mode", f)?, need(a.eps, "eps", f)?)?;
                rows.push(row("error", v, false));
            }
        }
    }
    let mut csv = Vec::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Precondition(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Precondition(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(bytes.as_slice());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Precondition(e.to_string()))?;
        csv.push(rec.iter().map(String::from).collect());
    }
    Ok((
        Report {
            command: "dpt",
            json: json!({ "formula": f, "rows": rows }),
            csv,
        },
        EXIT_OK,
    ))
}

fn tolerances() -> Value {
    let tight = bound_solve_options();
    let loose = SolveOptions::default();
    json!({
        "solver_gap": tight.gap_tol,
        "solver_feasibility": tight.feas_tol,
        "solver_fallback_gap": loose.gap_tol,
        "solver_fallback_feasibility": loose.feas_tol,
        "adv_certificate": ADV_CERT_TOL,
        "gamma2_primal_dual": GAMMA2_CONFIDENCE,
    })
}

pub fn render(cli: &Cli, report: &Report, elapsed: f64) -> Result<Vec<u8>> {
    match cli.format {
        Format::Json => {
            let mut env = json!({
                "schema": SCHEMA,
                "tool": "advbound",
                "version": env!("CARGO_PKG_VERSION"),
                "command": report.command,
                "config": cli,
                "tolerances": tolerances(),
                "report": report.json,
            });
            if cli.timing {
                env["wall_clock_seconds"] = json!(elapsed);
            }
            let mut out = serde_json::to_vec_pretty(&env)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for rec in &report.csv {
                w.write_record(rec).map_err(|e| Error::Precondition(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Precondition(e.to_string()))
        }
    }
}

fn write_output(cli: &Cli, report: &Report, elapsed: f64) -> Result<()> {
    let bytes = render(cli, report, elapsed)?;
    match &cli.out {
        Some(path) => write_atomic(path, &bytes),
        None => match std::io::stdout().write_all(&bytes) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k_range("7").unwrap(), KRange { start: 7, end: 7 });
        assert_eq!(parse_k_range("1..16").unwrap(), KRange { start: 1, end: 16 });
        assert!(parse_k_range("0").is_err());
        assert!(parse_k_range("5..2").is_err());
        assert!(parse_k_range("a..3").is_err());
    }

    #[test]
    fn sdpt_table_is_linear_in_k() {
        let cli = Cli::try_parse_from([
            "advbound",
            "dpt",
            "--formula",
            "sdpt",
            "--k",
            "1..16",
            "--delta",
            "0.8",
            "--adv",
            "1.414",
        ])
        .unwrap();
        let Command::Dpt(a) = &cli.command else { panic!() };
        let (r, code) = run_dpt(a).unwrap();
        assert_eq!(code, EXIT_OK);
        let rows = r.json["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 16);
        let v1 = rows[0]["value"].as_f64().unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert!((row["value"].as_f64().unwrap() - (i + 1) as f64 * v1).abs() <= 1e-12);
        }
        assert_eq!(r.csv.len(), 17);
        assert_eq!(r.csv[0].last().unwrap(), "vacuous");
    }

    #[test]
    fn missing_parameter_is_a_usage_error() {
        let cli = Cli::try_parse_from([
            "advbound",
            "dpt",
            "--formula",
            "threshold",
            "--k",
            "3",
            "--delta",
            "0.25",
        ])
        .unwrap();
        let Command::Dpt(a) = &cli.command else { panic!() };
        let e = run_dpt(a).err().unwrap();
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
