//! Command-line front end.
//!
//! Exit codes: 0 verified or success, 1 invalid, 2 unknown, 3 usage or
//! parse error.

mod corpus;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::analyses::{check_with, CheckOptions, Requirement, Status, SupportMode};
use crate::density::{param_store, sample_trace, Fuel, Store};
use crate::lang::{parse_source, pretty_print, validate, validate_pair, Program, Registry};
use crate::rng::CounterRng;
use crate::svi::{kl_quadrature, svi_run, Optimizer, QuadError, QuadSpec, SviConfig};
use crate::zone::analyze_indexed;

pub use corpus::{load_manifest, run_corpus, CorpusManifest, CorpusPair, CorpusRow, CATEGORIES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

pub fn exit_code(s: Status) -> i32 {
    match s {
        Status::Verified => EXIT_OK,
        Status::Invalid => EXIT_INVALID,
        Status::Unknown => EXIT_UNKNOWN,
    }
}

#[derive(Parser, Debug)]
#[command(name = "ppv", version, about = "Run, train and check model-guide pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Parse and validate a source file, then print it back.
    Parse(ParseArgs),
    /// Draw one trace from the model (or the guide).
    Run(RunArgs),
    /// Train guide parameters with the score estimator.
    Svi(SviArgs),
    /// KL divergence by quadrature, at one point or over a grid.
    Kl(KlArgs),
    /// Static checks of a model-guide pair.
    Check(CheckArgs),
    /// Run a corpus manifest and tabulate the outcomes.
    Corpus(CorpusArgs),
    /// Print zone invariants for a program with indexed names.
    Zones(ZonesArgs),
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Emit JSON.
    #[arg(long)]
    pub json: bool,
    /// Leave timing metadata out of JSON output.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    /// File holding both a model and a guide.
    pub pair: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub guide: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub file: PathBuf,
    /// Sample from the guide instead of the model.
    #[arg(long = "use-guide")]
    pub use_guide: bool,
    /// Guide parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub fuel: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SviArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta0: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub fuel: Option<u64>,
    /// Use Adam instead of plain SGD.
    #[arg(long)]
    pub adam: bool,
    /// Write the trajectory as CSV.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct KlArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// `lo:hi:step` sweep of a one-parameter guide, printed as CSV.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub fuel: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// support, diff, c2b, c456 or all.
    #[arg(long, default_value = "all")]
    pub which: String,
    /// Compose sampled-name sets by widening only.
    #[arg(long)]
    pub strict_support: bool,
    /// Identifier written into the report.
    #[arg(long)]
    pub id: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ZonesArgs {
    pub file: PathBuf,
    #[arg(long = "use-guide")]
    pub use_guide: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Failed(_) => EXIT_INVALID,
            _ => EXIT_USAGE,
        }
    }
}

type CliResult = Result<i32, CliError>;

pub fn read_source(path: &Path) -> Result<crate::lang::SourceFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_source(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), msg: e.to_string() })
}

fn issues_err(path: &Path, issues: &[crate::lang::Issue]) -> CliError {
    let msgs: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    CliError::Parse { path: path.to_path_buf(), msg: msgs.join("; ") }
}

/// Loads a model and a guide from a pair file or from separate files.
pub fn load_pair(p: &PairArgs) -> Result<(Program, Program), CliError> {
    let from = |path: &Path, want_model: bool| -> Result<Program, CliError> {
        let sf = read_source(path)?;
        let prog = if want_model { sf.model } else { sf.guide };
        prog.ok_or_else(|| CliError::Usage(format!("{} has no {}", path.display(), if want_model { "model" } else { "guide" })))
    };
    let mpath = p.model.as_deref().or(p.pair.as_deref()).ok_or_else(|| CliError::Usage("no model given".into()))?;
    let gpath = p.guide.as_deref().or(p.pair.as_deref()).ok_or_else(|| CliError::Usage("no guide given".into()))?;
    let (m, g) = (from(mpath, true)?, from(gpath, false)?);
    let issues = validate_pair(&m, &g);
    if !issues.is_empty() {
        return Err(issues_err(mpath, &issues));
    }
    Ok((m, g))
}

fn fuel(f: Option<u64>) -> Fuel {
    f.map(Fuel).unwrap_or_else(Fuel::from_env)
}

fn emit_json(out: &mut dyn Write, o: &OutputArgs, mut v: serde_json::Value, started: Instant) {
    if !o.no_meta {
        v["meta"] = json!({ "version": env!("CARGO_PKG_VERSION"), "elapsed_ms": started.elapsed().as_secs_f64() * 1e3 });
    }
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json value serializes"));
}

fn cmd_parse(a: &ParseArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let sf = read_source(&a.file)?;
    let mut issues = Vec::new();
    for p in sf.model.iter().chain(sf.guide.iter()) {
        issues.extend(validate(p));
    }
    if let (Some(m), Some(g)) = (&sf.model, &sf.guide) {
        issues.extend(validate_pair(m, g).into_iter().filter(|i| !issues.contains(i)).collect::<Vec<_>>());
    }
    if a.out.json {
        let v = json!({
            "model": sf.model.as_ref().map(pretty_print),
            "guide": sf.guide.as_ref().map(pretty_print),
            "issues": issues.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
        });
        emit_json(out, &a.out, v, started);
    } else {
        for p in sf.model.iter().chain(sf.guide.iter()) {
            let _ = writeln!(out, "{}", pretty_print(p));
        }
        for i in &issues {
            let _ = writeln!(out, "issue: {i}");
        }
    }
    Ok(if issues.is_empty() { EXIT_OK } else { EXIT_USAGE })
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let sf = read_source(&a.file)?;
    let prog = if a.use_guide { sf.guide } else { sf.model };
    let prog = prog.ok_or_else(|| CliError::Usage(format!("{} has no {}", a.file.display(), if a.use_guide { "guide" } else { "model" })))?;
    let issues = validate(&prog);
    if !issues.is_empty() {
        return Err(issues_err(&a.file, &issues));
    }
    if prog.params.len() != a.theta.len() {
        return Err(CliError::Usage(format!("expected {} parameter value(s) in --theta, got {}", prog.params.len(), a.theta.len())));
    }
    let store: Store = param_store(&prog.params, &a.theta);
    let mut rng = CounterRng::new(a.seed);
    let t = sample_trace(&prog.body, &store, &mut rng, fuel(a.fuel)).map_err(|e| CliError::Failed(e.to_string()))?;
    if a.out.json {
        let v = json!({ "rdb": t.rdb, "log_weight": t.log_weight, "log_density": t.log_density });
        emit_json(out, &a.out, v, started);
    } else {
        for (k, v) in &t.rdb {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "log weight = {}", t.log_weight);
        let _ = writeln!(out, "log density = {}", t.log_density);
    }
    Ok(EXIT_OK)
}

fn cmd_svi(a: &SviArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let (m, g) = load_pair(&a.pair)?;
    let theta0 = if a.theta0.is_empty() { vec![0.0; g.params.len()] } else { a.theta0.clone() };
    let cfg = SviConfig {
        samples: a.samples,
        lr: a.lr,
        steps: a.steps,
        seed: a.seed,
        fuel: fuel(a.fuel),
        optimizer: if a.adam { Optimizer::adam() } else { Optimizer::Sgd },
    };
    let tr = svi_run(&m, &g, &theta0, &cfg).map_err(|e| match e {
        crate::svi::SviError::ParamCount { .. } => CliError::Usage(e.to_string()),
        e => CliError::Failed(e.to_string()),
    })?;
    if let Some(p) = &a.trajectory {
        std::fs::write(p, tr.to_csv()).map_err(|source| CliError::Io { path: p.clone(), source })?;
    }
    let fin = tr.final_theta();
    if a.out.json {
        let params: serde_json::Map<String, serde_json::Value> = tr.params.iter().cloned().zip(fin.iter().map(|x| json!(x))).collect();
        emit_json(out, &a.out, json!({ "steps": a.steps, "theta": params }), started);
    } else {
        for (p, v) in tr.params.iter().zip(fin) {
            let _ = writeln!(out, "{p} = {v:.6}");
        }
    }
    Ok(EXIT_OK)
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid `{s}` is not lo:hi:step"));
    let parts: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || hi < lo {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

fn cmd_kl(a: &KlArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let (m, g) = load_pair(&a.pair)?;
    let spec = QuadSpec::default();
    let fuel = fuel(a.fuel);
    if let Some(grid) = &a.grid {
        if g.params.len() != 1 {
            return Err(CliError::Usage("--grid needs a guide with exactly one parameter".into()));
        }
        let pts = parse_grid(grid)?;
        let rows = crate::svi::kl_sweep(&m, &g, &pts, &spec, fuel);
        let _ = writeln!(out, "{},kl", g.params[0]);
        for (t, r) in rows {
            let v = match r {
                Ok(v) => format!("{v:.6}"),
                Err(QuadError::Divergent(_)) => "inf".into(),
                Err(_) => "nan".into(),
            };
            let _ = writeln!(out, "{t:.4},{v}");
        }
        return Ok(EXIT_OK);
    }
    let theta = &a.theta;
    if theta.len() != g.params.len() {
        return Err(CliError::Usage(format!("expected {} value(s) in --theta, got {}", g.params.len(), theta.len())));
    }
    match kl_quadrature(&m, &g, theta, &spec, fuel) {
        Ok(r) => {
            if a.out.json {
                emit_json(out, &a.out, json!({ "kl": r.value, "level": r.level, "converged": r.converged }), started);
            } else {
                let _ = writeln!(out, "KL = {:.6}", r.value);
            }
            Ok(EXIT_OK)
        }
        Err(QuadError::Divergent(why)) => {
            if a.out.json {
                emit_json(out, &a.out, json!({ "kl": "divergent", "reason": why }), started);
            } else {
                let _ = writeln!(out, "KL diverges: {why}");
            }
            Ok(EXIT_INVALID)
        }
        Err(e) => Err(CliError::Failed(e.to_string())),
    }
}

pub fn parse_which(s: &str) -> Result<Vec<Requirement>, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "all" => Ok(Requirement::ALL.to_vec()),
        "support" => Ok(vec![Requirement::R1]),
        "diff" => Ok(vec![Requirement::R2]),
        other => Requirement::parse(other).map(|r| vec![r]).ok_or_else(|| CliError::Usage(format!("unknown check `{s}`"))),
    }
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let (m, g) = load_pair(&a.pair)?;
    let which = parse_which(&a.which)?;
    let opts = CheckOptions {
        registry: Registry::standard(),
        support_mode: if a.strict_support { SupportMode::Strict } else { SupportMode::Refined },
        which,
    };
    let id = a.id.clone().unwrap_or_else(|| {
        a.pair
            .pair
            .as_ref()
            .or(a.pair.model.as_ref())
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let report = check_with(&id, &m, &g, &opts);
    if a.out.json {
        let v = serde_json::to_value(&report).expect("report serializes");
        emit_json(out, &a.out, v, started);
    } else {
        for r in &report.requirements {
            let id = format!("{:?}", r.id);
            let _ = writeln!(out, "{id:<5}{}", r.status);
            for why in &r.reasons {
                let _ = writeln!(out, "       {}", why.message);
            }
        }
        let _ = writeln!(out, "overall: {}", report.overall);
    }
    Ok(exit_code(report.status()))
}

fn cmd_zones(a: &ZonesArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let sf = read_source(&a.file)?;
    let prog = if a.use_guide { sf.guide } else { sf.model };
    let prog = prog.ok_or_else(|| CliError::Usage(format!("{} has no {}", a.file.display(), if a.use_guide { "guide" } else { "model" })))?;
    let r = analyze_indexed(&prog).map_err(|e| CliError::Failed(e.to_string()))?;
    if a.out.json {
        emit_json(out, &a.out, json!({ "trace": r.trace, "exit": r.exit.to_string() }), started);
    } else {
        for t in &r.trace {
            let _ = writeln!(out, "{}: {}", t.point, t.rdb);
        }
        let _ = writeln!(out, "exit: {}", r.exit);
    }
    Ok(if r.exit.top_names().is_empty() { EXIT_OK } else { EXIT_UNKNOWN })
}

/// Parses `args` and runs the command, writing to `out` and `err`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let res = match &cli.command {
        Cmd::Parse(a) => cmd_parse(a, out),
        Cmd::Run(a) => cmd_run(a, out),
        Cmd::Svi(a) => cmd_svi(a, out),
        Cmd::Kl(a) => cmd_kl(a, out),
        Cmd::Check(a) => cmd_check(a, out),
        Cmd::Corpus(a) => corpus::cmd_corpus(a, out),
        Cmd::Zones(a) => cmd_zones(a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}
