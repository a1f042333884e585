//! Subcommand definitions and their implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pdboost::boost::{lambda_from_trace_csv, run, IterateState, LineSearch, RunConfig, Status};
use pdboost::fixtures::{self, Entries};
use pdboost::linesearch::{WolfeParams, EXACT_TOL};
use pdboost::losses::{LossKind, LossSpec};
use pdboost::structure::{analyze, dual_certificate, Regime, StructureReport};
use pdboost::BoostInstance;

use crate::rates::{rates, RatesConfig};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pdboost",
    version,
    about = "Coordinate-descent boosting with structural diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Boost on an instance and write the trace as CSV.
    Run(RunArgs),
    /// Classify an instance and print its structure report.
    Analyze(AnalyzeArgs),
    /// Run the convergence-rate experiments and print a JSON report.
    Rates(RatesArgs),
    /// Build a dual certificate for a weight vector or trace.
    Certify(CertifyArgs),
    /// Write a named fixture or a seeded random instance.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LineSearchArg {
    Wolfe,
    Closed,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    Exp,
    Logistic,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Exp => LossKind::Exponential,
            LossArg::Logistic => LossKind::Logistic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegimeArg {
    WeakLearnable,
    Attainable,
    Mixed,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::WeakLearnable => Regime::WeakLearnable,
            RegimeArg::Attainable => Regime::Attainable,
            RegimeArg::Mixed => Regime::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EntriesArg {
    Ternary,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Instance file (.json or .csv).
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "exp")]
    pub loss: LossArg,
    #[arg(long = "line-search", value_enum, default_value = "wolfe")]
    pub line_search: LineSearchArg,
    /// Armijo constant of the Wolfe search.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub c1: f64,
    /// Curvature constant of the Wolfe search.
    #[arg(long, default_value_t = 0.5)]
    pub c2: f64,
    #[arg(long = "grad-tol", default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Stop once the objective reaches this value.
    #[arg(long)]
    pub target: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub instance: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Number of seeded random weak-learnable instances to add.
    #[arg(long, default_value_t = 10)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "exp")]
    pub loss: LossArg,
    /// Comma-separated weights.
    #[arg(
        long,
        allow_hyphen_values = true,
        conflicts_with = "trace",
        required_unless_present = "trace"
    )]
    pub lambda: Option<String>,
    /// Trace CSV written by `run`; its steps are replayed to recover the weights.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Named fixture (s, a1, a2, pair, single, rotated_s, skewed).
    #[arg(long, conflicts_with = "regime", required_unless_present = "regime")]
    pub fixture: Option<String>,
    /// Draw a random instance in this regime.
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-rows", default_value_t = 6)]
    pub max_rows: usize,
    #[arg(long = "max-cols", default_value_t = 6)]
    pub max_cols: usize,
    #[arg(long, value_enum, default_value = "ternary")]
    pub entries: EntriesArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn load(path: &Path) -> anyhow::Result<BoostInstance> {
    BoostInstance::load(path).with_context(|| format!("cannot load instance {}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Runs `cli`, writing normal output to `stdout` and progress notes to
/// `stderr`, and returns the process exit code. Errors map to
/// [`EXIT_USAGE`] in `main`.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run(a) => cmd_run(a, stdout, stderr),
        Command::Analyze(a) => cmd_analyze(a, stdout),
        Command::Rates(a) => cmd_rates(a, stdout, stderr),
        Command::Certify(a) => cmd_certify(a, stdout),
        Command::Gen(a) => cmd_gen(a, stdout),
    }
}

fn cmd_run(a: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<i32> {
    let inst = load(&a.instance)?;
    let loss = LossSpec::new(a.loss.into(), inst.m())?;
    let line_search = match a.line_search {
        LineSearchArg::Wolfe => LineSearch::Wolfe(WolfeParams::new(a.c1, a.c2)?),
        LineSearchArg::Closed => LineSearch::ClosedForm,
        LineSearchArg::Exact => LineSearch::Exact(EXACT_TOL),
    };
    let cfg = RunConfig {
        grad_tol: a.grad_tol,
        max_iters: a.iters,
        line_search,
        target: a.target,
        ..Default::default()
    };
    let trace = run(&inst, &loss, &cfg)?;
    emit(a.out.as_deref(), &trace.to_csv(), stdout)?;
    writeln!(
        stderr,
        "{:?} after {} iterations, objective {:.16e}",
        trace.status,
        trace.records.len(),
        trace.final_state.objective
    )?;
    Ok(match trace.status {
        Status::MaxIters => EXIT_NOT_CONVERGED,
        Status::GradientBelowTol | Status::TargetReached => EXIT_OK,
    })
}

fn one_based(rows: &[usize]) -> String {
    let items: Vec<String> = rows.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

/// Human-readable summary of a report; rows are numbered from 1.
pub fn verdict(r: &StructureReport) -> String {
    let headline = match r.regime {
        Regime::WeakLearnable => "weak learnable: the risk infimum is 0 and is not attained",
        Regime::Attainable => "attainable: the risk has a minimizer",
        Regime::Mixed => "mixed: the hard core is attainable, the rest is separable",
    };
    format!(
        "{}x{} instance, {headline}\nhard core rows: {}\nclassical edge gamma: {:.6e}\n",
        r.m,
        r.n,
        one_based(&r.hard_core),
        r.gamma_classical
    )
}

fn cmd_analyze(a: AnalyzeArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let inst = load(&a.instance)?;
    let report = analyze(&inst)?;
    stdout.write_all(verdict(&report).as_bytes())?;
    emit(a.out.as_deref(), &to_json(&report)?, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_rates(a: RatesArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<i32> {
    let report = rates(&RatesConfig {
        iters: a.iters,
        random: a.random,
        seed: a.seed,
    })?;
    emit(a.out.as_deref(), &to_json(&report)?, stdout)?;
    for e in &report.experiments {
        for c in &e.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(stderr, "{mark} {} / {}: {}", e.fixture, c.name, c.detail)?;
        }
    }
    if !report.passed() {
        bail!("rate checks failed");
    }
    Ok(EXIT_OK)
}

fn parse_lambda(text: &str, n: usize) -> anyhow::Result<Vec<f64>> {
    let lambda = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad weight {s:?}"))
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    if lambda.len() != n {
        bail!("expected {n} weights, got {}", lambda.len());
    }
    Ok(lambda)
}

fn cmd_certify(a: CertifyArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let inst = load(&a.instance)?;
    let loss = LossSpec::new(a.loss.into(), inst.m())?;
    let lambda = match (&a.lambda, &a.trace) {
        (Some(text), _) => parse_lambda(text, inst.n())?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read trace {}", path.display()))?;
            lambda_from_trace_csv(&text, inst.n())?
        }
        (None, None) => bail!("either --lambda or --trace is required"),
    };
    let state = IterateState::at(&inst, &loss, lambda, 0)?;
    match dual_certificate(&inst, &loss, &state) {
        Some(cert) => {
            writeln!(stdout, "gap_bound: {:.16e}", cert.gap_bound)?;
            emit(a.out.as_deref(), &to_json(&cert)?, stdout)?;
        }
        None => writeln!(stdout, "certificate unavailable")?,
    }
    Ok(EXIT_OK)
}

fn cmd_gen(a: GenArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let inst = match (&a.fixture, a.regime) {
        (Some(name), _) => match fixtures::by_name(name) {
            Some(f) => f.instance,
            None => bail!("unknown fixture {name:?}"),
        },
        (None, Some(regime)) => {
            let entries = match a.entries {
                EntriesArg::Ternary => Entries::Ternary,
                EntriesArg::Uniform => Entries::Uniform,
            };
            fixtures::random_in_regime(a.seed, regime.into(), a.max_rows, a.max_cols, entries)?
        }
        (None, None) => bail!("either --fixture or --regime is required"),
    };
    let text = match a.format {
        FormatArg::Json => inst.to_json() + "\n",
        FormatArg::Csv => inst.to_csv(),
    };
    emit(a.out.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}
