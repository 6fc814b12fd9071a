//! Command-line front end: argument and config handling, builtin fields,
//! and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod builtins;
mod commands;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fraclab_core::{FracError, QuadSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use acceptance::Tier;

#[derive(Parser, Debug)]
#[command(name = "fraclab", version, about = "Experiments with the fractional Laplacian (-Δ)^s")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Re-run a resolved config emitted by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; the output does not depend on it.
    #[arg(long, global = true, env = "FRACLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub quad: QuadOverrides,
}

#[derive(Args, Debug, Clone, Copy, Default)]
pub struct QuadOverrides {
    /// Relative tolerance of every integral [default: 1e-10].
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Absolute tolerance of every integral [default: 1e-13].
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Bisection budget per adaptive integral [default: 200].
    #[arg(long = "max-subdiv", global = true)]
    pub max_subdiv: Option<usize>,
}

impl QuadOverrides {
    fn apply(&self, mut spec: QuadSpec) -> QuadSpec {
        if let Some(v) = self.rel_tol {
            spec.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            spec.abs_tol = v;
        }
        if let Some(v) = self.max_subdiv {
            spec.max_subdivisions = v;
        }
        spec
    }
}

/// Everything that determines a run's primary output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub quad: QuadSpec,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// C_{n,s}, β_{n,s} and α_{n,s} as JSON.
    Constants(Params),
    /// Radial profile of Ψ as CSV.
    PsiTable(PsiTableArgs),
    /// (-Δ)^s of a builtin field at the points of a CSV file.
    FraclapEval(FraclapArgs),
    /// Poisson extension of builtin data from a centered ball.
    PoissonSolve(PoissonArgs),
    /// Riesz potential of a builtin density, optionally adjudicating α.
    Riesz(RieszArgs),
    /// Both sides of the Cauchy-type estimate over a list of radii.
    Cauchy(EstimateArgs),
    /// Decay of D^γ u_R(0) for extensions of bounded data.
    LiouvilleDecay(EstimateArgs),
    /// Walk-on-spheres estimate at one point.
    Wos(WosArgs),
    /// Run the acceptance criteria.
    Accept(AcceptArgs),
}

#[derive(Args, Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Dimension.
    #[arg(long)]
    pub n: usize,
    /// Order, strictly between 0 and 1.
    #[arg(long)]
    pub s: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiTableArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    #[arg(long, default_value_t = 0.5)]
    pub r_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FraclapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    /// affine, cosine, bump2s or riesz-kernel.
    #[arg(long)]
    pub field: String,
    /// CSV with a header row and one point per row.
    #[arg(long)]
    pub points: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// one, affine:<a,b>, halfspace, sign, bounded-noise:<seed> or mixed.
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub points: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    /// bump or indicator.
    #[arg(long)]
    pub density: String,
    #[arg(long)]
    pub points: PathBuf,
    /// Decide between α and 1/α by the inversion check and use the winner.
    #[arg(long)]
    pub adjudicate: bool,
    /// Constant in front of the integral when not adjudicating (default 1).
    #[arg(long, conflicts_with = "adjudicate")]
    pub normalization: Option<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    /// Multi-index as g1,...,gn.
    #[arg(long)]
    pub gamma: String,
    #[arg(long, default_value = "1,2,4,8,16")]
    pub radii: String,
    #[arg(long)]
    pub data: String,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WosArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: Params,
    /// ball(cx,...,r), box(lo...,hi...) or union(A;B).
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub x0: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = fraclab_core::wos::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long, default_value_t = fraclab_core::wos::DEFAULT_TABLE_SIZE)]
    pub table_size: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptArgs {
    #[arg(long, value_enum, default_value_t = Tier::Fast)]
    pub tier: Tier,
    /// Scale β_{n,s} in the kernel-normalization check (mutation testing).
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub corrupt_beta: f64,
}

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_FAILED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<FracError> for CliError {
    fn from(e: FracError) -> Self {
        match e {
            FracError::Inconsistent(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a command produced, before it is written out.
pub enum Output {
    Json(Value),
    /// CSV text plus a JSON sidecar holding the config and any summary.
    Csv { text: String, sidecar: Value },
}

/// A finished command: its output and whether every quantity converged.
pub struct Finished {
    pub output: Output,
    pub exit: i32,
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    // either a bare config or a report or sidecar that embeds one
    let inner = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("{}: not a run config: {e}", path.display())))
}

/// Resolve the run config from the arguments or `--config`.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    match (&cli.config, &cli.command) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either a subcommand or --config, not both".into())),
        (None, None) => Err(CliError::Usage("missing subcommand (see --help)".into())),
        (Some(path), None) => {
            let mut cfg = read_config(path)?;
            cfg.quad = cli.quad.apply(cfg.quad);
            Ok(cfg)
        }
        (None, Some(cmd)) => Ok(RunConfig { command: cmd.clone(), quad: cli.quad.apply(QuadSpec::default()) }),
    }
}

fn write_output(out: Option<&Path>, output: &Output) -> Result<(), CliError> {
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json values serialize") + "\n";
    match (out, output) {
        (None, Output::Json(v)) => std::io::stdout().write_all(pretty(v).as_bytes())?,
        (Some(path), Output::Json(v)) => fs::write(path, pretty(v))?,
        (None, Output::Csv { text, sidecar }) => {
            std::io::stdout().write_all(text.as_bytes())?;
            eprintln!("{}", serde_json::to_string(sidecar).expect("json values serialize"));
        }
        (Some(path), Output::Csv { text, sidecar }) => {
            fs::write(path, text)?;
            fs::write(path.with_extension("json"), pretty(sidecar))?;
        }
    }
    Ok(())
}

/// Parse `argv`, run, write the output and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve(&cli).and_then(|cfg| {
        if let Some(k) = cli.threads {
            if k == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            // only the first call in a process can size the global pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
        let done = commands::execute(&cfg)?;
        write_output(cli.out.as_deref(), &done.output)?;
        Ok(done.exit)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fraclab: {e}");
            e.code()
        }
    }
}
