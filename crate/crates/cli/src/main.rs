//! `orfgp`: moment matrices, orthogonal rational functions, process
//! simulation and prediction from a JSON run configuration.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orfgp_core::config::{ComplexValue, OutputFormat, Sampler};
use orfgp_core::{Error, PredictionKind, Result, RunConfig, SystemId};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "orfgp",
    version,
    about = "Orthogonal rational functions and varying Gaussian processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Gram matrix, positivity and Pick solvability.
    Moments,
    /// Orthonormal family coefficients and norms.
    Orf,
    /// Sample paths and compare empirical with analytic covariance.
    Simulate,
    /// Forward, backward or mixed one-step prediction.
    Predict,
    /// Causal filter expansion and the filtered covariance.
    Varma,
    /// Energy trajectory against its limit.
    Asymptote,
}

#[derive(Args)]
struct Overrides {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Order: basis indices 0..=n.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Random seed for sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sample paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Quadrature grid size, a power of two.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output file; stdout when omitted. For `simulate`, the paths file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json, csv or binary (paths only).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// forward, backward, mixed_sym, mixed_plus or mixed_minus.
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Index of the predicted value.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// JSON list of complex moments.
    #[arg(long, global = true)]
    moments: Option<PathBuf>,
    /// Limit point as `re` or `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// w1, w2, w2p or w3.
    #[arg(long, global = true)]
    system: Option<String>,
    /// direct, spectral or both.
    #[arg(long, global = true)]
    sampler: Option<String>,
    /// Angular bins of the spectral sampler.
    #[arg(long, global = true)]
    bins: Option<usize>,
}

fn parse_alpha(s: &str) -> Result<ComplexValue> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|e| Error::config("alpha", format!("`{p}`: {e}")))
    };
    match parts.as_slice() {
        [re] => Ok(ComplexValue::Real(num(re)?)),
        [re, im] => Ok(ComplexValue::Pair([num(re)?, num(im)?])),
        _ => Err(Error::config("alpha", format!("expected `re` or `re,im`, got `{s}`"))),
    }
}

fn load(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if o.n.is_some() {
        cfg.n = o.n;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(p) = o.paths {
        cfg.paths = p;
    }
    if o.grid.is_some() {
        cfg.grid_size = o.grid;
    }
    if let Some(p) = &o.out {
        cfg.output.path = Some(p.display().to_string());
    }
    if let Some(f) = &o.format {
        cfg.output.format = f.parse::<OutputFormat>()?;
    }
    if let Some(k) = &o.kind {
        cfg.kind = Some(k.parse::<PredictionKind>()?);
    }
    if o.horizon.is_some() {
        cfg.horizon = o.horizon;
    }
    if let Some(a) = &o.alpha {
        cfg.alpha = Some(parse_alpha(a)?);
    }
    if let Some(s) = &o.system {
        cfg.system = s.parse::<SystemId>()?;
    }
    if let Some(s) = &o.sampler {
        cfg.sampler = s.parse::<Sampler>()?;
    }
    if let Some(b) = o.bins {
        cfg.bins = b;
    }
    if cfg.n.is_none() && cfg.points.is_none() && cfg.moments.is_none() && o.moments.is_none() {
        return Err(Error::config("n", "give `n` or `points` (config or --n)"));
    }
    Ok(cfg)
}

fn run(command: Command, o: &Overrides) -> Result<()> {
    if let Some(t) = o.threads {
        if t == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::config("threads", e.to_string()))?;
    }
    let cfg = load(o)?;
    let out = cfg.output.path.as_deref().map(Path::new);
    let report = match command {
        Command::Moments => commands::moments(&cfg, o.moments.as_deref())?,
        Command::Orf => commands::orf(&cfg)?,
        Command::Predict => commands::predict(&cfg)?,
        Command::Varma => commands::varma(&cfg)?,
        Command::Asymptote => commands::asymptote(&cfg)?,
        Command::Simulate => {
            let (report, paths) = commands::simulate(&cfg)?;
            if let Some(p) = paths {
                output::emit(&p.body, out)?;
            }
            return output::emit(&report.body, None);
        }
    };
    output::emit(&report.body, out)
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: u8,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let body = ErrorReport {
        error: ErrorBody {
            kind,
            message,
            exit_code: code,
        },
    };
    eprintln!("{}", serde_json::to_string(&body).expect("error report serializes"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    match run(cli.command, &cli.overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), if e.is_validation() { 2 } else { 3 }),
    }
}
