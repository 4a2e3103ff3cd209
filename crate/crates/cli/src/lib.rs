//! Command-line front end: reproduction tables, line profiles, Legendre–Hadamard
//! scans, scalar checks and violation searches.
//!
//! [`run`] parses a command line and returns the exit code with everything
//! that would be printed, so tests can drive the binary in-process.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

pub mod commands;
pub mod error;
pub mod manifest;
pub mod reproduce;
pub mod spec;

use error::{CliError, CliResult};
use manifest::{replayable_args, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "elliptika", version, about = "Rank-one convexity laboratory", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream.
    #[arg(long, global = true, env = "ELLIPTIKA_SEED", default_value_t = 7)]
    pub seed: u64,
    /// Print JSON with an embedded run manifest.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Print CSV.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Override the command's default tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write the output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModuliArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 0.125, allow_negative_numbers = true)]
    pub khat: f64,
}

impl ModuliArgs {
    pub fn moduli(&self) -> spec::Moduli {
        spec::Moduli { mu: self.mu, kappa: self.kappa, k: self.k, khat: self.khat }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Expected versus computed derivatives for a fixture line.
    Reproduce {
        /// svk, log2d, devlog3d or voliso3d
        case: String,
        /// Angle of ξ for voliso3d.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Samples `h(t) = W(F + tξ⊗η)` on a grid.
    Profile {
        /// A fixture case; alternatively use --probe.
        case: Option<String>,
        /// JSON file with `f`, `xi` and `eta`.
        #[arg(long, conflicts_with = "case")]
        probe: Option<PathBuf>,
        /// Energy evaluated along the line (defaults to the case's measure).
        #[arg(long)]
        energy: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        t_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[command(flatten)]
        moduli: ModuliArgs,
    },
    /// Legendre–Hadamard scan of an energy at one or many deformations.
    Scan {
        energy: String,
        /// `id`, `diag:a,b,c` or rows `a,b;c,d`; `eN` means e^N.
        #[arg(long = "F", short = 'F', default_value = "id")]
        f: String,
        /// Scan this many random deformations near the identity instead.
        #[arg(long = "random-F", conflicts_with = "f")]
        random_f: Option<usize>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 2000)]
        directions: usize,
        /// Skip critical directions and coordinate descent.
        #[arg(long)]
        no_refine: bool,
        #[command(flatten)]
        moduli: ModuliArgs,
    },
    /// Scalar inequality checks on a profile Ψ or an energy.
    Check {
        #[arg(value_enum)]
        check: CheckId,
        /// A profile spec, or an energy spec for `be`.
        subject: String,
        /// `lo:hi:n` or `log:lo:hi:n`.
        #[arg(long)]
        grid: Option<String>,
        /// Samples per axis for `be`.
        #[arg(long, default_value_t = 6)]
        samples: usize,
        /// Also run the ordering form of `be`.
        #[arg(long)]
        ordering: bool,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        moduli: ModuliArgs,
    },
    /// Penalized search for a concave critical point.
    Search {
        energy: String,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        /// Only accept probes with h''(0) at or below this value.
        #[arg(long, allow_negative_numbers = true)]
        target: Option<f64>,
        /// Box for the logarithms of the diagonal of F.
        #[arg(long)]
        log_bound: Option<f64>,
        #[command(flatten)]
        moduli: ModuliArgs,
    },
    /// Re-runs a stored manifest and compares verdict and values bit for bit.
    Replay { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckId {
    Criterion2d,
    Sw,
    Be,
    Conv1d,
    Mono,
}

/// What a command produced, before formatting.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub verdict: String,
    /// Reported numbers; replay compares these.
    pub values: BTreeMap<String, f64>,
    /// JSON object; the manifest is added under `manifest`.
    pub body: Value,
    pub text: String,
    pub csv: String,
    pub code: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, S>(args: I) -> Invocation
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("elliptika".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            return if code == 0 {
                Invocation { code, stdout: rendered, stderr: String::new() }
            } else {
                Invocation { code, stdout: String::new(), stderr: rendered }
            };
        }
    };
    match execute(&cli, &args) {
        Ok(inv) => inv,
        Err(e) => Invocation { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn execute(cli: &Cli, args: &[String]) -> CliResult<Invocation> {
    let outcome = commands::dispatch(cli)?;
    let manifest = RunManifest {
        command: outcome.command.to_string(),
        args: replayable_args(args),
        parameters: outcome.parameters.clone(),
        seed: cli.global.seed,
        tolerances: outcome.tolerances.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: RunManifest::now(),
        verdict: outcome.verdict.clone(),
        values: outcome.values.clone(),
    };
    let rendered = if cli.global.json {
        let mut body = outcome.body.clone();
        if let Value::Object(map) = &mut body {
            map.insert("manifest".into(), serde_json::to_value(&manifest)?);
        }
        let mut s = serde_json::to_string_pretty(&body)?;
        s.push('\n');
        s
    } else if cli.global.csv {
        outcome.csv.clone()
    } else {
        outcome.text.clone()
    };
    let stdout = match &cli.global.out {
        Some(path) => {
            std::fs::write(path, &rendered)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            String::new()
        }
        None => rendered,
    };
    Ok(Invocation { code: outcome.code, stdout, stderr: String::new() })
}
