//! `fqco`: verify, run, sweep and inspect constrained feedback optimization problems.

mod input;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fqco::operators::{verify_ground_state_encoding, ConstraintOperator, OperatorReport};
use fqco::oracle::OracleReport;
use fqco::{ControlArgument, ControllerKind, ControllerSpec, Mode, RunConfig};
use serde::Serialize;

use crate::input::LoadedProblem;

#[derive(Parser)]
#[command(name = "fqco", version, about = "Feedback-based quantum optimization with constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the constraint operator and check that its ground state is the constrained optimum.
    Verify {
        problem: PathBuf,
        /// Penalty shift per equality constraint (one value is broadcast).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        gamma: Option<Vec<f64>>,
    },
    /// Run the layered feedback loop and write trace files.
    Run {
        problem: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Prefix for the output file names.
        #[arg(long, default_value = "run")]
        name: String,
        /// Write the final state as a binary dump.
        #[arg(long)]
        dump_state: Option<PathBuf>,
        /// Also write a gnuplot script for the trace.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run the Cartesian product of a manifest's axes.
    Sweep {
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the manifest's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print brute-force ground truth for a problem.
    Oracle {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        gamma: Option<Vec<f64>>,
    },
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long, default_value = "falqon-c")]
    mode: Mode,
    #[arg(long, default_value = "standard")]
    controller: ControllerKind,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    #[arg(long = "K1", default_value_t = 1.0)]
    k1: f64,
    #[arg(long = "K2", default_value_t = 1.0)]
    k2: f64,
    #[arg(long, default_value_t = 0.9)]
    c1: f64,
    #[arg(long, default_value_t = 0.02)]
    dt: f64,
    #[arg(long, default_value_t = 200)]
    depth: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Option<Vec<f64>>,
    /// Initial controls, one per mixer or a single value for all.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0")]
    zeta_init: Vec<f64>,
    #[arg(long)]
    monitor_dt_bound: bool,
    /// `raw` feeds the commutator expectation to the controller, `dt-scaled` multiplies it by dt first.
    #[arg(long, default_value = "raw")]
    control_arg: ControlArgument,
}

impl RunFlags {
    fn controller_spec(&self) -> ControllerSpec {
        ControllerSpec {
            kind: self.controller,
            k: self.k,
            k1: self.k1,
            k2: self.k2,
            c1: self.c1,
        }
    }
}

/// Failure with its exit code: 1 for domain failures, 2 for bad input.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: error.into() }
    }

    pub fn domain(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { problem, gamma } => cmd_verify(&problem, gamma),
        Command::Run {
            problem,
            flags,
            out_dir,
            name,
            dump_state,
            gnuplot,
        } => cmd_run(&problem, &flags, &out_dir, &name, dump_state.as_deref(), gnuplot),
        Command::Sweep { manifest, jobs, out_dir } => sweep::cmd_sweep(&manifest, jobs, out_dir.as_deref()),
        Command::Oracle { problem, gamma } => cmd_oracle(&problem, gamma),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    n: usize,
    canonical_n: usize,
    gamma_source: &'a str,
    operator: OperatorReport,
    oracle: Option<OracleReport>,
}

fn cmd_verify(path: &std::path::Path, gamma: Option<Vec<f64>>) -> CliResult<u8> {
    let loaded = input::load_problem(path)?;
    let (gammas, source) = loaded.gammas(gamma.as_deref())?;
    let op = ConstraintOperator::assemble(&loaded.canonical, &gammas).map_err(Failure::input)?;
    let oracle = if loaded.canonical.n <= fqco::oracle::MAX_BRUTE_FORCE_VARS {
        Some(OracleReport::new(&loaded.canonical, &op).map_err(Failure::domain)?)
    } else {
        None
    };
    let encoding = verify_ground_state_encoding(&op, &loaded.canonical).map_err(Failure::domain)?;
    let report = VerifyReport {
        n: loaded.original.n,
        canonical_n: loaded.canonical.n,
        gamma_source: source,
        operator: OperatorReport::new(&op),
        oracle,
    };
    print_json(&report)?;
    Ok(if encoding.ok { 0 } else { 1 })
}

fn cmd_oracle(path: &std::path::Path, gamma: Option<Vec<f64>>) -> CliResult<u8> {
    let loaded = input::load_problem(path)?;
    let (gammas, _) = loaded.gammas(gamma.as_deref())?;
    let op = ConstraintOperator::assemble(&loaded.canonical, &gammas).map_err(Failure::input)?;
    let report = OracleReport::new(&loaded.canonical, &op).map_err(Failure::domain)?;
    print_json(&report)?;
    Ok(0)
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).map_err(Failure::domain)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::domain(e)),
        _ => Ok(()),
    }
}

/// Builds and validates a run configuration; problems here are input errors.
pub fn build_config(loaded: &LoadedProblem, flags: &RunSettings) -> CliResult<(RunConfig, &'static str)> {
    let (gammas, source) = loaded.gammas(flags.gamma.as_deref())?;
    let mut config = RunConfig::new(flags.mode, flags.controller, gammas);
    config.depth = flags.depth;
    config.dt = flags.dt;
    config.zeta_init = flags.zeta_init.clone();
    config.monitor_dt_bound = flags.monitor_dt_bound;
    config.control_argument = flags.control_arg;
    config.qubit_cap = input::qubit_cap()?;
    config.validate().map_err(Failure::input)?;
    if config.gammas.iter().any(|&g| g == 0.0) {
        return Err(Failure::input(anyhow::anyhow!("runs need a positive gamma for every constraint")));
    }
    if config.zeta_init.is_empty() {
        return Err(Failure::input(anyhow::anyhow!("--zeta-init needs at least one value")));
    }
    Ok((config, source))
}

/// Run parameters shared by `run` and sweep manifests.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub mode: Mode,
    pub controller: ControllerSpec,
    pub dt: f64,
    pub depth: usize,
    pub gamma: Option<Vec<f64>>,
    pub zeta_init: Vec<f64>,
    pub monitor_dt_bound: bool,
    pub control_arg: ControlArgument,
}

impl From<&RunFlags> for RunSettings {
    fn from(f: &RunFlags) -> Self {
        Self {
            mode: f.mode,
            controller: f.controller_spec(),
            dt: f.dt,
            depth: f.depth,
            gamma: f.gamma.clone(),
            zeta_init: f.zeta_init.clone(),
            monitor_dt_bound: f.monitor_dt_bound,
            control_arg: f.control_arg,
        }
    }
}

fn cmd_run(
    path: &std::path::Path,
    flags: &RunFlags,
    out_dir: &std::path::Path,
    name: &str,
    dump_state: Option<&std::path::Path>,
    gnuplot: bool,
) -> CliResult<u8> {
    let loaded = input::load_problem(path)?;
    let (config, source) = build_config(&loaded, &RunSettings::from(flags))?;
    let trace = fqco::run(&loaded.canonical, &config).map_err(Failure::domain)?;
    let files = output::write_run(out_dir, name, path, &loaded, &trace, source).map_err(Failure::domain)?;
    if let Some(dump) = dump_state {
        output::write_dump(dump, &trace).map_err(Failure::domain)?;
    }
    if gnuplot {
        output::write_gnuplot(out_dir, name, &files.trace, trace.controller_count()).map_err(Failure::domain)?;
    }
    let last = trace.last();
    println!(
        "k={} V={} r_a={} P_s={}",
        last.k, last.lyapunov, last.approx_ratio, last.success_prob
    );
    Ok(0)
}
