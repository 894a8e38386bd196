//! `qsat`: generate instances, strip cores, count coverings, run the cavity
//! method, diagonalize, and assemble the entropy ledger.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "qsat", version, about = "Random quantum satisfiability toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Master seed; every random draw derives from it through named streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// `key = value` file supplying defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample Erdős–Rényi instances with projectors.
    Gen(GenArgs),
    /// Analytic and sampled core statistics; cores of instance files.
    Core(CoreArgs),
    /// Exact dimer-covering counts on cores.
    Dimers(DimersArgs),
    /// Cavity method: regular closed form or population dynamics.
    Cavity(CavityArgs),
    /// Ground energy, verdict and kernel dimension of instance files.
    Diag(DiagArgs),
    /// Barely overconstrained core experiment.
    Experiment(ExperimentArgs),
    /// Entropy ledger at the given densities.
    Ledger(LedgerArgs),
    /// Summarize the manifests in the output directory.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModeArg {
    Generic,
    Product,
    None,
}

#[derive(Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("density").required(true).args(["alpha", "m"]))]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Clause density; M = round(αN).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Generic)]
    pub mode: ModeArg,
    /// Number of instances, at streams 0..count.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CoreArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.917")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Also strip sampled graphs of this size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Instance files whose cores are extracted.
    #[arg(long, value_delimiter = ',')]
    pub input: Vec<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoreSampling {
    /// Cores to sample when no input files are given.
    #[arg(long, default_value_t = 200)]
    pub cores: usize,
    #[arg(long, default_value_t = 6)]
    pub nc_min: usize,
    #[arg(long, default_value_t = 30)]
    pub nc_max: usize,
    /// Accept cores with M_c = N_c + excess.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub excess: i64,
    /// Parent-graph density and size range.
    #[arg(long = "parent-alpha", default_value_t = 0.917)]
    pub parent_alpha: f64,
    #[arg(long, default_value_t = 15)]
    pub n_min: usize,
    #[arg(long, default_value_t = 49)]
    pub n_max: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_attempts: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct DimersArgs {
    #[arg(long, value_delimiter = ',')]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub sampling: CoreSampling,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Write up to this many coverings per instance as JSON.
    #[arg(long, default_value_t = 0)]
    pub list: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CavityArgs {
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Closed-form regular graph with qubit degree d (β = d/k).
    #[arg(long)]
    pub regular: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub pop_size: usize,
    #[arg(long, default_value_t = 4000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0.75)]
    pub burn_in: f64,
    /// Full (β, λ) grid: β from 0.7 to 1.4 in steps of 0.1.
    #[arg(long)]
    pub figure5: bool,
    /// Exact enumeration vs single-instance BP on sampled cores.
    #[arg(long, conflicts_with_all = ["figure5", "regular"])]
    pub figure6: bool,
    /// Fugacity of the single-instance BP runs.
    #[arg(long, default_value_t = 1000.0)]
    pub bp_lambda: f64,
    #[command(flatten)]
    pub sampling: CoreSampling,
}

#[derive(Args, Debug, Serialize)]
pub struct DiagArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub input: Vec<PathBuf>,
    /// Diagonalize the core instead of the whole graph.
    #[arg(long)]
    pub core: bool,
    /// Also count near-zero eigenvalues.
    #[arg(long)]
    pub kernel: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_sat: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_unsat: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,10,12,14")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub n_max_factor: f64,
    #[arg(long, default_value_t = 5_000_000)]
    pub max_attempts: u64,
    #[arg(long)]
    pub eps_sat: Option<f64>,
    #[arg(long)]
    pub eps_unsat: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProvenanceArg {
    Pauling,
    Cavity,
    Exact,
}

#[derive(Args, Debug, Serialize)]
pub struct LedgerArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.917")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Core entropy per core qubit; the Pauling estimate when absent.
    #[arg(long)]
    pub s_core: Option<f64>,
    #[arg(long, value_enum, default_value_t = ProvenanceArg::Cavity)]
    pub provenance: ProvenanceArg,
    /// Report entropies in bits.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {}

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;

fn parse_cli() -> Result<Cli, ExitCode> {
    let argv: Vec<String> = std::env::args().collect();
    let usage = |e: clap::Error| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        let _ = e.print();
        ExitCode::from(code)
    };
    let cmd = Cli::command();
    let extra = match config::config_path(&argv) {
        None => Vec::new(),
        Some(path) => match config::read(&path).and_then(|e| config::extra_args(&cmd, &argv, &e)) {
            Ok(x) => x,
            Err(e) => {
                eprintln!("error: {e:#}");
                return Err(ExitCode::from(EXIT_USAGE));
            }
        },
    };
    let matches = cmd.try_get_matches_from(argv.into_iter().chain(extra)).map_err(usage)?;
    Cli::from_arg_matches(&matches).map_err(usage)
}

fn main() -> ExitCode {
    let cli = match parse_cli() {
        Ok(c) => c,
        Err(code) => return code,
    };
    if cli.common.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.common.jobs).build_global();
    }
    match commands::run(&cli) {
        Ok(0) => ExitCode::from(EXIT_OK),
        Ok(failed) => {
            eprintln!("{failed} row(s) failed or changed");
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e) => {
            let code = if e.downcast_ref::<commands::UsageError>().is_some() { EXIT_USAGE } else { EXIT_RUNTIME };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
