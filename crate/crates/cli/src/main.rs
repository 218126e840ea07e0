//! `conflow`: stationary states, bifurcation scans, Hessian spectra and
//! time evolution of the truncated conformal flow.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "conflow", version, about = "Stationary states and spectra of the conformal flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Galerkin truncation.
    #[arg(long = "N", global = true, default_value_t = 64)]
    pub n: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub newton_tol: f64,
    /// Relative zero threshold for eigenvalue counts.
    #[arg(long, global = true, default_value_t = conflow_core::spectral::ZERO_REL_TOL)]
    pub zero_tol: f64,
    #[arg(long, global = true, default_value_t = conflow_core::families::TAIL_TOL)]
    pub tail_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Lowest,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ground,
    Twisted,
    #[value(name = "pair+")]
    PairPlus,
    #[value(name = "pair-")]
    PairMinus,
    Blaschke,
    Alternating,
    /// Random complex data with `Q = 1` (evolve only).
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    I,
    Ii,
    Iii,
    Unique,
    #[value(name = "pair+")]
    PairPlus,
    #[value(name = "pair-")]
    PairMinus,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Residual suite over the closed-form families.
    Verify {
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Zero crossings of the linearization at a base mode.
    Scan {
        #[arg(long, value_enum, default_value_t = Mode::Lowest)]
        mode: Mode,
        /// `lo:hi`.
        #[arg(long, default_value = "0:0.2", allow_hyphen_values = true)]
        range: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Small eigenvalues, inertia and constrained index along a branch.
    Spectrum {
        #[arg(long, value_enum, default_value_t = Mode::Lowest)]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_enum)]
        branch: BranchArg,
        /// `start:end:count`, inclusive; the branch parameter or `p` for pairs.
        #[arg(long, allow_hyphen_values = true)]
        sweep: String,
    },
    /// Continue a bifurcating branch from its bifurcation point.
    Continue {
        #[arg(long, value_enum, default_value_t = Mode::Lowest)]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_enum)]
        branch: BranchArg,
        /// Final pinned amplitude on branches other than (i).
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<f64>,
        /// Final pinned amplitude on branch (i).
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Integrate the flow from a family member and audit conserved quantities.
    Evolve {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long = "T", default_value_t = 10.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 100)]
        stride: usize,
    },
    /// Perturb a stationary state and track its distance to the orbit.
    Probe {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 1e-3)]
        noise: f64,
        #[arg(long = "T", default_value_t = 100.0)]
        t: f64,
        #[arg(long, default_value_t = 5e-3)]
        dt: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Scan { .. } => "scan",
            Command::Spectrum { .. } => "spectrum",
            Command::Continue { .. } => "continue",
            Command::Evolve { .. } => "evolve",
            Command::Probe { .. } => "probe",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let cfg = RunConfig {
        command: cli.command.name().to_string(),
        truncation: c.n,
        newton_tol: c.newton_tol,
        zero_tol: c.zero_tol,
        tail_tol: c.tail_tol,
        output_path: c.out.clone(),
        format: c.format,
        seed: c.seed,
    };
    if c.n < 8 || !(c.newton_tol > 0.0 && c.zero_tol > 0.0 && c.tail_tol > 0.0) {
        eprintln!("error: need N >= 8 and positive tolerances");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Verify { family, p } => commands::verify(&cfg, family, p),
        Command::Scan { mode, range, step } => commands::scan(&cfg, mode, &range, step),
        Command::Spectrum { mode, m, branch, sweep } => commands::spectrum(&cfg, mode, m, branch, &sweep),
        Command::Continue { mode, m, branch, eps, mu, steps } => {
            commands::continuation(&cfg, mode, m, branch, eps, mu, steps)
        }
        Command::Evolve { family, p, t, dt, stride } => commands::evolve(&cfg, family, p, t, dt, stride),
        Command::Probe { family, p, noise, t, dt } => commands::probe(&cfg, family, p, noise, t, dt),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
