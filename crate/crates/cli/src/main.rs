mod commands;
mod record;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use v2rdm::sdp::SolverOptions;
use v2rdm::vrdm::{RankRestriction, VrdmConfig};

use crate::commands::Failure;
use crate::record::OutputFormat;
use crate::spec::InputSource;

#[derive(Parser, Debug)]
#[command(name = "v2rdm", version, about = "Variational 2-RDM energies under rank-restricted 2-positivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the energy over 2-RDMs satisfying the D, Q and G conditions.
    Solve(SolveArgs),
    /// Exact ground-state energy by full configuration interaction.
    Fci(FciArgs),
    /// Rank formulas for the particle-hole matrix, optionally measured.
    Ranks(RanksArgs),
    /// Solve a sequence of points and report the non-parallelity error.
    Curve(CurveArgs),
    /// Re-run the solves recorded in a JSON or CSV output and compare energies.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Hubbard,
    Pairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RankMode {
    Full,
    Theoretical,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Hubbard sites.
    #[arg(long)]
    sites: Option<usize>,
    /// Hubbard hopping.
    #[arg(long = "t", default_value_t = 1.0)]
    hopping: f64,
    /// Hubbard on-site repulsion.
    #[arg(long = "u")]
    repulsion: Option<f64>,
    /// Close the Hubbard chain into a ring.
    #[arg(long)]
    periodic: bool,
    /// Pairing level energies, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    levels: Vec<f64>,
    /// Pairing coupling.
    #[arg(long = "g", allow_negative_numbers = true)]
    coupling: Option<f64>,
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// Integral file in FCIDUMP format.
    #[arg(long, group = "source")]
    fcidump: Option<PathBuf>,
    /// Built-in model Hamiltonian.
    #[arg(long, group = "source")]
    model: Option<Model>,
}

#[derive(Args, Debug, Clone)]
struct SystemArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Electron count; defaults to the FCIDUMP header or the model default.
    #[arg(long)]
    nelec: Option<usize>,
    /// Doubly occupied core orbitals to freeze.
    #[arg(long, default_value_t = 0)]
    frozen: usize,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Block D and G by spin (singlet states, even electron count).
    #[arg(long)]
    spin_adapted: bool,
    /// Rank restriction on the G(0,0) block.
    #[arg(long, value_enum, default_value_t = RankMode::Full)]
    rank: RankMode,
    /// Explicit column cap on a named block, e.g. `G=4` or `G00=10`. Repeatable.
    #[arg(long = "cap", value_name = "BLOCK=K")]
    caps: Vec<String>,
    #[arg(long)]
    feas_tol: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    mu_init: Option<f64>,
    #[arg(long)]
    mu_growth: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    /// Seed for the initial factors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also run FCI on the active space and report the error and percent correlation.
    #[arg(long)]
    fci: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write the record here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Per-outer-iteration solver history as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Write the extracted D matrix.
    #[arg(long)]
    dump_d: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FciArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write the exact D matrix.
    #[arg(long)]
    dump_d: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RanksArgs {
    /// Spatial orbitals.
    #[arg(long)]
    rs: usize,
    #[arg(long)]
    nelec: usize,
    /// Build HF and AGP states and measure their ranks.
    #[arg(long)]
    numeric: bool,
    /// Seed for the AGP geminal coefficients.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// One FCIDUMP per point. Repeatable.
    #[arg(long = "fcidump", conflicts_with = "model")]
    fcidumps: Vec<PathBuf>,
    #[arg(long, required_unless_present = "fcidumps")]
    model: Option<Model>,
    #[command(flatten)]
    model_args: ModelArgs,
    /// Hubbard repulsions, one point each.
    #[arg(long, value_delimiter = ',')]
    u_values: Vec<f64>,
    /// Pairing couplings, one point each.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    g_values: Vec<f64>,
    /// Point labels, in order; defaults to the file stem or parameter value.
    #[arg(long = "label")]
    labels: Vec<String>,
    #[arg(long)]
    nelec: Option<usize>,
    #[arg(long, default_value_t = 0)]
    frozen: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Skip the FCI reference (no error column, no non-parallelity error).
    #[arg(long)]
    no_fci: bool,
    /// Points solved concurrently.
    #[arg(long, env = "V2RDM_THREADS", default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// JSON or CSV record written by `solve` or `curve`.
    record: PathBuf,
    /// Allowed energy difference.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

impl ModelArgs {
    fn source(&self, model: Model) -> Result<InputSource, Failure> {
        match model {
            Model::Hubbard => {
                let sites = self
                    .sites
                    .ok_or_else(|| Failure::input_msg("--model hubbard needs --sites"))?;
                let u = self.repulsion.ok_or_else(|| Failure::input_msg("--model hubbard needs --u"))?;
                Ok(InputSource::Hubbard {
                    sites,
                    t: self.hopping,
                    u,
                    periodic: self.periodic,
                })
            }
            Model::Pairing => {
                if self.levels.is_empty() {
                    return Err(Failure::input_msg("--model pairing needs --levels"));
                }
                let g = self.coupling.ok_or_else(|| Failure::input_msg("--model pairing needs --g"))?;
                Ok(InputSource::Pairing {
                    levels: self.levels.clone(),
                    g,
                })
            }
        }
    }
}

impl SystemArgs {
    fn input_source(&self) -> Result<InputSource, Failure> {
        match (&self.source.fcidump, self.source.model) {
            (Some(path), None) => Ok(InputSource::Fcidump { path: path.clone() }),
            (None, Some(model)) => self.model.source(model),
            _ => Err(Failure::input_msg("give exactly one of --fcidump or --model")),
        }
    }
}

impl SolverArgs {
    fn config(&self, n_frozen: usize) -> Result<VrdmConfig, Failure> {
        let mut solver = SolverOptions {
            seed: self.seed,
            ..Default::default()
        };
        if let Some(v) = self.feas_tol {
            solver.feas_tol = v;
        }
        if let Some(v) = self.grad_tol {
            solver.grad_tol = v;
        }
        if let Some(v) = self.mu_init {
            solver.mu_init = v;
        }
        if let Some(v) = self.mu_growth {
            solver.mu_growth = v;
        }
        if let Some(v) = self.max_outer {
            solver.max_outer = v;
        }
        if let Some(v) = self.max_inner {
            solver.max_inner = v;
        }
        let rank = if self.caps.is_empty() {
            match self.rank {
                RankMode::Full => RankRestriction::None,
                RankMode::Theoretical => RankRestriction::Theoretical,
            }
        } else {
            if self.rank == RankMode::Theoretical {
                return Err(Failure::input_msg("--cap cannot be combined with --rank theoretical"));
            }
            let mut caps = Vec::new();
            for c in &self.caps {
                let (name, k) = c
                    .split_once('=')
                    .ok_or_else(|| Failure::input_msg(format!("--cap expects BLOCK=K, got '{c}'")))?;
                let k: usize = k
                    .trim()
                    .parse()
                    .map_err(|_| Failure::input_msg(format!("--cap {c}: '{k}' is not a column count")))?;
                caps.push((name.trim().to_string(), k));
            }
            RankRestriction::Explicit(caps)
        };
        Ok(VrdmConfig {
            spin_adapted: self.spin_adapted,
            rank,
            solver,
            n_frozen,
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Fci(a) => commands::fci(a),
        Command::Ranks(a) => commands::ranks(a),
        Command::Curve(a) => commands::curve(a),
        Command::Verify(a) => commands::verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.is_broken_pipe() => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
