//! `ueglab`: batch driver for indirect-energy and uniform gas experiments.

mod commands;
mod config;
mod density;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, BUDGET_ENV};
use error::{CliError, EXIT_USAGE};

const FORMATS: &str = "\
Artifacts (written to --out):
  *.json  {version, config, status, result}
  *.csv   '#' comment lines with version and config, then a header row
  Series CSV columns: volume,N,value,bound_kind,error_estimate
  LDA CSV columns: N,value,target,deviation,error_estimate
  Coupling CSV: one row per support configuration, sites then probability
  GS kernel CSV: r,h,h_std_error; transform CSV: k,w_hat,std_error
  *.config  the resolved settings, replayable with --config
  --plot-data adds <name>.plot.csv files with two columns.

Exit codes: 0 ok, 2 constraint violation, 3 budget exhausted (partial
results written), 64 usage error. UEGLAB_BUDGET overrides the budget from
the config file; an explicit --budget wins over both.";

#[derive(Parser, Debug)]
#[command(name = "ueglab", version, about = "Indirect energies, optimal transport and uniform electron gas bounds", after_help = FORMATS)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "ueglab-out")]
    out: PathBuf,
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest configuration space for exact solves.
    #[arg(long, global = true)]
    budget: Option<u128>,
    /// Also write x/y columns for plotting.
    #[arg(long, global = true)]
    plot_data: bool,
}

#[derive(Args, Debug, Default)]
struct Problem {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Density, e.g. uniform:0,2 or cube:1 (see the density kinds in README).
    #[arg(long)]
    density: Option<String>,
    /// Cells for one-dimensional densities.
    #[arg(long)]
    cells: Option<usize>,
    /// Cell side for shapes, files and explicit masses.
    #[arg(long)]
    h: Option<f64>,
}

impl Problem {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("s", self.s.map(|x| x.to_string())),
            ("d", self.d.map(|x| x.to_string())),
            ("density", self.density.clone()),
            ("cells", self.cells.map(|x| x.to_string())),
            ("h", self.h.map(|x| x.to_string())),
        ]
    }
}

#[derive(Args, Debug, Default)]
struct Solver {
    /// exact_lp, entropic or trial_only.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Number of temperature halvings.
    #[arg(long)]
    levels: Option<usize>,
}

impl Solver {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("method", self.method.clone()),
            ("epsilon0", self.epsilon0.map(|x| x.to_string())),
            ("eps_levels", self.levels.map(|x| x.to_string())),
        ]
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bounds on E(ρ) for a canonical N-particle problem.
    IndirectEnergy {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        solver: Solver,
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Exact one-dimensional solution through the increasing map (0 < s < 1).
    Monge1d {
        #[command(flatten)]
        problem: Problem,
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Grand-canonical indirect energy for any mass.
    GcEnergy {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        mass: Option<f64>,
        /// Largest particle number in the mixture.
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Per-volume energies of growing cubes and the uniform gas bracket.
    ThermoCubes {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        levels: Option<u32>,
        #[arg(long)]
        max_particles: Option<usize>,
        /// Lattice-sum cutoff for the floating crystal (d = 3).
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Dilated densities against the local density approximation.
    LdaLimit {
        /// exact_1d or bounds_3d.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        /// Comma-separated particle numbers.
        #[arg(long = "N-list")]
        n_list: Option<String>,
        /// Step density (exact_1d) or plateaus:VALUE:SIDE,... (bounds_3d).
        #[arg(long)]
        density: Option<String>,
        /// Per-volume uniform energy in the target; computed when absent.
        #[arg(long)]
        e_uniform: Option<f64>,
    },
    /// Floating-crystal upper bound on the Coulomb uniform gas.
    FloatingCrystal {
        #[arg(long)]
        rho0: Option<f64>,
        /// Comma-separated lattice-sum cutoffs.
        #[arg(long)]
        cutoffs: Option<String>,
    },
    /// Monte Carlo Graf–Schenker kernel and its transform positivity check.
    GsKernel {
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        radial_points: Option<usize>,
    },
    /// Lieb–Oxford ratio -E/∫ρ^{1+s/d}.
    LoRatio {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        solver: Solver,
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Quasi-free quantum bounds and the Thomas–Fermi/Dirac constants.
    QuantumBounds {
        /// Spin states.
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        hbar2: Option<f64>,
        /// box (smoothed cube) or grid (3D density).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        side: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        mass: Option<f64>,
    },
}

impl Command {
    fn name_and_flags(&self) -> (&'static str, Vec<(&'static str, Option<String>)>) {
        let n_pair = |n: &Option<usize>| ("N", n.map(|x| x.to_string()));
        match self {
            Command::IndirectEnergy { problem, solver, n } => {
                ("indirect-energy", [problem.pairs(), solver.pairs(), vec![n_pair(n)]].concat())
            }
            Command::Monge1d { problem, n } => ("monge1d", [problem.pairs(), vec![n_pair(n)]].concat()),
            Command::GcEnergy { problem, mass, max_n } => (
                "gc-energy",
                [
                    problem.pairs(),
                    vec![("mass", mass.map(|x| x.to_string())), ("max_n", max_n.map(|x| x.to_string()))],
                ]
                .concat(),
            ),
            Command::ThermoCubes { d, s, levels, max_particles, cutoff } => (
                "thermo-cubes",
                vec![
                    ("d", d.map(|x| x.to_string())),
                    ("s", s.map(|x| x.to_string())),
                    ("levels", levels.map(|x| x.to_string())),
                    ("max_particles", max_particles.map(|x| x.to_string())),
                    ("cutoff", cutoff.map(|x| x.to_string())),
                ],
            ),
            Command::LdaLimit { mode, s, n_list, density, e_uniform } => (
                "lda-limit",
                vec![
                    ("mode", mode.clone()),
                    ("s", s.map(|x| x.to_string())),
                    ("N_list", n_list.clone()),
                    ("density", density.clone()),
                    ("e_uniform", e_uniform.map(|x| x.to_string())),
                ],
            ),
            Command::FloatingCrystal { rho0, cutoffs } => (
                "floating-crystal",
                vec![("rho0", rho0.map(|x| x.to_string())), ("cutoffs", cutoffs.clone())],
            ),
            Command::GsKernel { ell, samples, radial_points } => (
                "gs-kernel",
                vec![
                    ("ell", ell.map(|x| x.to_string())),
                    ("samples", samples.map(|x| x.to_string())),
                    ("radial_points", radial_points.map(|x| x.to_string())),
                ],
            ),
            Command::LoRatio { problem, solver, n } => {
                ("lo-ratio", [problem.pairs(), solver.pairs(), vec![n_pair(n)]].concat())
            }
            Command::QuantumBounds { q, hbar2, mode, side, width, problem, mass } => (
                "quantum-bounds",
                [
                    vec![
                        ("q", q.map(|x| x.to_string())),
                        ("hbar2", hbar2.map(|x| x.to_string())),
                        ("mode", mode.clone()),
                        ("side", side.map(|x| x.to_string())),
                        ("width", width.map(|x| x.to_string())),
                        ("mass", mass.map(|x| x.to_string())),
                    ],
                    problem.pairs(),
                ]
                .concat(),
            ),
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (name, mut flags) = cli.command.name_and_flags();
    flags.push(("seed", cli.global.seed.map(|x| x.to_string())));
    flags.push(("budget", cli.global.budget.map(|x| x.to_string())));
    let file = match &cli.global.config {
        Some(p) => Some(std::fs::read_to_string(p)?),
        None => None,
    };
    let cfg = RunConfig::resolve(name, file.as_deref(), std::env::var(BUDGET_ENV).ok(), flags)?;
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    commands::dispatch(cfg, cli.global.out, cli.global.plot_data)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ueglab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
