//! `afield`: minimize, sweep, verify and evaluate the average-field energy.

mod commands;
mod error;
mod output;
mod state_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "afield", version, about = "Average-field functional for extended anyons")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "AFIELD_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the functional and save the minimizer.
    Solve(SolveArgs),
    /// Minimize along one parameter axis and write a CSV table.
    Sweep(SweepArgs),
    /// Run a randomized verification suite, or replay one recorded case.
    Verify(VerifyArgs),
    /// Per-particle energy of the N-fold product of a saved state.
    Energy(EnergyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrapKind {
    Harmonic,
    Power,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum InitArg {
    Gaussian,
    GaussianVortex,
    FromFile,
    #[value(alias = "random")]
    SeededRandomPerturbation,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum PrecondArg {
    None,
    KineticTrap,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum QuadratureArg {
    Spectral,
    PointSample,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Coupling β.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Smearing radius R ≥ 0.
    #[arg(long = "R", visible_alias = "radius", default_value_t = 0.0)]
    pub radius: f64,
    #[arg(long, value_enum, default_value_t = TrapKind::Harmonic)]
    pub trap: TrapKind,
    /// c in V = c|x|^s for `--trap power`.
    #[arg(long, default_value_t = 1.0)]
    pub trap_strength: f64,
    /// s in V = c|x|^s for `--trap power`.
    #[arg(long, default_value_t = 2.0)]
    pub trap_exponent: f64,
    #[arg(long, value_enum, default_value_t = QuadratureArg::Spectral)]
    pub quadrature: QuadratureArg,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Points per side, a power of two ≥ 16.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Half-width L of the box [-L, L)².
    #[arg(long = "box")]
    pub half_width: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = InitArg::Gaussian)]
    pub init: InitArg,
    /// State file for `--init from_file`.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// Winding of `--init gaussian_vortex`.
    #[arg(long, default_value_t = 1)]
    pub winding: u32,
    /// Seed of `--init seeded_random_perturbation`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_energy: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_grad: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step0: f64,
    #[arg(long, value_enum, default_value_t = PrecondArg::KineticTrap)]
    pub preconditioner: PrecondArg,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to save the minimizer.
    #[arg(long, default_value = "state.afgs")]
    pub state: PathBuf,
    /// JSON summary path; stdout if absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// CSV of the energy per iteration.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// beta, R, N or s.
    #[arg(long)]
    pub axis: String,
    /// Axis values, in sweep order.
    #[arg(long, value_delimiter = ',', num_args = 0.., allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV path; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON with the resolved configuration and per-row errors.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// kernels, geometry, functional-inequalities or manybody-identities.
    #[arg(required_unless_present = "replay")]
    pub suite: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Suite-specific sample count; the suite default if absent.
    #[arg(long)]
    pub samples: Option<u64>,
    /// JSON report path; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replay file: a single case, or a report together with `--check`.
    #[arg(long, conflicts_with_all = ["suite", "samples"])]
    pub replay: Option<PathBuf>,
    /// Check whose worst case to replay from a report.
    #[arg(long, requires = "replay")]
    pub check: Option<String>,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    pub state: PathBuf,
    #[arg(long)]
    pub particles: u64,
    /// Coupling β; the value stored in the state file if absent.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Smearing radius; the value stored in the state file if absent.
    #[arg(long = "R", visible_alias = "radius")]
    pub radius: Option<f64>,
    #[arg(long, value_enum, default_value_t = TrapKind::Harmonic)]
    pub trap: TrapKind,
    #[arg(long, default_value_t = 1.0)]
    pub trap_strength: f64,
    #[arg(long, default_value_t = 2.0)]
    pub trap_exponent: f64,
    #[arg(long, value_enum, default_value_t = QuadratureArg::Spectral)]
    pub quadrature: QuadratureArg,
    /// JSON output path; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Energy(a) => commands::energy(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn spec_style_flags_parse() {
        let c = Cli::try_parse_from(["afield", "solve", "--beta", "0", "--trap", "harmonic", "--grid", "256", "--box", "8"]).unwrap();
        let Command::Solve(a) = c.command else { panic!() };
        assert_eq!((a.grid.grid, a.grid.half_width, a.model.beta), (Some(256), Some(8.0), 0.0));
        let c = Cli::try_parse_from(["afield", "solve", "--beta", "-2", "--R", "0.1", "--init", "from_file", "--init-file", "u.afgs"]).unwrap();
        let Command::Solve(a) = c.command else { panic!() };
        assert_eq!((a.model.beta, a.model.radius, a.solver.init), (-2.0, 0.1, InitArg::FromFile));
        let c = Cli::try_parse_from(["afield", "sweep", "--axis", "R", "--values", "0.4,0.2,-0.1", "--box", "6"]).unwrap();
        let Command::Sweep(a) = c.command else { panic!() };
        assert_eq!(a.values, vec![0.4, 0.2, -0.1]);
        assert!(Cli::try_parse_from(["afield", "verify", "geometry", "--samples", "1000000", "--seed", "42"]).is_ok());
        assert!(Cli::try_parse_from(["afield", "verify"]).is_err());
    }
}
