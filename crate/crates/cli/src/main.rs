//! `ewit`: entanglement certification from partial correlator data.
//!
//! Every JSON report is wrapped in `{command, input_digest, result}`.
//! Exit codes: 0 success (for `verify`: entangled), 1 `verify` found no
//! detection, 2 bad input or failure.

mod angle;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use angle::PiFraction;

#[derive(Parser, Debug)]
#[command(name = "ewit", version, about = "Entanglement witnesses from incomplete correlator data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SolverArgs {
    /// Target duality gap of the interior-point solver.
    #[arg(long, env = "EWIT_TOL", default_value_t = 1e-8)]
    pub tol: f64,
    /// Newton-step budget per sign branch.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Input file, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Chi1,
    Chi3,
    #[value(name = "psi_theta", alias = "psi-theta")]
    PsiTheta,
    Bell,
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Depolarizing weight p in ρ → (1−p)ρ + p·𝟙/4.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Shots per correlator; ideal correlators when omitted.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Required whenever `--shots` is given.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximize NE over a grid and report the verdict and witness pair.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        /// Restrict to these correlators, e.g. `XX,ZZ`.
        #[arg(long)]
        set: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// NE over a range of angles of a state family, one row per angle.
    Sweep {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, allow_hyphen_values = true, default_value = "-pi")]
        from: PiFraction,
        #[arg(long, allow_hyphen_values = true, default_value = "pi")]
        to: PiFraction,
        #[arg(long, default_value_t = 19)]
        steps: usize,
        #[arg(long)]
        set: String,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write the full correlator grid of a (noisy, sampled) state.
    Simulate {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        theta: PiFraction,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Pattern class of a two-qubit measurement set.
    Classify {
        #[arg(long)]
        set: String,
    },
    /// All measurement sets of size k grouped into relabeling orbits.
    Orbit {
        #[arg(long)]
        k: usize,
    },
    /// Maximum of a Pauli-sum observable over product states, or the
    /// multipartite NE of Pauli-string estimates with `--ne`.
    Spi {
        /// JSON list of `{coeff, paulis}` (or `{estimate, paulis}` with `--ne`).
        #[arg(long)]
        input: PathBuf,
        /// Blocks of parties, e.g. `0,1|2`; single parties by default.
        #[arg(long)]
        partition: Option<String>,
        #[arg(long)]
        ne: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mirrored witness pair for a grid: the NE optimum, or a given expansion.
    Witness {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        set: Option<String>,
        /// Explicit expansion, e.g. `XY=-1,ZZ=1`.
        #[arg(long, allow_hyphen_values = true)]
        coeffs: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify { input, set, solver } => commands::verify(&input, set.as_deref(), solver),
        Command::Sweep { state, from, to, steps, set, format, solver } => {
            commands::sweep(&state, from, to, steps, &set, format, solver)
        }
        Command::Simulate { state, theta, format } => commands::simulate(&state, theta, format),
        Command::Classify { set } => commands::classify(&set),
        Command::Orbit { k } => commands::orbit(k),
        Command::Spi { input, partition, ne, seed } => commands::spi(&input, partition.as_deref(), ne, seed),
        Command::Witness { input, set, coeffs, solver } => {
            commands::witness(&input, set.as_deref(), coeffs.as_deref(), solver)
        }
    };
    match outcome {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
