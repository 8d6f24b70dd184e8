//! `entspec`: batch runner for the counting, spectrum, phase-estimation,
//! Taylor-series and history-state experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entspec_core::qpe::EvolutionMode;
use entspec_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "entspec",
    version,
    about = "Entanglement-spectrum counting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count satisfying assignments four ways and compare them.
    CountSat(PipelineArgs),
    /// Schmidt spectrum of the normalized formula Hamiltonian.
    Spectrum(SpectrumArgs),
    /// Run the counting pipeline and emit one experiment record.
    QpeCount(PipelineArgs),
    /// Sweep the Taylor truncation order against the exact exponential.
    TaylorBench(TaylorArgs),
    /// Build and check the history-state Hamiltonian of a formula.
    HistoryVerify(HistoryArgs),
    /// Write random 2-CNF formulas in DIMACS format.
    GenFormulas(GenArgs),
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub dimacs: PathBuf,
    #[arg(long, default_value_t = EvolutionMode::ExactDiagonal)]
    pub mode: EvolutionMode,
    /// Phase register width; the smallest width resolving the promise gap when omitted.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub dt: Option<u32>,
    /// Number of repetitions for the majority vote (odd).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=15))]
    pub r: u32,
    /// Operator-norm target of the Taylor block in `lcu_taylor` mode (at most 2.5e-11).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub dimacs: PathBuf,
    /// Use the threshold `λ*/n^c` instead of the midpoint below `1/Tr H`.
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=12))]
    pub delta_exp: Option<u32>,
    /// CSV destination for the sorted spectrum.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TaylorArgs {
    /// Formula whose `H/Tr H` is exponentiated (at most 4 variables).
    #[arg(long, conflicts_with = "seed")]
    pub dimacs: Option<PathBuf>,
    /// Draw a random one-qubit density matrix instead of the fixed default.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Largest order in the sweep; four past the chosen order when omitted.
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=40))]
    pub k_max: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistoryArgs {
    #[arg(long)]
    pub dimacs: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV destination for the per-step eigenvalue extremes.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON destination for the local terms.
    #[arg(long)]
    pub terms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=24))]
    pub vars: u32,
    #[arg(long, default_value_t = 2)]
    pub clauses: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=100_000))]
    pub count: u32,
    /// Directory for `formula_NNNN.cnf`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Stable exit-code contract.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Format(_) | Error::Io(_) | Error::Argument(_) | Error::Dimension(_) => 1,
        Error::Degenerate { .. }
        | Error::NotPsd { .. }
        | Error::Prep(_)
        | Error::Amplitude { .. } => 2,
        Error::Scale(_) | Error::Range(_) | Error::Truncation { .. } => 3,
        Error::PromiseViolation { .. } | Error::Tie { .. } | Error::Confidence { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::CountSat(a) => commands::count_sat(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::QpeCount(a) => commands::qpe_count(&a),
        Command::TaylorBench(a) => commands::taylor_bench(&a),
        Command::HistoryVerify(a) => commands::history_verify(&a),
        Command::GenFormulas(a) => commands::gen_formulas(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Degenerate { trivial_count, .. } = &e {
                let n = trivial_count.trailing_zeros();
                eprintln!("trivial answer: 2^{n} = {trivial_count}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(exit_code(&Error::Format("x".into())), 1);
        assert_eq!(exit_code(&Error::Io("x".into())), 1);
        assert_eq!(
            exit_code(&Error::Degenerate {
                reason: "x".into(),
                trivial_count: 4
            }),
            2
        );
        assert_eq!(exit_code(&Error::Scale("x".into())), 3);
        assert_eq!(
            exit_code(&Error::PromiseViolation {
                eigenvalue: 0.5,
                low: 0.4,
                high: 0.6
            }),
            4
        );
        assert_eq!(
            exit_code(&Error::Confidence {
                value: 2.5,
                distance: 0.5
            }),
            4
        );
        assert_eq!(
            exit_code(&Error::Tie {
                threshold: 2.0,
                grid_point: 2
            }),
            4
        );
    }
}
