//! `espopt` — reserve price optimization for eager second-price auctions.
//!
//! Exit codes: 0 on success, 1 on validation/usage errors or failed checks,
//! 2 on solver failure.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    brute_force, check_conditions, experiment, gen, greedy, round, solve_lp, verify_theory,
};

#[derive(Parser)]
#[command(
    name = "espopt",
    about = "Personalized reserve prices for eager second-price auctions: \
             profile-LP relaxation, randomized rounding, baselines, generators, \
             and bound verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and solve the profile LP for a dataset.
    SolveLp(solve_lp::Args),
    /// Round an LP solution into reserve vectors and report the outcome.
    Round(round::Args),
    /// Per-buyer lazy-optimal greedy reserves.
    Greedy(greedy::Args),
    /// Exhaustive grid search for the optimal reserves.
    BruteForce(brute_force::Args),
    /// Generate synthetic or adversarial datasets with reference values.
    #[command(subcommand)]
    Gen(gen::Kind),
    /// Run the train/test evaluation protocol.
    Experiment(experiment::Args),
    /// Verify the closed-form bound functions and print their table.
    VerifyTheory(verify_theory::Args),
    /// Evaluate per-threshold mass-versus-probability gaps of a solution.
    CheckConditions(check_conditions::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::SolveLp(args) => solve_lp::run(args),
        Command::Round(args) => round::run(args),
        Command::Greedy(args) => greedy::run(args),
        Command::BruteForce(args) => brute_force::run(args),
        Command::Gen(kind) => gen::run(kind),
        Command::Experiment(args) => experiment::run(args),
        Command::VerifyTheory(args) => verify_theory::run(args),
        Command::CheckConditions(args) => check_conditions::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                espopt::Error::Solver(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
