//! `blaschke`: command-line front end for the blaschke-sums toolkit.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// A failure with its exit code: 2 for contract errors, 3 for numerical ones.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn contract(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<blaschke_sums::Error> for CliError {
    fn from(e: blaschke_sums::Error) -> Self {
        let code = if e.is_numerical() { 3 } else { 2 };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "blaschke",
    version,
    about = "Sums of iterates of finite Blaschke products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the product at an interior point or a boundary turn.
    Eval(commands::EvalArgs),
    /// Iterate the product from an interior point or a boundary turn.
    Iterate(commands::IterateArgs),
    /// Lifted measure of the image of an arc under an iterate.
    ArcImage(commands::ArcImageArgs),
    /// Extremes of |f'| on the circle and the precision rule.
    Constants(commands::ConstantsArgs),
    /// Calibrate the solver constants.
    Calibrate(commands::CalibrateArgs),
    /// Certify a lower bound on the real part of a coefficient block.
    LowerBound(commands::LowerBoundArgs),
    /// Find a boundary point whose partial sums approach a target.
    SolveTarget(commands::SolveTargetArgs),
    /// Follow a list of targets with a single boundary point.
    ClusterFollow(commands::ClusterFollowArgs),
    /// Coverage of a disc by the image of the boundary series.
    PeanoScan(commands::PeanoScanArgs),
    /// Compare boundary partial sums with radial values.
    AbelCheck(commands::AbelCheckArgs),
    /// Run randomized property suites.
    LemmaSuite(commands::LemmaSuiteArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Iterate(a) => commands::iterate(a),
        Command::ArcImage(a) => commands::arc_image(a),
        Command::Constants(a) => commands::constants(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::LowerBound(a) => commands::lower_bound(a),
        Command::SolveTarget(a) => commands::solve_target(a),
        Command::ClusterFollow(a) => commands::cluster_follow(a),
        Command::PeanoScan(a) => commands::peano_scan(a),
        Command::AbelCheck(a) => commands::abel_check(a),
        Command::LemmaSuite(a) => commands::lemma_suite(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let line: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", line.join(" "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.message.replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(e.code)
        }
    }
}
