use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;

use manifest::{Outcome, RunContext};

#[derive(Parser)]
#[command(name = "pqk", version, about = "Projected quantum kernel variance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo checks of the Haar moment identities.
    HaarCheck(Common),
    /// Sampled kernel statistics against the closed forms.
    TheoryCheck(Common),
    /// Kernel variance sweeps over depth, position or register size, or a Gram study.
    Sweep {
        #[arg(long, value_parser = ["depth", "position", "qubits", "gram"])]
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Trains a kernel SVM on synthetic two-cluster data.
    SvmDemo(Common),
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::HaarCheck(c) => ("haar-check", c),
        Command::TheoryCheck(c) => ("theory-check", c),
        Command::Sweep { common, .. } => ("sweep", common),
        Command::SvmDemo(c) => ("svm-demo", c),
    };
    if let Some(k) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = RunContext::new(name, common.clone());
    let result = match &cli.command {
        Command::HaarCheck(_) => commands::haar_check::run(&ctx),
        Command::TheoryCheck(_) => commands::theory_check::run(&ctx),
        Command::Sweep { kind, .. } => commands::sweep::run(&ctx, kind),
        Command::SvmDemo(_) => commands::svm_demo::run(&ctx),
    };
    match result {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(names)) => {
            eprintln!("failing checks: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
