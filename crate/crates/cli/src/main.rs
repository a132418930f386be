//! `signfit`: fit, classify, generate and evaluate isolated signs.
//!
//! Exit codes: 0 on success, 1 for input errors, 2 for numerical failures.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "signfit", version, about = "Pose fitting for isolated signs under hand-pose constraints")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any configuration value, e.g. `sequence.fit.objective.weights.lambda_s=20`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skeleton JSON (default: the shipped upper body).
    #[arg(long, global = true)]
    skeleton: Option<PathBuf>,
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the body and hand model to a keypoint directory.
    Fit(commands::FitArgs),
    /// Label a HamNoSys corpus with sign classes.
    ParseHamnosys(commands::ParseArgs),
    /// Train the sign-group decision tree on a feature file.
    TrainClassifier(commands::TrainArgs),
    /// Predict sign groups from features or a keypoint directory.
    Classify(commands::ClassifyArgs),
    /// Generate a synthetic keypoint sequence with ground truth.
    Synth(commands::SynthArgs),
    /// Compare a fitted pose file with ground truth.
    Eval(commands::EvalArgs),
    /// Run the constraint ablation on synthetic sequences.
    Ablate(commands::AblateArgs),
    /// Compare analytic and finite-difference gradients of the objective.
    CheckGrad(commands::CheckGradArgs),
}

fn run_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg = cfg.with_overrides(&g.set)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(p) = &g.skeleton {
        cfg.skeleton = Some(p.clone());
    }
    if g.sequential {
        cfg.sequential = true;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run_config(&cli.global).and_then(|cfg| match cli.command {
        Command::Fit(a) => commands::fit(cfg, a),
        Command::ParseHamnosys(a) => commands::parse_hamnosys(cfg, a),
        Command::TrainClassifier(a) => commands::train_classifier(cfg, a),
        Command::Classify(a) => commands::classify(cfg, a),
        Command::Synth(a) => commands::synth(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Ablate(a) => commands::ablate(cfg, a),
        Command::CheckGrad(a) => commands::check_grad(cfg, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("signfit: {f}");
            f.exit_code()
        }
    }
}
