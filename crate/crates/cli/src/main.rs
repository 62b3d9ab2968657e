use std::path::PathBuf;
use std::process::ExitCode;

use buoca_core::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "buoca", version, about = "Budget-optimized crowd worker allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRuleArg {
    Fractional,
    Fail,
}

impl From<TieRuleArg> for buoca_core::TieRule {
    fn from(rule: TieRuleArg) -> Self {
        match rule {
            TieRuleArg::Fractional => buoca_core::TieRule::Fractional,
            TieRuleArg::Fail => buoca_core::TieRule::Fail,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PilotArgs {
    /// Pilot data (CSV `sample_id,expert,w1..wk` or JSON)
    #[arg(long)]
    pub pilot: PathBuf,
    /// Override the unit cost stored in the pilot file
    #[arg(long)]
    pub unit_cost: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-sample worker success probabilities
    Estimate(EstimateArgs),
    /// Trace the CCR-versus-budget frontier and fixed-allocation baselines
    Curve(CurveArgs),
    /// Simulate majority-vote accuracy of an allocation on the pilot
    Simulate(SimulateArgs),
    /// Cross-validated allocation learning and deployment
    TrainEval(TrainEvalArgs),
    /// Generate a synthetic pilot and feature file
    Synth(SynthArgs),
    /// Run the optimality and identity self-checks
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub pilot: PilotArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub pilot: PilotArgs,
    /// Evaluate curves up to this many workers (extrapolates past the pilot k)
    #[arg(long)]
    pub k: Option<usize>,
    /// Also report the frontier point at this budget
    #[arg(long)]
    pub budget: Option<f64>,
    /// Also report the first point where every class has M samples: `min_per_class=M`
    #[arg(long)]
    pub auto_reference: Option<String>,
    /// Include per-sample allocations in the frontier output
    #[arg(long)]
    pub with_allocations: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output directory (frontier to stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pilot: PilotArgs,
    /// `frontier@BUDGET`, `fixed:N` or `file:PATH` (CSV `sample_id,n`)
    #[arg(long)]
    pub allocation: String,
    #[arg(long, value_enum, default_value = "fractional")]
    pub tie_rule: TieRuleArg,
    /// Estimate by Monte Carlo with this many trials per sample instead of exactly
    #[arg(long, requires = "seed")]
    pub mc_trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainEvalArgs {
    #[command(flatten)]
    pub pilot: PilotArgs,
    /// Numeric feature CSV (`sample_id,f1,...`)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Text corpus CSV (`sample_id,text`) for sarcasm and tf-idf features
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Reference budget whose frontier allocation supplies the training labels
    #[arg(long, conflicts_with = "auto_reference")]
    pub budget: Option<f64>,
    /// Pick the reference point by `min_per_class=M`
    #[arg(long)]
    pub auto_reference: Option<String>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
    #[arg(long, value_enum, default_value = "fractional")]
    pub tie_rule: TieRuleArg,
    /// Also fit on all rows and save the model here
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Report file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// `p:weight,...`, weights summing to 1
    #[arg(long, default_value = "0.95:0.6,0.65:0.4")]
    pub mixture: String,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub unit_cost: f64,
    /// Standard deviation of the noise on the difficulty signal column
    #[arg(long, default_value_t = 0.05)]
    pub signal_noise: f64,
    #[arg(long, default_value_t = 2)]
    pub noise_columns: usize,
    /// Output directory for `pilot.csv` and `features.csv`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random instances for the exhaustive comparison
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    /// Write the JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<buoca_core::Error>() {
            return match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Io => 3,
                ErrorKind::Infeasible => 4,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => commands::estimate(args),
        Command::Curve(args) => commands::curve(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::TrainEval(args) => commands::train_eval(args),
        Command::Synth(args) => commands::synth(args),
        Command::Verify(args) => commands::verify(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
