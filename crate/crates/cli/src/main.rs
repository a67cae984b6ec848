//! `epsbias`: generate codes, measure their bias, shorten and puncture them,
//! plan shortenings and run seeded experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "epsbias", version, about = "Random shortening of linear codes into small-bias codes")]
pub struct Cli {
    /// Cap on the number of enumerated codewords (overrides EPSBIAS_MAX_ENUM).
    #[arg(long, global = true)]
    pub max_enum: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a mother code.
    Gen(GenArgs),
    /// Report length, dimension, distance, dual distance and bias of a code.
    Analyze(AnalyzeArgs),
    /// Shorten a code on a sampled or explicit index set.
    Shorten(TransformArgs),
    /// Puncture a code on a sampled or explicit index set.
    Puncture(TransformArgs),
    /// Shorten, then puncture the shortened code.
    Pipeline(PipelineArgs),
    /// Compute the shortening prescribed by a theorem.
    Plan(PlanArgs),
    /// Run the trials described by a JSON configuration.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// rs, random, repetition, parity or simplex.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub q: u32,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the code here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Also count the codewords that are not epsilon-biased.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum SamplerKind {
    #[default]
    Uniform,
    Expander,
}

#[derive(Args, Debug)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SamplerKind::Uniform)]
    pub sampler: SamplerKind,
    /// Expander degree (even, at least 8).
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Number of positions to sample.
    #[arg(long, visible_alias = "p", required_unless_present = "set", conflicts_with = "set")]
    pub s: Option<usize>,
    /// Explicit comma-separated positions, e.g. `--set 0,3,7`.
    #[arg(long, value_delimiter = ',')]
    pub set: Option<Vec<usize>>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, required_unless_present = "s_set", conflicts_with = "s_set")]
    pub s: Option<usize>,
    #[arg(long, required_unless_present = "p_set", conflicts_with = "p_set")]
    pub p: Option<usize>,
    /// Explicit shortening positions (of the input code).
    #[arg(long, value_delimiter = ',', requires = "p_set")]
    pub s_set: Option<Vec<usize>>,
    /// Explicit puncturing positions (of the shortened code).
    #[arg(long, value_delimiter = ',', requires = "s_set")]
    pub p_set: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TheoremKind {
    #[value(name = "1")]
    One,
    #[value(name = "1b")]
    OneB,
    #[value(name = "2")]
    Two,
    #[value(name = "cor")]
    Cor,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[arg(long, value_enum)]
    pub theorem: TheoremKind,
    #[arg(long)]
    pub q: u32,
    /// Rate of the mother code.
    #[arg(long)]
    pub r: f64,
    /// Relative distance of the mother code.
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta0_dual: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Print the plan as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for summary.json and trials.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Report failing hypotheses per length instead of stopping at the first.
    #[arg(long)]
    pub verify: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
