//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "causal-tradeoff", version, about = "Confounder adjustment versus instrumental variables: closed forms, simulations and sensitivity plots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability limits and inconsistencies of a scenario.
    ClosedForm(ClosedFormArgs),
    /// Monte Carlo replication of a scenario.
    Simulate(SimulateArgs),
    /// Sensitivity report over a CSV file or a generated scenario.
    Sensitivity(SensitivityArgs),
    /// Sensitivity report over a CSV file.
    Analyze(SensitivityArgs),
    /// Winner grid over instrument strength and violation.
    Contour(ContourArgs),
}

#[derive(Debug, Args)]
pub struct ClosedFormArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Also write report.json and summary.txt here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment plan JSON.
    #[arg(long, conflicts_with = "spec")]
    pub plan: Option<PathBuf>,
    /// Scenario JSON, combined with --n and --reps.
    #[arg(long, required_unless_present = "plan")]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Run replications on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// JSON analysis configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV dataset with a header row.
    #[arg(long, conflicts_with = "spec")]
    pub data: Option<PathBuf>,
    /// Column roles, e.g. y=bw,x=smoke,z=tax,w=age+edu
    #[arg(long)]
    pub roles: Option<String>,
    /// Scenario JSON to generate data from.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Rows to generate with --spec.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma separated multipliers of benchmarked confounding.
    #[arg(long)]
    pub multipliers: Option<String>,
    /// Comma separated violation kinds: er, ind, het.
    #[arg(long)]
    pub kinds: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the confounder column instead of covariate benchmarks.
    #[arg(long)]
    pub expose_u: bool,
    /// Write the generated dataset to data.csv.
    #[arg(long)]
    pub export_data: bool,
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    /// Scenario JSON holding the fixed weights.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value = "0:0.95")]
    pub strength_range: String,
    #[arg(long, default_value = "0:0.95")]
    pub violation_range: String,
    #[arg(long, default_value_t = crate::contour::DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
