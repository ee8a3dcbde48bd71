use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use graphwarp::chem::TaskKind;
use graphwarp::gnn::HostKind;
use graphwarp::model::Variant;
use graphwarp::tensor::OpKind;

#[derive(Debug, Parser)]
#[command(name = "gwm", version, about = "Train and evaluate host GNNs with and without the warp module")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write record.jsonl, model.ckpt and timing.json.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset subset and print the result as JSON.
    Eval(EvalArgs),
    /// Run the finite-difference gradient suite.
    Gradcheck(GradcheckArgs),
    /// Run a paired grid of hosts, variants, depths, widths and seeds.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Gradcheck(_) => "gradcheck",
            Command::Sweep(_) => "sweep",
        }
    }
}

/// Where the graphs come from and how they are split.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a `smiles` column and one column per task.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate this many diameter-parity graphs instead of reading a CSV.
    #[arg(long, value_name = "N")]
    pub synthetic: Option<usize>,
    /// Seed of the synthetic generator [default: 0]
    #[arg(long)]
    pub synthetic_seed: Option<u64>,
    /// classify or regress [default: classify]
    #[arg(long)]
    pub task: Option<TaskKind>,
    /// skeleton or random [default: skeleton]
    #[arg(long)]
    pub split: Option<String>,
    /// [default: 0]
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Train, validation and test fractions [default: 0.8,0.1,0.1]
    #[arg(long)]
    pub fractions: Option<String>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// [default: 8]
    #[arg(long)]
    pub heads: Option<usize>,
    /// Edge types; molecules have 4 [default: 4]
    #[arg(long)]
    pub relations: Option<usize>,
    /// [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// GIN dropout rate [default: 0]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// rsgcn, ggnn, rgat or gin [default: rsgcn]
    #[arg(long)]
    pub host: Option<HostKind>,
    /// none, simple, nogate or full [default: full]
    #[arg(long)]
    pub variant: Option<Variant>,
    /// [default: 3]
    #[arg(long)]
    pub layers: Option<usize>,
    /// [default: 50]
    #[arg(long)]
    pub dim: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// train, val, test or all [default: test]
    #[arg(long)]
    pub subset: Option<String>,
    /// [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupt the backward rule of this op, as a negative control.
    #[arg(long, value_name = "OP")]
    pub inject_fault: Option<OpKind>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated hosts [default: rsgcn]
    #[arg(long, value_delimiter = ',')]
    pub host: Vec<HostKind>,
    /// Comma-separated variants; none is always added [default: full]
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<Variant>,
    /// Comma-separated depths [default: 3]
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<usize>,
    /// Comma-separated widths [default: 50]
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<usize>,
    /// Comma-separated seeds [default: 0]
    #[arg(long, alias = "seed", value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Cells trained in parallel [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}
