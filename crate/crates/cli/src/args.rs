use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcoreset::CostKind;

#[derive(Debug, Parser)]
#[command(name = "kcoreset", version, about = "Coresets and (1+eps)-approximate k-median / k-means clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a coreset of a point file
    Coreset(CoresetArgs),
    /// Run the clustering pipeline and report centers
    Cluster(ClusterArgs),
    /// Replay a point file through the streaming coreset
    Stream(StreamArgs),
    /// Certify a coreset, or price centers against the discrete optimum
    Verify(VerifyArgs),
    /// Fuzzy nearest-neighbor tools
    #[command(name = "fuzzy-nn", subcommand)]
    FuzzyNn(FuzzyCommand),
    /// Write a seeded synthetic instance
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Median,
    Means,
}

impl From<KindArg> for CostKind {
    fn from(k: KindArg) -> CostKind {
        match k {
            KindArg::Median => CostKind::Median,
            KindArg::Means => CostKind::Means,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input point file
    #[arg(short, long)]
    pub input: PathBuf,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CoresetArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "median")]
    pub kind: KindArg,
    #[arg(short, long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Coreset output file
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "median")]
    pub kind: KindArg,
    /// Restrict centers to input points (median only)
    #[arg(long)]
    pub discrete: bool,
    #[arg(short, long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Also write the centers as a point file
    #[arg(long)]
    pub centers_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "median")]
    pub kind: KindArg,
    #[arg(short, long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Points inserted between invariant checks
    #[arg(long, default_value_t = 1)]
    pub chunk: usize,
    /// Record a snapshot every this many points (0 = final only)
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    /// Override the base bucket size
    #[arg(long)]
    pub m_base: Option<usize>,
    /// Write the extracted coreset here
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Also cluster the extracted coreset
    #[arg(long)]
    pub query: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Coreset file to certify
    #[arg(long)]
    pub coreset: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Tolerance; defaults to the eps recorded in the coreset file
    #[arg(long)]
    pub eps: Option<f64>,
    /// Compute the discrete optimum by enumeration
    #[arg(long)]
    pub brute: bool,
    #[arg(long, value_enum, default_value = "median")]
    pub kind: KindArg,
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Centers to compare against the discrete optimum
    #[arg(long)]
    pub centers: Option<PathBuf>,
    /// Allowed ratio of --centers cost to the discrete optimum
    #[arg(long, default_value_t = 1.2)]
    pub factor: f64,
}

#[derive(Debug, Subcommand)]
pub enum FuzzyCommand {
    /// Build an index over a site file and audit a query file against linear scan
    Bench(FuzzyBenchArgs),
}

#[derive(Debug, Args)]
pub struct FuzzyBenchArgs {
    /// Site point file
    #[arg(long)]
    pub sites: PathBuf,
    /// Query point file
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Lower distance of the contract band (default: Delta * 1e-4)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Upper distance of the contract band (default: twice the bounding-box diagonal)
    #[arg(long)]
    pub big_delta: Option<f64>,
    #[arg(short, long, default_value_t = kcoreset::fuzzy_nn::DEFAULT_R)]
    pub r: u32,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Uniform,
    Blobs,
    Coincident,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    pub shape: ShapeArg,
    #[arg(short, long)]
    pub n: usize,
    #[arg(short, long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Box side (uniform)
    #[arg(long, default_value_t = 1.0)]
    pub side: f64,
    /// Number of blobs or coincident sites
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    #[arg(long, default_value_t = 100.0)]
    pub separation: f64,
    /// Blob standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}
