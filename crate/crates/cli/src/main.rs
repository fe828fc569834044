use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roadgnn::features::BlockKind;
use roadgnn::gnn::Variant;
use roadgnn::graph::{Direction, SplitSize, UturnPolicy};
use roadgnn::training::RankBy;

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "roadgnn", version, about = "Road-type classification on dual road graphs")]
pub struct Cli {
    /// JSON configuration file (must contain "version": 1). Flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for splits, training and synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for grid search.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the dual graph from a primal road network and split labeled roads.
    Ingest(IngestArgs),
    /// Assemble per-road feature vectors.
    Featurize(FeaturizeArgs),
    /// Write road-aligned image tiles for selected roads.
    Tile(TileArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Run a hyperparameter grid and rank the runs.
    Grid(GridArgs),
    /// Score a saved model on one split.
    Eval(EvalArgs),
    /// Generate a synthetic labeled road dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Primal road network JSON.
    #[arg(long)]
    pub primal: Option<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<UturnPolicy>)]
    pub uturn: Option<UturnPolicy>,
    /// Validation size: a node count (1842) or a fraction (0.1).
    #[arg(long, value_parser = parse_split_size)]
    pub val: Option<SplitSize>,
    /// Test size: a node count or a fraction.
    #[arg(long, value_parser = parse_split_size)]
    pub test: Option<SplitSize>,
}

#[derive(Debug, Args)]
pub struct GraphInput {
    /// Dual graph JSON written by `ingest` or `synth`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RasterInput {
    /// RGB raster (binary PPM).
    #[arg(long)]
    pub raster: Option<PathBuf>,
    /// World file of the RGB raster; defaults to the image path with a .wld extension.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Single-channel elevation raster (binary PGM).
    #[arg(long)]
    pub dsm: Option<PathBuf>,
    /// World file of the elevation raster; defaults to its path with a .wld extension.
    #[arg(long)]
    pub dsm_world: Option<PathBuf>,
    /// Longitude,latitude of the planar frame the rasters are georeferenced in.
    #[arg(long, value_parser = parse_origin, allow_hyphen_values = true)]
    pub origin: Option<[f64; 2]>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    #[command(flatten)]
    pub raster: RasterInput,
    /// Precomputed histogram table (VFE1 or CSV), used instead of a raster.
    #[arg(long)]
    pub histograms: Option<PathBuf>,
    /// Precomputed visual encodings (VFE1 or CSV).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Expected encoding width; loading fails on a mismatch.
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Resampled points per road geometry; 0 drops the geometric block.
    #[arg(long)]
    pub geometry_points: Option<usize>,
    /// Drop the oneway/bridge/tunnel block.
    #[arg(long)]
    pub no_binary: bool,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    #[command(flatten)]
    pub raster: RasterInput,
    /// Road id (`u-v-key`); repeat for several roads.
    #[arg(long = "road", required = true)]
    pub roads: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ModelInputs {
    #[command(flatten)]
    pub graph: GraphInput,
    /// Feature matrix written by `featurize` or `synth`.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long, value_parser = parse_from_str::<Variant>)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Learning-rate decay factor applied every 25 epochs.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Neighbors sampled per layer, e.g. 25,10.
    #[arg(long, value_delimiter = ',')]
    pub fanouts: Option<Vec<usize>>,
    /// Feature blocks to use, e.g. geometric,binary,embedding.
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<BlockKind>)]
    pub blocks: Option<Vec<BlockKind>>,
    #[arg(long, value_parser = parse_from_str::<Direction>)]
    pub direction: Option<Direction>,
    /// Skip train-row standardization of continuous blocks.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Number of best runs averaged for the headline score.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Score used to pick the best runs.
    #[arg(long, value_parser = parse_rank_by)]
    pub rank_by: Option<RankBy>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub inputs: ModelInputs,
    /// Model checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Split to score: train, val or test.
    #[arg(long, default_value = "test", value_parser = parse_split)]
    pub split: roadgnn::Split,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
}

fn parse_from_str<T: std::str::FromStr<Err = roadgnn::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: roadgnn::Error| e.to_string())
}

fn parse_split_size(s: &str) -> Result<SplitSize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(SplitSize::Count(n));
    }
    match s.parse::<f64>() {
        Ok(f) if (0.0..=1.0).contains(&f) => Ok(SplitSize::Fraction(f)),
        _ => Err(format!("{s:?} is neither a node count nor a fraction in [0, 1]")),
    }
}

fn parse_origin(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let coords: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
    match coords[..] {
        [lon, lat] if parts.len() == 2 => Ok([lon, lat]),
        _ => Err(format!("{s:?} is not lon,lat")),
    }
}

fn parse_rank_by(s: &str) -> Result<RankBy, String> {
    match s {
        "validation" | "val" => Ok(RankBy::Validation),
        "test" => Ok(RankBy::Test),
        other => Err(format!("unknown ranking {other:?} (validation or test)")),
    }
}

fn parse_split(s: &str) -> Result<roadgnn::Split, String> {
    match s {
        "train" => Ok(roadgnn::Split::Train),
        "val" | "validation" => Ok(roadgnn::Split::Val),
        "test" => Ok(roadgnn::Split::Test),
        other => Err(format!("unknown split {other:?} (train, val or test)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
