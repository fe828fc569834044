//! Transductive training, evaluation metrics, hyperparameter grid search and
//! a synthetic road dataset.

mod config;
mod grid;
mod metrics;
mod synth;
mod trainer;

pub use config::{TrainConfig, MAX_EPOCHS};
pub use grid::{grid_search, rank, top_k_average, write_summary_csv, GridSpace, RankBy};
pub use metrics::{confusion_matrix, micro_f1, Metrics};
pub use synth::{class_counts, generate_synthetic, SynthConfig, SyntheticDataset, DEFAULT_PROFILE};
pub use trainer::{
    checkpoint_extra, evaluate, evaluate_mask, predict, prepare_features, read_jsonl, save_jsonl, train, write_jsonl,
    EpochStats, NodePrediction, RunRecord, SplitMetrics, TrainOutcome,
};
