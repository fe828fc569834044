use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::trainer::{train, RunRecord};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::RoadGraph;

/// Cartesian hyperparameter space. Each axis overrides the matching
/// [`TrainConfig`] field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpace {
    pub lr: Vec<f64>,
    pub gamma: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub dropout: Vec<f64>,
}

impl Default for GridSpace {
    fn default() -> Self {
        Self {
            lr: vec![0.5, 0.05],
            gamma: vec![0.2, 0.5, 0.8],
            weight_decay: vec![0.0004, 0.0008],
            dropout: vec![0.0, 0.15, 0.3],
        }
    }
}

impl GridSpace {
    pub fn len(&self) -> usize {
        self.lr.len() * self.gamma.len() * self.weight_decay.len() * self.dropout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every point of the space applied to `base`, in lexicographic order of
    /// (lr, gamma, weight decay, dropout).
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &lr in &self.lr {
            for &gamma in &self.gamma {
                for &weight_decay in &self.weight_decay {
                    for &dropout in &self.dropout {
                        out.push(TrainConfig {
                            lr,
                            gamma,
                            weight_decay,
                            dropout,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

/// Which score orders records for top-k averaging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankBy {
    #[default]
    Validation,
    Test,
}

/// Runs every configuration of the space. Runs that fail are kept as failed
/// records. The result is ranked by best validation micro-F1, failures last;
/// ties keep enumeration order.
pub fn grid_search(
    space: &GridSpace,
    base: &TrainConfig,
    graph: &RoadGraph,
    features: &FeatureMatrix,
    jobs: usize,
) -> Result<Vec<RunRecord>> {
    if space.is_empty() {
        return Err(Error::InvalidInput("hyperparameter space is empty".into()));
    }
    let configs = space.configs(base);
    let run = |cfg: &TrainConfig| match train(cfg, graph, features) {
        Ok(outcome) => outcome.record,
        Err(e) => {
            log::warn!("run lr={} gamma={} wd={} dropout={} failed: {e}", cfg.lr, cfg.gamma, cfg.weight_decay, cfg.dropout);
            RunRecord::failed(cfg.clone(), &e)
        }
    };
    let records = run_all(&configs, jobs, run)?;
    Ok(rank(records, RankBy::Validation))
}

#[cfg(feature = "parallel")]
fn run_all(configs: &[TrainConfig], jobs: usize, run: impl Fn(&TrainConfig) -> RunRecord + Sync + Send) -> Result<Vec<RunRecord>> {
    use rayon::prelude::*;
    if jobs <= 1 {
        return Ok(configs.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| configs.par_iter().map(run).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_all(configs: &[TrainConfig], _jobs: usize, run: impl Fn(&TrainConfig) -> RunRecord) -> Result<Vec<RunRecord>> {
    Ok(configs.iter().map(run).collect())
}

fn score(r: &RunRecord, by: RankBy) -> Option<f64> {
    match by {
        RankBy::Validation => r.best_val_micro_f1(),
        RankBy::Test => r.best_test_micro_f1(),
    }
}

/// Stable descending sort by the chosen score; records without one go last.
pub fn rank(mut records: Vec<RunRecord>, by: RankBy) -> Vec<RunRecord> {
    records.sort_by(|a, b| match (score(a, by), score(b, by)) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    records
}

/// Mean test micro-F1 of the `k` best records under `by`.
pub fn top_k_average(records: &[RunRecord], k: usize, by: RankBy) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let usable: Vec<RunRecord> = records
        .iter()
        .filter(|r| score(r, by).is_some() && r.best_test_micro_f1().is_some())
        .cloned()
        .collect();
    if usable.len() < k {
        return Err(Error::InvalidInput(format!(
            "top-{k} average needs {k} completed runs with test metrics, got {}",
            usable.len()
        )));
    }
    let ranked = rank(usable, by);
    Ok(ranked[..k].iter().map(|r| r.best_test_micro_f1().expect("filtered")).sum::<f64>() / k as f64)
}

/// One CSV row per record: config columns, then validation and test micro-F1.
pub fn write_summary_csv(mut out: impl Write, records: &[RunRecord]) -> Result<()> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    writeln!(out, "rank,variant,lr,gamma,weight_decay,dropout,seed,best_epoch,val_micro_f1,test_micro_f1,status").map_err(io)?;
    let fmt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.6}"));
    for (i, r) in records.iter().enumerate() {
        let c = &r.config;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            c.variant,
            c.lr,
            c.gamma,
            c.weight_decay,
            c.dropout,
            c.seed,
            r.best_epoch.map_or_else(String::new, |e| e.to_string()),
            fmt(r.best_val_micro_f1()),
            fmt(r.best_test_micro_f1()),
            if r.is_ok() { "ok" } else { "failed" },
        )
        .map_err(io)?;
    }
    Ok(())
}
