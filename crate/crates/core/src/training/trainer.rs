use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::features::{standardize, BlockKind, FeatureMatrix};
use crate::gnn::{full_block, sample_neighborhood_with, GnnConfig, GnnModel};
use crate::graph::{Direction, RoadGraph, Split};
use crate::nn::{lr_schedule_step, sgd_step, softmax_cross_entropy, Dense, Mode, OptimizerState};

/// Targets per dense evaluation pass.
const EVAL_CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub val: Metrics,
    /// Absent when the graph has no test nodes.
    pub test: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePrediction {
    pub id: String,
    pub split: Split,
    pub label: usize,
    pub predicted: usize,
}

/// Everything recorded about one training run. A failed run keeps its config
/// and error message and has no metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters produced `best`.
    pub best_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    /// Metrics of the best-validation parameters.
    pub best: Option<SplitMetrics>,
    /// Metrics of the parameters after the last epoch.
    #[serde(rename = "final")]
    pub last: Option<SplitMetrics>,
    /// Validation and test predictions of the best-validation parameters.
    #[serde(default)]
    pub predictions: Vec<NodePrediction>,
}

impl RunRecord {
    pub fn failed(config: TrainConfig, error: &Error) -> Self {
        Self {
            config,
            error: Some(error.to_string()),
            epochs: Vec::new(),
            best_epoch: None,
            checkpoint: None,
            best: None,
            last: None,
            predictions: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.best.is_some()
    }

    pub fn best_val_micro_f1(&self) -> Option<f64> {
        self.best.as_ref().map(|m| m.val.micro_f1)
    }

    pub fn best_test_micro_f1(&self) -> Option<f64> {
        self.best.as_ref().and_then(|m| m.test.as_ref()).map(|m| m.micro_f1)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("run records always serialize")
    }
}

pub fn write_jsonl<'a>(mut out: impl Write, records: impl IntoIterator<Item = &'a RunRecord>) -> Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json_line()).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(())
}

pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn save_jsonl(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// A finished run: the record plus the best-validation model.
#[derive(Debug)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub model: GnnModel,
    /// The model input after block selection and standardization.
    pub inputs: FeatureMatrix,
}

/// Applies the config's block selection and training-row standardization.
/// Evaluation of a saved model must go through the same function.
pub fn prepare_features(config: &TrainConfig, graph: &RoadGraph, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    if features.rows() != graph.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for a graph of {} roads",
            features.rows(),
            graph.len()
        )));
    }
    let selected = match &config.blocks {
        Some(blocks) => features.select(blocks)?,
        None => features.clone(),
    };
    if config.standardize && selected.standardization().is_none() && selected.schema().iter().any(|b| b.kind.is_continuous()) {
        standardize(&selected, &graph.split_mask(Split::Train))
    } else {
        Ok(selected)
    }
}

fn labels_of(graph: &RoadGraph, nodes: &[usize]) -> Result<Vec<usize>> {
    nodes
        .iter()
        .map(|&v| {
            graph
                .label(v)
                .ok_or_else(|| Error::InvalidInput(format!("road {:?} has no label", graph.node(v).id)))
        })
        .collect()
}

/// Predicted classes under a full-neighborhood forward pass in eval mode.
pub fn predict(model: &GnnModel, graph: &RoadGraph, x: &Dense, nodes: &[usize], direction: Direction) -> Result<Vec<usize>> {
    // eval mode never draws from the generator
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(nodes.len());
    for chunk in nodes.chunks(EVAL_CHUNK) {
        let block = full_block(graph, chunk, model.depth(), direction)?;
        let cache = model.forward(x, &block, Mode::Eval, &mut rng)?;
        for r in 0..cache.logits.rows() {
            out.push(argmax(cache.logits.row(r)));
        }
    }
    Ok(out)
}

/// Metrics of the model on the listed labeled nodes.
pub fn evaluate(model: &GnnModel, graph: &RoadGraph, x: &Dense, nodes: &[usize], direction: Direction) -> Result<Metrics> {
    if nodes.is_empty() {
        return Err(Error::InvalidInput("evaluation mask selects no nodes".into()));
    }
    let labels = labels_of(graph, nodes)?;
    let predictions = predict(model, graph, x, nodes, direction)?;
    Metrics::from_predictions(&labels, &predictions, model.num_classes())
}

/// Evaluates on the nodes of a boolean mask.
pub fn evaluate_mask(model: &GnnModel, graph: &RoadGraph, x: &Dense, mask: &[bool], direction: Direction) -> Result<Metrics> {
    if mask.len() != graph.len() {
        return Err(Error::Shape(format!("mask of length {} for {} roads", mask.len(), graph.len())));
    }
    let nodes: Vec<usize> = (0..mask.len()).filter(|&v| mask[v]).collect();
    evaluate(model, graph, x, &nodes, direction)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn split_metrics(model: &GnnModel, graph: &RoadGraph, x: &Dense, direction: Direction) -> Result<SplitMetrics> {
    let val = evaluate(model, graph, x, &graph.split_nodes(Split::Val), direction)?;
    let test_nodes = graph.split_nodes(Split::Test);
    let test = if test_nodes.is_empty() {
        None
    } else {
        Some(evaluate(model, graph, x, &test_nodes, direction)?)
    };
    Ok(SplitMetrics { val, test })
}

/// Transductive mini-batch training. Every node's features are visible to
/// aggregation; only training labels enter the loss.
pub fn train(config: &TrainConfig, graph: &RoadGraph, features: &FeatureMatrix) -> Result<TrainOutcome> {
    config.validate()?;
    let train_nodes = graph.split_nodes(Split::Train);
    let val_nodes = graph.split_nodes(Split::Val);
    if train_nodes.is_empty() || val_nodes.is_empty() {
        return Err(Error::InvalidInput(format!(
            "training needs train and validation nodes, got {} and {}",
            train_nodes.len(),
            val_nodes.len()
        )));
    }
    let inputs = prepare_features(config, graph, features)?;
    let x = inputs.values();
    let train_labels = labels_of(graph, &train_nodes)?;
    let label_of: Vec<usize> = {
        let mut l = vec![usize::MAX; graph.len()];
        for (&v, &y) in train_nodes.iter().zip(&train_labels) {
            l[v] = y;
        }
        l
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GnnModel::new(
        &GnnConfig {
            variant: config.variant,
            input_dim: inputs.width(),
            hidden_dim: config.hidden,
            depth: config.depth(),
            num_classes: graph.num_classes(),
            dropout: config.dropout,
        },
        &mut rng,
    )?;
    let mut optimizer = OptimizerState::new(config.lr, config.momentum, config.weight_decay, config.gamma)?;

    let mut order = train_nodes.clone();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for epoch in 0..config.epochs {
        lr_schedule_step(&mut optimizer, epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let block = sample_neighborhood_with(graph, batch, &config.fanouts, config.direction, config.small_degree, &mut rng)?;
            let cache = model.forward(x, &block, Mode::Train, &mut rng)?;
            let labels: Vec<usize> = block.targets().iter().map(|&v| label_of[v]).collect();
            let (loss, grad) = softmax_cross_entropy(&cache.logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss {loss} at epoch {epoch}, batch {b} (lr {})",
                    optimizer.lr
                )));
            }
            loss_sum += loss * batch.len() as f64;
            let grads = model.backward(&cache, &grad)?;
            let mut slots = model.param_slots(&grads)?;
            sgd_step(&mut slots, &mut optimizer)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}: {e}")))?;
        }
        let val = evaluate(&model, graph, x, &val_nodes, config.direction)?;
        let train_loss = loss_sum / order.len() as f64;
        log::debug!("epoch {epoch}: loss {train_loss:.5}, val micro-F1 {:.4}", val.micro_f1);
        if best.as_ref().is_none_or(|(_, score, _)| val.micro_f1 > *score) {
            best = Some((epoch, val.micro_f1, model.flat_params()));
        }
        epochs.push(EpochStats {
            epoch,
            lr: optimizer.lr,
            train_loss,
            val_micro_f1: val.micro_f1,
        });
    }

    let last = split_metrics(&model, graph, x, config.direction)?;
    let (best_epoch, _, params) = best.expect("at least one epoch");
    model.set_flat_params(&params)?;
    let best_metrics = split_metrics(&model, graph, x, config.direction)?;

    let mut eval_nodes = val_nodes;
    eval_nodes.extend(graph.split_nodes(Split::Test));
    let predicted = predict(&model, graph, x, &eval_nodes, config.direction)?;
    let predictions = eval_nodes
        .iter()
        .zip(predicted)
        .map(|(&v, p)| NodePrediction {
            id: graph.node(v).id.clone(),
            split: graph.split(v).expect("split node"),
            label: graph.label(v).expect("labeled node"),
            predicted: p,
        })
        .collect();

    Ok(TrainOutcome {
        record: RunRecord {
            config: config.clone(),
            error: None,
            epochs,
            best_epoch: Some(best_epoch),
            checkpoint: None,
            best: Some(best_metrics),
            last: Some(last),
            predictions,
        },
        model,
        inputs,
    })
}

/// Header fields stored next to a trained model so it can be evaluated
/// later on the same inputs.
pub fn checkpoint_extra(config: &TrainConfig, inputs: &FeatureMatrix) -> serde_json::Value {
    serde_json::json!({
        "train_config": config,
        "schema": inputs.schema(),
        "blocks": inputs.schema().iter().map(|b| b.kind).collect::<Vec<BlockKind>>(),
    })
}
