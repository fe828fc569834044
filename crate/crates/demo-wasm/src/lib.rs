//! Browser bindings for the demo page. Tiles are cut from a procedurally
//! drawn scene; training runs use a small synthetic road network.
//!
//! Each exported function wraps a plain Rust function of the same name with
//! an `_impl` suffix so the logic can be tested natively.

use roadgnn::features::{extract_tile, GeoTransform, TILE_SIZE};
use roadgnn::nn::OptimizerState;
use roadgnn::training::{generate_synthetic, train, SynthConfig};
use roadgnn::{BlockKind, Raster, TrainConfig, Variant};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Side of the square scene, in meters (one pixel per meter).
const SCENE: usize = 400;
const ROAD_HALF_WIDTH: f64 = 7.0;
const MAX_DEMO_NODES: usize = 1500;
const MAX_DEMO_EPOCHS: usize = 40;

/// Deterministic per-pixel texture in 0..1.
fn noise(col: usize, row: usize) -> f64 {
    let mut h = (col as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (row as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 32;
    (h % 1024) as f64 / 1023.0
}

/// An RGB scene centered on the origin with a straight road through it at
/// `road_bearing` degrees clockwise from north: asphalt with a dashed center
/// line, flanked by grass and a row of roofs on one side.
pub fn scene(road_bearing: f64) -> Raster {
    let half = SCENE as f64 / 2.0;
    let (s, c) = road_bearing.to_radians().sin_cos();
    let mut data = Vec::with_capacity(SCENE * SCENE * 3);
    for row in 0..SCENE {
        for col in 0..SCENE {
            let x = col as f64 + 0.5 - half;
            let y = half - (row as f64 + 0.5);
            // across: signed distance to the road axis; along: position on it
            let across = x * c - y * s;
            let along = x * s + y * c;
            let n = noise(col, row);
            let rgb = if across.abs() < 0.8 && along.rem_euclid(12.0) < 6.0 {
                [235.0, 235.0, 220.0]
            } else if across.abs() < ROAD_HALF_WIDTH {
                let g = 95.0 + 20.0 * n;
                [g, g, g + 5.0]
            } else if across > 16.0 && across < 36.0 && along.rem_euclid(30.0) < 22.0 {
                [160.0 + 30.0 * n, 70.0 + 15.0 * n, 55.0]
            } else {
                [60.0 + 25.0 * n, 110.0 + 40.0 * n, 50.0 + 20.0 * n]
            };
            data.extend(rgb.map(|v: f64| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    let transform = GeoTransform::from_world_file_values([1.0, 0.0, 0.0, -1.0, -half + 0.5, half - 0.5])
        .expect("fixed transform is invertible");
    Raster::new(SCENE, SCENE, 3, data, transform).expect("scene buffer matches its size")
}

/// RGBA pixels of the tile centered on the scene origin, rotated by
/// `heading`. With `heading == road_bearing` the road runs straight up the
/// tile.
pub fn render_tile_impl(road_bearing: f64, heading: f64) -> Result<Vec<u8>, String> {
    if !road_bearing.is_finite() || !heading.is_finite() {
        return Err("angles must be finite".into());
    }
    let tile = extract_tile(&scene(road_bearing), (0.0, 0.0), heading, TILE_SIZE).map_err(|e| e.to_string())?;
    let mut rgba = Vec::with_capacity(TILE_SIZE * TILE_SIZE * 4);
    for px in tile.pixels().chunks_exact(3) {
        rgba.extend_from_slice(px);
        rgba.push(255);
    }
    Ok(rgba)
}

/// Learning rate at each epoch of a run.
pub fn lr_curve_impl(lr: f64, gamma: f64, epochs: usize) -> Result<Vec<f64>, String> {
    let state = OptimizerState::new(lr, 0.0, 0.0, gamma).map_err(|e| e.to_string())?;
    Ok((0..epochs).map(|e| state.lr_at(e)).collect())
}

#[derive(Debug, Serialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_micro_f1: f64,
}

#[derive(Debug, Serialize)]
pub struct DemoRun {
    pub nodes: usize,
    pub feature_width: usize,
    pub epochs: Vec<EpochPoint>,
    pub best_epoch: Option<usize>,
    pub val_micro_f1: Option<f64>,
    pub test_micro_f1: Option<f64>,
}

/// Generates a synthetic road network and trains a small model on it.
/// `blocks` is a comma-separated subset of geometric, binary, histogram and
/// embedding.
pub fn train_synthetic_impl(
    nodes: usize,
    epochs: usize,
    hidden: usize,
    variant: &str,
    blocks: &str,
    seed: u64,
) -> Result<DemoRun, String> {
    if !(100..=MAX_DEMO_NODES).contains(&nodes) {
        return Err(format!("nodes must be in [100, {MAX_DEMO_NODES}]"));
    }
    if !(1..=MAX_DEMO_EPOCHS).contains(&epochs) {
        return Err(format!("epochs must be in [1, {MAX_DEMO_EPOCHS}]"));
    }
    let variant: Variant = variant.parse().map_err(|e: roadgnn::Error| e.to_string())?;
    let blocks = blocks
        .split(',')
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .map(|b| b.parse::<BlockKind>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;

    let data = generate_synthetic(&SynthConfig {
        nodes,
        embedding_dim: 16,
        seed,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let mut features = data.features;
    features.append_embeddings(&data.embeddings).map_err(|e| e.to_string())?;

    let config = TrainConfig {
        variant,
        hidden,
        epochs,
        fanouts: vec![10, 5],
        seed,
        blocks: Some(blocks),
        ..TrainConfig::default()
    };
    config.validate().map_err(|e| e.to_string())?;
    let outcome = train(&config, &data.graph, &features).map_err(|e| e.to_string())?;
    let record = outcome.record;
    Ok(DemoRun {
        nodes: data.graph.len(),
        feature_width: outcome.inputs.width(),
        epochs: record
            .epochs
            .iter()
            .map(|e| EpochPoint {
                epoch: e.epoch,
                lr: e.lr,
                train_loss: e.train_loss,
                val_micro_f1: e.val_micro_f1,
            })
            .collect(),
        best_epoch: record.best_epoch,
        val_micro_f1: record.best_val_micro_f1(),
        test_micro_f1: record.best_test_micro_f1(),
    })
}

#[wasm_bindgen]
pub fn tile_size() -> usize {
    TILE_SIZE
}

#[wasm_bindgen]
pub fn render_tile(road_bearing: f64, heading: f64) -> Result<Vec<u8>, JsError> {
    render_tile_impl(road_bearing, heading).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lr_curve(lr: f64, gamma: f64, epochs: usize) -> Result<Vec<f64>, JsError> {
    lr_curve_impl(lr, gamma, epochs).map_err(|e| JsError::new(&e))
}

/// Returns the run as a JSON string.
#[wasm_bindgen]
pub fn train_synthetic(
    nodes: usize,
    epochs: usize,
    hidden: usize,
    variant: &str,
    blocks: &str,
    seed: u64,
) -> Result<String, JsError> {
    let run = train_synthetic_impl(nodes, epochs, hidden, variant, blocks, seed).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&run).map_err(|e| JsError::new(&e.to_string()))
}
