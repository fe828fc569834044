use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{assemble_features, BlockKind, EmbeddingTable, FeatureMatrix, FeatureOptions, BINS_PER_CHANNEL, METERS_PER_DEGREE_LAT};
use crate::graph::{split_nodes, to_dual_with_classes, Intersection, PrimalGraph, RoadGraph, Segment, SegmentAttrs, SplitSize, SplitSpec, UturnPolicy, DEFAULT_CLASSES};
use crate::nn::Dense;

/// Class shares for the eight default road types: residential and the
/// middle tiers dominate, motorway, trunk and living streets are rare.
pub const DEFAULT_PROFILE: [f64; 8] = [0.03, 0.04, 0.14, 0.17, 0.18, 0.12, 0.30, 0.02];

const ORIGIN: [f64; 2] = [104.0, 30.6];
const BLOCK_METERS: f64 = 100.0;
const HISTOGRAM_CHANNELS: usize = 3;

/// Parameters of the synthetic road dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub nodes: usize,
    pub classes: usize,
    pub embedding_dim: usize,
    /// Class shares; `None` uses [`DEFAULT_PROFILE`] for 8 classes and a
    /// uniform profile otherwise.
    pub profile: Option<Vec<f64>>,
    pub seed: u64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    /// Distance between class means of the embedding block, in units of the
    /// per-node noise standard deviation.
    pub embedding_separation: f64,
    /// Standard deviation, in bins, of the per-node jitter of a class's
    /// histogram peak.
    pub histogram_jitter: f64,
    /// Relative length difference between the shortest and longest class.
    pub length_effect: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            nodes: 2000,
            classes: 8,
            embedding_dim: 64,
            profile: None,
            seed: 0,
            val_fraction: 0.1,
            test_fraction: 0.1,
            embedding_separation: 5.0,
            histogram_jitter: 4.0,
            length_effect: 0.3,
        }
    }
}

/// A generated graph with labels and splits, its attribute and histogram
/// blocks, and per-road embeddings.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub graph: RoadGraph,
    /// Geometric, binary and histogram blocks.
    pub features: FeatureMatrix,
    pub embeddings: EmbeddingTable,
}

impl SyntheticDataset {
    /// The histogram block as a per-road table, the format accepted as a
    /// precomputed histogram source.
    pub fn histogram_table(&self) -> Result<EmbeddingTable> {
        let range = self
            .features
            .block_range(BlockKind::Histogram)
            .ok_or_else(|| Error::InvalidInput("synthetic features lack a histogram block".into()))?;
        let mut table = EmbeddingTable::new(range.len())?;
        let mut row = vec![0f32; range.len()];
        for (i, id) in self.features.node_ids().iter().enumerate() {
            for (d, s) in row.iter_mut().zip(&self.features.row(i)[range.clone()]) {
                *d = *s as f32;
            }
            table.insert_id(id, &row)?;
        }
        Ok(table)
    }

    /// Writes `graph.json`, `features.vfe` (with its schema sidecar),
    /// `histograms.vfe` and `embeddings.vfe` into `dir`. Returns the written
    /// paths.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let graph = dir.join("graph.json");
        self.graph.write_json_file(&graph)?;
        let features = dir.join("features.vfe");
        self.features.save(&features)?;
        let histograms = dir.join("histograms.vfe");
        self.histogram_table()?.save_vfe1(&histograms)?;
        let embeddings = dir.join("embeddings.vfe");
        self.embeddings.save_vfe1(&embeddings)?;
        Ok(vec![graph, features.clone(), crate::features::schema_path(&features), histograms, embeddings])
    }
}

/// Exact per-class counts for `n` nodes by largest remainder.
pub fn class_counts(profile: &[f64], n: usize) -> Result<Vec<usize>> {
    if profile.is_empty() || profile.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidInput("class profile must be non-empty and non-negative".into()));
    }
    let total: f64 = profile.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("class profile sums to zero".into()));
    }
    let exact: Vec<f64> = profile.iter().map(|p| p / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..profile.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        counts[c] += 1;
    }
    Ok(counts)
}

/// Builds a grid of two-way streets, keeps the first `nodes` directed
/// segments, and plants labels with the requested class shares. Attributes
/// carry a weak class signal, histograms a moderate one and embeddings a
/// strong one.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SyntheticDataset> {
    let c = config.classes;
    if c == 0 || config.nodes < 10 * c {
        return Err(Error::InvalidInput(format!(
            "{} nodes for {c} classes; need at least 10 per class",
            config.nodes
        )));
    }
    if config.embedding_dim == 0 {
        return Err(Error::InvalidInput("embedding_dim must be >= 1".into()));
    }
    let profile = match &config.profile {
        Some(p) if p.len() != c => {
            return Err(Error::Shape(format!("profile has {} shares for {c} classes", p.len())))
        }
        Some(p) => p.clone(),
        None if c == DEFAULT_PROFILE.len() => DEFAULT_PROFILE.to_vec(),
        None => vec![1.0; c],
    };
    let counts = class_counts(&profile, config.nodes)?;
    let class_names: Vec<String> = if c == DEFAULT_CLASSES.len() {
        DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..c).map(|i| format!("class{i}")).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
    labels.shuffle(&mut rng);

    let primal = grid_network(config.nodes, &labels, &class_names, config.length_effect, &mut rng)?;
    let graph = to_dual_with_classes(&primal, UturnPolicy::Include, class_names);
    let graph = split_nodes(
        graph,
        &SplitSpec {
            seed: config.seed,
            val: SplitSize::Fraction(config.val_fraction),
            test: SplitSize::Fraction(config.test_fraction),
        },
    )?;

    let mut features = assemble_features(&graph, &FeatureOptions::default(), None, None)?.matrix;
    let histograms = histogram_block(&graph, config.histogram_jitter, &mut rng);
    features.append_block(BlockKind::Histogram, &histograms)?;
    let embeddings = embedding_table(&graph, config.embedding_dim, config.embedding_separation, &mut rng)?;
    Ok(SyntheticDataset {
        graph,
        features,
        embeddings,
    })
}

fn grid_network(
    n: usize,
    labels: &[usize],
    class_names: &[String],
    length_effect: f64,
    rng: &mut impl Rng,
) -> Result<PrimalGraph> {
    // a k×k grid has 4k(k−1) directed street segments
    let mut k = 2;
    while 4 * k * (k - 1) < n {
        k += 1;
    }
    let dlat = BLOCK_METERS / METERS_PER_DEGREE_LAT;
    let dlon = dlat / ORIGIN[1].to_radians().cos();
    let jitter = 0.1;
    let mut intersections = Vec::with_capacity(k * k);
    for row in 0..k {
        for col in 0..k {
            let jx: f64 = rng.random_range(-jitter..jitter);
            let jy: f64 = rng.random_range(-jitter..jitter);
            intersections.push(Intersection {
                id: format!("{row}_{col}"),
                lon: ORIGIN[0] + (col as f64 + jx) * dlon,
                lat: ORIGIN[1] + (row as f64 + jy) * dlat,
            });
        }
    }
    let mut pairs = Vec::with_capacity(4 * k * (k - 1));
    for row in 0..k {
        for col in 0..k {
            if col + 1 < k {
                pairs.push(((row, col), (row, col + 1)));
                pairs.push(((row, col + 1), (row, col)));
            }
            if row + 1 < k {
                pairs.push(((row, col), (row + 1, col)));
                pairs.push(((row + 1, col), (row, col)));
            }
        }
    }
    pairs.truncate(n);

    let c = class_names.len();
    let oneway_rate = |y: usize| 0.5 - 0.4 * y as f64 / (c - 1).max(1) as f64;
    let segments = pairs
        .iter()
        .zip(labels)
        .map(|(&((r0, c0), (r1, c1)), &y)| {
            let a = &intersections[r0 * k + c0];
            let b = &intersections[r1 * k + c1];
            let dx = (b.lon - a.lon) * ORIGIN[1].to_radians().cos() * METERS_PER_DEGREE_LAT;
            let dy = (b.lat - a.lat) * METERS_PER_DEGREE_LAT;
            let scale = 1.0 + length_effect * (y as f64 / (c - 1).max(1) as f64 - 0.5);
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * 0.15;
            Segment {
                tail: a.id.clone(),
                head: b.id.clone(),
                key: 0,
                attrs: SegmentAttrs {
                    highway: Some(class_names[y].clone()),
                    length: Some((dx.hypot(dy) * (scale + noise)).max(1.0)),
                    oneway: Some(rng.random_bool(oneway_rate(y))),
                    bridge: Some(rng.random_bool(if y < 2 { 0.1 } else { 0.02 })),
                    tunnel: Some(rng.random_bool(0.02)),
                    geometry: None,
                },
            }
        })
        .collect();
    PrimalGraph::new(intersections, segments)
}

/// Three 32-bin channels per road. Each class has a fixed peak bin per
/// channel; each road jitters it and spreads mass around it.
fn histogram_block(graph: &RoadGraph, jitter: f64, rng: &mut impl Rng) -> Dense {
    let c = graph.num_classes();
    let bins = BINS_PER_CHANNEL as f64;
    let peaks: Vec<[f64; HISTOGRAM_CHANNELS]> = (0..c)
        .map(|_| std::array::from_fn(|_| rng.random_range(4.0..bins - 4.0)))
        .collect();
    let mut out = Dense::zeros(graph.len(), HISTOGRAM_CHANNELS * BINS_PER_CHANNEL);
    for v in 0..graph.len() {
        let y = graph.label(v).expect("synthetic roads are labeled");
        let row = out.row_mut(v);
        for (ch, chunk) in row.chunks_exact_mut(BINS_PER_CHANNEL).enumerate() {
            let centre = peaks[y][ch] + jitter * rng.sample::<f64, _>(StandardNormal);
            let width = rng.random_range(2.0..4.0);
            let mut total = 0.0;
            for (b, x) in chunk.iter_mut().enumerate() {
                let z = (b as f64 - centre) / width;
                *x = (-0.5 * z * z).exp() + 0.02 * rng.random::<f64>();
                total += *x;
            }
            chunk.iter_mut().for_each(|x| *x /= total);
        }
    }
    out
}

/// Class-mean Gaussians: means are drawn once per class with norm around
/// `separation / √2`, each road adds unit-variance noise.
fn embedding_table(graph: &RoadGraph, dim: usize, separation: f64, rng: &mut impl Rng) -> Result<EmbeddingTable> {
    let c = graph.num_classes();
    let scale = separation / (2.0 * dim as f64).sqrt();
    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut table = EmbeddingTable::new(dim)?;
    let mut row = vec![0f32; dim];
    for (v, node) in graph.nodes().iter().enumerate() {
        let y = graph.label(v).expect("synthetic roads are labeled");
        for (x, m) in row.iter_mut().zip(&means[y]) {
            *x = (m + rng.sample::<f64, _>(StandardNormal)) as f32;
        }
        table.insert_id(&node.id, &row)?;
    }
    Ok(table)
}
