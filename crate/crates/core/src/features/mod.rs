//! Per-road feature vectors: geometric attributes, binary flags, intensity
//! histograms of road-aligned image tiles, and precomputed visual encodings.

mod embedding;
mod geometry;
mod histogram;
mod raster;
mod tile;

pub use embedding::{EmbeddingTable, VFE1_MAGIC};
pub use geometry::{bearing, planar_length, resample_geometry, LocalProjection, Resampled, METERS_PER_DEGREE_LAT};
pub use histogram::{channel_counts, histogram_features, BINS_PER_CHANNEL};
pub use raster::{GeoTransform, Raster};
pub use tile::{extract_tile, ImageTile, TILE_SIZE};

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{RoadGraph, RoadNode};
use crate::nn::Dense;

pub const DEFAULT_GEOMETRY_POINTS: usize = 10;

/// Columns with a training standard deviation below this are zeroed.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Geometric,
    Binary,
    Histogram,
    Embedding,
}

impl BlockKind {
    /// Whether standardization rescales this block.
    pub fn is_continuous(self) -> bool {
        matches!(self, BlockKind::Geometric | BlockKind::Embedding)
    }
}

impl std::str::FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Self::Geometric),
            "binary" => Ok(Self::Binary),
            "histogram" => Ok(Self::Histogram),
            "embedding" => Ok(Self::Embedding),
            other => Err(Error::InvalidInput(format!("unknown feature block {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub width: usize,
}

/// Per-column statistics from the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Dense node-feature matrix, one row per road in graph order, with a block
/// schema describing which columns came from where.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    node_ids: Vec<String>,
    schema: Vec<BlockSpec>,
    values: Dense,
    standardization: Option<Standardization>,
}

impl FeatureMatrix {
    pub fn new(node_ids: Vec<String>, schema: Vec<BlockSpec>, values: Dense) -> Result<Self> {
        let width: usize = schema.iter().map(|b| b.width).sum();
        if width != values.cols() || node_ids.len() != values.rows() {
            return Err(Error::Shape(format!(
                "{} ids and schema width {width} for a {}x{} matrix",
                node_ids.len(),
                values.rows(),
                values.cols()
            )));
        }
        Ok(Self {
            node_ids,
            schema,
            values,
            standardization: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn schema(&self) -> &[BlockSpec] {
        &self.schema
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn values(&self) -> &Dense {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn block_range(&self, kind: BlockKind) -> Option<Range<usize>> {
        let mut start = 0;
        for b in &self.schema {
            if b.kind == kind {
                return Some(start..start + b.width);
            }
            start += b.width;
        }
        None
    }

    pub fn has_block(&self, kind: BlockKind) -> bool {
        self.schema.iter().any(|b| b.kind == kind)
    }

    /// Keeps only the listed blocks, in schema order.
    pub fn select(&self, kinds: &[BlockKind]) -> Result<Self> {
        for k in kinds {
            if !self.has_block(*k) {
                return Err(Error::InvalidInput(format!("feature matrix has no {k:?} block")));
            }
        }
        let mut columns = Vec::new();
        let mut schema = Vec::new();
        let mut start = 0;
        for b in &self.schema {
            if kinds.contains(&b.kind) {
                columns.extend(start..start + b.width);
                schema.push(*b);
            }
            start += b.width;
        }
        let mut values = Dense::zeros(self.rows(), columns.len());
        for r in 0..self.rows() {
            let src = self.values.row(r);
            for (dst, &c) in values.row_mut(r).iter_mut().zip(&columns) {
                *dst = src[c];
            }
        }
        let standardization = self.standardization.as_ref().map(|s| Standardization {
            mean: columns.iter().map(|&c| s.mean[c]).collect(),
            std: columns.iter().map(|&c| s.std[c]).collect(),
        });
        Ok(Self {
            node_ids: self.node_ids.clone(),
            schema,
            values,
            standardization,
        })
    }

    /// Appends a block (`x̃ = x ⊕ block`), one row per node.
    pub fn append_block(&mut self, kind: BlockKind, block: &Dense) -> Result<()> {
        if block.rows() != self.rows() {
            return Err(Error::Shape(format!(
                "block has {} rows, matrix has {}",
                block.rows(),
                self.rows()
            )));
        }
        if self.has_block(kind) {
            return Err(Error::InvalidInput(format!("{kind:?} block already present")));
        }
        self.values = self.values.hconcat(block)?;
        self.schema.push(BlockSpec {
            kind,
            width: block.cols(),
        });
        self.standardization = None;
        Ok(())
    }

    /// Appends the embedding block looked up from `table`. Missing nodes get
    /// a zero vector; returns how many fell back.
    pub fn append_embeddings(&mut self, table: &EmbeddingTable) -> Result<usize> {
        let (block, missing) = embedding_block(&self.node_ids, table);
        self.append_block(BlockKind::Embedding, &block)?;
        Ok(missing)
    }

    /// Persists rows as VFE1 (keyed by node-id hash) plus a JSON schema
    /// sidecar next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut table = EmbeddingTable::new(self.width().max(1))?;
        let mut row32 = vec![0f32; self.width()];
        for (i, id) in self.node_ids.iter().enumerate() {
            for (d, s) in row32.iter_mut().zip(self.row(i)) {
                *d = *s as f32;
            }
            table.insert_id(id, &row32)?;
        }
        table.save_vfe1(path)?;
        let sidecar = SchemaFile {
            width: self.width(),
            rows: self.rows(),
            blocks: self.schema.clone(),
        };
        let sidecar_path = schema_path(path);
        std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar).expect("schema serializes"))
            .map_err(|e| Error::io(&sidecar_path, e))
    }

    /// Loads a persisted matrix, ordering rows by the graph's nodes.
    pub fn load(path: impl AsRef<Path>, graph: &RoadGraph) -> Result<Self> {
        let path = path.as_ref();
        let sidecar_path = schema_path(path);
        let text = std::fs::read_to_string(&sidecar_path).map_err(|e| Error::io(&sidecar_path, e))?;
        let sidecar: SchemaFile = serde_json::from_str(&text)?;
        let table = EmbeddingTable::load(path, Some(sidecar.width))?;
        let mut values = Dense::zeros(graph.len(), sidecar.width);
        for (i, node) in graph.nodes().iter().enumerate() {
            let row = table
                .get_id(&node.id)
                .ok_or_else(|| Error::UnknownNode(format!("no feature row for road {:?}", node.id)))?;
            for (d, s) in values.row_mut(i).iter_mut().zip(row) {
                *d = f64::from(*s);
            }
        }
        let ids = graph.nodes().iter().map(|n| n.id.clone()).collect();
        Self::new(ids, sidecar.blocks, values)
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    width: usize,
    rows: usize,
    blocks: Vec<BlockSpec>,
}

/// `features.vfe1` → `features.schema.json`.
pub fn schema_path(path: &Path) -> PathBuf {
    path.with_extension("schema.json")
}

fn embedding_block(node_ids: &[String], table: &EmbeddingTable) -> (Dense, usize) {
    let mut block = Dense::zeros(node_ids.len(), table.dim());
    let mut missing = 0;
    for (i, id) in node_ids.iter().enumerate() {
        match table.get_id(id) {
            Some(v) => {
                for (d, s) in block.row_mut(i).iter_mut().zip(v) {
                    *d = f64::from(*s);
                }
            }
            None => missing += 1,
        }
    }
    (block, missing)
}

/// Supplies a fixed-width histogram vector per road.
pub trait HistogramSource: Sync {
    fn width(&self) -> usize;
    fn histogram(&self, node: &RoadNode, projection: &LocalProjection) -> Result<Vec<f64>>;
}

/// Extracts road-aligned tiles from an RGB raster (and optional DSM) in the
/// same planar frame as the local projection.
#[derive(Debug, Clone)]
pub struct RasterTiles {
    pub rgb: Raster,
    pub dsm: Option<Raster>,
    pub size: usize,
}

impl RasterTiles {
    pub fn new(rgb: Raster, dsm: Option<Raster>) -> Result<Self> {
        if rgb.channels() != 3 {
            return Err(Error::InvalidInput("image raster must be RGB".into()));
        }
        if dsm.as_ref().is_some_and(|d| d.channels() != 1) {
            return Err(Error::InvalidInput("DSM raster must have one channel".into()));
        }
        Ok(Self {
            rgb,
            dsm,
            size: TILE_SIZE,
        })
    }

    /// RGB and DSM tiles for one road.
    pub fn tiles(&self, node: &RoadNode, projection: &LocalProjection) -> Result<(ImageTile, Option<ImageTile>)> {
        let (center, heading) = road_anchor(node, projection)?;
        let rgb = extract_tile(&self.rgb, center, heading, self.size)?;
        let dsm = self
            .dsm
            .as_ref()
            .map(|d| extract_tile(d, center, heading, self.size))
            .transpose()?;
        Ok((rgb, dsm))
    }
}

impl HistogramSource for RasterTiles {
    fn width(&self) -> usize {
        BINS_PER_CHANNEL * (3 + usize::from(self.dsm.is_some()))
    }

    fn histogram(&self, node: &RoadNode, projection: &LocalProjection) -> Result<Vec<f64>> {
        let (rgb, dsm) = self.tiles(node, projection)?;
        histogram_features(&rgb, dsm.as_ref())
    }
}

/// Precomputed histograms stored like embeddings.
impl HistogramSource for EmbeddingTable {
    fn width(&self) -> usize {
        self.dim()
    }

    fn histogram(&self, node: &RoadNode, _projection: &LocalProjection) -> Result<Vec<f64>> {
        self.get_id(&node.id)
            .map(|v| v.iter().map(|&x| f64::from(x)).collect())
            .ok_or_else(|| Error::UnknownNode(format!("no histogram for road {:?}", node.id)))
    }
}

/// Tile center (arc-length midpoint of the road, planar meters) and heading
/// (bearing of the road, degrees). Closed loops get heading 0.
pub fn road_anchor(node: &RoadNode, projection: &LocalProjection) -> Result<((f64, f64), f64)> {
    let line = node.polyline();
    let mid = match resample_geometry(&line, 3, projection) {
        Ok(r) => [r.offsets[1][0] + r.centroid[0], r.offsets[1][1] + r.centroid[1]],
        Err(_) => projection.project(line[0]),
    };
    let heading = bearing(&line).unwrap_or(0.0);
    Ok(((mid[0], mid[1]), heading))
}

/// Which blocks to assemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    /// Resampled geometry points; `None` drops the geometric block.
    pub geometry_points: Option<usize>,
    pub binary: bool,
    pub histogram: bool,
    /// Defaults to a projection centered on the graph's intersections.
    #[serde(default)]
    pub projection: Option<LocalProjection>,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            geometry_points: Some(DEFAULT_GEOMETRY_POINTS),
            binary: true,
            histogram: false,
            projection: None,
        }
    }
}

impl FeatureOptions {
    pub fn projection_for(&self, graph: &RoadGraph) -> LocalProjection {
        self.projection.unwrap_or_else(|| {
            LocalProjection::centered_on(
                graph
                    .nodes()
                    .iter()
                    .flat_map(|n| [&n.tail_lonlat, &n.head_lonlat]),
            )
        })
    }
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: FeatureMatrix,
    /// Nodes whose embedding was missing and replaced by zeros.
    pub missing_embeddings: usize,
}

pub fn geometric_width(points: usize) -> usize {
    5 + 2 * points
}

/// Geometric block for one road: length, sin/cos bearing, centroid
/// easting/northing, then the resampled offsets (x0, y0, x1, y1, ...).
pub fn geometric_features(node: &RoadNode, points: usize, projection: &LocalProjection) -> Result<Vec<f64>> {
    let line = node.polyline();
    let mut out = Vec::with_capacity(geometric_width(points));
    match resample_geometry(&line, points, projection) {
        Ok(r) => {
            out.push(node.attrs.length.unwrap_or(r.length));
            match bearing(&line) {
                Ok(b) => {
                    let (s, c) = b.to_radians().sin_cos();
                    out.extend([s, c]);
                }
                Err(_) => out.extend([0.0, 0.0]),
            }
            out.extend(r.centroid);
            out.extend(r.offsets.iter().flatten());
        }
        Err(_) if points >= 2 => {
            // zero-length road: all points coincide
            let p = projection.project(line[0]);
            out.push(node.attrs.length.unwrap_or(0.0));
            out.extend([0.0, 0.0, p[0], p[1]]);
            out.resize(geometric_width(points), 0.0);
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn binary_features(node: &RoadNode) -> [f64; 3] {
    let flag = |b: Option<bool>| if b.unwrap_or(false) { 1.0 } else { 0.0 };
    [flag(node.attrs.oneway), flag(node.attrs.bridge), flag(node.attrs.tunnel)]
}

/// Assembles `x̃_v = [geometric ‖ binary ‖ histogram? ‖ embedding?]` for every
/// road in graph order.
pub fn assemble_features(
    graph: &RoadGraph,
    options: &FeatureOptions,
    embeddings: Option<&EmbeddingTable>,
    histograms: Option<&dyn HistogramSource>,
) -> Result<Assembled> {
    let projection = options.projection_for(graph);
    let mut schema = Vec::new();
    if let Some(n) = options.geometry_points {
        if n < 2 {
            return Err(Error::InvalidInput("geometry needs at least 2 resampled points".into()));
        }
        schema.push(BlockSpec {
            kind: BlockKind::Geometric,
            width: geometric_width(n),
        });
    }
    if options.binary {
        schema.push(BlockSpec {
            kind: BlockKind::Binary,
            width: 3,
        });
    }
    let histograms = match (options.histogram, histograms) {
        (true, Some(h)) => {
            schema.push(BlockSpec {
                kind: BlockKind::Histogram,
                width: h.width(),
            });
            Some(h)
        }
        (true, None) => {
            return Err(Error::InvalidInput(
                "histogram block requested without a raster or histogram source".into(),
            ))
        }
        (false, _) => None,
    };
    let base_width: usize = schema.iter().map(|b| b.width).sum();

    let rows = map_indices(graph.len(), |v| -> Result<Vec<f64>> {
        let node = graph.node(v);
        let mut row = Vec::with_capacity(base_width);
        if let Some(n) = options.geometry_points {
            row.extend(geometric_features(node, n, &projection)?);
        }
        if options.binary {
            row.extend(binary_features(node));
        }
        if let Some(h) = histograms {
            let hist = h.histogram(node, &projection)?;
            if hist.len() != h.width() {
                return Err(Error::Shape(format!(
                    "histogram of length {} for road {:?}, expected {}",
                    hist.len(),
                    node.id,
                    h.width()
                )));
            }
            row.extend(hist);
        }
        Ok(row)
    });
    let mut values = Dense::zeros(graph.len(), base_width);
    for (v, row) in rows.into_iter().enumerate() {
        values.row_mut(v).copy_from_slice(&row?);
    }
    let ids = graph.nodes().iter().map(|n| n.id.clone()).collect();
    let mut matrix = FeatureMatrix::new(ids, schema, values)?;

    let mut missing_embeddings = 0;
    if let Some(table) = embeddings {
        missing_embeddings = matrix.append_embeddings(table)?;
        if missing_embeddings > 0 {
            log::warn!(
                "{missing_embeddings} of {} roads have no embedding; using zero vectors",
                graph.len()
            );
        }
    }
    Ok(Assembled {
        matrix,
        missing_embeddings,
    })
}

/// Shifts and scales continuous blocks to zero mean and unit variance over
/// the training rows. Binary and histogram blocks are left unchanged;
/// columns that are constant on the training rows become 0.
pub fn standardize(fm: &FeatureMatrix, train_mask: &[bool]) -> Result<FeatureMatrix> {
    if train_mask.len() != fm.rows() {
        return Err(Error::Shape(format!(
            "train mask of length {} for {} rows",
            train_mask.len(),
            fm.rows()
        )));
    }
    let train: Vec<usize> = (0..fm.rows()).filter(|&i| train_mask[i]).collect();
    if train.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "standardization needs at least 2 training rows, got {}",
            train.len()
        )));
    }
    let width = fm.width();
    let mut continuous = vec![false; width];
    let mut start = 0;
    for b in fm.schema() {
        if b.kind.is_continuous() {
            continuous[start..start + b.width].fill(true);
        }
        start += b.width;
    }

    let n = train.len() as f64;
    let mut mean = vec![0.0; width];
    let mut std = vec![1.0; width];
    for c in (0..width).filter(|&c| continuous[c]) {
        let m = train.iter().map(|&r| fm.row(r)[c]).sum::<f64>() / n;
        let var = train.iter().map(|&r| (fm.row(r)[c] - m).powi(2)).sum::<f64>() / n;
        mean[c] = m;
        std[c] = var.sqrt();
    }

    let mut values = fm.values().clone();
    for r in 0..values.rows() {
        for (c, x) in values.row_mut(r).iter_mut().enumerate() {
            if !continuous[c] {
                continue;
            }
            *x = if std[c] < MIN_STD { 0.0 } else { (*x - mean[c]) / std[c] };
        }
    }
    let mut out = FeatureMatrix::new(fm.node_ids.clone(), fm.schema.clone(), values)?;
    out.standardization = Some(Standardization { mean, std });
    Ok(out)
}

#[cfg(feature = "parallel")]
fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{to_dual, Intersection, PrimalGraph, Segment, SegmentAttrs, UturnPolicy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_graph() -> RoadGraph {
        let inter = |id: &str, lon: f64, lat: f64| Intersection {
            id: id.into(),
            lon,
            lat,
        };
        let seg = |u: &str, v: &str, oneway: Option<bool>, bridge: Option<bool>| Segment {
            tail: u.into(),
            head: v.into(),
            key: 0,
            attrs: SegmentAttrs {
                highway: Some("primary".into()),
                oneway,
                bridge,
                ..Default::default()
            },
        };
        let primal = PrimalGraph::new(
            vec![
                inter("A", 104.0, 30.6),
                inter("B", 104.001, 30.6),
                inter("C", 104.001, 30.601),
            ],
            vec![
                seg("A", "B", Some(true), None),
                seg("B", "C", None, Some(true)),
                seg("C", "A", Some(false), Some(false)),
            ],
        )
        .unwrap();
        to_dual(&primal, UturnPolicy::Include)
    }

    #[test]
    fn geometric_and_binary_width_28() {
        let g = small_graph();
        let a = assemble_features(&g, &FeatureOptions::default(), None, None).unwrap();
        assert_eq!(a.matrix.width(), 28);
        assert_eq!(a.matrix.schema().iter().map(|b| b.width).sum::<usize>(), 28);
        assert_eq!(a.matrix.row(0)[25..], [1.0, 0.0, 0.0]);
        assert_eq!(a.matrix.row(1)[25..], [0.0, 1.0, 0.0]);
        assert_eq!(a.matrix.row(2)[25..], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn geometric_block_contents() {
        let g = small_graph();
        let proj = LocalProjection::new(104.0, 30.6);
        let row = geometric_features(g.node(0), 10, &proj).unwrap();
        let expected_len = 0.001 * METERS_PER_DEGREE_LAT * 30.6f64.to_radians().cos();
        assert!((row[0] - expected_len).abs() < 1e-9);
        // due east: sin = 1, cos = 0
        assert!((row[1] - 1.0).abs() < 1e-12 && row[2].abs() < 1e-9);
        assert!((row[3] - expected_len / 2.0).abs() < 1e-9 && row[4].abs() < 1e-9);
        assert_eq!(row.len(), 25);
    }

    #[test]
    fn embeddings_append_and_fallback() {
        let g = small_graph();
        let mut table = EmbeddingTable::new(2048).unwrap();
        table.insert_id(&g.node(0).id, &vec![0.5; 2048]).unwrap();
        table.insert_id(&g.node(2).id, &vec![1.5; 2048]).unwrap();
        let a = assemble_features(&g, &FeatureOptions::default(), Some(&table), None).unwrap();
        assert_eq!(a.matrix.width(), 28 + 2048);
        assert_eq!(a.missing_embeddings, 1);
        let emb = a.matrix.block_range(BlockKind::Embedding).unwrap();
        assert_eq!(emb, 28..2076);
        assert!(a.matrix.row(1)[emb.clone()].iter().all(|&x| x == 0.0));
        assert!(a.matrix.row(2)[emb].iter().all(|&x| x == 1.5));
    }

    #[test]
    fn histogram_needs_source() {
        let g = small_graph();
        let opts = FeatureOptions {
            histogram: true,
            ..Default::default()
        };
        assert!(assemble_features(&g, &opts, None, None).is_err());
    }

    #[test]
    fn histogram_from_raster_adds_96() {
        let g = small_graph();
        let proj = LocalProjection::new(104.0, 30.6);
        let t = GeoTransform::from_world_file_values([0.5, 0.0, 0.0, -0.5, -50.0, 200.0]).unwrap();
        let (w, h) = (500, 500);
        let data = (0..w * h * 3).map(|i| (i % 251) as u8).collect();
        let tiles = RasterTiles::new(Raster::new(w, h, 3, data, t).unwrap(), None).unwrap();
        let opts = FeatureOptions {
            histogram: true,
            projection: Some(proj),
            ..Default::default()
        };
        let a = assemble_features(&g, &opts, None, Some(&tiles)).unwrap();
        assert_eq!(a.matrix.width(), 28 + 96);
        let hist = a.matrix.block_range(BlockKind::Histogram).unwrap();
        for v in 0..g.len() {
            for ch in a.matrix.row(v)[hist.clone()].chunks(32) {
                assert!((ch.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standardize_two_rows() {
        let values = Dense::from_rows(&[vec![0.0, 5.0, 1.0], vec![9.0, 5.0, 0.0], vec![2.0, 5.0, 1.0]]).unwrap();
        let schema = vec![
            BlockSpec {
                kind: BlockKind::Geometric,
                width: 2,
            },
            BlockSpec {
                kind: BlockKind::Binary,
                width: 1,
            },
        ];
        let fm = FeatureMatrix::new(vec!["a".into(), "b".into(), "c".into()], schema, values).unwrap();
        let s = standardize(&fm, &[true, false, true]).unwrap();
        assert_eq!(s.row(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.row(2), &[1.0, 0.0, 1.0]);
        assert_eq!(s.row(1), &[8.0, 0.0, 0.0]);
        assert!(standardize(&fm, &[false, false, false]).is_err());
    }

    #[test]
    fn standardize_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n, w) = (200, 12);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..w).map(|c| rng.random_range(-10.0..10.0) * (c + 1) as f64 + c as f64).collect())
            .collect();
        let schema = vec![BlockSpec {
            kind: BlockKind::Embedding,
            width: w,
        }];
        let fm = FeatureMatrix::new((0..n).map(|i| i.to_string()).collect(), schema, Dense::from_rows(&rows).unwrap())
            .unwrap();
        let mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        let s = standardize(&fm, &mask).unwrap();
        let train: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        for c in 0..w {
            let m = train.iter().map(|&r| s.row(r)[c]).sum::<f64>() / train.len() as f64;
            let sd = (train.iter().map(|&r| (s.row(r)[c] - m).powi(2)).sum::<f64>() / train.len() as f64).sqrt();
            assert!(m.abs() < 1e-12, "mean {m}");
            assert!((sd - 1.0).abs() < 1e-9, "std {sd}");
        }
    }

    #[test]
    fn select_blocks() {
        let g = small_graph();
        let mut table = EmbeddingTable::new(4).unwrap();
        for n in g.nodes() {
            table.insert_id(&n.id, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        }
        let a = assemble_features(&g, &FeatureOptions::default(), Some(&table), None).unwrap();
        let s = a.matrix.select(&[BlockKind::Binary, BlockKind::Embedding]).unwrap();
        assert_eq!(s.width(), 7);
        assert_eq!(s.row(0), &[1.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(a.matrix.select(&[BlockKind::Histogram]).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let g = small_graph();
        let a = assemble_features(&g, &FeatureOptions::default(), None, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.vfe1");
        a.matrix.save(&path).unwrap();
        assert!(dir.path().join("features.schema.json").exists());
        let back = FeatureMatrix::load(&path, &g).unwrap();
        assert_eq!(back.schema(), a.matrix.schema());
        for v in 0..g.len() {
            for (x, y) in back.row(v).iter().zip(a.matrix.row(v)) {
                assert_eq!(*x, f64::from(*y as f32));
            }
        }
    }
}
