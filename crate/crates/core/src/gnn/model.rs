use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{BlockLayer, SampledBlock};
use crate::error::{Error, Result};
use crate::nn::{self, checkpoint, Dense, LinearGrad, LinearLayer, Mode, ParamSlot};

/// Which self/neighbor combination a layer uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Self is averaged together with the neighbors.
    Gcn,
    /// Self is concatenated with the neighbor mean.
    #[default]
    Sage,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Self::Gcn),
            "sage" | "graphsage" => Ok(Self::Sage),
            other => Err(Error::InvalidInput(format!("unknown GNN variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Gcn => "gcn",
            Variant::Sage => "sage",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub variant: Variant,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub depth: usize,
    pub num_classes: usize,
    pub dropout: f64,
}

static MODEL_VERSION: AtomicU64 = AtomicU64::new(1);

fn next_version() -> u64 {
    MODEL_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// K stacked message-passing layers with ReLU, dropout between depths, and a
/// linear classifier on the final node representation.
#[derive(Debug)]
pub struct GnnModel {
    variant: Variant,
    layers: Vec<LinearLayer>,
    classifier: LinearLayer,
    dropout: f64,
    /// Changes whenever parameters change; ties forward caches to a snapshot.
    version: u64,
}

impl Clone for GnnModel {
    fn clone(&self) -> Self {
        Self {
            variant: self.variant,
            layers: self.layers.clone(),
            classifier: self.classifier.clone(),
            dropout: self.dropout,
            version: next_version(),
        }
    }
}

impl PartialEq for GnnModel {
    fn eq(&self, other: &Self) -> bool {
        self.variant == other.variant
            && self.layers == other.layers
            && self.classifier == other.classifier
            && self.dropout == other.dropout
    }
}

/// Gradients for every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnGrads {
    pub layers: Vec<LinearGrad>,
    pub classifier: LinearGrad,
}

impl GnnGrads {
    /// Flattened in parameter declaration order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in self.layers.iter().chain(std::iter::once(&self.classifier)) {
            out.extend_from_slice(g.weight.data());
            out.extend_from_slice(&g.bias);
        }
        out
    }
}

/// Intermediate values of one forward pass, needed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    model_version: u64,
    layers: Vec<LayerCache>,
    /// Classifier input (final representation after dropout).
    classifier_input: Dense,
    classifier_mask: Option<Dense>,
    /// Latent representations `z` of the block targets.
    pub z: Dense,
    pub logits: Dense,
}

#[derive(Debug, Clone)]
struct LayerCache {
    /// Dropout multipliers applied to this layer's input rows, if any.
    input_mask: Option<Dense>,
    aggregated: Dense,
    pre_activation: Dense,
    self_rows: Vec<usize>,
    neighbor_rows: Vec<Vec<usize>>,
    input_rows: usize,
}

impl GnnModel {
    pub fn new(config: &GnnConfig, rng: &mut impl Rng) -> Result<Self> {
        if config.depth == 0 || config.input_dim == 0 || config.hidden_dim == 0 || config.num_classes == 0 {
            return Err(Error::InvalidInput(format!("degenerate model configuration {config:?}")));
        }
        let mut layers = Vec::with_capacity(config.depth);
        let mut dim = config.input_dim;
        for _ in 0..config.depth {
            let in_dim = match config.variant {
                Variant::Gcn => dim,
                Variant::Sage => 2 * dim,
            };
            layers.push(LinearLayer::init(in_dim, config.hidden_dim, rng));
            dim = config.hidden_dim;
        }
        let classifier = LinearLayer::init(dim, config.num_classes, rng);
        Self::from_parts(config.variant, layers, classifier, config.dropout)
    }

    pub fn from_parts(variant: Variant, layers: Vec<LinearLayer>, classifier: LinearLayer, dropout: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("a GNN needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidInput(format!("dropout rate {dropout} outside [0, 1)")));
        }
        let factor = match variant {
            Variant::Gcn => 1,
            Variant::Sage => 2,
        };
        for k in 1..layers.len() {
            if layers[k].in_dim() != factor * layers[k - 1].out_dim() {
                return Err(Error::Shape(format!(
                    "layer {} in-dim {} does not fit previous out-dim {} ({variant})",
                    k + 1,
                    layers[k].in_dim(),
                    layers[k - 1].out_dim()
                )));
            }
        }
        if !layers[0].in_dim().is_multiple_of(factor) {
            return Err(Error::Shape(format!("SAGE in-dim {} must be even", layers[0].in_dim())));
        }
        let last = layers.last().expect("non-empty").out_dim();
        if classifier.in_dim() != last {
            return Err(Error::Shape(format!(
                "classifier in-dim {} does not match final layer out-dim {last}",
                classifier.in_dim()
            )));
        }
        Ok(Self {
            variant,
            layers,
            classifier,
            dropout,
            version: next_version(),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn layers(&self) -> &[LinearLayer] {
        &self.layers
    }

    pub fn classifier(&self) -> &LinearLayer {
        &self.classifier
    }

    pub fn input_dim(&self) -> usize {
        match self.variant {
            Variant::Gcn => self.layers[0].in_dim(),
            Variant::Sage => self.layers[0].in_dim() / 2,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].out_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LinearLayer::param_count).sum::<usize>() + self.classifier.param_count()
    }

    fn all_layers(&self) -> impl Iterator<Item = &LinearLayer> {
        self.layers.iter().chain(std::iter::once(&self.classifier))
    }

    /// Parameters flattened in declaration order: each layer's weight then
    /// bias, the classifier last.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.all_layers() {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "{} parameters for a model with {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for l in self.layers.iter_mut().chain(std::iter::once(&mut self.classifier)) {
            let w = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[offset..offset + w]);
            offset += w;
            let b = l.bias.len();
            l.bias.copy_from_slice(&flat[offset..offset + b]);
            offset += b;
        }
        self.version = next_version();
        Ok(())
    }

    /// Parameter/gradient pairs for the optimizer. Invalidates earlier
    /// forward caches.
    pub fn param_slots<'a>(&'a mut self, grads: &'a GnnGrads) -> Result<Vec<ParamSlot<'a>>> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Shape("gradient layer count differs from model".into()));
        }
        self.version = next_version();
        let mut slots = Vec::with_capacity(2 * (self.layers.len() + 1));
        let layer_grads = grads.layers.iter().chain(std::iter::once(&grads.classifier));
        for (l, g) in self
            .layers
            .iter_mut()
            .chain(std::iter::once(&mut self.classifier))
            .zip(layer_grads)
        {
            slots.push(ParamSlot {
                values: l.weight.data_mut(),
                grad: g.weight.data(),
                decay: true,
            });
            slots.push(ParamSlot {
                values: &mut l.bias,
                grad: &g.bias,
                decay: false,
            });
        }
        Ok(slots)
    }

    /// Runs the block's layers. `features` rows are indexed by node id.
    /// Returns the cache holding `z` (block targets) and the class logits.
    pub fn forward(&self, features: &Dense, block: &SampledBlock, mode: Mode, rng: &mut impl Rng) -> Result<ForwardCache> {
        if block.depth() != self.depth() {
            return Err(Error::Shape(format!(
                "block depth {} for a {}-layer model",
                block.depth(),
                self.depth()
            )));
        }
        if features.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "features have {} columns, model expects {}",
                features.cols(),
                self.input_dim()
            )));
        }
        if let Some(&missing) = block.input_nodes.iter().find(|&&v| v >= features.rows()) {
            return Err(Error::UnknownNode(format!("no feature row for node {missing}")));
        }

        let mut h = features.gather_rows(&block.input_nodes);
        let mut caches = Vec::with_capacity(self.depth());
        for (k, (layer, bl)) in self.layers.iter().zip(&block.layers).enumerate() {
            let input_mask = if k > 0 && mode == Mode::Train && self.dropout > 0.0 {
                let (dropped, mask) = nn::dropout(&h, self.dropout, mode, rng)?;
                h = dropped;
                Some(mask)
            } else {
                None
            };
            let aggregated = aggregate_block(self.variant, &h, bl);
            let pre_activation = layer.forward(&aggregated)?;
            caches.push(LayerCache {
                input_mask,
                aggregated,
                pre_activation: pre_activation.clone(),
                self_rows: bl.self_rows.clone(),
                neighbor_rows: bl.neighbor_rows.clone(),
                input_rows: h.rows(),
            });
            h = nn::relu(&pre_activation);
        }
        let z = h;
        let (classifier_input, classifier_mask) = if mode == Mode::Train && self.dropout > 0.0 {
            let (dropped, mask) = nn::dropout(&z, self.dropout, mode, rng)?;
            (dropped, Some(mask))
        } else {
            (z.clone(), None)
        };
        let logits = self.classifier.forward(&classifier_input)?;
        Ok(ForwardCache {
            model_version: self.version,
            layers: caches,
            classifier_input,
            classifier_mask,
            z,
            logits,
        })
    }

    /// Exact gradients of a loss with respect to every parameter, given
    /// ∂L/∂logits for the block targets.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Dense) -> Result<GnnGrads> {
        if cache.model_version != self.version {
            return Err(Error::InvalidInput(
                "stale forward cache: model parameters changed since the forward pass".into(),
            ));
        }
        if grad_logits.shape() != cache.logits.shape() {
            return Err(Error::Shape(format!(
                "logit gradient {:?} for logits {:?}",
                grad_logits.shape(),
                cache.logits.shape()
            )));
        }
        let (classifier, mut grad_h) = self.classifier.backward(&cache.classifier_input, grad_logits)?;
        if let Some(mask) = &cache.classifier_mask {
            grad_h = nn::dropout_backward(mask, &grad_h)?;
        }
        let mut layer_grads = Vec::with_capacity(self.depth());
        for (k, (layer, lc)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            let grad_pre = nn::relu_backward(&lc.pre_activation, &grad_h)?;
            let (grads, grad_agg) = layer.backward(&lc.aggregated, &grad_pre)?;
            layer_grads.push(grads);
            if k == 0 {
                break;
            }
            let mut grad_in = scatter_block(self.variant, &grad_agg, lc);
            if let Some(mask) = &lc.input_mask {
                grad_in = nn::dropout_backward(mask, &grad_in)?;
            }
            grad_h = grad_in;
        }
        layer_grads.reverse();
        Ok(GnnGrads {
            layers: layer_grads,
            classifier,
        })
    }

    fn header(&self, extra: Option<&serde_json::Value>) -> serde_json::Value {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(LinearLayer::out_dim));
        let mut header = serde_json::json!({
            "variant": self.variant,
            "dims": dims,
            "dropout": self.dropout,
            "classes": self.num_classes(),
        });
        if let (Some(serde_json::Value::Object(extra)), serde_json::Value::Object(h)) = (extra, &mut header) {
            for (k, v) in extra {
                h.entry(k.clone()).or_insert_with(|| v.clone());
            }
        }
        header
    }

    /// Serializes to the `RGN1` checkpoint format. `extra` fields are merged
    /// into the JSON header.
    pub fn to_checkpoint_bytes(&self, extra: Option<&serde_json::Value>) -> Vec<u8> {
        checkpoint::encode(&self.header(extra), &self.flat_params())
    }

    pub fn save(&self, path: impl AsRef<Path>, extra: Option<&serde_json::Value>) -> Result<()> {
        checkpoint::save(path, &self.header(extra), &self.flat_params())
    }

    /// Returns the model and the full JSON header.
    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<(Self, serde_json::Value)> {
        let (header, params) = checkpoint::decode(bytes)?;
        let model = Self::from_header(&header, &params)?;
        Ok((model, header))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, serde_json::Value)> {
        let (header, params) = checkpoint::load(path)?;
        let model = Self::from_header(&header, &params)?;
        Ok((model, header))
    }

    fn from_header(header: &serde_json::Value, params: &[f64]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            variant: Variant,
            dims: Vec<usize>,
            dropout: f64,
            classes: usize,
        }
        let h: Header = serde_json::from_value(header.clone())?;
        if h.dims.len() < 2 {
            return Err(Error::Format("checkpoint dims need input and at least one layer".into()));
        }
        let factor = match h.variant {
            Variant::Gcn => 1,
            Variant::Sage => 2,
        };
        let mut layers = Vec::new();
        for w in h.dims.windows(2) {
            layers.push(LinearLayer::new(Dense::zeros(w[1], factor * w[0]), vec![0.0; w[1]])?);
        }
        let last = *h.dims.last().expect("non-empty");
        let classifier = LinearLayer::new(Dense::zeros(h.classes, last), vec![0.0; h.classes])?;
        let mut model = Self::from_parts(h.variant, layers, classifier, h.dropout)?;
        model.set_flat_params(params)?;
        Ok(model)
    }
}

/// Builds the aggregated input rows for one layer.
fn aggregate_block(variant: Variant, h: &Dense, bl: &BlockLayer) -> Dense {
    let d = h.cols();
    let n = bl.self_rows.len();
    match variant {
        Variant::Gcn => {
            let mut out = Dense::zeros(n, d);
            for (i, (&s, nbrs)) in bl.self_rows.iter().zip(&bl.neighbor_rows).enumerate() {
                let row = out.row_mut(i);
                row.copy_from_slice(h.row(s));
                for &r in nbrs {
                    row.iter_mut().zip(h.row(r)).for_each(|(o, x)| *o += x);
                }
                let inv = 1.0 / (nbrs.len() + 1) as f64;
                row.iter_mut().for_each(|o| *o *= inv);
            }
            out
        }
        Variant::Sage => {
            let mut out = Dense::zeros(n, 2 * d);
            for (i, (&s, nbrs)) in bl.self_rows.iter().zip(&bl.neighbor_rows).enumerate() {
                let row = out.row_mut(i);
                row[..d].copy_from_slice(h.row(s));
                if nbrs.is_empty() {
                    continue;
                }
                let mean = &mut row[d..];
                for &r in nbrs {
                    mean.iter_mut().zip(h.row(r)).for_each(|(o, x)| *o += x);
                }
                let inv = 1.0 / nbrs.len() as f64;
                mean.iter_mut().for_each(|o| *o *= inv);
            }
            out
        }
    }
}

/// Transpose of [`aggregate_block`]: routes ∂L/∂aggregate back to the
/// previous level's rows.
fn scatter_block(variant: Variant, grad_agg: &Dense, lc: &LayerCache) -> Dense {
    let d = match variant {
        Variant::Gcn => grad_agg.cols(),
        Variant::Sage => grad_agg.cols() / 2,
    };
    let mut out = Dense::zeros(lc.input_rows, d);
    for (i, (&s, nbrs)) in lc.self_rows.iter().zip(&lc.neighbor_rows).enumerate() {
        let g = grad_agg.row(i);
        match variant {
            Variant::Gcn => {
                let inv = 1.0 / (nbrs.len() + 1) as f64;
                for &r in std::iter::once(&s).chain(nbrs) {
                    out.row_mut(r).iter_mut().zip(g).for_each(|(o, x)| *o += x * inv);
                }
            }
            Variant::Sage => {
                out.row_mut(s).iter_mut().zip(&g[..d]).for_each(|(o, x)| *o += x);
                if nbrs.is_empty() {
                    continue;
                }
                let inv = 1.0 / nbrs.len() as f64;
                for &r in nbrs {
                    out.row_mut(r).iter_mut().zip(&g[d..]).for_each(|(o, x)| *o += x * inv);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::sampling::{full_block, sample_neighborhood};
    use crate::gnn::test_util::{random_dense, random_graph};
    use crate::graph::Direction;
    use crate::nn::{gradient_check, softmax_cross_entropy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(variant: Variant, input_dim: usize) -> GnnConfig {
        GnnConfig {
            variant,
            input_dim,
            hidden_dim: 16,
            depth: 2,
            num_classes: 8,
            dropout: 0.0,
        }
    }

    fn identity_layer(out: usize, input: usize) -> LinearLayer {
        let mut w = Dense::zeros(out, input);
        for i in 0..out.min(input) {
            w.set(i, i, 1.0);
        }
        LinearLayer::new(w, vec![0.0; out]).unwrap()
    }

    #[test]
    fn dims_follow_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sage = GnnModel::new(&config(Variant::Sage, 10), &mut rng).unwrap();
        assert_eq!(sage.layers()[0].in_dim(), 20);
        assert_eq!(sage.layers()[1].in_dim(), 32);
        assert_eq!(sage.classifier().in_dim(), 16);
        let gcn = GnnModel::new(&config(Variant::Gcn, 10), &mut rng).unwrap();
        assert_eq!(gcn.layers()[0].in_dim(), 10);
        assert_eq!(gcn.layers()[1].in_dim(), 16);
        assert!(GnnModel::from_parts(Variant::Sage, vec![identity_layer(4, 4), identity_layer(4, 4)], identity_layer(8, 4), 0.0).is_err());
    }

    #[test]
    fn isolated_node_closed_form() {
        // SAGE with identity weights: layer 1 sees [x, 0], layer 2 sees [relu(x), 0, 0, 0]
        let g = random_graph(1, 0, 0);
        let x = Dense::from_rows(&[vec![2.0, -1.0]]).unwrap();
        let model = GnnModel::from_parts(
            Variant::Sage,
            vec![identity_layer(4, 4), identity_layer(4, 8)],
            identity_layer(8, 4),
            0.0,
        )
        .unwrap();
        let block = full_block(&g, &[0], 2, Direction::Both).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = model.forward(&x, &block, Mode::Eval, &mut rng).unwrap();
        assert_eq!(out.z.row(0), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(out.logits.row(0), &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn eval_is_deterministic() {
        let g = random_graph(30, 80, 1);
        let x = random_dense(30, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfg = config(Variant::Sage, 6);
        cfg.dropout = 0.3;
        let model = GnnModel::new(&cfg, &mut rng).unwrap();
        let block = sample_neighborhood(&g, &[0, 1, 2], &[3, 3], Direction::Both, &mut rng).unwrap();
        let a = model.forward(&x, &block, Mode::Eval, &mut rng).unwrap();
        let b = model.forward(&x, &block, Mode::Eval, &mut rng).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    fn check_gradients(variant: Variant, dropout: f64) -> f64 {
        let g = random_graph(30, 70, 11);
        let x = random_dense(30, 7, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut cfg = config(variant, 7);
        cfg.dropout = dropout;
        let model = GnnModel::new(&cfg, &mut rng).unwrap();
        let targets: Vec<usize> = (0..30).step_by(2).collect();
        let block = sample_neighborhood(&g, &targets, &[3, 2], Direction::Both, &mut rng).unwrap();
        let labels: Vec<usize> = targets.iter().map(|t| t % 8).collect();
        let seed = 99;
        let loss_at = |m: &GnnModel| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let out = m.forward(&x, &block, Mode::Train, &mut r).unwrap();
            softmax_cross_entropy(&out.logits, &labels).unwrap()
        };
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cache = model.forward(&x, &block, Mode::Train, &mut r).unwrap();
        let (_, grad_logits) = softmax_cross_entropy(&cache.logits, &labels).unwrap();
        let analytic = model.backward(&cache, &grad_logits).unwrap().flatten();
        let mut flat = model.flat_params();
        let mut probe = model.clone();
        let report = gradient_check(
            &mut flat,
            &analytic,
            |p| {
                probe.set_flat_params(p).unwrap();
                loss_at(&probe).0
            },
            300,
            &mut rng,
        );
        report.max_rel_error
    }

    #[test]
    fn gcn_gradients() {
        let err = check_gradients(Variant::Gcn, 0.0);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn sage_gradients() {
        let err = check_gradients(Variant::Sage, 0.0);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn gradients_with_fixed_dropout_masks() {
        assert!(check_gradients(Variant::Sage, 0.3) < 1e-4);
        assert!(check_gradients(Variant::Gcn, 0.3) < 1e-4);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let g = random_graph(20, 50, 1);
        let x = random_dense(20, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GnnModel::new(&config(Variant::Gcn, 5), &mut rng).unwrap();
        let block = full_block(&g, &[0, 4, 7], 2, Direction::Both).unwrap();
        let cache = model.forward(&x, &block, Mode::Eval, &mut rng).unwrap();
        let grads = model.backward(&cache, &Dense::zeros(3, 8)).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn stale_cache_rejected() {
        let g = random_graph(10, 20, 1);
        let x = random_dense(10, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = GnnModel::new(&config(Variant::Sage, 3), &mut rng).unwrap();
        let block = full_block(&g, &[0, 1], 2, Direction::Both).unwrap();
        let cache = model.forward(&x, &block, Mode::Eval, &mut rng).unwrap();
        let flat = model.flat_params();
        model.set_flat_params(&flat).unwrap();
        assert!(model.backward(&cache, &Dense::zeros(2, 8)).is_err());
    }

    #[test]
    fn missing_feature_row() {
        let g = random_graph(10, 20, 1);
        let x = random_dense(5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GnnModel::new(&config(Variant::Sage, 3), &mut rng).unwrap();
        let block = full_block(&g, &[8], 2, Direction::Both).unwrap();
        assert!(matches!(
            model.forward(&x, &block, Mode::Eval, &mut rng),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cfg = config(Variant::Gcn, 9);
        cfg.dropout = 0.15;
        let model = GnnModel::new(&cfg, &mut rng).unwrap();
        let extra = serde_json::json!({"blocks": ["geometric", "binary"]});
        let bytes = model.to_checkpoint_bytes(Some(&extra));
        let (back, header) = GnnModel::from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(header["blocks"][1], "binary");
        assert_eq!(header["dims"], serde_json::json!([9, 16, 16]));
    }
}
