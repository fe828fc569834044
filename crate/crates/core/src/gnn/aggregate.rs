use crate::error::{Error, Result};
use crate::nn::{dot, LinearLayer};

/// Elementwise mean; an empty set aggregates to the zero vector of `dim`.
pub fn mean_aggregate(vectors: &[&[f64]], dim: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dim];
    for v in vectors {
        if v.len() != dim {
            return Err(Error::Shape(format!("vector of length {} in a mean over dim {dim}", v.len())));
        }
        out.iter_mut().zip(*v).for_each(|(o, x)| *o += x);
    }
    if !vectors.is_empty() {
        let inv = 1.0 / vectors.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
    }
    Ok(out)
}

fn apply(layer: &LinearLayer, input: &[f64], activate: bool) -> Result<Vec<f64>> {
    if input.len() != layer.in_dim() {
        return Err(Error::Shape(format!(
            "aggregate of length {} for a layer with in-dim {}",
            input.len(),
            layer.in_dim()
        )));
    }
    Ok((0..layer.out_dim())
        .map(|o| {
            let y = dot(layer.weight.row(o), input) + layer.bias[o];
            if activate {
                y.max(0.0)
            } else {
                y
            }
        })
        .collect())
}

/// GCN-style update: `σ(W · mean({h_self} ∪ {h_n}) + b)`. The node itself
/// is part of the averaged multiset.
pub fn gcn_layer_forward(layer: &LinearLayer, h_self: &[f64], h_neighbors: &[&[f64]], activate: bool) -> Result<Vec<f64>> {
    let mut all = Vec::with_capacity(h_neighbors.len() + 1);
    all.push(h_self);
    all.extend_from_slice(h_neighbors);
    let agg = mean_aggregate(&all, h_self.len())?;
    apply(layer, &agg, activate)
}

/// GraphSAGE-style update: `σ(W · (h_self ⊕ mean({h_n})) + b)`.
pub fn sage_layer_forward(layer: &LinearLayer, h_self: &[f64], h_neighbors: &[&[f64]], activate: bool) -> Result<Vec<f64>> {
    let mut input = h_self.to_vec();
    input.extend(mean_aggregate(h_neighbors, h_self.len())?);
    apply(layer, &input, activate)
}
