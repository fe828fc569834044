use super::Dense;
use crate::error::{Error, Result};

/// Row-wise softmax.
pub fn softmax(logits: &Dense) -> Dense {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        row.iter_mut().for_each(|x| *x /= sum);
    }
    out
}

/// Mean categorical cross-entropy over rows and its gradient
/// `(softmax − onehot) / n` with respect to the logits.
pub fn softmax_cross_entropy(logits: &Dense, labels: &[usize]) -> Result<(f64, Dense)> {
    let (n, classes) = logits.shape();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} rows", labels.len())));
    }
    if n == 0 {
        return Err(Error::InvalidInput("cross-entropy of an empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidInput(format!("label {bad} outside [0, {classes})")));
    }
    let mut grad = Dense::zeros(n, classes);
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|x| (x - max).exp()).sum();
        let log_sum = sum.ln();
        loss -= row[label] - max - log_sum;
        for (g, x) in grad.row_mut(r).iter_mut().zip(row) {
            *g = (x - max).exp() / sum;
        }
        grad.row_mut(r)[label] -= 1.0;
    }
    let inv = 1.0 / n as f64;
    grad.scale(inv);
    Ok((loss * inv, grad))
}
