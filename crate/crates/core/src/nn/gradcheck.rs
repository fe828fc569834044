use rand::seq::index::sample;
use rand::Rng;

/// Central-difference step used in 64-bit checks.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst parameter.
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares `analytic` against central differences of `loss` on a random
/// subsample of up to `samples` parameters. The relative error per entry is
/// `|a − n| / max(|a|, |n|, 1e-8)`. `params` is restored before returning.
pub fn gradient_check<F>(
    params: &mut [f64],
    analytic: &[f64],
    mut loss: F,
    samples: usize,
    rng: &mut impl Rng,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let count = samples.min(params.len());
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        checked: count,
    };
    for i in sample(rng, params.len(), count) {
        let original = params[i];
        params[i] = original + FD_STEP;
        let plus = loss(params);
        params[i] = original - FD_STEP;
        let minus = loss(params);
        params[i] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if rel > report.max_rel_error || rel.is_nan() {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{softmax_cross_entropy, Dense, LinearLayer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (LinearLayer, Dense, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut layer = LinearLayer::init(6, 8, &mut rng);
        layer.bias = (0..8).map(|_| rng.random_range(-0.5..0.5)).collect();
        let x = Dense::from_vec(10, 6, (0..60).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let labels = (0..10).map(|i| i % 8).collect();
        (layer, x, labels)
    }

    fn flatten(layer: &LinearLayer) -> Vec<f64> {
        layer.weight.data().iter().chain(&layer.bias).copied().collect()
    }

    fn loss_at(flat: &[f64], x: &Dense, labels: &[usize]) -> f64 {
        let w = Dense::from_vec(8, 6, flat[..48].to_vec()).unwrap();
        let layer = LinearLayer::new(w, flat[48..].to_vec()).unwrap();
        softmax_cross_entropy(&layer.forward(x).unwrap(), labels).unwrap().0
    }

    fn analytic(layer: &LinearLayer, x: &Dense, labels: &[usize]) -> Vec<f64> {
        let logits = layer.forward(x).unwrap();
        let (_, g) = softmax_cross_entropy(&logits, labels).unwrap();
        let (grad, _) = layer.backward(x, &g).unwrap();
        grad.weight.data().iter().chain(&grad.bias).copied().collect()
    }

    #[test]
    fn linear_cross_entropy_passes() {
        let (layer, x, labels) = setup();
        let mut flat = flatten(&layer);
        let grads = analytic(&layer, &x, &labels);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = gradient_check(&mut flat, &grads, |p| loss_at(p, &x, &labels), 56, &mut rng);
        assert_eq!(report.checked, 56);
        assert!(report.max_rel_error < 1e-7, "{report:?}");
        assert_eq!(flat, flatten(&layer));
    }

    #[test]
    fn corrupted_gradient_detected() {
        let (layer, x, labels) = setup();
        let mut flat = flatten(&layer);
        let grads: Vec<f64> = analytic(&layer, &x, &labels).iter().map(|g| g * 1.1).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = gradient_check(&mut flat, &grads, |p| loss_at(p, &x, &labels), 56, &mut rng);
        assert!(report.max_rel_error > 0.05, "{report:?}");
    }
}
