use super::Dense;
use crate::error::{Error, Result};

pub fn relu(input: &Dense) -> Dense {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|x| *x = x.max(0.0));
    out
}

/// Passes `upstream` where the forward input was positive. The subgradient at
/// exactly 0 is 0.
pub fn relu_backward(input: &Dense, upstream: &Dense) -> Result<Dense> {
    if input.shape() != upstream.shape() {
        return Err(Error::Shape(format!(
            "relu input {:?} vs upstream {:?}",
            input.shape(),
            upstream.shape()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Dense::from_vec(input.rows(), input.cols(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_and_backward() {
        let x = Dense::from_rows(&[vec![-1.0, 0.0, 2.0]]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let x = Dense::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        let up = Dense::from_rows(&[vec![5.0, 7.0]]).unwrap();
        assert_eq!(relu_backward(&x, &up).unwrap().data(), &[0.0, 7.0]);
        assert!(relu_backward(&Dense::zeros(1, 1), &up).is_err());
    }

    #[test]
    fn central_difference_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Dense::from_vec(
            4,
            5,
            (0..20)
                .map(|_| {
                    let v: f64 = rng.random_range(0.1..2.0);
                    if rng.random_bool(0.5) { v } else { -v }
                })
                .collect(),
        )
        .unwrap();
        let weights: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |x: &Dense| relu(x).data().iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
        let up = Dense::from_vec(4, 5, weights.clone()).unwrap();
        let analytic = relu_backward(&x, &up).unwrap();
        let h = 1e-5;
        for i in 0..20 {
            let mut plus = x.clone();
            plus.data_mut()[i] += h;
            let mut minus = x.clone();
            minus.data_mut()[i] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let a = analytic.data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "entry {i}: {a} vs {numeric}");
        }
    }
}
