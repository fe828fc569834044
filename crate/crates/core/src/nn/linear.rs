use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dense;
use crate::error::{Error, Result};

/// Affine map `y = x·Wᵀ + b` applied row-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    /// out × in
    pub weight: Dense,
    pub bias: Vec<f64>,
}

/// Gradients of a [`LinearLayer`], same shapes as its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub weight: Dense,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    pub fn new(weight: Dense, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Shape(format!(
                "bias of length {} for {} outputs",
                bias.len(),
                weight.rows()
            )));
        }
        Ok(Self { weight, bias })
    }

    /// Glorot-uniform weights in ±sqrt(6 / (in + out)), zero bias.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            weight: Dense::from_vec(out_dim, in_dim, data).expect("sized"),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.rows() * self.weight.cols() + self.bias.len()
    }

    pub fn forward(&self, input: &Dense) -> Result<Dense> {
        linear_forward(self, input)
    }

    /// Given the forward input and ∂L/∂output, returns parameter gradients
    /// and ∂L/∂input.
    pub fn backward(&self, input: &Dense, grad_out: &Dense) -> Result<(LinearGrad, Dense)> {
        if grad_out.cols() != self.out_dim() || grad_out.rows() != input.rows() {
            return Err(Error::Shape(format!(
                "upstream gradient {:?} for layer {}x{} on {} rows",
                grad_out.shape(),
                self.out_dim(),
                self.in_dim(),
                input.rows()
            )));
        }
        let weight = grad_out.t_matmul(input)?;
        let bias = grad_out.column_sums();
        let grad_in = grad_out.matmul(&self.weight)?;
        Ok((LinearGrad { weight, bias }, grad_in))
    }

    pub fn zero_grad(&self) -> LinearGrad {
        LinearGrad {
            weight: Dense::zeros(self.out_dim(), self.in_dim()),
            bias: vec![0.0; self.out_dim()],
        }
    }
}

pub fn linear_forward(layer: &LinearLayer, input: &Dense) -> Result<Dense> {
    if input.cols() != layer.in_dim() {
        return Err(Error::Shape(format!(
            "input has {} columns, layer expects {}",
            input.cols(),
            layer.in_dim()
        )));
    }
    let mut out = input.matmul_t(&layer.weight)?;
    for r in 0..out.rows() {
        out.row_mut(r).iter_mut().zip(&layer.bias).for_each(|(o, b)| *o += b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_passes_through() {
        let layer = LinearLayer::new(Dense::identity(3), vec![0.0; 3]).unwrap();
        let x = Dense::from_rows(&[vec![1.0, -2.0, 3.5], vec![0.0, 4.0, -1.0]]).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn scalar_affine() {
        let layer = LinearLayer::new(Dense::from_rows(&[vec![2.0]]).unwrap(), vec![1.0]).unwrap();
        let y = layer.forward(&Dense::from_rows(&[vec![3.0]]).unwrap()).unwrap();
        assert_eq!(y.data(), &[7.0]);
    }

    #[test]
    fn matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut layer = LinearLayer::init(4, 5, &mut rng);
        layer.bias = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Dense::from_vec(8, 4, (0..32).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let y = layer.forward(&x).unwrap();
        for i in 0..8 {
            for o in 0..5 {
                let mut acc = layer.bias[o];
                for k in 0..4 {
                    acc += x.get(i, k) * layer.weight.get(o, k);
                }
                assert!((y.get(i, o) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let layer = LinearLayer::new(Dense::identity(3), vec![0.0; 3]).unwrap();
        assert!(matches!(layer.forward(&Dense::zeros(2, 4)), Err(Error::Shape(_))));
        assert!(LinearLayer::new(Dense::identity(3), vec![0.0; 2]).is_err());
    }

    #[test]
    fn init_within_glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = LinearLayer::init(30, 10, &mut rng);
        let limit = (6.0f64 / 40.0).sqrt();
        assert!(layer.weight.data().iter().all(|w| w.abs() <= limit));
        assert!(layer.bias.iter().all(|&b| b == 0.0));
    }
}
