use rand::Rng;

use super::Dense;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout. In train mode each entry is zeroed with probability `p`
/// and survivors are scaled by 1/(1−p); the returned mask holds the applied
/// multipliers. Eval mode is the identity with an all-ones mask.
pub fn dropout(input: &Dense, p: f64, mode: Mode, rng: &mut impl Rng) -> Result<(Dense, Dense)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("dropout rate {p} outside [0, 1)")));
    }
    let (rows, cols) = input.shape();
    if mode == Mode::Eval || p == 0.0 {
        let mut ones = Dense::zeros(rows, cols);
        ones.data_mut().fill(1.0);
        return Ok((input.clone(), ones));
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let out = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((
        Dense::from_vec(rows, cols, out)?,
        Dense::from_vec(rows, cols, mask)?,
    ))
}

pub fn dropout_backward(mask: &Dense, upstream: &Dense) -> Result<Dense> {
    if mask.shape() != upstream.shape() {
        return Err(Error::Shape("dropout mask and upstream differ".into()));
    }
    let data = mask.data().iter().zip(upstream.data()).map(|(m, g)| m * g).collect();
    Dense::from_vec(mask.rows(), mask.cols(), data)
}
