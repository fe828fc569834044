use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The learning rate is multiplied by γ once every this many epochs.
pub const LR_STEP_EPOCHS: usize = 25;

/// SGD with momentum, L2 weight decay and a step learning-rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub initial_lr: f64,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub gamma: f64,
    pub step_epochs: usize,
    pub epoch: usize,
    velocities: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64, gamma: f64) -> Result<Self> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::InvalidInput(format!("learning rate {lr} must be >= 0")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidInput(format!("momentum {momentum} outside [0, 1)")));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::InvalidInput(format!("weight decay {weight_decay} must be >= 0")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("lr-scheduler gamma {gamma} must be > 0")));
        }
        Ok(Self {
            initial_lr: lr,
            lr,
            momentum,
            weight_decay,
            gamma,
            step_epochs: LR_STEP_EPOCHS,
            epoch: 0,
            velocities: Vec::new(),
        })
    }

    /// `lr₀ · γ^⌊epoch / 25⌋`
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.initial_lr * self.gamma.powi((epoch / self.step_epochs) as i32)
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }
}

/// Sets the learning rate for `epoch` from the step schedule.
pub fn lr_schedule_step(state: &mut OptimizerState, epoch: usize) {
    state.epoch = epoch;
    state.lr = state.lr_at(epoch);
}

/// One parameter tensor, flattened, with its gradient.
pub struct ParamSlot<'a> {
    pub values: &'a mut [f64],
    pub grad: &'a [f64],
    /// Biases are excluded from weight decay.
    pub decay: bool,
}

/// `g' = g + λ·w; v ← μ·v + g'; w ← w − lr·v` for every slot. Velocity
/// buffers are created on first use and must keep their shapes afterwards.
/// Nothing is updated if any gradient is non-finite.
pub fn sgd_step(slots: &mut [ParamSlot<'_>], state: &mut OptimizerState) -> Result<()> {
    for (i, slot) in slots.iter().enumerate() {
        if slot.values.len() != slot.grad.len() {
            return Err(Error::Shape(format!(
                "parameter {i}: {} values, {} gradients",
                slot.values.len(),
                slot.grad.len()
            )));
        }
        if let Some(j) = slot.grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient of parameter {i} entry {j} is {}",
                slot.grad[j]
            )));
        }
    }
    if state.velocities.is_empty() {
        state.velocities = slots.iter().map(|s| vec![0.0; s.values.len()]).collect();
    }
    if state.velocities.len() != slots.len()
        || state.velocities.iter().zip(slots.iter()).any(|(v, s)| v.len() != s.values.len())
    {
        return Err(Error::Shape("parameters changed shape between optimizer steps".into()));
    }
    let (lr, mu) = (state.lr, state.momentum);
    for (slot, velocity) in slots.iter_mut().zip(state.velocities.iter_mut()) {
        let decay = if slot.decay { state.weight_decay } else { 0.0 };
        for ((w, &g), v) in slot.values.iter_mut().zip(slot.grad).zip(velocity.iter_mut()) {
            let g = g + decay * *w;
            *v = mu * *v + g;
            *w -= lr * *v;
        }
    }
    Ok(())
}
