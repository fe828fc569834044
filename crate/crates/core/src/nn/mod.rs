//! Minimal dense neural-network substrate: linear maps, activations,
//! dropout, softmax cross-entropy, SGD with momentum, step LR schedule and
//! finite-difference gradient checking.

mod activation;
pub mod checkpoint;
mod dense;
mod dropout;
mod gradcheck;
mod linear;
mod loss;
mod optim;

pub use activation::{relu, relu_backward};
pub use dense::Dense;
pub(crate) use dense::dot;
pub use dropout::{dropout, dropout_backward, Mode};
pub use gradcheck::{gradient_check, GradCheckReport, FD_STEP};
pub use linear::{linear_forward, LinearGrad, LinearLayer};
pub use loss::{softmax, softmax_cross_entropy};
pub use optim::{lr_schedule_step, sgd_step, OptimizerState, ParamSlot, LR_STEP_EPOCHS};
