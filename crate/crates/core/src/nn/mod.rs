//! Policy/value network: two tanh layers, an optional GRU, a categorical
//! policy head and a scalar value head. Everything is `f64` with explicit
//! backpropagation.

mod adam;
mod dist;
mod linalg;
mod network;
mod params;

pub use adam::{adam_step, clip_grad_norm, AdamConfig, AdamReport, OptimizerState};
pub use dist::{entropy, log_softmax, sample_action, softmax};
pub use network::{backward, forward, forward_sequence, ForwardOutput, Tape};
pub use params::{init_params, orthogonal, ArchConfig, Gradients, ParamLayout, PolicyParams, Tensor};

#[cfg(test)]
mod tests;
