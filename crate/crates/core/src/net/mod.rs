//! Dense feed-forward networks: data model, forward recursion, losses and
//! exact reverse-mode gradients.
//!
//! Layers are numbered `m = 0..M-1` by the weight matrix they own. Weight
//! `W[m]` maps layer `m` (width `N_m`) into layer `m + 1` (width `N_{m+1}`):
//!
//! ```text
//! z(m+1) = W[m] h(m) + b[m],   h(m) = σ(z(m)),   h(0) = x
//! ```
//!
//! The output activation is the identity, so the network output is `z(M)`.

mod activation;
pub mod gradcheck;
mod loss;
mod matrix;
mod model;
mod summation;

pub use activation::ActivationKind;
pub use loss::{softmax, LossKind};
pub use matrix::Matrix;
pub use model::{
    forward, loss, loss_and_param_grads, Architecture, NeuronState, ParamGrads, ParamState, Sample,
};
pub use summation::Summation;
