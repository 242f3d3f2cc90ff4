//! Parameter dynamics under three regimes and the Lagrangian bookkeeping
//! along the resulting trajectories.
//!
//! - discrete SGD: `W <- W - η ∂ℓ/∂W`, one randomly drawn sample per step;
//! - gradient flow: `Ẇ = -η ∂ℓ/∂W`;
//! - damped second-order dynamics: `Ẅ + γẆ + ∂ℓ/∂W = 0`, with `γ = 1/η`
//!   unless set explicitly.
//!
//! Biases follow the same equations. The Lagrangian of the damped system is
//! `L = ½|Ẇ|² + ½|ḃ|² - ℓ` and the action is `∫ e^{γt} L dt`.
//!
//! The integrators work on flat position/velocity vectors through the
//! [`GradientField`] trait, so the same code drives network training and the
//! analytic test problems. Network-facing wrappers convert to and from
//! [`ParamState`](crate::net::ParamState).

mod config;
mod field;
mod integrate;
mod lagrangian;
pub mod overdamped;
mod residual;
mod schedule;
mod sgd;
mod trace;

pub use config::{DynamicsConfig, Integrator, Regime};
pub use field::{GradientField, NetworkPotential, QuadraticPotential};
pub use integrate::{
    damped_integrate, gradient_flow_integrate, integrate_damped_flat, integrate_flow_flat,
    time_grid, FlatTrace,
};
pub use lagrangian::{action, action_trapezoid, lagrangian_original, LagrangianBreakdown};
pub use residual::{el_residual, el_residual_series, ResidualReport};
pub use schedule::SampleSchedule;
pub use sgd::{dataset_loss, run, run_sgd, sgd_step};
pub use trace::Trace;
