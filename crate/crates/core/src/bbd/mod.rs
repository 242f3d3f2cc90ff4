//! Bulk/boundary decomposition of the training Lagrangian.
//!
//! Replacing the biases by the pre-activations,
//!
//! ```text
//! b(m) = z(m+1) - W(m) σ(z(m)),        σ(z(0)) := x,
//! ```
//!
//! turns `½|ḃ|²` into terms that couple only adjacent layers. Writing
//! `A(m) = ∂t(W(m) σ(z(m))) = Ẇ(m) σ(z(m)) + W(m) σ'(z(m)) ż(m)` (and
//! `A(0) = Ẇ(0) x + W(0) ẋ`), the Lagrangian splits as
//!
//! ```text
//! L_bulk     = ½ Σ_{m=0}^{M-1} |Ẇ(m)|² + ½ Σ_{m=1}^{M} |ż(m)|²
//!              - Σ_{m=1}^{M-1} ż(m+1)·A(m) + c Σ_{m=1}^{M-1} |A(m)|²
//! L_boundary = c |A(0)|² - ż(1)·A(0) - ℓ(z(M), y)
//! ```
//!
//! No data symbol appears in the bulk. The chain rule fixes `c = ½`
//! ([`CoefficientMode::ChainRule`]); [`CoefficientMode::AsPrinted`] uses
//! `c = 1` so the two readings can be audited side by side.

mod audit;
mod lagrangian;
mod state;
mod symmetry;

pub use audit::{
    audit_decomposition, decompose, AuditConfig, AuditReport, AuditTrial, DecompositionReport,
};
pub use lagrangian::{
    lagrangian_boundary, lagrangian_bulk, BoundaryEvaluation, BulkEvaluation, CoefficientMode,
};
pub use state::{bias_from_neurons, neuron_velocity_pushforward, random_target, BbdState};
pub use symmetry::{
    data_independence_check, data_independence_check_with, interior_couplings,
    translational_symmetry_check, DataIndependenceReport, SymmetryReport,
};
