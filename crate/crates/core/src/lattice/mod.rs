//! Locally connected ring networks and their continuum limit.
//!
//! A ring of width `N` connects neuron `i` of layer `m+1` to neurons `i` and
//! `i+1 (mod N)` of layer `m`. Sampling smooth fields `ŵ(x, y)`, `ẑ(x, y)` on
//! a lattice with spacings `(a_x, a_y)` gives a ring state whose discrete
//! Lagrangian, weighted by the lattice measure, can be compared with the
//! truncated continuum densities as the spacings shrink.

mod continuum;
mod fields;
mod ring;
mod study;

pub use continuum::{
    continuum_kinetic, continuum_truncation_boundary, continuum_truncation_bulk,
    BoundaryTruncation, BulkTruncation, Quadrature, PRINTED_BULK_COEFFICIENTS,
};
pub use fields::{
    sample_fields_to_lattice, Field, FieldSample, Jet, LatticeGeometry, Mode, BAND_LIMIT,
};
pub use ring::{
    embed_band, ring_forward, ring_lagrangian_discrete, ring_loss_and_grads, RingArchitecture,
    RingGrads, RingLagrangian, RingParams, RingState,
};
pub use study::{
    convergence_study, Conventions, ConvergenceReport, LatticeLevel, StudyConfig, TermGroup,
};
