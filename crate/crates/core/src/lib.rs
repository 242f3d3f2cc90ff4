//! Training dynamics of small dense networks treated as a damped Lagrangian
//! system, together with the bulk/boundary reorganisation of that Lagrangian
//! in pre-activation coordinates and its continuum limit on a ring lattice.
//!
//! Module map:
//!
//! - [`net`]: network data model, forward recursion, losses, reverse-mode gradients.
//! - [`dynamics`]: discrete SGD, gradient flow, damped second-order dynamics,
//!   Lagrangian/action bookkeeping and Euler–Lagrange residuals.
//! - [`bbd`]: change of variables `b -> z`, velocity pushforward, bulk and
//!   boundary Lagrangians, decomposition audit, symmetry checks.
//! - [`lattice`]: locally connected ring network, smooth field sampling,
//!   continuum truncations and the lattice-spacing convergence study.
//! - [`harness`]: experiment configuration, orchestration, exports and manifests.
//!
//! All arithmetic is `f64`.

pub mod bbd;
pub mod dynamics;
mod error;
pub mod fit;
pub mod harness;
pub mod lattice;
pub mod net;
pub mod rng;

pub use error::{Error, Result};
