use serde::Serialize;

use super::LagrangianBreakdown;
use crate::net::ParamState;

/// A recorded trajectory: one parameter snapshot per time stamp with its
/// Lagrangian, loss and active sample index.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Trace {
    pub times: Vec<f64>,
    pub states: Vec<ParamState>,
    pub lagrangians: Vec<LagrangianBreakdown>,
    pub active_sample: Vec<usize>,
    pub losses: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `½|Ẇ|² + ½|ḃ|² + ℓ` per time stamp.
    pub fn energies(&self) -> Vec<f64> {
        self.lagrangians
            .iter()
            .map(|l| l.kinetic_w + l.kinetic_b_or_z - l.loss_term)
            .collect()
    }
}
