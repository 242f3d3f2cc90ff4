use crate::net::{loss_and_param_grads, Architecture, ParamState, Sample};
use crate::Result;

/// A potential `ℓ(q)` over a flat coordinate vector, possibly switching with
/// the active sample.
pub trait GradientField {
    fn dim(&self) -> usize;

    /// Writes `∂ℓ/∂q` into `grad` and returns `ℓ(q)` for sample `active`.
    fn loss_grad(&mut self, q: &[f64], active: usize, grad: &mut [f64]) -> Result<f64>;
}

/// The training loss of a network, over the flat layout of
/// [`ParamState::positions`].
pub struct NetworkPotential<'a> {
    arch: &'a Architecture,
    samples: &'a [Sample],
    scratch: ParamState,
}

impl<'a> NetworkPotential<'a> {
    pub fn new(arch: &'a Architecture, samples: &'a [Sample]) -> Self {
        Self {
            arch,
            samples,
            scratch: ParamState::zeros(arch),
        }
    }
}

impl GradientField for NetworkPotential<'_> {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn loss_grad(&mut self, q: &[f64], active: usize, grad: &mut [f64]) -> Result<f64> {
        self.scratch.set_positions(q);
        let (value, g) = loss_and_param_grads(&self.scratch, &self.samples[active], self.arch)?;
        let mut k = 0;
        for (gw, gb) in g.w.iter().zip(&g.b) {
            for v in gw.as_slice().iter().chain(gb) {
                grad[k] = *v;
                k += 1;
            }
        }
        Ok(value)
    }
}

/// `ℓ(q) = ½ Σ k_i q_i²`, the analytic test problem for the integrators.
#[derive(Debug, Clone)]
pub struct QuadraticPotential {
    pub stiffness: Vec<f64>,
}

impl GradientField for QuadraticPotential {
    fn dim(&self) -> usize {
        self.stiffness.len()
    }

    fn loss_grad(&mut self, q: &[f64], _active: usize, grad: &mut [f64]) -> Result<f64> {
        let mut value = 0.0;
        for ((g, k), x) in grad.iter_mut().zip(&self.stiffness).zip(q) {
            *g = k * x;
            value += 0.5 * k * x * x;
        }
        Ok(value)
    }
}
