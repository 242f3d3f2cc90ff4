use serde::{Deserialize, Serialize};

use super::Trace;
use crate::net::{forward, Architecture, ParamState, Sample};
use crate::{Error, Result};

/// Named contributions to a Lagrangian value.
///
/// In `(W, b)` coordinates only the kinetic and loss parts are populated; the
/// cross and squared parts appear after the change to neuron coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LagrangianBreakdown {
    pub kinetic_w: f64,
    pub kinetic_b_or_z: f64,
    pub cross_terms: f64,
    pub squared_terms: f64,
    /// `-ℓ`.
    pub loss_term: f64,
    pub total: f64,
}

impl LagrangianBreakdown {
    pub fn new(
        kinetic_w: f64,
        kinetic_b_or_z: f64,
        cross_terms: f64,
        squared_terms: f64,
        loss_term: f64,
    ) -> Self {
        Self {
            kinetic_w,
            kinetic_b_or_z,
            cross_terms,
            squared_terms,
            loss_term,
            total: kinetic_w + kinetic_b_or_z + cross_terms + squared_terms + loss_term,
        }
    }

    /// Part-by-part sum, with `total` recomputed.
    pub fn combine(&self, other: &Self) -> Self {
        Self::new(
            self.kinetic_w + other.kinetic_w,
            self.kinetic_b_or_z + other.kinetic_b_or_z,
            self.cross_terms + other.cross_terms,
            self.squared_terms + other.squared_terms,
            self.loss_term + other.loss_term,
        )
    }
}

/// `L = ½ Σ Ẇ² + ½ Σ ḃ² - ℓ(Z(W, b, X), Y)`.
pub fn lagrangian_original(
    params: &ParamState,
    sample: &Sample,
    arch: &Architecture,
) -> Result<LagrangianBreakdown> {
    let neurons = forward(params, &sample.x, arch)?;
    let loss = arch.loss.value(neurons.output(), &sample.y)?;
    Ok(LagrangianBreakdown::new(
        params.kinetic_w(),
        params.kinetic_b(),
        0.0,
        0.0,
        -loss,
    ))
}

/// Trapezoidal quadrature of `e^{γt} L(t)` over arbitrary sample times.
pub fn action_trapezoid(times: &[f64], values: &[f64], gamma: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut s = 0.0;
    for k in 1..times.len() {
        let f0 = (gamma * times[k - 1]).exp() * values[k - 1];
        let f1 = (gamma * times[k]).exp() * values[k];
        s += 0.5 * (times[k] - times[k - 1]) * (f0 + f1);
    }
    Ok(s)
}

/// Action `S = ∫ e^{γt} L(t) dt` of a recorded trace.
pub fn action(trace: &Trace, gamma: f64) -> Result<f64> {
    let values: Vec<f64> = trace.lagrangians.iter().map(|l| l.total).collect();
    action_trapezoid(&trace.times, &values, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ActivationKind, LossKind};
    use crate::rng;

    fn uniform(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn constant_lagrangian_without_damping() {
        let t = uniform(2.5, 10);
        let s = action_trapezoid(&t, &vec![3.0; t.len()], 0.0).unwrap();
        assert!((s - 7.5).abs() < 1e-14);
    }

    #[test]
    fn exponential_weight_integral() {
        let t = uniform(1.0, 1000);
        let s = action_trapezoid(&t, &vec![1.0; t.len()], 1.0).unwrap();
        assert!((s - (std::f64::consts::E - 1.0)).abs() <= 1e-6);
    }

    #[test]
    fn trapezoid_is_second_order() {
        let exact = std::f64::consts::E - 1.0;
        let e1 = {
            let t = uniform(1.0, 100);
            (action_trapezoid(&t, &vec![1.0; t.len()], 1.0).unwrap() - exact).abs()
        };
        let e2 = {
            let t = uniform(1.0, 200);
            (action_trapezoid(&t, &vec![1.0; t.len()], 1.0).unwrap() - exact).abs()
        };
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(matches!(
            action_trapezoid(&[], &[], 1.0),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn zero_velocity_lagrangian_is_minus_loss() {
        let arch = Architecture::new(vec![2, 3, 2], ActivationKind::Tanh, LossKind::Mse).unwrap();
        let p = ParamState::random(&arch, &mut rng::stream(2, 0));
        let s = Sample::new(vec![0.1, 0.2], vec![0.5, -0.5]);
        let l = lagrangian_original(&p, &s, &arch).unwrap();
        let n = forward(&p, &s.x, &arch).unwrap();
        assert_eq!(l.total, -arch.loss.value(n.output(), &s.y).unwrap());

        let y = n.output().to_vec();
        let l = lagrangian_original(&p, &Sample::new(s.x.clone(), y), &arch).unwrap();
        assert_eq!(l.total, 0.0);
    }

    #[test]
    fn random_state_matches_straight_line_recomputation() {
        let arch =
            Architecture::new(vec![3, 4, 2], ActivationKind::Sigmoid, LossKind::Mse).unwrap();
        let mut r = rng::stream(11, 0);
        let p = ParamState::random_with_velocities(&arch, &mut r);
        let s = Sample::new(
            rng::normal_vec(&mut r, 3, 1.0),
            rng::normal_vec(&mut r, 2, 1.0),
        );
        let l = lagrangian_original(&p, &s, &arch).unwrap();

        let mut kin = 0.0;
        for m in 0..2 {
            for v in p.w_dot[m].as_slice() {
                kin += 0.5 * v * v;
            }
            for v in &p.b_dot[m] {
                kin += 0.5 * v * v;
            }
        }
        let mut h = s.x.clone();
        let mut z = Vec::new();
        for m in 0..2 {
            z = (0..p.w[m].rows())
                .map(|i| (0..h.len()).map(|j| p.w[m].get(i, j) * h[j]).sum::<f64>() + p.b[m][i])
                .collect::<Vec<_>>();
            h = z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
        }
        let loss: f64 = z.iter().zip(&s.y).map(|(a, b)| (a - b) * (a - b)).sum();
        let expected = kin - loss;
        assert!((l.total - expected).abs() <= 1e-15 * expected.abs().max(1.0));
    }
}
