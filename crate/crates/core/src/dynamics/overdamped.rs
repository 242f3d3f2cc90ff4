//! Comparison of damped dynamics with the gradient flow it reduces to when
//! damping dominates.
//!
//! With `η = 1/γ` the flow evolves on the slow time `s = t/γ`, so both
//! trajectories are compared at equal `s` on `[0, horizon]`. The damped run
//! starts at rest.

use serde::Serialize;

use super::{
    damped_integrate, gradient_flow_integrate, DynamicsConfig, Integrator, Regime, SampleSchedule,
};
use crate::net::{ActivationKind, Architecture, LossKind, ParamState, Sample};
use crate::rng;
use crate::Result;

/// The 2-3-1 tanh/mse network, seed-0 parameters and the single sample used
/// as the standard overdamped test problem.
pub fn standard_problem() -> (Architecture, ParamState, Sample) {
    let arch = Architecture::new(vec![2, 3, 1], ActivationKind::Tanh, LossKind::Mse)
        .expect("valid architecture");
    let params = ParamState::random(&arch, &mut rng::stream(0, 0));
    let sample = Sample::new(vec![0.5, -0.3], vec![0.8]);
    (arch, params, sample)
}

#[derive(Debug, Clone, Serialize)]
pub struct OverdampedGap {
    pub gamma: f64,
    /// Max over recorded slow times and parameters of `|q_damped - q_flow|`.
    pub sup_gap: f64,
}

/// Sup-norm gap between damped dynamics at damping `gamma` and the gradient
/// flow at `η = 1/γ`, on slow times `k ds`, `k = 0..=horizon/ds`.
/// The flow uses RK4 with step `γ ds`; the damped integrator subdivides each
/// slow step so that `γ h <= max_gamma_h`.
#[allow(clippy::too_many_arguments)]
pub fn overdamped_gap(
    arch: &Architecture,
    params: &ParamState,
    sample: &Sample,
    gamma: f64,
    horizon: f64,
    ds: f64,
    max_gamma_h: f64,
) -> Result<OverdampedGap> {
    let substeps = ((gamma * gamma * ds) / max_gamma_h).ceil().max(1.0) as usize;
    let t_end = gamma * horizon;
    let schedule = SampleSchedule::constant(sample.clone(), t_end);
    let mut start = params.clone();
    start.set_velocities(&vec![0.0; arch.param_count()]);

    let flow_cfg = DynamicsConfig {
        eta: 1.0 / gamma,
        gamma: None,
        dt: gamma * ds,
        t_end,
        regime: Regime::GradientFlow,
        integrator: Integrator::Rk4,
        seed: 0,
        record_every: 1,
    };
    let flow = gradient_flow_integrate(&start, &schedule, &flow_cfg, arch)?;

    let damped_cfg = DynamicsConfig {
        gamma: Some(gamma),
        dt: gamma * ds / substeps as f64,
        regime: Regime::DampedSecondOrder,
        integrator: Integrator::VelocityVerletDamped,
        record_every: substeps,
        ..flow_cfg
    };
    let damped = damped_integrate(&start, &schedule, &damped_cfg, arch)?;

    let mut sup_gap: f64 = 0.0;
    for (a, b) in flow.states.iter().zip(&damped.states) {
        for (x, y) in a.positions().iter().zip(b.positions()) {
            sup_gap = sup_gap.max((x - y).abs());
        }
    }
    Ok(OverdampedGap { gamma, sup_gap })
}
