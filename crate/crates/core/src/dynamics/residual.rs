use serde::Serialize;

use super::{DynamicsConfig, GradientField, NetworkPotential, SampleSchedule, Trace};
use crate::net::Architecture;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Interior time stamps at which the residual was evaluated.
    pub times: Vec<f64>,
    /// Euclidean norm of `q̈ + γq̇ + ∂ℓ/∂q` per interior time.
    pub norms: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

/// Central-difference estimate of the damped equation of motion
/// `q̈ + γ q̇ + ∂ℓ/∂q` along uniformly spaced positions. Only positions are
/// used; recorded velocities are ignored.
pub fn el_residual_series<F: GradientField>(
    times: &[f64],
    positions: &[Vec<f64>],
    gamma: f64,
    field: &mut F,
    active: &[usize],
) -> Result<ResidualReport> {
    if times.len() < 3 {
        return Err(Error::Precondition(format!(
            "Euler–Lagrange residual needs at least 3 time points, got {}",
            times.len()
        )));
    }
    let h = times[1] - times[0];
    if let Some(w) = times
        .windows(2)
        .find(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs())
    {
        return Err(Error::Precondition(format!(
            "time stamps are not uniformly spaced near t = {}",
            w[0]
        )));
    }
    let n = field.dim();
    let mut g = vec![0.0; n];
    let mut norms = Vec::with_capacity(times.len() - 2);
    for k in 1..times.len() - 1 {
        field.loss_grad(&positions[k], active[k], &mut g)?;
        let (prev, cur, next) = (&positions[k - 1], &positions[k], &positions[k + 1]);
        let mut s = 0.0;
        for i in 0..n {
            let acc = (next[i] - 2.0 * cur[i] + prev[i]) / (h * h);
            let vel = (next[i] - prev[i]) / (2.0 * h);
            let r = acc + gamma * vel + g[i];
            s += r * r;
        }
        norms.push(s.sqrt());
    }
    let max = norms.iter().copied().fold(0.0, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    Ok(ResidualReport {
        times: times[1..times.len() - 1].to_vec(),
        norms,
        max,
        mean,
    })
}

/// Euler–Lagrange residual of a recorded network trace.
pub fn el_residual(
    trace: &Trace,
    config: &DynamicsConfig,
    arch: &Architecture,
    schedule: &SampleSchedule,
) -> Result<ResidualReport> {
    let positions: Vec<Vec<f64>> = trace.states.iter().map(|s| s.positions()).collect();
    let mut field = NetworkPotential::new(arch, &schedule.samples);
    el_residual_series(
        &trace.times,
        &positions,
        config.gamma(),
        &mut field,
        &trace.active_sample,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::QuadraticPotential;

    #[test]
    fn equilibrium_has_zero_residual() {
        let times: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let pos = vec![vec![0.0, 0.0]; 10];
        let mut f = QuadraticPotential {
            stiffness: vec![1.0, 2.0],
        };
        let r = el_residual_series(&times, &pos, 3.0, &mut f, &[0; 10]).unwrap();
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn short_or_ragged_traces_are_rejected() {
        let mut f = QuadraticPotential {
            stiffness: vec![1.0],
        };
        let pos = vec![vec![0.0]; 3];
        assert!(el_residual_series(&[0.0, 0.1], &pos[..2], 1.0, &mut f, &[0; 2]).is_err());
        assert!(el_residual_series(&[0.0, 0.1, 0.3], &pos, 1.0, &mut f, &[0; 3]).is_err());
    }
}
