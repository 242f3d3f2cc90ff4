//! Central finite-difference check of the reverse-mode gradients.
//!
//! The numerical side only calls [`forward`](super::forward) and the loss, so
//! it is independent of the backward pass it checks.

use serde::{Deserialize, Serialize};

use super::{forward, loss_and_param_grads, Architecture, ParamState, Sample};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    /// Finite-difference step.
    pub step: f64,
    pub rel_tol: f64,
    /// Differences below this absolute level always pass.
    pub abs_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rel_tol: 1e-6,
            abs_floor: 1e-9,
        }
    }
}

impl GradCheckConfig {
    /// Error normalised so that `error <= rel_tol` is exactly the pass
    /// condition `|a - n| <= max(rel_tol * max(|a|, |n|), abs_floor)`.
    pub fn scaled_error(&self, analytic: f64, numeric: f64) -> f64 {
        let scale = analytic
            .abs()
            .max(numeric.abs())
            .max(self.abs_floor / self.rel_tol);
        (analytic - numeric).abs() / scale
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub entries: usize,
    pub max_error: f64,
    /// Flat parameter index of the worst entry.
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub passed: bool,
}

pub fn check(
    params: &ParamState,
    sample: &Sample,
    arch: &Architecture,
    config: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_param_grads(params, sample, arch)?;
    let analytic = grads.flatten();
    let base = params.positions();
    let mut probe = params.clone();
    let mut eval = |flat: &[f64]| -> Result<f64> {
        probe.set_positions(flat);
        let n = forward(&probe, &sample.x, arch)?;
        arch.loss.value(n.output(), &sample.y)
    };
    let mut report = GradCheckReport {
        entries: base.len(),
        max_error: 0.0,
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        passed: true,
    };
    let mut x = base.clone();
    for k in 0..base.len() {
        x[k] = base[k] + config.step;
        let up = eval(&x)?;
        x[k] = base[k] - config.step;
        let down = eval(&x)?;
        x[k] = base[k];
        let numeric = (up - down) / (2.0 * config.step);
        let err = config.scaled_error(analytic[k], numeric);
        if k == 0 || err > report.max_error {
            report.max_error = err;
            report.worst_index = k;
            report.worst_analytic = analytic[k];
            report.worst_numeric = numeric;
        }
    }
    report.passed = report.max_error <= config.rel_tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ActivationKind, LossKind};
    use crate::rng;

    #[test]
    fn tanh_3_4_3_seed_7() {
        let arch = Architecture::new(vec![3, 4, 3], ActivationKind::Tanh, LossKind::Mse).unwrap();
        let mut r = rng::stream(7, 0);
        let p = ParamState::random(&arch, &mut r);
        let s = Sample::new(
            rng::normal_vec(&mut r, 3, 1.0),
            rng::normal_vec(&mut r, 3, 1.0),
        );
        let rep = check(&p, &s, &arch, &GradCheckConfig::default()).unwrap();
        assert_eq!(rep.entries, arch.param_count());
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn scaled_error_matches_pass_rule() {
        let c = GradCheckConfig::default();
        assert!(c.scaled_error(0.0, 9e-10) <= c.rel_tol);
        assert!(c.scaled_error(0.0, 2e-9) > c.rel_tol);
        assert!(c.scaled_error(1.0, 1.0 + 9e-7) <= c.rel_tol);
    }
}
