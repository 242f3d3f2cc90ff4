use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SgdDiscrete,
    GradientFlow,
    DampedSecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    ExplicitEuler,
    Rk4,
    VelocityVerletDamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub eta: f64,
    /// Damping; `None` means the default coupling `γ = 1/η`.
    pub gamma: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub regime: Regime,
    pub integrator: Integrator,
    /// Set from the experiment seed, never read from config files.
    #[serde(skip)]
    pub seed: u64,
    /// Keep every n-th integrator step in the trace (the last step is always kept).
    pub record_every: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            gamma: None,
            dt: 1e-2,
            t_end: 1.0,
            regime: Regime::GradientFlow,
            integrator: Integrator::Rk4,
            seed: 0,
            record_every: 1,
        }
    }
}

impl DynamicsConfig {
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0 / self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::validation(
                "eta",
                format!("must be > 0, got {}", self.eta),
            ));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::validation("gamma", format!("must be > 0, got {g}")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(
                "dt",
                format!("must be > 0, got {}", self.dt),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt * (1.0 - 1e-12)) {
            return Err(Error::validation(
                "t_end",
                format!("must be >= dt = {}, got {}", self.dt, self.t_end),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::validation("record_every", "must be >= 1"));
        }
        let ok = match self.regime {
            Regime::SgdDiscrete => true,
            Regime::GradientFlow => {
                matches!(self.integrator, Integrator::ExplicitEuler | Integrator::Rk4)
            }
            Regime::DampedSecondOrder => self.integrator == Integrator::VelocityVerletDamped,
        };
        if !ok {
            return Err(Error::validation(
                "integrator",
                format!(
                    "{:?} cannot drive regime {:?}",
                    self.integrator, self.regime
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_gamma_is_inverse_learning_rate() {
        let c = DynamicsConfig {
            eta: 0.25,
            ..Default::default()
        };
        assert_eq!(c.gamma(), 4.0);
        let c = DynamicsConfig {
            gamma: Some(3.0),
            ..c
        };
        assert_eq!(c.gamma(), 3.0);
    }

    #[test]
    fn rejects_bad_steps() {
        let bad = DynamicsConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Validation { field, .. }) if field == "dt"));
        let bad = DynamicsConfig {
            t_end: 1e-3,
            dt: 1e-2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DynamicsConfig {
            regime: Regime::DampedSecondOrder,
            integrator: Integrator::Rk4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
