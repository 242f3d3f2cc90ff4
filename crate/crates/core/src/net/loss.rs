use serde::{Deserialize, Serialize};

use super::Summation;
use crate::{Error, Result};

/// Tolerance on `Σ p = 1` for probability targets.
const PROB_SUM_TOL: f64 = 1e-12;

/// Loss `ℓ(Z, Y)` between the network output `Z` and a target `Y`.
///
/// - `Mse`: `Σ (Z_i - Y_i)^2`.
/// - `CrossEntropy`: `-Σ p_i log q_i` with `q = softmax(Z)` and `p = Y`.
/// - `KlDivergence`: `Σ p_i log(p_i / q_i)`, same mapping; `0 log 0 = 0`.
/// - `Hinge`: `max(0, 1 - Z Y)` for a scalar output and a label in `{-1, +1}`.
///   The subgradient at `Z Y = 1` is taken as 0.
///
/// The output layer has no activation, so the probabilistic losses apply the
/// softmax internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    CrossEntropy,
    KlDivergence,
    Hinge,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Mse,
        LossKind::CrossEntropy,
        LossKind::KlDivergence,
        LossKind::Hinge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::KlDivergence => "kl_divergence",
            LossKind::Hinge => "hinge",
        }
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, LossKind::CrossEntropy | LossKind::KlDivergence)
    }

    /// Checks that `y` is a valid target for an output of width `out_width`.
    pub fn validate_target(self, y: &[f64], out_width: usize) -> Result<()> {
        match self {
            LossKind::Hinge => {
                if out_width != 1 {
                    return Err(Error::config(format!(
                        "hinge loss needs a scalar output, got width {out_width}"
                    )));
                }
                if y.len() != 1 || !(y[0] == 1.0 || y[0] == -1.0) {
                    return Err(Error::Domain(format!(
                        "hinge label must be a single value in {{-1, +1}}, got {y:?}"
                    )));
                }
            }
            LossKind::Mse => {
                if y.len() != out_width {
                    return Err(Error::config(format!(
                        "target length {} does not match output width {out_width}",
                        y.len()
                    )));
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("target has non-finite entries".into()));
                }
            }
            LossKind::CrossEntropy | LossKind::KlDivergence => {
                if y.len() != out_width {
                    return Err(Error::config(format!(
                        "target length {} does not match output width {out_width}",
                        y.len()
                    )));
                }
                if y.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::Domain(
                        "probability target has negative or non-finite entries".into(),
                    ));
                }
                let s: f64 = y.iter().sum();
                if (s - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::Domain(format!(
                        "probability target sums to {s}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(self, z: &[f64], y: &[f64]) -> Result<f64> {
        self.value_with(z, y, Summation::Sequential)
    }

    pub fn value_with(self, z: &[f64], y: &[f64], sum: Summation) -> Result<f64> {
        self.validate_target(y, z.len())?;
        Ok(match self {
            LossKind::Mse => sum.sum(z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).collect()),
            LossKind::CrossEntropy => {
                let lse = log_sum_exp(z, sum);
                sum.sum(
                    z.iter()
                        .zip(y)
                        .filter(|(_, p)| **p > 0.0)
                        .map(|(zi, p)| -p * (zi - lse))
                        .collect(),
                )
            }
            LossKind::KlDivergence => {
                let lse = log_sum_exp(z, sum);
                sum.sum(
                    z.iter()
                        .zip(y)
                        .filter(|(_, p)| **p > 0.0)
                        .map(|(zi, p)| p * (p.ln() - (zi - lse)))
                        .collect(),
                )
            }
            LossKind::Hinge => (1.0 - z[0] * y[0]).max(0.0),
        })
    }

    /// Loss value and `∂ℓ/∂Z`.
    pub fn value_and_grad(self, z: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let value = self.value(z, y)?;
        let grad = match self {
            LossKind::Mse => z.iter().zip(y).map(|(a, b)| 2.0 * (a - b)).collect(),
            LossKind::CrossEntropy | LossKind::KlDivergence => {
                // ∂/∂Z_i of -Σ p_k log q_k is q_i Σp - p_i
                let q = softmax(z);
                let mass: f64 = y.iter().sum();
                q.iter().zip(y).map(|(qi, pi)| qi * mass - pi).collect()
            }
            LossKind::Hinge => {
                if z[0] * y[0] < 1.0 {
                    vec![-y[0]]
                } else {
                    vec![0.0]
                }
            }
        };
        Ok((value, grad))
    }
}

fn log_sum_exp(z: &[f64], sum: Summation) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + sum.sum(z.iter().map(|v| (v - max).exp()).collect()).ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
