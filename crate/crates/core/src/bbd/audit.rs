use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lagrangian_boundary, lagrangian_bulk, random_target, BbdState, CoefficientMode};
use crate::dynamics::lagrangian_original;
use crate::net::{ActivationKind, Architecture, LossKind, ParamState, Sample};
use crate::rng;
use crate::{Error, Result};

/// One evaluation of Eq. (5) against bulk + boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub l_original: f64,
    pub l_bulk: f64,
    pub l_boundary: f64,
    /// `|l_original - (l_bulk + l_boundary)|`.
    pub mismatch: f64,
    pub per_layer: Vec<f64>,
    pub coefficient_mode: CoefficientMode,
}

impl DecompositionReport {
    /// `mismatch / max(1, |l_original|)`.
    pub fn relative_mismatch(&self) -> f64 {
        self.mismatch / self.l_original.abs().max(1.0)
    }
}

/// Pulls `(params, x, ẋ, y)` into neuron coordinates and compares both sides.
pub fn decompose(
    params: &ParamState,
    x: &[f64],
    x_dot: &[f64],
    y: &[f64],
    arch: &Architecture,
    mode: CoefficientMode,
) -> Result<DecompositionReport> {
    let state = BbdState::from_params(params, x, x_dot, y, arch)?;
    let original = lagrangian_original(params, &Sample::new(x.to_vec(), y.to_vec()), arch)?;
    let bulk = lagrangian_bulk(&state, arch, mode)?;
    let boundary = lagrangian_boundary(&state, arch, mode)?;
    Ok(DecompositionReport {
        l_original: original.total,
        l_bulk: bulk.value,
        l_boundary: boundary.value,
        mismatch: (original.total - (bulk.value + boundary.value)).abs(),
        per_layer: bulk.per_layer,
        coefficient_mode: mode,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub n_trials: usize,
    /// Inclusive range of depths `M`.
    pub depth_range: (usize, usize),
    /// Inclusive range of layer widths.
    pub width_range: (usize, usize),
    pub seed: u64,
    /// Draw a nonzero `ẋ` as well.
    #[serde(default = "default_true")]
    pub input_velocity: bool,
}

fn default_true() -> bool {
    true
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            n_trials: 100,
            depth_range: (1, 5),
            width_range: (1, 6),
            seed: 0,
            input_velocity: true,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::validation("n_trials", "must be at least 1"));
        }
        let (d0, d1) = self.depth_range;
        if d0 == 0 || d0 > d1 {
            return Err(Error::validation("depth_range", "need 1 <= min <= max"));
        }
        let (w0, w1) = self.width_range;
        if w0 == 0 || w0 > w1 {
            return Err(Error::validation("width_range", "need 1 <= min <= max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTrial {
    pub index: usize,
    pub widths: Vec<usize>,
    pub activation: ActivationKind,
    pub loss: LossKind,
    pub l_original: f64,
    pub mismatch_as_printed: f64,
    pub mismatch_chain_rule: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub tolerance: f64,
    pub trials: Vec<AuditTrial>,
    pub max_mismatch_as_printed: f64,
    pub max_mismatch_chain_rule: f64,
    pub mean_mismatch_as_printed: f64,
    pub mean_mismatch_chain_rule: f64,
    /// Mode the caller asked to be judged.
    pub requested_mode: CoefficientMode,
    /// First mode (chain-rule preferred) meeting the tolerance on every trial.
    pub shipped_mode: Option<CoefficientMode>,
    pub passed: bool,
}

impl AuditReport {
    pub fn max_mismatch(&self, mode: CoefficientMode) -> f64 {
        match mode {
            CoefficientMode::AsPrinted => self.max_mismatch_as_printed,
            CoefficientMode::ChainRule => self.max_mismatch_chain_rule,
        }
    }
}

pub const AUDIT_TOLERANCE: f64 = 1e-10;

fn run_trial(config: &AuditConfig, index: usize) -> Result<AuditTrial> {
    let mut r = rng::stream(config.seed, index as u64);
    let activation = ActivationKind::ALL[index % ActivationKind::ALL.len()];
    let loss = LossKind::ALL[(index / ActivationKind::ALL.len()) % LossKind::ALL.len()];
    let depth = r.gen_range(config.depth_range.0..=config.depth_range.1);
    let mut widths: Vec<usize> = (0..=depth)
        .map(|_| r.gen_range(config.width_range.0..=config.width_range.1))
        .collect();
    if loss == LossKind::Hinge {
        widths[depth] = 1;
    }
    let arch = Architecture::new(widths.clone(), activation, loss)?;
    let params = ParamState::random_with_velocities(&arch, &mut r);
    let x = rng::normal_vec(&mut r, arch.input_width(), 1.0);
    let x_dot = if config.input_velocity {
        rng::normal_vec(&mut r, arch.input_width(), 1.0)
    } else {
        vec![0.0; arch.input_width()]
    };
    let y = random_target(&arch, &mut r);
    let printed = decompose(&params, &x, &x_dot, &y, &arch, CoefficientMode::AsPrinted)?;
    let chain = decompose(&params, &x, &x_dot, &y, &arch, CoefficientMode::ChainRule)?;
    Ok(AuditTrial {
        index,
        widths,
        activation,
        loss,
        l_original: chain.l_original,
        mismatch_as_printed: printed.relative_mismatch(),
        mismatch_chain_rule: chain.relative_mismatch(),
    })
}

/// Random-state audit of the decomposition identity in both coefficient modes.
///
/// Trial `k` cycles through the activation/loss grid and draws from RNG stream
/// `(seed, k)`, so the report is independent of thread count.
pub fn audit_decomposition(config: &AuditConfig, mode: CoefficientMode) -> Result<AuditReport> {
    config.validate()?;
    let trials: Vec<AuditTrial> = (0..config.n_trials)
        .into_par_iter()
        .map(|k| run_trial(config, k))
        .collect::<Result<_>>()?;
    let max = |f: fn(&AuditTrial) -> f64| trials.iter().map(f).fold(0.0, f64::max);
    let mean = |f: fn(&AuditTrial) -> f64| trials.iter().map(f).sum::<f64>() / trials.len() as f64;
    let max_p = max(|t| t.mismatch_as_printed);
    let max_c = max(|t| t.mismatch_chain_rule);
    let shipped_mode = if max_c <= AUDIT_TOLERANCE {
        Some(CoefficientMode::ChainRule)
    } else if max_p <= AUDIT_TOLERANCE {
        Some(CoefficientMode::AsPrinted)
    } else {
        None
    };
    let requested_max = if mode == CoefficientMode::ChainRule {
        max_c
    } else {
        max_p
    };
    Ok(AuditReport {
        config: config.clone(),
        tolerance: AUDIT_TOLERANCE,
        max_mismatch_as_printed: max_p,
        max_mismatch_chain_rule: max_c,
        mean_mismatch_as_printed: mean(|t| t.mismatch_as_printed),
        mean_mismatch_chain_rule: mean(|t| t.mismatch_chain_rule),
        requested_mode: mode,
        shipped_mode,
        passed: requested_max <= AUDIT_TOLERANCE,
        trials,
    })
}
