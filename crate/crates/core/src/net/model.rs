use serde::{Deserialize, Serialize};

use super::{ActivationKind, LossKind, Matrix};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Layer widths `N_0..N_M` plus the activation and loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activation: ActivationKind,
    pub loss: LossKind,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activation: ActivationKind, loss: LossKind) -> Result<Self> {
        let arch = Self {
            widths,
            activation,
            loss,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::config(
                "architecture needs at least one weight layer",
            ));
        }
        if let Some(m) = self.widths.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("layer {m} has zero width")));
        }
        if self.loss == LossKind::Hinge && self.output_width() != 1 {
            return Err(Error::config(format!(
                "hinge loss needs output width 1, got {}",
                self.output_width()
            )));
        }
        Ok(())
    }

    /// Number of weight layers `M`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }
}

/// One training pair. `hold_duration` is how long the pair stays active when
/// it is part of a continuous-time sample schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default = "default_hold")]
    pub hold_duration: f64,
}

fn default_hold() -> f64 {
    1.0
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            x,
            y,
            hold_duration: default_hold(),
        }
    }

    pub fn with_hold(mut self, hold_duration: f64) -> Self {
        self.hold_duration = hold_duration;
        self
    }

    pub fn validate(&self, arch: &Architecture) -> Result<()> {
        if self.x.len() != arch.input_width() {
            return Err(Error::config(format!(
                "input length {} does not match N_0 = {}",
                self.x.len(),
                arch.input_width()
            )));
        }
        arch.loss.validate_target(&self.y, arch.output_width())
    }
}

/// Weights, biases and their time derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    pub w: Vec<Matrix>,
    pub b: Vec<Vec<f64>>,
    pub w_dot: Vec<Matrix>,
    pub b_dot: Vec<Vec<f64>>,
}

/// `∂ℓ/∂W[m]` and `∂ℓ/∂b[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub w: Vec<Matrix>,
    pub b: Vec<Vec<f64>>,
}

impl ParamState {
    pub fn zeros(arch: &Architecture) -> Self {
        let w: Vec<Matrix> = arch
            .widths
            .windows(2)
            .map(|p| Matrix::zeros(p[1], p[0]))
            .collect();
        let b: Vec<Vec<f64>> = arch.widths[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            w_dot: w.clone(),
            b_dot: b.clone(),
            w,
            b,
        }
    }

    /// Weights `~ N(0, 1/fan_in)`, biases `~ N(0, 1)`, zero velocities.
    pub fn random(arch: &Architecture, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(arch);
        for (m, w) in p.w.iter_mut().enumerate() {
            let scale = 1.0 / (arch.widths[m] as f64).sqrt();
            for v in w.as_mut_slice() {
                *v = scale * rng::normal(rng);
            }
        }
        for b in &mut p.b {
            for v in b.iter_mut() {
                *v = rng::normal(rng);
            }
        }
        p
    }

    /// Like [`ParamState::random`] but also draws velocities with the same scales.
    pub fn random_with_velocities(arch: &Architecture, rng: &mut Rng) -> Self {
        let mut p = Self::random(arch, rng);
        for (m, w) in p.w_dot.iter_mut().enumerate() {
            let scale = 1.0 / (arch.widths[m] as f64).sqrt();
            for v in w.as_mut_slice() {
                *v = scale * rng::normal(rng);
            }
        }
        for b in &mut p.b_dot {
            for v in b.iter_mut() {
                *v = rng::normal(rng);
            }
        }
        p
    }

    pub fn depth(&self) -> usize {
        self.w.len()
    }

    pub fn check_shapes(&self, arch: &Architecture) -> Result<()> {
        let m_count = arch.depth();
        if self.w.len() != m_count
            || self.b.len() != m_count
            || self.w_dot.len() != m_count
            || self.b_dot.len() != m_count
        {
            return Err(Error::config(format!(
                "parameter state has {} weight layers, architecture has {m_count}",
                self.w.len()
            )));
        }
        for m in 0..m_count {
            let shape = (arch.widths[m + 1], arch.widths[m]);
            if self.w[m].shape() != shape || self.w_dot[m].shape() != shape {
                return Err(Error::config(format!(
                    "W[{m}] has shape {:?}, expected {shape:?}",
                    self.w[m].shape()
                )));
            }
            if self.b[m].len() != shape.0 || self.b_dot[m].len() != shape.0 {
                return Err(Error::config(format!(
                    "b[{m}] has length {}, expected {}",
                    self.b[m].len(),
                    shape.0
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.w_dot).all(Matrix::is_finite)
            && self
                .b
                .iter()
                .chain(&self.b_dot)
                .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Positions flattened as `W[0], b[0], W[1], b[1], ...`.
    pub fn positions(&self) -> Vec<f64> {
        flatten(&self.w, &self.b)
    }

    pub fn velocities(&self) -> Vec<f64> {
        flatten(&self.w_dot, &self.b_dot)
    }

    pub fn set_positions(&mut self, flat: &[f64]) {
        unflatten(flat, &mut self.w, &mut self.b);
    }

    pub fn set_velocities(&mut self, flat: &[f64]) {
        unflatten(flat, &mut self.w_dot, &mut self.b_dot);
    }

    /// Euclidean norm of all weights and biases.
    pub fn param_norm(&self) -> f64 {
        let s: f64 = self.w.iter().map(Matrix::sum_sq).sum::<f64>()
            + self
                .b
                .iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>())
                .sum::<f64>();
        s.sqrt()
    }

    pub fn kinetic_w(&self) -> f64 {
        0.5 * self.w_dot.iter().map(Matrix::sum_sq).sum::<f64>()
    }

    pub fn kinetic_b(&self) -> f64 {
        0.5 * self
            .b_dot
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
    }
}

impl ParamGrads {
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.w, &self.b)
    }
}

fn flatten(w: &[Matrix], b: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (wm, bm) in w.iter().zip(b) {
        out.extend_from_slice(wm.as_slice());
        out.extend_from_slice(bm);
    }
    out
}

fn unflatten(flat: &[f64], w: &mut [Matrix], b: &mut [Vec<f64>]) {
    let mut k = 0;
    for (wm, bm) in w.iter_mut().zip(b.iter_mut()) {
        let n = wm.as_slice().len();
        wm.as_mut_slice().copy_from_slice(&flat[k..k + n]);
        k += n;
        let n = bm.len();
        bm.copy_from_slice(&flat[k..k + n]);
        k += n;
    }
    assert_eq!(k, flat.len(), "flat parameter length");
}

/// Pre-activations of layers `1..=M` and their velocities.
///
/// Stored zero-based: `z[k]` holds layer `k + 1`. Use [`NeuronState::layer`]
/// for the one-based view. `h[k] = σ(z[k])` is cached for the hidden layers
/// `1..M-1`. The input is never stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub z: Vec<Vec<f64>>,
    pub z_dot: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

impl NeuronState {
    /// Builds a state from pre-activations, filling the activation cache.
    pub fn from_z(z: Vec<Vec<f64>>, z_dot: Vec<Vec<f64>>, activation: ActivationKind) -> Self {
        let hidden = z.len().saturating_sub(1);
        let h = z[..hidden].iter().map(|v| activation.apply(v)).collect();
        Self { z, z_dot, h }
    }

    /// Pre-activation of layer `m`, `1 <= m <= M`.
    pub fn layer(&self, m: usize) -> &[f64] {
        assert!(
            m >= 1 && m <= self.z.len(),
            "layer index {m} out of 1..={}",
            self.z.len()
        );
        &self.z[m - 1]
    }

    pub fn layer_dot(&self, m: usize) -> &[f64] {
        &self.z_dot[m - 1]
    }

    /// Network output `Z = z(M)`.
    pub fn output(&self) -> &[f64] {
        self.z.last().expect("non-empty network")
    }
}

/// Runs the forward recursion and returns every pre-activation.
/// Velocities in the returned state are zero.
pub fn forward(params: &ParamState, x: &[f64], arch: &Architecture) -> Result<NeuronState> {
    params.check_shapes(arch)?;
    if x.len() != arch.input_width() {
        return Err(Error::config(format!(
            "input length {} does not match N_0 = {}",
            x.len(),
            arch.input_width()
        )));
    }
    let m_count = arch.depth();
    let mut z = Vec::with_capacity(m_count);
    let mut h = Vec::with_capacity(m_count.saturating_sub(1));
    let mut prev: Vec<f64> = x.to_vec();
    for m in 0..m_count {
        let mut next = params.w[m].mul_vec(&prev);
        for (v, b) in next.iter_mut().zip(&params.b[m]) {
            *v += b;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { layer: m + 1 });
        }
        if m + 1 < m_count {
            prev = arch.activation.apply(&next);
            h.push(prev.clone());
        }
        z.push(next);
    }
    let z_dot = z.iter().map(|v| vec![0.0; v.len()]).collect();
    Ok(NeuronState { z, z_dot, h })
}

/// `ℓ(Z, Y)` for the architecture's loss.
pub fn loss(z_out: &[f64], y: &[f64], kind: LossKind) -> Result<f64> {
    kind.value(z_out, y)
}

/// Loss and exact reverse-mode gradients with respect to every `W[m]`, `b[m]`.
pub fn loss_and_param_grads(
    params: &ParamState,
    sample: &Sample,
    arch: &Architecture,
) -> Result<(f64, ParamGrads)> {
    let neurons = forward(params, &sample.x, arch)?;
    let (value, mut delta) = arch.loss.value_and_grad(neurons.output(), &sample.y)?;
    let m_count = arch.depth();
    let mut gw = vec![Matrix::zeros(0, 0); m_count];
    let mut gb = vec![Vec::new(); m_count];
    for m in (0..m_count).rev() {
        let input: &[f64] = if m == 0 { &sample.x } else { &neurons.h[m - 1] };
        let mut g = Matrix::zeros(delta.len(), input.len());
        for (i, d) in delta.iter().enumerate() {
            for (j, hj) in input.iter().enumerate() {
                g.set(i, j, d * hj);
            }
        }
        gw[m] = g;
        if m > 0 {
            let back = params.w[m].tmul_vec(&delta);
            let zm = &neurons.z[m - 1];
            let next: Vec<f64> = back
                .iter()
                .zip(zm)
                .map(|(b, z)| b * arch.activation.deriv(*z))
                .collect();
            gb[m] = std::mem::replace(&mut delta, next);
        } else {
            gb[m] = std::mem::take(&mut delta);
        }
    }
    Ok((value, ParamGrads { w: gw, b: gb }))
}
