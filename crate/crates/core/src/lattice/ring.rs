use serde::{Deserialize, Serialize};

use crate::bbd::{BbdState, CoefficientMode};
use crate::dynamics::LagrangianBreakdown;
use crate::net::{ActivationKind, Architecture, LossKind, Matrix, ParamState, Summation};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Locally connected network on a circle: neuron `i` of layer `m+1` reads
/// neurons `i` and `i+1 (mod N)` of layer `m`. Every layer, input included,
/// has width `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingArchitecture {
    pub depth: usize,
    pub width: usize,
    pub activation: ActivationKind,
    pub loss: LossKind,
}

impl RingArchitecture {
    pub fn new(
        depth: usize,
        width: usize,
        activation: ActivationKind,
        loss: LossKind,
    ) -> Result<Self> {
        let a = Self {
            depth,
            width,
            activation,
            loss,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::validation("depth", "must be at least 1"));
        }
        if self.width < 2 {
            return Err(Error::validation(
                "width",
                "ring needs at least 2 neurons so the two stencil legs are distinct",
            ));
        }
        if self.loss == LossKind::Hinge {
            return Err(Error::validation(
                "loss",
                "hinge needs a scalar output; ring outputs have width N",
            ));
        }
        Ok(())
    }

    /// The equivalent dense architecture `[N; M+1]`.
    pub fn to_dense(&self) -> Architecture {
        Architecture {
            widths: vec![self.width; self.depth + 1],
            activation: self.activation,
            loss: self.loss,
        }
    }
}

/// Banded weights `wa` (leg `i → i`) and `wb` (leg `i+1 → i`), one row per coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingParams {
    pub wa: Vec<Vec<f64>>,
    pub wb: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub wa_dot: Vec<Vec<f64>>,
    pub wb_dot: Vec<Vec<f64>>,
    pub b_dot: Vec<Vec<f64>>,
}

fn grid(m: usize, n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; m]
}

fn draw(rng: &mut Rng, m: usize, n: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..m).map(|_| rng::normal_vec(rng, n, scale)).collect()
}

fn check_grid(g: &[Vec<f64>], m: usize, n: usize, name: &str) -> Result<()> {
    if g.len() != m || g.iter().any(|r| r.len() != n) {
        return Err(Error::config(format!("{name} must be {m} x {n}")));
    }
    Ok(())
}

/// Dense `N × N` matrix with `wa` on the diagonal and `wb` on the cyclic superdiagonal.
pub fn embed_band(wa: &[f64], wb: &[f64]) -> Matrix {
    let n = wa.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, wa[i]);
        m.set(i, (i + 1) % n, wb[i]);
    }
    m
}

impl RingParams {
    pub fn zeros(arch: &RingArchitecture) -> Self {
        let g = grid(arch.depth, arch.width);
        Self {
            wa: g.clone(),
            wb: g.clone(),
            b: g.clone(),
            wa_dot: g.clone(),
            wb_dot: g.clone(),
            b_dot: g,
        }
    }

    /// Legs `~ N(0, 1/2)` (fan-in 2), biases and bias velocities `~ N(0, 1)`.
    pub fn random_with_velocities(arch: &RingArchitecture, rng: &mut Rng) -> Self {
        let (m, n) = (arch.depth, arch.width);
        let s = 0.5f64.sqrt();
        Self {
            wa: draw(rng, m, n, s),
            wb: draw(rng, m, n, s),
            b: draw(rng, m, n, 1.0),
            wa_dot: draw(rng, m, n, s),
            wb_dot: draw(rng, m, n, s),
            b_dot: draw(rng, m, n, 1.0),
        }
    }

    pub fn check_shapes(&self, arch: &RingArchitecture) -> Result<()> {
        let (m, n) = (arch.depth, arch.width);
        check_grid(&self.wa, m, n, "wa")?;
        check_grid(&self.wb, m, n, "wb")?;
        check_grid(&self.b, m, n, "b")?;
        check_grid(&self.wa_dot, m, n, "wa_dot")?;
        check_grid(&self.wb_dot, m, n, "wb_dot")?;
        check_grid(&self.b_dot, m, n, "b_dot")
    }

    pub fn to_dense(&self, arch: &RingArchitecture) -> Result<ParamState> {
        self.check_shapes(arch)?;
        Ok(ParamState {
            w: self
                .wa
                .iter()
                .zip(&self.wb)
                .map(|(a, b)| embed_band(a, b))
                .collect(),
            b: self.b.clone(),
            w_dot: self
                .wa_dot
                .iter()
                .zip(&self.wb_dot)
                .map(|(a, b)| embed_band(a, b))
                .collect(),
            b_dot: self.b_dot.clone(),
        })
    }
}

/// `wa_i h_i + wb_i h_{i+1}`, indices mod `N`.
fn stencil(wa: &[f64], wb: &[f64], h: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|i| wa[i] * h[i] + wb[i] * h[(i + 1) % n])
        .collect()
}

/// Pre-activations of layers `1..=M` (index `k` holds layer `k + 1`).
pub fn ring_forward(
    params: &RingParams,
    x: &[f64],
    arch: &RingArchitecture,
) -> Result<Vec<Vec<f64>>> {
    params.check_shapes(arch)?;
    if x.len() != arch.width {
        return Err(Error::config(format!(
            "input has length {}, ring width is {}",
            x.len(),
            arch.width
        )));
    }
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(arch.depth);
    let mut h = x.to_vec();
    for m in 0..arch.depth {
        let s = stencil(&params.wa[m], &params.wb[m], &h);
        let zm: Vec<f64> = s.iter().zip(&params.b[m]).map(|(a, b)| a + b).collect();
        if zm.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { layer: m + 1 });
        }
        h = arch.activation.apply(&zm);
        z.push(zm);
    }
    Ok(z)
}

/// `∂ℓ/∂wa`, `∂ℓ/∂wb`, `∂ℓ/∂b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingGrads {
    pub wa: Vec<Vec<f64>>,
    pub wb: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

/// Loss and banded reverse-mode gradients.
pub fn ring_loss_and_grads(
    params: &RingParams,
    x: &[f64],
    y: &[f64],
    arch: &RingArchitecture,
) -> Result<(f64, RingGrads)> {
    let z = ring_forward(params, x, arch)?;
    let (value, mut delta) = arch.loss.value_and_grad(&z[arch.depth - 1], y)?;
    let n = arch.width;
    let mut g = RingGrads {
        wa: grid(arch.depth, n),
        wb: grid(arch.depth, n),
        b: grid(arch.depth, n),
    };
    for m in (0..arch.depth).rev() {
        let h: Vec<f64> = if m == 0 {
            x.to_vec()
        } else {
            arch.activation.apply(&z[m - 1])
        };
        for i in 0..n {
            g.wa[m][i] = delta[i] * h[i];
            g.wb[m][i] = delta[i] * h[(i + 1) % n];
        }
        if m > 0 {
            let next: Vec<f64> = (0..n)
                .map(|j| {
                    let back = params.wa[m][j] * delta[j]
                        + params.wb[m][(j + n - 1) % n] * delta[(j + n - 1) % n];
                    back * arch.activation.deriv(z[m - 1][j])
                })
                .collect();
            g.b[m] = std::mem::replace(&mut delta, next);
        } else {
            g.b[m] = std::mem::take(&mut delta);
        }
    }
    Ok((value, g))
}

/// Ring network in neuron coordinates (compare [`BbdState`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingState {
    pub wa: Vec<Vec<f64>>,
    pub wb: Vec<Vec<f64>>,
    pub wa_dot: Vec<Vec<f64>>,
    pub wb_dot: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub z_dot: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub y: Vec<f64>,
}

impl RingState {
    pub fn from_params(
        params: &RingParams,
        x: &[f64],
        x_dot: &[f64],
        y: &[f64],
        arch: &RingArchitecture,
    ) -> Result<Self> {
        let z = ring_forward(params, x, arch)?;
        if x_dot.len() != arch.width {
            return Err(Error::config("x_dot length must equal ring width"));
        }
        let mut z_dot: Vec<Vec<f64>> = Vec::with_capacity(arch.depth);
        for m in 0..arch.depth {
            let a = if m == 0 {
                drive(
                    &params.wa[0],
                    &params.wb[0],
                    &params.wa_dot[0],
                    &params.wb_dot[0],
                    x,
                    x_dot,
                )
            } else {
                let (h, hd) = activations(arch.activation, &z[m - 1], &z_dot[m - 1]);
                drive(
                    &params.wa[m],
                    &params.wb[m],
                    &params.wa_dot[m],
                    &params.wb_dot[m],
                    &h,
                    &hd,
                )
            };
            z_dot.push(a.iter().zip(&params.b_dot[m]).map(|(u, v)| u + v).collect());
        }
        Ok(Self {
            wa: params.wa.clone(),
            wb: params.wb.clone(),
            wa_dot: params.wa_dot.clone(),
            wb_dot: params.wb_dot.clone(),
            z,
            z_dot,
            x: x.to_vec(),
            x_dot: x_dot.to_vec(),
            y: y.to_vec(),
        })
    }

    pub fn check_shapes(&self, arch: &RingArchitecture) -> Result<()> {
        let (m, n) = (arch.depth, arch.width);
        check_grid(&self.wa, m, n, "wa")?;
        check_grid(&self.wb, m, n, "wb")?;
        check_grid(&self.wa_dot, m, n, "wa_dot")?;
        check_grid(&self.wb_dot, m, n, "wb_dot")?;
        check_grid(&self.z, m, n, "z")?;
        check_grid(&self.z_dot, m, n, "z_dot")?;
        if self.x.len() != n || self.x_dot.len() != n {
            return Err(Error::config("input length must equal ring width"));
        }
        Ok(())
    }

    pub fn to_dense(&self, arch: &RingArchitecture) -> Result<BbdState> {
        self.check_shapes(arch)?;
        Ok(BbdState {
            w: self
                .wa
                .iter()
                .zip(&self.wb)
                .map(|(a, b)| embed_band(a, b))
                .collect(),
            w_dot: self
                .wa_dot
                .iter()
                .zip(&self.wb_dot)
                .map(|(a, b)| embed_band(a, b))
                .collect(),
            z: self.z.clone(),
            z_dot: self.z_dot.clone(),
            x: self.x.clone(),
            x_dot: self.x_dot.clone(),
            y: self.y.clone(),
        })
    }

    /// Relabels every width index `i → i - shift (mod N)`: entry `i` of the result
    /// is entry `i + shift` of `self`.
    pub fn rotated(&self, shift: usize) -> Self {
        let rot = |v: &Vec<f64>| {
            let mut r = v.clone();
            if !r.is_empty() {
                let k = shift % r.len();
                r.rotate_left(k);
            }
            r
        };
        let rot_all = |g: &Vec<Vec<f64>>| g.iter().map(rot).collect::<Vec<_>>();
        Self {
            wa: rot_all(&self.wa),
            wb: rot_all(&self.wb),
            wa_dot: rot_all(&self.wa_dot),
            wb_dot: rot_all(&self.wb_dot),
            z: rot_all(&self.z),
            z_dot: rot_all(&self.z_dot),
            x: rot(&self.x),
            x_dot: rot(&self.x_dot),
            y: rot(&self.y),
        }
    }
}

fn activations(act: ActivationKind, z: &[f64], z_dot: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = act.apply(z);
    let hd = z
        .iter()
        .zip(z_dot)
        .map(|(zi, zd)| act.deriv(*zi) * zd)
        .collect();
    (h, hd)
}

/// `A_i = ẇa_i h_i + ẇb_i h_{i+1} + wa_i ḣ_i + wb_i ḣ_{i+1}`.
fn drive(
    wa: &[f64],
    wb: &[f64],
    wa_dot: &[f64],
    wb_dot: &[f64],
    h: &[f64],
    h_dot: &[f64],
) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            (wa_dot[i] * h[i] + wb_dot[i] * h[j]) + (wa[i] * h_dot[i] + wb[i] * h_dot[j])
        })
        .collect()
}

/// Bulk, boundary and total breakdowns of a ring Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingLagrangian {
    pub bulk: LagrangianBreakdown,
    pub boundary: LagrangianBreakdown,
    pub total: LagrangianBreakdown,
}

/// Exact decomposed Lagrangian of the ring, sums restricted to the stencil.
///
/// Every site sum is order-independent ([`Summation::Canonical`]), so all
/// scalars are bitwise invariant under [`RingState::rotated`].
pub fn ring_lagrangian_discrete(
    state: &RingState,
    arch: &RingArchitecture,
    mode: CoefficientMode,
) -> Result<RingLagrangian> {
    state.check_shapes(arch)?;
    let c = mode.squared_coefficient();
    let sum = Summation::Canonical;
    let mut kw = Vec::new();
    let mut kz = Vec::new();
    let mut cross = Vec::new();
    let mut sq = Vec::new();
    for m in 0..arch.depth {
        for i in 0..arch.width {
            kw.push(
                0.5 * (state.wa_dot[m][i] * state.wa_dot[m][i]
                    + state.wb_dot[m][i] * state.wb_dot[m][i]),
            );
            kz.push(0.5 * state.z_dot[m][i] * state.z_dot[m][i]);
        }
        if m >= 1 {
            let (h, hd) = activations(arch.activation, &state.z[m - 1], &state.z_dot[m - 1]);
            let a = drive(
                &state.wa[m],
                &state.wb[m],
                &state.wa_dot[m],
                &state.wb_dot[m],
                &h,
                &hd,
            );
            for (ai, zd) in a.iter().zip(&state.z_dot[m]) {
                cross.push(-zd * ai);
                sq.push(c * ai * ai);
            }
        }
    }
    let bulk = LagrangianBreakdown::new(sum.sum(kw), sum.sum(kz), sum.sum(cross), sum.sum(sq), 0.0);
    let a0 = drive(
        &state.wa[0],
        &state.wb[0],
        &state.wa_dot[0],
        &state.wb_dot[0],
        &state.x,
        &state.x_dot,
    );
    let loss = arch
        .loss
        .value_with(&state.z[arch.depth - 1], &state.y, sum)?;
    let boundary = LagrangianBreakdown::new(
        0.0,
        0.0,
        sum.sum(
            a0.iter()
                .zip(&state.z_dot[0])
                .map(|(a, zd)| -zd * a)
                .collect(),
        ),
        sum.sum(a0.iter().map(|a| c * a * a).collect()),
        -loss,
    );
    Ok(RingLagrangian {
        bulk,
        boundary,
        total: bulk.combine(&boundary),
    })
}
