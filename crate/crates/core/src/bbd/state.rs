use serde::{Deserialize, Serialize};

use crate::net::{forward, Architecture, LossKind, Matrix, ParamState};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Network state in neuron coordinates: weights, pre-activations, their
/// velocities, and the data `(x, ẋ, y)`.
///
/// `z[k]` and `z_dot[k]` hold layer `k + 1`, as in
/// [`NeuronState`](crate::net::NeuronState).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbdState {
    pub w: Vec<Matrix>,
    pub w_dot: Vec<Matrix>,
    pub z: Vec<Vec<f64>>,
    pub z_dot: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub y: Vec<f64>,
}

impl BbdState {
    /// Pulls a `(W, b, Ẇ, ḃ)` state forward: `z` from the forward pass, `ż`
    /// from the velocity pushforward.
    pub fn from_params(
        params: &ParamState,
        x: &[f64],
        x_dot: &[f64],
        y: &[f64],
        arch: &Architecture,
    ) -> Result<Self> {
        let neurons = forward(params, x, arch)?;
        let z_dot = neuron_velocity_pushforward(
            &params.w,
            &params.w_dot,
            &params.b_dot,
            &neurons.z,
            x,
            x_dot,
            arch,
        )?;
        Ok(Self {
            w: params.w.clone(),
            w_dot: params.w_dot.clone(),
            z: neurons.z,
            z_dot,
            x: x.to_vec(),
            x_dot: x_dot.to_vec(),
            y: y.to_vec(),
        })
    }

    /// Draws every field directly in neuron coordinates: `W, Ẇ ~ N(0, 1/fan_in)`,
    /// `z, ż, x, ẋ ~ N(0, 1)`, and a target valid for the loss.
    pub fn random(arch: &Architecture, rng: &mut Rng) -> Self {
        let mut p = ParamState::random_with_velocities(arch, rng);
        let z = arch.widths[1..]
            .iter()
            .map(|&n| rng::normal_vec(rng, n, 1.0))
            .collect();
        let z_dot = arch.widths[1..]
            .iter()
            .map(|&n| rng::normal_vec(rng, n, 1.0))
            .collect();
        let x = rng::normal_vec(rng, arch.input_width(), 1.0);
        let x_dot = rng::normal_vec(rng, arch.input_width(), 1.0);
        let y = random_target(arch, rng);
        Self {
            w: std::mem::take(&mut p.w),
            w_dot: std::mem::take(&mut p.w_dot),
            z,
            z_dot,
            x,
            x_dot,
            y,
        }
    }

    pub fn depth(&self) -> usize {
        self.w.len()
    }

    pub fn check_shapes(&self, arch: &Architecture) -> Result<()> {
        let m_count = arch.depth();
        if self.w.len() != m_count
            || self.w_dot.len() != m_count
            || self.z.len() != m_count
            || self.z_dot.len() != m_count
        {
            return Err(Error::config(format!(
                "state depth {} does not match architecture depth {m_count}",
                self.w.len()
            )));
        }
        for m in 0..m_count {
            let shape = (arch.widths[m + 1], arch.widths[m]);
            if self.w[m].shape() != shape || self.w_dot[m].shape() != shape {
                return Err(Error::config(format!("W[{m}] shape mismatch")));
            }
            if self.z[m].len() != shape.0 || self.z_dot[m].len() != shape.0 {
                return Err(Error::config(format!("z[{}] length mismatch", m + 1)));
            }
        }
        if self.x.len() != arch.input_width() || self.x_dot.len() != arch.input_width() {
            return Err(Error::config("input length does not match N_0"));
        }
        Ok(())
    }

    /// Biases implied by the neuron coordinates.
    pub fn biases(&self, arch: &Architecture) -> Result<Vec<Vec<f64>>> {
        bias_from_neurons(&self.w, &self.z, &self.x, arch)
    }
}

/// Target drawn to be valid for the architecture's loss.
pub fn random_target(arch: &Architecture, rng: &mut Rng) -> Vec<f64> {
    let n = arch.output_width();
    match arch.loss {
        LossKind::Mse => rng::normal_vec(rng, n, 1.0),
        LossKind::Hinge => {
            if rng::normal(rng) >= 0.0 {
                vec![1.0]
            } else {
                vec![-1.0]
            }
        }
        LossKind::CrossEntropy | LossKind::KlDivergence => {
            let e: Vec<f64> = rng::normal_vec(rng, n, 1.0)
                .iter()
                .map(|v| v.exp())
                .collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        }
    }
}

/// `b(m) = z(m+1) - W(m) σ(z(m))` for `m = 0..M-1`, with `σ(z(0))` replaced by `x`.
pub fn bias_from_neurons(
    w: &[Matrix],
    z: &[Vec<f64>],
    x: &[f64],
    arch: &Architecture,
) -> Result<Vec<Vec<f64>>> {
    let m_count = arch.depth();
    if w.len() != m_count || z.len() != m_count || x.len() != arch.input_width() {
        return Err(Error::config("shape mismatch in bias_from_neurons"));
    }
    let mut out = Vec::with_capacity(m_count);
    for m in 0..m_count {
        if w[m].shape() != (arch.widths[m + 1], arch.widths[m]) || z[m].len() != arch.widths[m + 1]
        {
            return Err(Error::config(format!(
                "layer {m} shape mismatch in bias_from_neurons"
            )));
        }
        let h: Vec<f64> = if m == 0 {
            x.to_vec()
        } else {
            arch.activation.apply(&z[m - 1])
        };
        let wh = w[m].mul_vec(&h);
        out.push(z[m].iter().zip(&wh).map(|(a, b)| a - b).collect());
    }
    Ok(out)
}

/// Time derivative of the forward recursion:
///
/// ```text
/// ż(1)   = Ẇ(0) x + W(0) ẋ + ḃ(0)
/// ż(m+1) = Ẇ(m) σ(z(m)) + W(m) (σ'(z(m)) ⊙ ż(m)) + ḃ(m)
/// ```
pub fn neuron_velocity_pushforward(
    w: &[Matrix],
    w_dot: &[Matrix],
    b_dot: &[Vec<f64>],
    z: &[Vec<f64>],
    x: &[f64],
    x_dot: &[f64],
    arch: &Architecture,
) -> Result<Vec<Vec<f64>>> {
    let m_count = arch.depth();
    if w.len() != m_count
        || w_dot.len() != m_count
        || b_dot.len() != m_count
        || z.len() != m_count
        || x.len() != arch.input_width()
        || x_dot.len() != arch.input_width()
    {
        return Err(Error::config(
            "shape mismatch in neuron_velocity_pushforward",
        ));
    }
    let mut z_dot: Vec<Vec<f64>> = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let shape = (arch.widths[m + 1], arch.widths[m]);
        if w[m].shape() != shape || w_dot[m].shape() != shape || b_dot[m].len() != shape.0 {
            return Err(Error::config(format!(
                "layer {m} shape mismatch in pushforward"
            )));
        }
        let (h, h_dot) = if m == 0 {
            (x.to_vec(), x_dot.to_vec())
        } else {
            let zm = &z[m - 1];
            let h = arch.activation.apply(zm);
            let hd = zm
                .iter()
                .zip(&z_dot[m - 1])
                .map(|(zi, zd)| arch.activation.deriv(*zi) * zd)
                .collect();
            (h, hd)
        };
        let a = w_dot[m].mul_vec(&h);
        let c = w[m].mul_vec(&h_dot);
        z_dot.push(
            a.iter()
                .zip(&c)
                .zip(&b_dot[m])
                .map(|((a, c), bd)| a + c + bd)
                .collect(),
        );
    }
    Ok(z_dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ActivationKind;

    #[test]
    fn zero_coupling_bias_is_next_layer() {
        let arch = Architecture::new(vec![2, 3, 2], ActivationKind::Tanh, LossKind::Mse).unwrap();
        let mut r = rng::stream(0, 0);
        let mut s = BbdState::random(&arch, &mut r);
        for w in &mut s.w {
            w.as_mut_slice().fill(0.0);
        }
        let b = s.biases(&arch).unwrap();
        assert_eq!(b, s.z);
    }

    #[test]
    fn round_trip_through_forward() {
        let arch =
            Architecture::new(vec![3, 4, 4, 2], ActivationKind::Softplus, LossKind::Mse).unwrap();
        let p = ParamState::random(&arch, &mut rng::stream(1, 0));
        let x = [0.2, -0.7, 1.1];
        let n = forward(&p, &x, &arch).unwrap();
        let b = bias_from_neurons(&p.w, &n.z, &x, &arch).unwrap();
        for (u, v) in b.iter().flatten().zip(p.b.iter().flatten()) {
            assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn pushforward_vanishes_at_rest() {
        let arch = Architecture::new(vec![2, 3, 1], ActivationKind::Tanh, LossKind::Mse).unwrap();
        let p = ParamState::random(&arch, &mut rng::stream(2, 0));
        let n = forward(&p, &[0.1, 0.2], &arch).unwrap();
        let zd = neuron_velocity_pushforward(
            &p.w,
            &p.w_dot,
            &p.b_dot,
            &n.z,
            &[0.1, 0.2],
            &[0.0, 0.0],
            &arch,
        )
        .unwrap();
        assert!(zd.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn pushforward_single_linear_layer() {
        let arch = Architecture::new(vec![2, 1], ActivationKind::Identity, LossKind::Mse).unwrap();
        let w = vec![Matrix::from_rows(&[vec![0.5, -1.0]])];
        let wd = vec![Matrix::from_rows(&[vec![2.0, 3.0]])];
        let bd = vec![vec![0.25]];
        let x = [1.5, -2.0];
        let zd = neuron_velocity_pushforward(&w, &wd, &bd, &[vec![0.0]], &x, &[0.0, 0.0], &arch)
            .unwrap();
        assert_eq!(zd[0][0], 2.0 * 1.5 + 3.0 * -2.0 + 0.25);
    }

    #[test]
    fn shape_errors() {
        let arch = Architecture::new(vec![2, 1], ActivationKind::Identity, LossKind::Mse).unwrap();
        let w = vec![Matrix::zeros(1, 3)];
        assert!(matches!(
            bias_from_neurons(&w, &[vec![0.0]], &[0.0, 0.0], &arch),
            Err(Error::Config(_))
        ));
    }
}
