use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{lagrangian_bulk, random_target, BbdState, CoefficientMode};
use crate::net::Architecture;
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Couplings `m` whose weight is `N × N` and whose layers `m, m+1` are hidden
/// width `N`: `1..=M-1` when the output width is also `N`, else `1..=M-2`.
///
/// Errors unless all hidden widths agree and the range holds at least two couplings.
pub fn interior_couplings(arch: &Architecture) -> Result<RangeInclusive<usize>> {
    let m_count = arch.depth();
    if m_count < 3 {
        return Err(Error::Precondition(format!(
            "need depth >= 3, got {m_count}"
        )));
    }
    let n = arch.widths[1];
    if arch.widths[1..m_count].iter().any(|&w| w != n) {
        return Err(Error::Precondition(format!(
            "hidden widths must be equal, got {:?}",
            &arch.widths[1..m_count]
        )));
    }
    let end = if arch.widths[m_count] == n {
        m_count - 1
    } else {
        m_count - 2
    };
    if end < 2 {
        return Err(Error::Precondition(
            "interior range holds fewer than two couplings".into(),
        ));
    }
    Ok(1..=end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub interior: (usize, usize),
    pub per_layer_original: Vec<f64>,
    pub per_layer_shifted: Vec<f64>,
    /// `m` such that layer `m` of the original was compared with `m + 1` of the shift.
    pub compared: Vec<usize>,
    /// Max `|P_m - P'_{m+1}|` over `compared`.
    pub max_deviation: f64,
    /// Max minus min of the original interior contributions; 0 for replicated states.
    pub interior_spread: f64,
}

/// Shifts layer fields `m → m+1` with periodic wrap on the interior and
/// re-evaluates the per-layer bulk contributions.
pub fn translational_symmetry_check(
    state: &BbdState,
    arch: &Architecture,
    mode: CoefficientMode,
) -> Result<SymmetryReport> {
    let range = interior_couplings(arch)?;
    state.check_shapes(arch)?;
    let (start, end) = (*range.start(), *range.end());
    let mut shifted = state.clone();
    let span = end - start + 1;
    for m in range.clone() {
        let to = start + (m - start + 1) % span;
        shifted.w[to] = state.w[m].clone();
        shifted.w_dot[to] = state.w_dot[m].clone();
    }
    // Neuron layers start..=end+1, stored at index layer - 1.
    let lspan = span + 1;
    for layer in start..=end + 1 {
        let to = start + (layer - start + 1) % lspan;
        shifted.z[to - 1] = state.z[layer - 1].clone();
        shifted.z_dot[to - 1] = state.z_dot[layer - 1].clone();
    }
    let orig = lagrangian_bulk(state, arch, mode)?.per_layer;
    let moved = lagrangian_bulk(&shifted, arch, mode)?.per_layer;
    let compared: Vec<usize> = (start..end).collect();
    let max_deviation = compared
        .iter()
        .map(|&m| (orig[m] - moved[m + 1]).abs())
        .fold(0.0, f64::max);
    let interior = &orig[start..=end];
    let hi = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = interior.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SymmetryReport {
        interior: (start, end),
        per_layer_original: orig,
        per_layer_shifted: moved,
        compared,
        max_deviation,
        interior_spread: hi - lo,
    })
}

impl BbdState {
    /// Homogeneous state: one `(W, Ẇ)` pair shared by all interior couplings
    /// and one `(z, ż)` pair shared by all interior layers.
    pub fn replicated(arch: &Architecture, rng: &mut Rng) -> Result<Self> {
        let range = interior_couplings(arch)?;
        let mut state = Self::random(arch, rng);
        let first = *range.start();
        let n = arch.widths[first];
        let scale = 1.0 / (n as f64).sqrt();
        let w = crate::net::Matrix::from_vec(n, n, rng::normal_vec(rng, n * n, scale));
        let wd = crate::net::Matrix::from_vec(n, n, rng::normal_vec(rng, n * n, scale));
        let z = rng::normal_vec(rng, n, 1.0);
        let zd = rng::normal_vec(rng, n, 1.0);
        for m in range.clone() {
            state.w[m] = w.clone();
            state.w_dot[m] = wd.clone();
        }
        for layer in first..=*range.end() + 1 {
            state.z[layer - 1] = z.clone();
            state.z_dot[layer - 1] = zd.clone();
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataIndependenceReport {
    pub reference: f64,
    pub values: Vec<f64>,
    pub max_deviation: f64,
    /// Every draw reproduced the reference bit for bit.
    pub bitwise_equal: bool,
}

/// Redraws `(x, ẋ, y)` `n_draws` times with internal fields fixed and
/// evaluates `eval` on each state.
pub fn data_independence_check_with<F>(
    state: &BbdState,
    arch: &Architecture,
    n_draws: usize,
    seed: u64,
    eval: F,
) -> Result<DataIndependenceReport>
where
    F: Fn(&BbdState) -> Result<f64>,
{
    let reference = eval(state)?;
    let mut values = Vec::with_capacity(n_draws);
    for k in 0..n_draws {
        let mut r = rng::stream(seed, k as u64);
        let mut s = state.clone();
        s.x = rng::normal_vec(&mut r, arch.input_width(), 1.0);
        s.x_dot = rng::normal_vec(&mut r, arch.input_width(), 1.0);
        s.y = random_target(arch, &mut r);
        values.push(eval(&s)?);
    }
    let max_deviation = values
        .iter()
        .map(|v| (v - reference).abs())
        .fold(0.0, f64::max);
    let bitwise_equal = values.iter().all(|v| v.to_bits() == reference.to_bits());
    Ok(DataIndependenceReport {
        reference,
        values,
        max_deviation,
        bitwise_equal,
    })
}

/// [`data_independence_check_with`] on [`lagrangian_bulk`].
pub fn data_independence_check(
    state: &BbdState,
    arch: &Architecture,
    n_draws: usize,
    seed: u64,
    mode: CoefficientMode,
) -> Result<DataIndependenceReport> {
    data_independence_check_with(state, arch, n_draws, seed, |s| {
        Ok(lagrangian_bulk(s, arch, mode)?.value)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ActivationKind, LossKind, ParamState};

    fn zero_velocity_state(arch: &Architecture, rng: &mut Rng) -> Result<BbdState> {
        let p = ParamState::random(arch, rng);
        let x = rng::normal_vec(rng, arch.input_width(), 1.0);
        let y = random_target(arch, rng);
        BbdState::from_params(&p, &x, &vec![0.0; x.len()], &y, arch)
    }

    fn arch(widths: Vec<usize>) -> Architecture {
        Architecture::new(widths, ActivationKind::Tanh, LossKind::Mse).unwrap()
    }

    #[test]
    fn replicated_interior_is_flat() {
        for m in 3..=5 {
            let mut w = vec![2];
            w.extend(std::iter::repeat_n(4, m));
            let a = arch(w);
            let s = BbdState::replicated(&a, &mut rng::stream(13, m as u64)).unwrap();
            let rep = translational_symmetry_check(&s, &a, CoefficientMode::ChainRule).unwrap();
            assert_eq!(rep.interior_spread, 0.0);
            assert_eq!(rep.max_deviation, 0.0);
        }
    }

    #[test]
    fn random_state_shift_is_exact() {
        let a = arch(vec![3, 5, 5, 5, 5, 2]);
        let s = BbdState::random(&a, &mut rng::stream(13, 0));
        let rep = translational_symmetry_check(&s, &a, CoefficientMode::ChainRule).unwrap();
        assert_eq!(rep.interior, (1, 3));
        assert_eq!(rep.compared, vec![1, 2]);
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.interior_spread > 0.0);
    }

    #[test]
    fn inhomogeneous_rejected() {
        let a = arch(vec![2, 4, 3, 4, 4]);
        let s = BbdState::random(&a, &mut rng::stream(0, 0));
        let e = translational_symmetry_check(&s, &a, CoefficientMode::ChainRule).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn bulk_ignores_data() {
        let a = Architecture::new(
            vec![3, 4, 4, 3],
            ActivationKind::Sigmoid,
            LossKind::KlDivergence,
        )
        .unwrap();
        let s = BbdState::random(&a, &mut rng::stream(7, 0));
        let rep = data_independence_check(&s, &a, 10, 1, CoefficientMode::ChainRule).unwrap();
        assert!(rep.bitwise_equal);
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn corrupted_evaluator_is_detected() {
        let a = arch(vec![2, 3, 1]);
        let s = BbdState::random(&a, &mut rng::stream(7, 0));
        let rep = data_independence_check_with(&s, &a, 10, 1, |st| {
            Ok(lagrangian_bulk(st, &a, CoefficientMode::ChainRule)?.value + 1e-3 * st.x[0])
        })
        .unwrap();
        assert!(rep.max_deviation > 0.0);
        assert!(!rep.bitwise_equal);
    }

    #[test]
    fn zero_velocity_bulk_vanishes() {
        let a = arch(vec![2, 3, 3, 1]);
        let s = zero_velocity_state(&a, &mut rng::stream(3, 0)).unwrap();
        let rep = data_independence_check(&s, &a, 10, 2, CoefficientMode::ChainRule).unwrap();
        assert_eq!(rep.reference, 0.0);
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn per_layer_terms_are_local() {
        let a = Architecture::new(
            vec![2, 4, 3, 5, 4, 2],
            ActivationKind::Softplus,
            LossKind::Mse,
        )
        .unwrap();
        let base = BbdState::random(&a, &mut rng::stream(21, 0));
        let p0 = lagrangian_bulk(&base, &a, CoefficientMode::ChainRule)
            .unwrap()
            .per_layer;
        let mut r = rng::stream(21, 1);
        for m in 0..a.depth() {
            let mut s = base.clone();
            for k in 0..a.depth() {
                if k != m {
                    let n = s.w[k].as_slice().len();
                    s.w[k]
                        .as_mut_slice()
                        .copy_from_slice(&rng::normal_vec(&mut r, n, 1.0));
                    s.w_dot[k]
                        .as_mut_slice()
                        .copy_from_slice(&rng::normal_vec(&mut r, n, 1.0));
                }
                // Layer k + 1 is read by coupling m only when k + 1 ∈ {m, m + 1}.
                if k + 1 != m && k != m {
                    let n = s.z[k].len();
                    s.z[k] = rng::normal_vec(&mut r, n, 1.0);
                    s.z_dot[k] = rng::normal_vec(&mut r, n, 1.0);
                }
            }
            let p1 = lagrangian_bulk(&s, &a, CoefficientMode::ChainRule)
                .unwrap()
                .per_layer;
            assert_eq!(p0[m].to_bits(), p1[m].to_bits(), "layer {m}");
            assert!(p0.iter().zip(&p1).any(|(u, v)| u != v));
        }
    }
}
