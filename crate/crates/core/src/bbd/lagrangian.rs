use serde::{Deserialize, Serialize};

use super::BbdState;
use crate::dynamics::LagrangianBreakdown;
use crate::net::Architecture;
use crate::Result;

/// Coefficient on the squared drive terms `|A(m)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientMode {
    /// Coefficient 1.
    AsPrinted,
    /// Coefficient ½, from expanding `½|ż - A|²`.
    #[default]
    ChainRule,
}

impl CoefficientMode {
    pub const ALL: [CoefficientMode; 2] = [CoefficientMode::AsPrinted, CoefficientMode::ChainRule];

    pub fn squared_coefficient(self) -> f64 {
        match self {
            CoefficientMode::AsPrinted => 1.0,
            CoefficientMode::ChainRule => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoefficientMode::AsPrinted => "as-printed",
            CoefficientMode::ChainRule => "chain-rule",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkEvaluation {
    pub breakdown: LagrangianBreakdown,
    /// Contribution owned by coupling `m`, for `m = 0..M-1`:
    /// `½|Ẇ(m)|² + ½|ż(m+1)|²`, plus `-ż(m+1)·A(m) + c|A(m)|²` when `m ≥ 1`.
    pub per_layer: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEvaluation {
    pub breakdown: LagrangianBreakdown,
    pub value: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn sum_sq(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// `A(m) = Ẇ(m) σ(z(m)) + W(m) (σ'(z(m)) ⊙ ż(m))` for `m ≥ 1`; `A(0) = Ẇ(0) x + W(0) ẋ`.
pub(crate) fn drive(state: &BbdState, arch: &Architecture, m: usize) -> Vec<f64> {
    let (h, h_dot) = if m == 0 {
        (state.x.clone(), state.x_dot.clone())
    } else {
        let z = &state.z[m - 1];
        let hd = z
            .iter()
            .zip(&state.z_dot[m - 1])
            .map(|(zi, zd)| arch.activation.deriv(*zi) * zd)
            .collect();
        (arch.activation.apply(z), hd)
    };
    let a = state.w_dot[m].mul_vec(&h);
    let b = state.w[m].mul_vec(&h_dot);
    a.iter().zip(&b).map(|(u, v)| u + v).collect()
}

/// Data-free part of the decomposed Lagrangian. Reads only `W`, `Ẇ`, `z`, `ż`.
pub fn lagrangian_bulk(
    state: &BbdState,
    arch: &Architecture,
    mode: CoefficientMode,
) -> Result<BulkEvaluation> {
    state.check_shapes(arch)?;
    let c = mode.squared_coefficient();
    let (mut kw, mut kz, mut cross, mut sq) = (0.0, 0.0, 0.0, 0.0);
    let mut per_layer = Vec::with_capacity(arch.depth());
    for m in 0..arch.depth() {
        let kw_m = 0.5 * state.w_dot[m].sum_sq();
        let kz_m = 0.5 * sum_sq(&state.z_dot[m]);
        let (cross_m, sq_m) = if m >= 1 {
            let a = drive(state, arch, m);
            (-dot(&state.z_dot[m], &a), c * sum_sq(&a))
        } else {
            (0.0, 0.0)
        };
        per_layer.push(kw_m + kz_m + cross_m + sq_m);
        kw += kw_m;
        kz += kz_m;
        cross += cross_m;
        sq += sq_m;
    }
    let breakdown = LagrangianBreakdown::new(kw, kz, cross, sq, 0.0);
    Ok(BulkEvaluation {
        value: breakdown.total,
        breakdown,
        per_layer,
    })
}

/// Input and output boundary terms: `c|A(0)|² - ż(1)·A(0) - ℓ(z(M), y)`.
pub fn lagrangian_boundary(
    state: &BbdState,
    arch: &Architecture,
    mode: CoefficientMode,
) -> Result<BoundaryEvaluation> {
    state.check_shapes(arch)?;
    let a0 = drive(state, arch, 0);
    let loss = arch.loss.value(&state.z[arch.depth() - 1], &state.y)?;
    let breakdown = LagrangianBreakdown::new(
        0.0,
        0.0,
        -dot(&state.z_dot[0], &a0),
        mode.squared_coefficient() * sum_sq(&a0),
        -loss,
    );
    Ok(BoundaryEvaluation {
        value: breakdown.total,
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ActivationKind, LossKind, Matrix};

    #[test]
    fn single_unit_by_hand() {
        // M = 1, N = 1, identity: ½ḃ² = ½ż² - żA + ½A², A = ẇx + wẋ.
        let arch = Architecture::new(vec![1, 1], ActivationKind::Identity, LossKind::Mse).unwrap();
        let (w, wd, x, xd, bd) = (0.7, -1.3, 2.0, 0.5, 0.4);
        let a = wd * x + w * xd;
        let zd = a + bd;
        let state = BbdState {
            w: vec![Matrix::from_vec(1, 1, vec![w])],
            w_dot: vec![Matrix::from_vec(1, 1, vec![wd])],
            z: vec![vec![0.3]],
            z_dot: vec![vec![zd]],
            x: vec![x],
            x_dot: vec![xd],
            y: vec![0.1],
        };
        let loss = (0.3f64 - 0.1).powi(2);
        let expected = 0.5 * wd * wd + 0.5 * bd * bd - loss;
        let bulk = lagrangian_bulk(&state, &arch, CoefficientMode::ChainRule).unwrap();
        let bnd = lagrangian_boundary(&state, &arch, CoefficientMode::ChainRule).unwrap();
        assert!((bulk.value + bnd.value - expected).abs() < 1e-14);
        assert_eq!(bnd.breakdown.squared_terms, 0.5 * a * a);
        let printed = lagrangian_boundary(&state, &arch, CoefficientMode::AsPrinted).unwrap();
        assert!((bulk.value + printed.value - expected - 0.5 * a * a).abs() < 1e-14);
    }

    #[test]
    fn mode_serde_names() {
        let s = serde_json::to_string(&CoefficientMode::AsPrinted).unwrap();
        assert_eq!(s, "\"as-printed\"");
        let m: CoefficientMode = serde_json::from_str("\"chain-rule\"").unwrap();
        assert_eq!(m, CoefficientMode::ChainRule);
    }
}
