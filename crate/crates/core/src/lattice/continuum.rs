use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldSample, LatticeGeometry};
use crate::net::{ActivationKind, LossKind};
use crate::{Error, Result};

/// Quadrature grid: composite Gauss–Legendre in `x`, periodic trapezoid in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub gl_order: usize,
    pub x_panels: usize,
    pub y_points: usize,
    /// Accept when successive doublings differ by at most `tol · max(1, |I|)`.
    pub tol: f64,
    pub max_doublings: usize,
}

impl Quadrature {
    /// At least 8 quadrature points per lattice spacing in each direction.
    pub fn for_lattice(geom: &LatticeGeometry) -> Self {
        Self {
            gl_order: 8,
            x_panels: geom.depth,
            y_points: 8 * geom.width,
            tol: 1e-10,
            max_doublings: 4,
        }
    }

    fn doubled(self) -> Self {
        Self {
            x_panels: 2 * self.x_panels,
            y_points: 2 * self.y_points,
            ..self
        }
    }
}

fn gl_nodes(order: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(order)
        .map_err(|_| Error::validation("gl_order", "Gauss-Legendre order must be at least 2"))?;
    Ok(rule.as_node_weight_pairs().to_vec())
}

/// `∫₀^{L_x} ∫₀^{L_y} f` for each of `K` integrands at a fixed resolution.
/// Lines of constant `x` run in parallel; the reduction order is fixed.
fn integrate_2d<const K: usize, F>(q: &Quadrature, lx: f64, ly: f64, f: &F) -> Result<[f64; K]>
where
    F: Fn(f64, f64) -> [f64; K] + Sync,
{
    let nodes = gl_nodes(q.gl_order)?;
    let h = lx / q.x_panels as f64;
    let dy = ly / q.y_points as f64;
    let xs: Vec<(f64, f64)> = (0..q.x_panels)
        .flat_map(|p| {
            let a = p as f64 * h;
            nodes
                .iter()
                .map(move |(t, w)| (a + 0.5 * h * (t + 1.0), 0.5 * h * w))
        })
        .collect();
    let lines: Vec<[f64; K]> = xs
        .par_iter()
        .map(|&(x, _)| {
            let mut acc = [0.0; K];
            for j in 0..q.y_points {
                let v = f(x, j as f64 * dy);
                for k in 0..K {
                    acc[k] += v[k];
                }
            }
            acc
        })
        .collect();
    let mut out = [0.0; K];
    for ((_, wx), line) in xs.iter().zip(&lines) {
        for k in 0..K {
            out[k] += wx * dy * line[k];
        }
    }
    Ok(out)
}

fn integrate_y<const K: usize, F>(q: &Quadrature, ly: f64, f: &F) -> [f64; K]
where
    F: Fn(f64) -> [f64; K],
{
    let dy = ly / q.y_points as f64;
    let mut out = [0.0; K];
    for j in 0..q.y_points {
        let v = f(j as f64 * dy);
        for k in 0..K {
            out[k] += dy * v[k];
        }
    }
    out
}

/// Doubles the resolution until every component settles.
fn refine<const K: usize>(
    q: Quadrature,
    mut eval: impl FnMut(&Quadrature) -> Result<[f64; K]>,
) -> Result<[f64; K]> {
    let mut q = q;
    let mut prev = eval(&q)?;
    let mut gap = f64::INFINITY;
    for _ in 0..q.max_doublings {
        q = q.doubled();
        let next = eval(&q)?;
        gap = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        if !gap.is_finite() {
            break;
        }
        if gap <= q.tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature { gap })
}

/// Spacing-independent integrals of the truncated bulk density:
///
/// ```text
/// L_bulk(a) = leading + a_x first_order + a_x² ax2 + a_y² ay2
/// leading     = ∫ ẇ² + ½ ż²
/// first_order = ∫ 2 ∂x∂t(σ ŵ) ż
/// ax2         = ∫ ⅔ [∂t(σ ∂x ŵ)]²
/// ay2         = ∫ 16/3 [∂t(σ ∂y ŵ)]²
/// ```
///
/// with `σ = σ(ẑ)`, integrated over `[0, L_x] × [0, L_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkTruncation {
    pub leading: f64,
    pub first_order: f64,
    pub ax2: f64,
    pub ay2: f64,
}

impl BulkTruncation {
    pub fn at(&self, a_x: f64, a_y: f64) -> f64 {
        self.leading + a_x * self.first_order + a_x * a_x * self.ax2 + a_y * a_y * self.ay2
    }
}

/// Printed coefficients of the bulk truncation, in the order of [`BulkTruncation`].
pub const PRINTED_BULK_COEFFICIENTS: [(&str, f64); 5] = [
    ("w_t^2", 1.0),
    ("z_t^2", 0.5),
    ("a_x d_x d_t(sigma w) z_t", 2.0),
    ("a_x^2 [d_t(sigma d_x w)]^2", 2.0 / 3.0),
    ("a_y^2 [d_t(sigma d_y w)]^2", 16.0 / 3.0),
];

fn bulk_density(fields: &FieldSample, act: ActivationKind, x: f64, y: f64, ly: f64) -> [f64; 4] {
    let w = fields.w.jet(x, y, ly);
    let z = fields.z.jet(x, y, ly);
    let (s, s1, s2) = (act.eval(z.f), act.deriv(z.f), act.second_deriv(z.f));
    let s_t = s1 * z.ft;
    let s_x = s1 * z.fx;
    let s_xt = s2 * z.fx * z.ft + s1 * z.fxt;
    let d_xt = s_xt * w.f + s_t * w.fx + s_x * w.ft + s * w.fxt;
    let gx = s_t * w.fx + s * w.fxt;
    let gy = s_t * w.fy + s * w.fyt;
    [
        w.ft * w.ft + 0.5 * z.ft * z.ft,
        2.0 * d_xt * z.ft,
        2.0 / 3.0 * gx * gx,
        16.0 / 3.0 * gy * gy,
    ]
}

/// Quadrature of the truncated bulk density. Use [`BulkTruncation::at`] for a
/// given spacing.
pub fn continuum_truncation_bulk(
    fields: &FieldSample,
    geom: &LatticeGeometry,
    activation: ActivationKind,
    quad: &Quadrature,
) -> Result<BulkTruncation> {
    geom.validate()?;
    let ly = geom.ly;
    let f = |x: f64, y: f64| bulk_density(fields, activation, x, y, ly);
    let [leading, first_order, ax2, ay2] = refine(*quad, |q| integrate_2d(q, geom.lx, ly, &f))?;
    Ok(BulkTruncation {
        leading,
        first_order,
        ax2,
        ay2,
    })
}

/// `∫∫ (ẇ² + ½ ż²)` alone.
pub fn continuum_kinetic(
    fields: &FieldSample,
    geom: &LatticeGeometry,
    quad: &Quadrature,
) -> Result<f64> {
    let ly = geom.ly;
    let f = |x: f64, y: f64| {
        let (_, wt) = fields.w.eval(x, y, ly);
        let (_, zt) = fields.z.eval(x, y, ly);
        [wt * wt + 0.5 * zt * zt]
    };
    Ok(refine(*quad, |q| integrate_2d(q, geom.lx, ly, &f))?[0])
}

/// Input and output boundary integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTruncation {
    /// `∫ dy [2X²ẇ² + 2Ẋ²ŵ² + 4ẇẊŵX + 2a_y²Ẋ²ŵ∂y²ŵ]` with `ŵ` at the first
    /// coupling, `x = a_x / 2`.
    pub l_input: f64,
    /// `-∫ dy (ẑ(L_x, y) - Ŷ(y))²`.
    pub l_output: f64,
}

pub fn continuum_truncation_boundary(
    fields: &FieldSample,
    geom: &LatticeGeometry,
    loss: LossKind,
    quad: &Quadrature,
) -> Result<BoundaryTruncation> {
    geom.validate()?;
    if loss != LossKind::Mse {
        return Err(Error::Precondition(format!(
            "continuum output density is defined for mse only, got {}",
            loss.name()
        )));
    }
    let ly = geom.ly;
    let (xw, ay2) = (0.5 * geom.a_x(), geom.a_y() * geom.a_y());
    let f = |y: f64| {
        let w = fields.w.jet(xw, y, ly);
        let (xv, xt) = fields.input.eval(0.0, y, ly);
        let (zv, _) = fields.z.eval(geom.lx, y, ly);
        let (yv, _) = fields.target.eval(0.0, y, ly);
        let d = zv - yv;
        [
            2.0 * xv * xv * w.ft * w.ft
                + 2.0 * xt * xt * w.f * w.f
                + 4.0 * w.ft * xt * w.f * xv
                + 2.0 * ay2 * xt * xt * w.f * w.fyy,
            -d * d,
        ]
    };
    let [l_input, l_output] = refine(*quad, |q| Ok(integrate_y(q, ly, &f)))?;
    Ok(BoundaryTruncation { l_input, l_output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Field, Mode};
    use std::f64::consts::PI;

    fn geom() -> LatticeGeometry {
        LatticeGeometry::new(10, 16, 2.0, 1.5).unwrap()
    }

    #[test]
    fn static_fields_vanish() {
        let mut f = FieldSample::nonlinear_example(2.0);
        for fl in [&mut f.w, &mut f.z, &mut f.input] {
            for m in &mut fl.modes {
                m.rate = 0.0;
            }
        }
        let q = Quadrature::for_lattice(&geom());
        let b = continuum_truncation_bulk(&f, &geom(), ActivationKind::Tanh, &q).unwrap();
        assert_eq!(
            b,
            BulkTruncation {
                leading: 0.0,
                first_order: 0.0,
                ax2: 0.0,
                ay2: 0.0
            }
        );
        let bd = continuum_truncation_boundary(&f, &geom(), LossKind::Mse, &q).unwrap();
        assert_eq!(bd.l_input, 0.0);
    }

    #[test]
    fn zero_spacing_is_kinetic() {
        let f = FieldSample::nonlinear_example(2.0);
        let q = Quadrature::for_lattice(&geom());
        let b = continuum_truncation_bulk(&f, &geom(), ActivationKind::Tanh, &q).unwrap();
        let k = continuum_kinetic(&f, &geom(), &q).unwrap();
        assert!((b.at(0.0, 0.0) - k).abs() <= 1e-10);
    }

    #[test]
    fn identity_single_mode_closed_form() {
        let (lx, ly) = (2.0, 1.5);
        let kxw = 2.0 * PI * 2.0 / lx;
        let kxz = 2.0 * PI * 1.0 / lx;
        let (a, ad, b, bd) = (0.7, 0.4, -0.5, 0.9);
        let f = FieldSample {
            w: Field::new(vec![Mode {
                kx: kxw,
                n: 3,
                phase: 0.3,
                value: a,
                rate: ad,
            }]),
            z: Field::new(vec![Mode {
                kx: kxz,
                n: 1,
                phase: -0.2,
                value: b,
                rate: bd,
            }]),
            ..Default::default()
        };
        let g = LatticeGeometry::new(40, 64, lx, ly).unwrap();
        let kyw = 2.0 * PI * 3.0 / ly;
        let t = continuum_truncation_bulk(
            &f,
            &g,
            ActivationKind::Identity,
            &Quadrature::for_lattice(&g),
        )
        .unwrap();
        let area = lx * ly;
        let c = (bd * a + b * ad).powi(2);
        assert!((t.leading - area * (ad * ad / 2.0 + bd * bd / 4.0)).abs() < 1e-8);
        assert!(t.first_order.abs() < 1e-8);
        assert!((t.ax2 - 2.0 / 3.0 * kxw * kxw * c * area / 4.0).abs() < 1e-8);
        assert!((t.ay2 - 16.0 / 3.0 * kyw * kyw * c * area / 4.0).abs() < 1e-8);
    }

    #[test]
    fn boundary_closed_form() {
        let ly = 1.5;
        let (a, ad, c, cd, b, d) = (0.7, 0.4, 1.1, -0.6, 0.5, 0.3);
        let f = FieldSample {
            w: Field::new(vec![Mode {
                kx: 0.0,
                n: 2,
                phase: 0.3,
                value: a,
                rate: ad,
            }]),
            z: Field::new(vec![Mode {
                kx: 0.0,
                n: 3,
                phase: 0.1,
                value: b,
                rate: 0.0,
            }]),
            input: Field::new(vec![Mode {
                kx: 0.0,
                n: 1,
                phase: -0.4,
                value: c,
                rate: cd,
            }]),
            target: Field::new(vec![Mode {
                kx: 0.0,
                n: 1,
                phase: 0.0,
                value: d,
                rate: 0.0,
            }]),
        };
        let g = LatticeGeometry::new(10, 32, 2.0, ly).unwrap();
        let t = continuum_truncation_boundary(&f, &g, LossKind::Mse, &Quadrature::for_lattice(&g))
            .unwrap();
        let kyw = 2.0 * PI * 2.0 / ly;
        let ay = g.a_y();
        let expected = ly / 4.0
            * (2.0 * c * c * ad * ad + 2.0 * cd * cd * a * a + 4.0 * ad * cd * a * c
                - 2.0 * ay * ay * kyw * kyw * cd * cd * a * a);
        assert!((t.l_input - expected).abs() < 1e-8);
        assert!((t.l_output + (b * b + d * d) * ly / 2.0).abs() < 1e-8);
    }

    #[test]
    fn matched_output_vanishes() {
        let f = FieldSample {
            z: Field::constant(0.3, 0.0),
            target: Field::constant(0.3, 0.0),
            ..Default::default()
        };
        let g = geom();
        let t = continuum_truncation_boundary(&f, &g, LossKind::Mse, &Quadrature::for_lattice(&g))
            .unwrap();
        assert_eq!(t.l_output, 0.0);
        assert!(continuum_truncation_boundary(
            &f,
            &g,
            LossKind::CrossEntropy,
            &Quadrature::for_lattice(&g)
        )
        .is_err());
    }
}
