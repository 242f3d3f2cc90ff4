use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{RingArchitecture, RingState};
use crate::{Error, Result};

/// Largest allowed `max(|kx| a_x, |ky| a_y)` at any lattice in use.
pub const BAND_LIMIT: f64 = 0.2;

/// One term `cos(kx x + ky y + phase)` with `ky = 2π n / L_y`, carrying an
/// amplitude for the field and one for its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    #[serde(default)]
    pub kx: f64,
    #[serde(default)]
    pub n: i32,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub rate: f64,
}

/// A field and its derivatives at a point. `t` entries are time derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fyy: f64,
    pub ft: f64,
    pub fxt: f64,
    pub fyt: f64,
}

/// Truncated Fourier series, periodic in `y` with period `L_y`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    #[serde(default)]
    pub modes: Vec<Mode>,
}

impl Field {
    pub fn new(modes: Vec<Mode>) -> Self {
        Self { modes }
    }

    pub fn constant(value: f64, rate: f64) -> Self {
        Self::new(vec![Mode {
            kx: 0.0,
            n: 0,
            phase: 0.0,
            value,
            rate,
        }])
    }

    fn ky(n: i32, ly: f64) -> f64 {
        2.0 * PI * f64::from(n) / ly
    }

    /// `(f, ∂t f)`.
    pub fn eval(&self, x: f64, y: f64, ly: f64) -> (f64, f64) {
        let (mut f, mut ft) = (0.0, 0.0);
        for m in &self.modes {
            let c = (m.kx * x + Self::ky(m.n, ly) * y + m.phase).cos();
            f += m.value * c;
            ft += m.rate * c;
        }
        (f, ft)
    }

    pub fn jet(&self, x: f64, y: f64, ly: f64) -> Jet {
        let mut j = Jet::default();
        for m in &self.modes {
            let ky = Self::ky(m.n, ly);
            let (s, c) = (m.kx * x + ky * y + m.phase).sin_cos();
            j.f += m.value * c;
            j.fx -= m.value * m.kx * s;
            j.fy -= m.value * ky * s;
            j.fyy -= m.value * ky * ky * c;
            j.ft += m.rate * c;
            j.fxt -= m.rate * m.kx * s;
            j.fyt -= m.rate * ky * s;
        }
        j
    }

    /// `(max |kx|, max |ky|)` over the modes.
    pub fn max_wavenumbers(&self, ly: f64) -> (f64, f64) {
        self.modes.iter().fold((0.0, 0.0), |(a, b), m| {
            (
                f64::max(a, m.kx.abs()),
                f64::max(b, Self::ky(m.n, ly).abs()),
            )
        })
    }

    pub fn is_static(&self) -> bool {
        self.modes.iter().all(|m| m.rate == 0.0)
    }
}

/// Continuum fields: couplings `ŵ(x, y)`, neurons `ẑ(x, y)`, input `X̂(y)` and
/// target `Ŷ(y)`. The input and target are read at `x = 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSample {
    #[serde(default)]
    pub w: Field,
    #[serde(default)]
    pub z: Field,
    #[serde(default)]
    pub input: Field,
    #[serde(default)]
    pub target: Field,
}

impl FieldSample {
    fn fields(&self) -> [(&'static str, &Field); 4] {
        [
            ("w", &self.w),
            ("z", &self.z),
            ("input", &self.input),
            ("target", &self.target),
        ]
    }

    /// Worst `max(|kx| a_x, |ky| a_y)` over all fields.
    pub fn band_product(&self, geom: &LatticeGeometry) -> f64 {
        self.fields()
            .iter()
            .map(|(_, f)| {
                let (kx, ky) = f.max_wavenumbers(geom.ly);
                f64::max(kx * geom.a_x(), ky * geom.a_y())
            })
            .fold(0.0, f64::max)
    }

    pub fn check_band_limit(&self, geom: &LatticeGeometry) -> Result<()> {
        for (name, f) in self.fields() {
            let (kx, ky) = f.max_wavenumbers(geom.ly);
            let p = f64::max(kx * geom.a_x(), ky * geom.a_y());
            if p > BAND_LIMIT {
                return Err(Error::Precondition(format!(
                    "field `{name}` violates the band limit on a {}x{} lattice: k·a = {p:.4} > {BAND_LIMIT}",
                    geom.depth, geom.width
                )));
            }
        }
        Ok(())
    }

    /// Depth-only kinetic configuration: zero field values, one depth mode per
    /// rate, each symmetric about `x = L_x / 2` and not periodic in `x`.
    pub fn kinetic_example(lx: f64) -> Self {
        let centred = |cycles: f64, rate: f64| {
            let kx = 2.0 * PI * cycles / lx;
            Field::new(vec![Mode {
                kx,
                n: 0,
                phase: -kx * lx / 2.0,
                value: 0.0,
                rate,
            }])
        };
        Self {
            w: centred(0.3, 0.8),
            z: centred(0.35, 1.2),
            input: Field::default(),
            target: Field::default(),
        }
    }

    /// Two-dimensional configuration exercising every term group.
    pub fn nonlinear_example(lx: f64) -> Self {
        let kx = 2.0 * PI * 0.3 / lx;
        Self {
            w: Field::new(vec![
                Mode {
                    kx: 0.0,
                    n: 0,
                    phase: 0.0,
                    value: 0.6,
                    rate: 0.2,
                },
                Mode {
                    kx,
                    n: 1,
                    phase: 0.3,
                    value: 0.3,
                    rate: 0.5,
                },
            ]),
            z: Field::new(vec![
                Mode {
                    kx: 0.0,
                    n: 0,
                    phase: 0.0,
                    value: 0.2,
                    rate: 0.1,
                },
                Mode {
                    kx: 0.8 * kx,
                    n: 1,
                    phase: -0.5,
                    value: 0.7,
                    rate: 0.4,
                },
            ]),
            input: Field::new(vec![
                Mode {
                    kx: 0.0,
                    n: 0,
                    phase: 0.0,
                    value: 1.0,
                    rate: 0.0,
                },
                Mode {
                    kx: 0.0,
                    n: 1,
                    phase: 0.2,
                    value: 0.5,
                    rate: 0.3,
                },
            ]),
            target: Field::new(vec![Mode {
                kx: 0.0,
                n: 1,
                phase: 0.4,
                value: 0.3,
                rate: 0.0,
            }]),
        }
    }
}

/// Lattice of `depth` couplings by `width` sites on `[0, L_x] × [0, L_y)`.
///
/// Spacings are `a = extent / count`, and coordinates are `index * a`, so a
/// lattice refined by a factor of 2 contains the coarse sites bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub depth: usize,
    pub width: usize,
    pub lx: f64,
    pub ly: f64,
}

impl LatticeGeometry {
    pub fn new(depth: usize, width: usize, lx: f64, ly: f64) -> Result<Self> {
        let g = Self {
            depth,
            width,
            lx,
            ly,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::validation(
                "lattice",
                "depth and width must be positive",
            ));
        }
        if !(self.lx > 0.0 && self.lx.is_finite() && self.ly > 0.0 && self.ly.is_finite()) {
            return Err(Error::validation("extents", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn a_x(&self) -> f64 {
        self.lx / self.depth as f64
    }

    pub fn a_y(&self) -> f64 {
        self.ly / self.width as f64
    }

    /// Depth coordinate of neuron layer `m` (the input is layer 0).
    pub fn x_layer(&self, m: usize) -> f64 {
        m as f64 * self.a_x()
    }

    /// Depth coordinate of coupling `m`, halfway between layers `m` and `m + 1`.
    pub fn x_coupling(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.a_x()
    }

    pub fn y_site(&self, i: usize) -> f64 {
        i as f64 * self.a_y()
    }

    /// Width coordinate of the `i+1 → i` leg, halfway between the sites it joins.
    pub fn y_leg(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.a_y()
    }
}

/// Samples the fields at lattice sites.
///
/// `wa[m][i] = ŵ(x_{m+½}, y_i)`, `wb[m][i] = ŵ(x_{m+½}, y_{i+½})`,
/// `z[m-1][i] = ẑ(x_m, y_i)` for `m = 1..=M`, `x_i = X̂(y_i)`, `y_i = Ŷ(y_i)`;
/// velocities likewise from the rate amplitudes.
pub fn sample_fields_to_lattice(
    fields: &FieldSample,
    geom: &LatticeGeometry,
    arch: &RingArchitecture,
) -> Result<RingState> {
    geom.validate()?;
    if arch.depth != geom.depth || arch.width != geom.width {
        return Err(Error::config(format!(
            "ring {}x{} does not match lattice {}x{}",
            arch.depth, arch.width, geom.depth, geom.width
        )));
    }
    fields.check_band_limit(geom)?;
    let (m_count, n) = (geom.depth, geom.width);
    let ly = geom.ly;
    let mut s = RingState {
        wa: vec![vec![0.0; n]; m_count],
        wb: vec![vec![0.0; n]; m_count],
        wa_dot: vec![vec![0.0; n]; m_count],
        wb_dot: vec![vec![0.0; n]; m_count],
        z: vec![vec![0.0; n]; m_count],
        z_dot: vec![vec![0.0; n]; m_count],
        x: vec![0.0; n],
        x_dot: vec![0.0; n],
        y: vec![0.0; n],
    };
    for m in 0..m_count {
        let xc = geom.x_coupling(m);
        let xl = geom.x_layer(m + 1);
        for i in 0..n {
            (s.wa[m][i], s.wa_dot[m][i]) = fields.w.eval(xc, geom.y_site(i), ly);
            (s.wb[m][i], s.wb_dot[m][i]) = fields.w.eval(xc, geom.y_leg(i), ly);
            (s.z[m][i], s.z_dot[m][i]) = fields.z.eval(xl, geom.y_site(i), ly);
        }
    }
    for i in 0..n {
        (s.x[i], s.x_dot[i]) = fields.input.eval(0.0, geom.y_site(i), ly);
        s.y[i] = fields.target.eval(0.0, geom.y_site(i), ly).0;
    }
    Ok(s)
}
