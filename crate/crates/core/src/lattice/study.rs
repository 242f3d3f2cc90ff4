use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    continuum_kinetic, continuum_truncation_boundary, continuum_truncation_bulk,
    ring_lagrangian_discrete, sample_fields_to_lattice, BulkTruncation, FieldSample,
    LatticeGeometry, Quadrature, RingArchitecture, PRINTED_BULK_COEFFICIENTS,
};
use crate::bbd::CoefficientMode;
use crate::fit::{convergence_order, quadratic_fit};
use crate::net::{ActivationKind, LossKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeLevel {
    pub depth: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub fields: FieldSample,
    pub lx: f64,
    pub ly: f64,
    pub ladder: Vec<LatticeLevel>,
    pub activation: ActivationKind,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default)]
    pub mode: CoefficientMode,
}

fn default_loss() -> LossKind {
    LossKind::Mse
}

impl StudyConfig {
    /// The kinetic-sector study: `M ∈ {12, 24, 48, 120}` with `N = 8M/3`.
    pub fn kinetic_default() -> Self {
        Self {
            fields: FieldSample::kinetic_example(1.0),
            lx: 1.0,
            ly: 1.0,
            ladder: default_ladder(),
            activation: ActivationKind::Identity,
            loss: LossKind::Mse,
            mode: CoefficientMode::ChainRule,
        }
    }

    pub fn nonlinear_default() -> Self {
        Self {
            fields: FieldSample::nonlinear_example(1.0),
            activation: ActivationKind::Tanh,
            ..Self::kinetic_default()
        }
    }

    pub fn geometries(&self) -> Result<Vec<LatticeGeometry>> {
        self.ladder
            .iter()
            .map(|l| LatticeGeometry::new(l.depth, l.width, self.lx, self.ly))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 4 {
            return Err(Error::validation("ladder", "need at least 4 resolutions"));
        }
        let geoms = self.geometries()?;
        let ax: Vec<f64> = geoms.iter().map(|g| g.a_x()).collect();
        let span = ax.iter().copied().fold(f64::MIN, f64::max)
            / ax.iter().copied().fold(f64::MAX, f64::min);
        if span < 10.0 * (1.0 - 1e-12) {
            return Err(Error::validation(
                "ladder",
                format!("spacings span {span:.3}x, need a decade"),
            ));
        }
        for g in &geoms {
            self.fields.check_band_limit(g)?;
        }
        Ok(())
    }
}

fn default_ladder() -> Vec<LatticeLevel> {
    [(12, 32), (24, 64), (48, 128), (120, 320)]
        .iter()
        .map(|&(depth, width)| LatticeLevel { depth, width })
        .collect()
}

/// Discrete and continuum values of one group of terms across the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermGroup {
    pub name: String,
    pub discrete: Vec<f64>,
    pub truncated: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Slope of `log residual` against `log a_x`; absent for exact matches.
    pub fitted_exponent: Option<f64>,
    pub exact_match: bool,
    /// `d0 + d1 a_x + d2 a_x²` fitted to the discrete values.
    pub measured_coefficients: Option<[f64; 3]>,
}

impl TermGroup {
    fn new(name: &str, spacings: &[f64], discrete: Vec<f64>, truncated: Vec<f64>) -> Self {
        let residuals: Vec<f64> = discrete
            .iter()
            .zip(&truncated)
            .map(|(d, t)| (d - t).abs())
            .collect();
        let exact_match = residuals.iter().all(|r| *r == 0.0);
        Self {
            name: name.to_string(),
            fitted_exponent: if exact_match {
                None
            } else {
                convergence_order(spacings, &residuals)
            },
            exact_match,
            measured_coefficients: quadratic_fit(spacings, &discrete),
            discrete,
            truncated,
            residuals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub measure: String,
    pub coordinates: String,
    pub stencil: String,
    pub coefficient_mode: CoefficientMode,
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub conventions: Conventions,
    pub levels: Vec<LatticeLevel>,
    /// `(a_x, a_y)` per level.
    pub spacings: Vec<(f64, f64)>,
    /// Measure-weighted ring Lagrangian per level.
    pub discrete_values: Vec<f64>,
    /// Truncated continuum Lagrangian per level.
    pub truncated_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub groups: Vec<TermGroup>,
    pub bulk_truncation: BulkTruncation,
    pub printed_bulk_coefficients: Vec<(String, f64)>,
    pub printed_input_coefficients: Vec<(String, f64)>,
}

impl ConvergenceReport {
    pub fn group(&self, name: &str) -> Option<&TermGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// One row per level per group.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("group,depth,width,a_x,a_y,discrete,truncated,residual\n");
        for g in &self.groups {
            for (k, lvl) in self.levels.iter().enumerate() {
                let (ax, ay) = self.spacings[k];
                let _ = writeln!(
                    s,
                    "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    g.name,
                    lvl.depth,
                    lvl.width,
                    ax,
                    ay,
                    g.discrete[k],
                    g.truncated[k],
                    g.residuals[k]
                );
            }
        }
        s
    }

    /// Gnuplot data file: one indexed block per group with log-log columns.
    /// Zero residuals are omitted.
    pub fn to_gnuplot(&self) -> String {
        let mut s = String::from("# columns: a_x residual log10(a_x) log10(residual)\n");
        for g in &self.groups {
            let _ = writeln!(s, "# group {}", g.name);
            for (k, r) in g.residuals.iter().enumerate() {
                if *r > 0.0 {
                    let ax = self.spacings[k].0;
                    let _ = writeln!(
                        s,
                        "{:.16e} {:.16e} {:.16e} {:.16e}",
                        ax,
                        r,
                        ax.log10(),
                        r.log10()
                    );
                }
            }
            s.push_str("\n\n");
        }
        s
    }
}

struct LevelValues {
    kinetic: f64,
    bulk: f64,
    input: f64,
    output: f64,
    total: f64,
    truncated_input: f64,
    truncated_output: f64,
}

/// Samples the fields on every level, evaluates the ring Lagrangian with the
/// lattice measure (`a_x a_y` per bulk site, `a_y` per boundary site) and
/// compares against the continuum truncation. Draws no conclusion itself.
pub fn convergence_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let geoms = config.geometries()?;
    let finest = *geoms
        .iter()
        .max_by(|a, b| (a.depth * a.width).cmp(&(b.depth * b.width)))
        .expect("ladder is non-empty");
    let quad = Quadrature::for_lattice(&finest);
    let bulk_trunc = continuum_truncation_bulk(&config.fields, &finest, config.activation, &quad)?;
    let kinetic_trunc = continuum_kinetic(&config.fields, &finest, &quad)?;

    let values: Vec<LevelValues> = geoms
        .par_iter()
        .map(|g| {
            let arch = RingArchitecture::new(g.depth, g.width, config.activation, config.loss)?;
            let state = sample_fields_to_lattice(&config.fields, g, &arch)?;
            let lag = ring_lagrangian_discrete(&state, &arch, config.mode)?;
            let bnd = continuum_truncation_boundary(
                &config.fields,
                g,
                config.loss,
                &Quadrature::for_lattice(g),
            )?;
            let (vol, line) = (g.a_x() * g.a_y(), g.a_y());
            Ok(LevelValues {
                kinetic: vol * (lag.bulk.kinetic_w + lag.bulk.kinetic_b_or_z),
                bulk: vol * lag.bulk.total,
                input: line * lag.boundary.squared_terms,
                output: line * lag.boundary.loss_term,
                total: vol * lag.bulk.total + line * lag.boundary.total,
                truncated_input: bnd.l_input,
                truncated_output: bnd.l_output,
            })
        })
        .collect::<Result<_>>()?;

    let spacings: Vec<(f64, f64)> = geoms.iter().map(|g| (g.a_x(), g.a_y())).collect();
    let ax: Vec<f64> = spacings.iter().map(|s| s.0).collect();
    let col = |f: fn(&LevelValues) -> f64| values.iter().map(f).collect::<Vec<f64>>();
    let bulk_t: Vec<f64> = spacings.iter().map(|&(x, y)| bulk_trunc.at(x, y)).collect();
    let truncated_values: Vec<f64> = bulk_t
        .iter()
        .zip(&values)
        .map(|(b, v)| b + v.truncated_input + v.truncated_output)
        .collect();
    let discrete_values = col(|v| v.total);
    let residuals = discrete_values
        .iter()
        .zip(&truncated_values)
        .map(|(d, t)| (d - t).abs())
        .collect();
    let groups = vec![
        TermGroup::new(
            "kinetic",
            &ax,
            col(|v| v.kinetic),
            vec![kinetic_trunc; geoms.len()],
        ),
        TermGroup::new("bulk", &ax, col(|v| v.bulk), bulk_t),
        TermGroup::new("input", &ax, col(|v| v.input), col(|v| v.truncated_input)),
        TermGroup::new(
            "output",
            &ax,
            col(|v| v.output),
            col(|v| v.truncated_output),
        ),
    ];
    Ok(ConvergenceReport {
        conventions: Conventions {
            measure: "bulk sites weighted by a_x*a_y, boundary sites by a_y".into(),
            coordinates: "z at x_m = m*a_x, y_i = i*a_y; w_a at (x_{m+1/2}, y_i); w_b at (x_{m+1/2}, y_{i+1/2}); X, Y at (0, y_i)".into(),
            stencil: "two forward legs {i, i+1 mod N}".into(),
            coefficient_mode: config.mode,
            quadrature: quad,
        },
        levels: config.ladder.clone(),
        spacings,
        discrete_values,
        truncated_values,
        residuals,
        groups,
        bulk_truncation: bulk_trunc,
        printed_bulk_coefficients: PRINTED_BULK_COEFFICIENTS.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        printed_input_coefficients: [
            ("X^2 w_t^2", 2.0),
            ("X_t^2 w^2", 2.0),
            ("w_t X_t w X", 4.0),
            ("a_y^2 X_t^2 w w_yy", 2.0),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect(),
    })
}
