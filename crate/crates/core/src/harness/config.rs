use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bbd::{AuditConfig, CoefficientMode};
use crate::dynamics::DynamicsConfig;
use crate::lattice::StudyConfig;
use crate::net::gradcheck::GradCheckConfig;
use crate::net::{ActivationKind, Architecture, LossKind, Sample};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RunDynamics,
    AuditBbd,
    SymmetryCheck,
    DataIndependence,
    ContinuumStudy,
    Gradcheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::RunDynamics,
        ExperimentKind::AuditBbd,
        ExperimentKind::SymmetryCheck,
        ExperimentKind::DataIndependence,
        ExperimentKind::ContinuumStudy,
        ExperimentKind::Gradcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RunDynamics => "run-dynamics",
            ExperimentKind::AuditBbd => "audit-bbd",
            ExperimentKind::SymmetryCheck => "symmetry-check",
            ExperimentKind::DataIndependence => "data-independence",
            ExperimentKind::ContinuumStudy => "continuum-study",
            ExperimentKind::Gradcheck => "gradcheck",
        }
    }

    /// Network used when the config has no `[architecture]` table.
    pub fn default_architecture(self) -> Architecture {
        let widths = match self {
            ExperimentKind::RunDynamics => vec![2, 4, 1],
            ExperimentKind::SymmetryCheck => vec![3, 5, 5, 5, 5],
            ExperimentKind::DataIndependence => vec![3, 4, 4, 2],
            _ => vec![2, 3, 2],
        };
        Architecture {
            widths,
            activation: ActivationKind::Tanh,
            loss: LossKind::Mse,
        }
    }
}

/// Training pairs, inline or from a CSV file with one sample per row
/// (`N_0` input columns, then `N_M` target columns).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Sample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataIndependenceSettings {
    pub n_draws: usize,
}

impl Default for DataIndependenceSettings {
    fn default() -> Self {
        Self { n_draws: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuumPreset {
    #[default]
    Kinetic,
    Nonlinear,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuumSettings {
    pub preset: ContinuumPreset,
    /// Overrides the preset entirely.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    /// Also write a gnuplot data file.
    pub gnuplot: bool,
}

impl ContinuumSettings {
    pub fn study_config(&self, mode: CoefficientMode) -> StudyConfig {
        let mut cfg = self.study.clone().unwrap_or_else(|| match self.preset {
            ContinuumPreset::Kinetic => StudyConfig::kinetic_default(),
            ContinuumPreset::Nonlinear => StudyConfig::nonlinear_default(),
        });
        cfg.mode = mode;
        cfg
    }
}

/// One experiment. Every table except the kind is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub coefficient_mode: CoefficientMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<Architecture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_independence: Option<DataIndependenceSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuum: Option<ContinuumSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcheck: Option<GradCheckConfig>,
    /// Directory that relative dataset paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Non-fatal observations made while validating.
    #[serde(skip)]
    pub notices: Vec<String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind: Some(kind),
            seed: 0,
            output_dir: None,
            coefficient_mode: CoefficientMode::default(),
            architecture: None,
            dynamics: None,
            dataset: None,
            audit: None,
            data_independence: None,
            continuum: None,
            gradcheck: None,
            base_dir: PathBuf::from("."),
            notices: Vec::new(),
        }
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::validation("kind", "no experiment kind given"))
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let arch = match &self.architecture {
            Some(a) => a.clone(),
            None => self.kind()?.default_architecture(),
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn dynamics(&self) -> DynamicsConfig {
        let mut d = self.dynamics.clone().unwrap_or_default();
        d.seed = self.seed;
        d
    }

    pub fn audit(&self) -> AuditConfig {
        let mut a = self.audit.clone().unwrap_or_default();
        a.seed = self.seed;
        a
    }

    /// Inline samples, the CSV file, or the built-in toy regression set.
    pub fn samples(&self) -> Result<Vec<Sample>> {
        let arch = self.architecture()?;
        let samples = match &self.dataset {
            None => toy_regression(),
            Some(d) => match (&d.file, d.samples.is_empty()) {
                (Some(f), true) => read_dataset_csv(&self.base_dir.join(f), &arch)?,
                (None, false) => d.samples.clone(),
                (Some(_), false) => {
                    return Err(Error::validation(
                        "dataset",
                        "give either `samples` or `file`, not both",
                    ))
                }
                (None, true) => return Err(Error::validation("dataset", "no samples")),
            },
        };
        for (k, s) in samples.iter().enumerate() {
            s.validate(&arch)
                .map_err(|e| e.context(format!("dataset sample {k}")))?;
        }
        Ok(samples)
    }

    /// Checks every table and records notices. Called by [`parse_config`].
    pub fn validate(&mut self) -> Result<()> {
        self.notices.clear();
        let kind = self.kind()?;
        self.architecture()?;
        if let Some(d) = &self.dynamics {
            d.validate()?;
            if let Some(g) = d.gamma {
                if (g * d.eta - 1.0).abs() > 1e-12 {
                    let msg = format!(
                        "gamma = {g} differs from the default coupling 1/eta = {}; running with gamma as given",
                        1.0 / d.eta
                    );
                    log::warn!("{msg}");
                    self.notices.push(msg);
                }
            }
        }
        if let Some(a) = &self.audit {
            a.validate()?;
        }
        if let Some(d) = &self.data_independence {
            if d.n_draws == 0 {
                return Err(Error::validation("n_draws", "must be at least 1"));
            }
        }
        if let Some(g) = &self.gradcheck {
            for (name, v) in [
                ("step", g.step),
                ("rel_tol", g.rel_tol),
                ("abs_floor", g.abs_floor),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::validation(name, format!("must be > 0, got {v}")));
                }
            }
        }
        if let Some(c) = &self.continuum {
            c.study_config(self.coefficient_mode).validate()?;
        }
        if kind == ExperimentKind::RunDynamics {
            self.samples()?;
        }
        Ok(())
    }
}

/// Eight points on a circle of radius 0.9 with `y = 0.5 x₀ - 0.4 x₁ x₀`.
pub fn toy_regression() -> Vec<Sample> {
    (0..8)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / 4.0;
            let x = vec![0.9 * t.cos(), 0.9 * t.sin()];
            let y = vec![0.5 * x[0] - 0.4 * x[1] * x[0]];
            Sample::new(x, y)
        })
        .collect()
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Parses and validates config text. Relative dataset paths resolve against
/// the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_in(text, Path::new("."))
}

fn parse_config_in(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        let message = e.message().to_string();
        if let Some(rest) = message.strip_prefix("unknown field `") {
            let key = rest.split('`').next().unwrap_or_default().to_string();
            Error::UnknownKey { key, line, column }
        } else {
            Error::Parse {
                line,
                column,
                message,
            }
        }
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file; relative dataset paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    parse_config_in(&text, &base).map_err(|e| e.context(format!("in {}", path.display())))
}

/// CSV dataset: no header, `#` comments, `N_0 + N_M` numeric columns per row.
pub fn read_dataset_csv(path: &Path, arch: &Architecture) -> Result<Vec<Sample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let (n_in, n_out) = (arch.input_width(), arch.output_width());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n_in + n_out {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected {} columns, found {}", n_in + n_out, record.len()),
            });
        }
        let mut values = Vec::with_capacity(record.len());
        for (k, field) in record.iter().enumerate() {
            values.push(field.parse::<f64>().map_err(|e| Error::Parse {
                line,
                column: k + 1,
                message: format!("`{field}`: {e}"),
            })?);
        }
        let y = values.split_off(n_in);
        out.push(Sample::new(values, y));
    }
    if out.is_empty() {
        return Err(Error::validation(
            "dataset",
            format!("{} has no rows", path.display()),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("kind = \"gradcheck\"\n[architecture]\nwidths = [2, 3, 2]\nactivation = \"tanh\"\nloss = \"mse\"\n").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.coefficient_mode, CoefficientMode::ChainRule);
        assert_eq!(cfg.dynamics().eta, 0.1);
        assert!(cfg.notices.is_empty());
    }

    #[test]
    fn negative_eta_names_field() {
        let e = parse_config("kind = \"run-dynamics\"\n[dynamics]\neta = -0.1\n").unwrap_err();
        assert!(
            matches!(&e, Error::Validation { field, .. } if field == "eta"),
            "{e}"
        );
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_located() {
        let e = parse_config("kind = \"audit-bbd\"\n[audit]\nn_trails = 3\n").unwrap_err();
        match e {
            Error::UnknownKey { key, line, .. } => {
                assert_eq!(key, "n_trails");
                assert_eq!(line, 3);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_config("kind = \"audit-bbd\"\nseed = = 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn dataset_sources_are_exclusive() {
        let text = "kind = \"run-dynamics\"\n[dataset]\nfile = \"d.csv\"\n[[dataset.samples]]\nx = [0.0, 1.0]\ny = [0.5]\n";
        assert!(matches!(parse_config(text), Err(Error::Validation { .. })));
    }

    #[test]
    fn csv_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "# x0, x1, y\n0.1, 0.2, 0.3\n-1, 2, 5e-1\n").unwrap();
        let arch = ExperimentKind::RunDynamics.default_architecture();
        let s = read_dataset_csv(&p, &arch).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].x, vec![-1.0, 2.0]);
        assert_eq!(s[1].y, vec![0.5]);
        std::fs::write(&p, "0.1, 0.2\n").unwrap();
        assert!(matches!(
            read_dataset_csv(&p, &arch),
            Err(Error::Parse { line: 1, .. })
        ));
        std::fs::write(&p, "0.1, abc, 0.3\n").unwrap();
        assert!(matches!(
            read_dataset_csv(&p, &arch),
            Err(Error::Parse { column: 2, .. })
        ));
    }
}
