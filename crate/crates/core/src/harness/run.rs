use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::{
    emit_plot_data, sha256_hex, Clock, ExperimentConfig, ExperimentKind, OutputTree, PlotFormat,
    RunManifest, TOOL_NAME, TOOL_VERSION,
};
use crate::bbd::{
    audit_decomposition, data_independence_check, data_independence_check_with, lagrangian_bulk,
    random_target, translational_symmetry_check, BbdState,
};
use crate::dynamics::{action, dataset_loss, el_residual, run, Regime};
use crate::lattice::convergence_study;
use crate::net::{gradcheck, ParamState, Sample};
use crate::rng;
use crate::{Error, Result};

/// Everything about a run that is not part of the experiment itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub clock: Clock,
    /// Also emit gnuplot data files.
    pub gnuplot: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            threads: None,
            clock: Clock::System,
            gnuplot: false,
        }
    }
}

/// Runs the experiment, writes its outputs and finally `manifest.json`.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let kind = config.kind()?;
    let body = || run_inner(kind, config, opts);
    let result = match opts.threads {
        Some(0) => Err(Error::validation("threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(body)),
        None => body(),
    };
    result.map_err(|e| e.context(format!("experiment {}", kind.name())))
}

fn run_inner(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunManifest> {
    let started_at = opts.clock.now();
    let mut tree = OutputTree::create(&opts.out_dir)?;
    let config_path = tree.write_json("config.json", config)?;
    let config_bytes = std::fs::read(&config_path).map_err(|e| Error::io(&config_path, e))?;
    if !config.notices.is_empty() {
        tree.write_json("notices.json", &config.notices)?;
    }
    match kind {
        ExperimentKind::RunDynamics => run_dynamics(config, opts, &mut tree)?,
        ExperimentKind::AuditBbd => {
            let report = audit_decomposition(&config.audit(), config.coefficient_mode)?;
            tree.write_json("audit_report.json", &report)?;
            let mut csv = String::from(
                "trial,widths,activation,loss,l_original,mismatch_as_printed,mismatch_chain_rule\n",
            );
            for t in &report.trials {
                let widths: Vec<String> = t.widths.iter().map(|w| w.to_string()).collect();
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    t.index,
                    widths.join("-"),
                    t.activation.name(),
                    t.loss.name(),
                    super::fmt_f64(t.l_original),
                    super::fmt_f64(t.mismatch_as_printed),
                    super::fmt_f64(t.mismatch_chain_rule)
                ));
            }
            tree.write("audit_trials.csv", csv.as_bytes())?;
        }
        ExperimentKind::SymmetryCheck => {
            let arch = config.architecture()?;
            let random = BbdState::random(&arch, &mut rng::stream(config.seed, 0));
            let replicated = BbdState::replicated(&arch, &mut rng::stream(config.seed, 1))?;
            let report = json!({
                "coefficient_mode": config.coefficient_mode,
                "random_state": translational_symmetry_check(&random, &arch, config.coefficient_mode)?,
                "replicated_state": translational_symmetry_check(&replicated, &arch, config.coefficient_mode)?,
            });
            tree.write_json("symmetry_report.json", &report)?;
        }
        ExperimentKind::DataIndependence => {
            let arch = config.architecture()?;
            let n = config.data_independence.unwrap_or_default().n_draws;
            let mode = config.coefficient_mode;
            let state = BbdState::random(&arch, &mut rng::stream(config.seed, 0));
            let report = data_independence_check(&state, &arch, n, config.seed, mode)?;
            let control = data_independence_check_with(&state, &arch, n, config.seed, |s| {
                Ok(lagrangian_bulk(s, &arch, mode)?.value + 1e-3 * s.x.iter().sum::<f64>())
            })?;
            tree.write_json(
                "data_independence.json",
                &json!({
                    "coefficient_mode": mode,
                    "n_draws": n,
                    "bulk": report,
                    "passed": report.bitwise_equal,
                    "negative_control": {
                        "description": "bulk evaluator corrupted to read x",
                        "max_deviation": control.max_deviation,
                        "detected": control.max_deviation > 0.0,
                    },
                }),
            )?;
        }
        ExperimentKind::ContinuumStudy => {
            let settings = config.continuum.clone().unwrap_or_default();
            let study = settings.study_config(config.coefficient_mode);
            let report = convergence_study(&study)?;
            tree.write_json("convergence_report.json", &report)?;
            emit_plot_data(&mut tree, "convergence", &report, PlotFormat::Csv)?;
            if opts.gnuplot || settings.gnuplot {
                emit_plot_data(&mut tree, "convergence", &report, PlotFormat::Gnuplot)?;
            }
        }
        ExperimentKind::Gradcheck => {
            let arch = config.architecture()?;
            let mut r = rng::stream(config.seed, 0);
            let params = ParamState::random(&arch, &mut r);
            let sample = match &config.dataset {
                Some(_) => config.samples()?.swap_remove(0),
                None => Sample::new(
                    rng::normal_vec(&mut r, arch.input_width(), 1.0),
                    random_target(&arch, &mut r),
                ),
            };
            let settings = config.gradcheck.unwrap_or_default();
            let report = gradcheck::check(&params, &sample, &arch, &settings)?;
            tree.write_json(
                "gradcheck_report.json",
                &json!({ "settings": settings, "report": report }),
            )?;
        }
    }
    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        kind: kind.name().to_string(),
        seed: config.seed,
        config_sha256: sha256_hex(&config_bytes),
        started_at,
        finished_at: opts.clock.now(),
        files: tree.inventory(),
    };
    let mut text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::config(e.to_string()))?;
    text.push('\n');
    let path = tree.root().join("manifest.json");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[derive(Serialize)]
struct DynamicsSummary {
    regime: Regime,
    eta: f64,
    gamma: f64,
    records: usize,
    initial_dataset_loss: f64,
    final_dataset_loss: f64,
    action: f64,
    el_residual_max: Option<f64>,
}

fn run_dynamics(config: &ExperimentConfig, opts: &RunOptions, tree: &mut OutputTree) -> Result<()> {
    let arch = config.architecture()?;
    let samples = config.samples()?;
    let dynamics = config.dynamics();
    let params = ParamState::random(&arch, &mut rng::stream(config.seed, 1));
    let (trace, schedule) = run(&params, &samples, &dynamics, &arch)?;
    let last = trace.states.last().ok_or(Error::EmptyTrace)?;
    let el_residual_max = match dynamics.regime {
        Regime::DampedSecondOrder => el_residual(&trace, &dynamics, &arch, &schedule)
            .ok()
            .map(|r| r.max),
        _ => None,
    };
    let summary = DynamicsSummary {
        regime: dynamics.regime,
        eta: dynamics.eta,
        gamma: dynamics.gamma(),
        records: trace.len(),
        initial_dataset_loss: dataset_loss(&params, &samples, &arch)?,
        final_dataset_loss: dataset_loss(last, &samples, &arch)?,
        action: action(&trace, dynamics.gamma())?,
        el_residual_max,
    };
    tree.write_json("summary.json", &summary)?;
    tree.write_json("schedule.json", &schedule)?;
    tree.write_json("final_params.json", last)?;
    emit_plot_data(tree, "trace", &trace, PlotFormat::Csv)?;
    if opts.gnuplot {
        emit_plot_data(tree, "trace", &trace, PlotFormat::Gnuplot)?;
    }
    Ok(())
}

/// Machine-readable failure report, written to `<dir>/error.json`.
pub fn write_error_report(dir: &Path, err: &Error) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut chain = Vec::new();
    let mut cur: Option<&dyn std::error::Error> = Some(err);
    while let Some(e) = cur {
        chain.push(e.to_string());
        cur = e.source();
    }
    let report = json!({
        "class": err.class(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
        "chain": chain,
    });
    let path = dir.join("error.json");
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| Error::config(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
