use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use bbd_core::harness::{
    load_config, parse_config, run_experiment, write_error_report, Clock, ExperimentConfig,
    ExperimentKind, RunOptions,
};
use bbd_core::Error;

struct Capture(Mutex<Vec<String>>);

impl log::Log for Capture {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, record: &log::Record) {
        self.0
            .lock()
            .unwrap()
            .push(format!("{} {}", record.level(), record.args()));
    }
    fn flush(&self) {}
}

fn capture() -> &'static Capture {
    static LOGGER: OnceLock<&'static Capture> = OnceLock::new();
    LOGGER.get_or_init(|| {
        let c: &'static Capture = Box::leak(Box::new(Capture(Mutex::new(Vec::new()))));
        log::set_logger(c).unwrap();
        log::set_max_level(log::LevelFilter::Trace);
        c
    })
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn opts(dir: &Path, threads: Option<usize>) -> RunOptions {
    RunOptions {
        out_dir: dir.to_path_buf(),
        threads,
        clock: Clock::Fixed(1_700_000_000),
        gnuplot: true,
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn inconsistent_gamma_logs_notice() {
    let cap = capture();
    let cfg =
        parse_config("kind = \"run-dynamics\"\n[dynamics]\neta = 0.1\ngamma = 3.0\n").unwrap();
    assert_eq!(cfg.notices.len(), 1);
    let logged = cap.0.lock().unwrap().clone();
    assert!(
        logged
            .iter()
            .any(|l| l.starts_with("WARN") && l.contains("gamma = 3")),
        "{logged:?}"
    );
    let quiet =
        parse_config("kind = \"run-dynamics\"\n[dynamics]\neta = 0.5\ngamma = 2.0\n").unwrap();
    assert!(quiet.notices.is_empty());
}

#[test]
fn every_kind_runs_and_reproduces() {
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::new(kind);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let m1 = run_experiment(&cfg, &opts(a.path(), Some(1))).unwrap();
        let m2 = run_experiment(&cfg, &opts(b.path(), Some(4))).unwrap();
        assert_eq!(m1, m2, "{}", kind.name());
        let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
        assert_eq!(ta, tb, "{}", kind.name());
        assert_eq!(m1.files.len() + 1, ta.len());
        assert!(ta.contains_key("manifest.json"));
    }
}

#[test]
fn manifest_digests_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(
        &ExperimentConfig::new(ExperimentKind::ContinuumStudy),
        &opts(dir.path(), None),
    )
    .unwrap();
    let names: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(
        names,
        [
            "config.json",
            "convergence.csv",
            "convergence.dat",
            "convergence_report.json"
        ]
    );
    for f in &m.files {
        let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(bbd_core::harness::sha256_hex(&bytes), f.sha256);
    }
    assert_eq!(m.started_at, "2023-11-14T22:13:20Z");
}

#[test]
fn gradcheck_two_three_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "kind = \"gradcheck\"\nseed = 4\n[architecture]\nwidths = [2, 3, 2]\nactivation = \"tanh\"\nloss = \"mse\"\n",
    )
    .unwrap();
    run_experiment(&cfg, &opts(dir.path(), None)).unwrap();
    let r = json(&dir.path().join("gradcheck_report.json"));
    assert_eq!(r["report"]["passed"], true);
    assert!(r["report"]["max_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn audit_hundred_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("kind = \"audit-bbd\"\n[audit]\nn_trials = 100\n").unwrap();
    run_experiment(&cfg, &opts(dir.path(), None)).unwrap();
    let r = json(&dir.path().join("audit_report.json"));
    assert!(r["max_mismatch_chain_rule"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["shipped_mode"], "chain-rule");
    assert_eq!(r["trials"].as_array().unwrap().len(), 100);
}

#[test]
fn data_independence_report() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(
        &ExperimentConfig::new(ExperimentKind::DataIndependence),
        &opts(dir.path(), None),
    )
    .unwrap();
    let r = json(&dir.path().join("data_independence.json"));
    assert_eq!(r["bulk"]["max_deviation"], 0.0);
    assert_eq!(r["negative_control"]["detected"], true);
}

#[test]
fn nonpositive_dt_rejected() {
    let e = parse_config("kind = \"run-dynamics\"\n[dynamics]\ndt = 0.0\n").unwrap_err();
    assert!(matches!(&e, Error::Validation { field, .. } if field == "dt"));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn inhomogeneous_symmetry_check_fails_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "kind = \"symmetry-check\"\n[architecture]\nwidths = [2, 3, 4, 3]\nactivation = \"tanh\"\nloss = \"mse\"\n",
    )
    .unwrap();
    let e = run_experiment(&cfg, &opts(dir.path(), None)).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let p = write_error_report(dir.path(), &e).unwrap();
    let r = json(&p);
    assert_eq!(r["class"], "precondition");
    assert_eq!(r["exit_code"], 2);
    assert!(r["chain"][0]
        .as_str()
        .unwrap()
        .starts_with("experiment symmetry-check"));
}

#[test]
fn dataset_file_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("data.csv"),
        "0.5, -0.5, 0.1\n1.0, 0.0, 0.4\n",
    )
    .unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "kind = \"run-dynamics\"\n[dataset]\nfile = \"data.csv\"\n[dynamics]\nregime = \"sgd-discrete\"\ndt = 1.0\nt_end = 20.0\n",
    )
    .unwrap();
    let cfg = load_config(&cfg_path).unwrap();
    let out = dir.path().join("out");
    run_experiment(&cfg, &opts(&out, None)).unwrap();
    let csv = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
    let missing = dir.path().join("nope.toml");
    assert_eq!(load_config(&missing).unwrap_err().exit_code(), 4);
}
