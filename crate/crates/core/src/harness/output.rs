use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::Trace;
use crate::lattice::ConvergenceReport;
use crate::{Error, Result};

/// Fixed float format for every text output: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Output directory that remembers the digest of every file written through it.
#[derive(Debug)]
pub struct OutputTree {
    root: PathBuf,
    files: BTreeMap<String, FileRecord>,
}

impl OutputTree {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.insert(
            rel.to_string(),
            FileRecord {
                path: rel.to_string(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::config(format!("cannot serialize {rel}: {e}")))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Records sorted by path.
    pub fn inventory(&self) -> Vec<FileRecord> {
        self.files.values().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Gnuplot,
}

impl PlotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            PlotFormat::Csv => "csv",
            PlotFormat::Gnuplot => "dat",
        }
    }
}

/// Something with a tabular text rendering.
pub trait PlotData {
    fn to_csv(&self) -> String;
    fn to_gnuplot(&self) -> String;
}

impl PlotData for Trace {
    /// `t,active_sample,loss,kinetic_w,kinetic_b,lagrangian`; header only when empty.
    fn to_csv(&self) -> String {
        let mut s = String::from("t,active_sample,loss,kinetic_w,kinetic_b,lagrangian\n");
        for k in 0..self.len() {
            let l = &self.lagrangians[k];
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_f64(self.times[k]),
                self.active_sample[k],
                fmt_f64(self.losses[k]),
                fmt_f64(l.kinetic_w),
                fmt_f64(l.kinetic_b_or_z),
                fmt_f64(l.total)
            );
        }
        s
    }

    fn to_gnuplot(&self) -> String {
        let mut s = String::from("# columns: t loss lagrangian log10(loss)\n");
        for k in 0..self.len() {
            let loss = self.losses[k];
            let _ = writeln!(
                s,
                "{} {} {} {}",
                fmt_f64(self.times[k]),
                fmt_f64(loss),
                fmt_f64(self.lagrangians[k].total),
                fmt_f64(loss.log10())
            );
        }
        s
    }
}

impl PlotData for ConvergenceReport {
    fn to_csv(&self) -> String {
        ConvergenceReport::to_csv(self)
    }

    fn to_gnuplot(&self) -> String {
        ConvergenceReport::to_gnuplot(self)
    }
}

/// Writes `<stem>.csv` or `<stem>.dat`.
pub fn emit_plot_data(
    tree: &mut OutputTree,
    stem: &str,
    data: &dyn PlotData,
    format: PlotFormat,
) -> Result<PathBuf> {
    let text = match format {
        PlotFormat::Csv => data.to_csv(),
        PlotFormat::Gnuplot => data.to_gnuplot(),
    };
    tree.write(&format!("{stem}.{}", format.extension()), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LagrangianBreakdown;

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(
            Trace::default().to_csv(),
            "t,active_sample,loss,kinetic_w,kinetic_b,lagrangian\n"
        );
    }

    #[test]
    fn three_point_golden() {
        let mut t = Trace::default();
        for (k, (loss, kw)) in [(1.0, 0.0), (0.5, 0.125), (0.25, 1.0 / 3.0)]
            .into_iter()
            .enumerate()
        {
            t.times.push(0.1 * k as f64);
            t.active_sample.push(k % 2);
            t.losses.push(loss);
            t.lagrangians
                .push(LagrangianBreakdown::new(kw, 0.0, 0.0, 0.0, -loss));
        }
        let expected = "\
t,active_sample,loss,kinetic_w,kinetic_b,lagrangian
0.0000000000000000e0,0,1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,-1.0000000000000000e0
1.0000000000000001e-1,1,5.0000000000000000e-1,1.2500000000000000e-1,0.0000000000000000e0,-3.7500000000000000e-1
2.0000000000000001e-1,0,2.5000000000000000e-1,3.3333333333333331e-1,0.0000000000000000e0,8.3333333333333315e-2
";
        assert_eq!(t.to_csv(), expected);
    }

    #[test]
    fn tree_records_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut tree = OutputTree::create(dir.path()).unwrap();
        tree.write("b.txt", b"abc").unwrap();
        tree.write("a/x.txt", b"").unwrap();
        let inv = tree.inventory();
        assert_eq!(inv[0].path, "a/x.txt");
        assert_eq!(
            inv[1].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
