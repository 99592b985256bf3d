//! Run artifacts: trajectory CSV, run records and small CSV tables.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use odrs_core::OpinionMatrix;
use serde::{Deserialize, Serialize};

/// Writes `k,user,dim,value` rows, one per entry of every snapshot.
pub fn export_trajectory_csv(snapshots: &[OpinionMatrix], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        w.write_all(b"k,user,dim,value\n")?;
        for (k, x) in snapshots.iter().enumerate() {
            for i in 0..x.n() {
                for (d, v) in x.row(i).iter().enumerate() {
                    // 17 significant digits round-trip every f64
                    writeln!(w, "{k},{i},{d},{v:.16e}")?;
                }
            }
        }
        w.flush()
    };
    body().with_context(|| format!("writing {}", path.display()))
}

/// Reads a file written by [`export_trajectory_csv`].
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<OpinionMatrix>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == "k,user,dim,value" => {}
        _ => bail!("{}: missing trajectory header", path.display()),
    }
    let mut cells: Vec<BTreeMap<(usize, usize), f64>> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            bail!("{}:{lineno}: expected 4 fields", path.display());
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .with_context(|| format!("{}:{lineno}", path.display()))
        };
        let (k, i, d) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
        let v: f64 = f[3].parse().with_context(|| format!("{}:{lineno}", path.display()))?;
        if cells.len() <= k {
            cells.resize_with(k + 1, BTreeMap::new);
        }
        cells[k].insert((i, d), v);
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let n = c.keys().map(|&(i, _)| i + 1).max().unwrap_or(0);
            let m = c.keys().map(|&(_, d)| d + 1).max().unwrap_or(0);
            if c.len() != n * m {
                bail!("{}: snapshot {k} is incomplete", path.display());
            }
            Ok(OpinionMatrix::new(n, m, c.into_values().collect())?)
        })
        .collect()
}

/// Self-describing summary of one CLI run. Re-running the echoed
/// configuration reproduces the written outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub input: String,
    pub kernel: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub seed: Option<u64>,
    /// Remaining command-specific settings.
    pub parameters: BTreeMap<String, serde_json::Value>,
    /// Output files, relative to the run directory.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cluster_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub avg_deviation: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    pub duration_secs: f64,
}

pub fn export_run_json(record: &RunRecord, path: &Path) -> Result<()> {
    write_json(record, path)
}

pub fn read_run_json(path: &Path) -> Result<RunRecord> {
    read_json(path)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(anyhow::Error::from)
        .and_then(|_| Ok(w.write_all(b"\n").and_then(|_| w.flush())?))
        .with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

/// Writes a header plus rows through the csv writer with LF endings.
pub fn write_csv<S: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = S>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let body = || -> Result<()> {
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    };
    body().with_context(|| format!("writing {}", path.display()))
}

/// `dir/name`, creating `dir` when needed.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_snapshot_has_four_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let x = OpinionMatrix::from_rows(&[[0.0, 0.25], [1.0, 0.1]]).unwrap();
        export_trajectory_csv(std::slice::from_ref(&x), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(!text.contains('\r'));
        assert_eq!(read_trajectory_csv(&p).unwrap(), vec![x]);
    }

    #[test]
    fn run_record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        let mut r = RunRecord {
            command: "simulate".into(),
            kernel: "angle".into(),
            epsilon: Some(0.1 + 0.2),
            n: 3,
            m: 2,
            seed: Some(7),
            cost: Some(1.0 / 3.0),
            ..Default::default()
        };
        r.metrics.insert("diameter".into(), std::f64::consts::PI / 7.0);
        export_run_json(&r, &p).unwrap();
        assert_eq!(read_run_json(&p).unwrap(), r);
    }

    #[test]
    fn missing_directory_is_reported_with_the_path() {
        let err = export_trajectory_csv(&[], Path::new("/nonexistent/dir/t.csv")).unwrap_err();
        assert!(format!("{err:#}").contains("/nonexistent/dir/t.csv"));
    }
}
