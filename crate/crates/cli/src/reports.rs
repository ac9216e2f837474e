//! Per-run report files: `<dataset>/<variant>__seed<seed>.csv`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use stacktree::{LearnerVariant, WindowedReport};

pub const RUN_COLUMNS: [&str; 5] = ["window_index", "armse", "cum_armse", "elapsed_s", "model_bytes"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window_index: usize,
    pub armse: f64,
    pub cum_armse: f64,
    pub elapsed_s: f64,
    pub model_bytes: usize,
}

pub fn run_file_name(variant: LearnerVariant, seed: u64) -> String {
    format!("{}__seed{seed}.csv", variant.key())
}

/// Inverse of [`run_file_name`].
pub fn parse_run_file_name(name: &str) -> Option<(LearnerVariant, u64)> {
    let (variant, seed) = name.strip_suffix(".csv")?.split_once("__seed")?;
    Some((variant.parse().ok()?, seed.parse().ok()?))
}

pub fn write_run(path: &Path, report: &WindowedReport) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    if report.windows.is_empty() {
        w.write_record(RUN_COLUMNS)?;
    }
    for win in &report.windows {
        w.serialize(WindowRow {
            window_index: win.index,
            armse: win.armse,
            cum_armse: win.cum_armse,
            elapsed_s: win.elapsed_s,
            model_bytes: win.model_bytes,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_run(path: &Path) -> anyhow::Result<Vec<WindowRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(RUN_COLUMNS) {
        bail!("{}: expected columns {}", path.display(), RUN_COLUMNS.join(","));
    }
    let rows = r
        .deserialize()
        .collect::<Result<Vec<WindowRow>, _>>()
        .with_context(|| format!("malformed report {}", path.display()))?;
    if let Some((i, _)) = rows.iter().enumerate().find(|(i, row)| row.window_index != *i) {
        bail!(
            "{}: window indices are not consecutive at row {}",
            path.display(),
            i + 1
        );
    }
    Ok(rows)
}

/// One run's report file.
#[derive(Debug, Clone)]
pub struct RunFile {
    pub dataset: String,
    pub variant: LearnerVariant,
    pub seed: u64,
    pub path: PathBuf,
}

/// Every run file under `dir`, sorted by dataset, variant and seed.
pub fn scan(dir: &Path) -> anyhow::Result<Vec<RunFile>> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let dataset = entry.file_name().to_string_lossy().into_owned();
        for file in std::fs::read_dir(entry.path())? {
            let file = file?;
            let name = file.file_name().to_string_lossy().into_owned();
            if let Some((variant, seed)) = parse_run_file_name(&name) {
                found.push(RunFile {
                    dataset: dataset.clone(),
                    variant,
                    seed,
                    path: file.path(),
                });
            }
        }
    }
    found.sort_by(|a, b| (&a.dataset, a.variant, a.seed).cmp(&(&b.dataset, b.variant, b.seed)));
    Ok(found)
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_round_trip() {
        for v in LearnerVariant::ALL {
            assert_eq!(parse_run_file_name(&run_file_name(v, 17)), Some((v, 17)));
        }
        assert_eq!(parse_run_file_name("summary.csv"), None);
        assert_eq!(parse_run_file_name("sstht__seedx.csv"), None);
    }

    #[test]
    fn mean_and_sample_sd() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
