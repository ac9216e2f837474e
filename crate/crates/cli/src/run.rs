//! `stacktree run`: every (dataset, variant, seed) cell, then a summary.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use stacktree::eval::{friedman_nemenyi, run_prequential, RankTable};
use stacktree::streams::{CsvStream, SchemaDecl, StreamSource};
use stacktree::{LearnerVariant, WindowedReport};

use crate::config::{Dataset, DatasetSource, RunConfig};
use crate::reports::{mean_sd, run_file_name, write_run};
use crate::Failure;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub variant: String,
    pub runs: usize,
    pub armse_mean: f64,
    pub armse_sd: f64,
    pub elapsed_mean_s: f64,
    pub elapsed_sd_s: f64,
    pub model_bytes_mean: f64,
    pub model_bytes_sd: f64,
    pub avg_rank: Option<f64>,
    pub friedman_chi2: Option<f64>,
    pub friedman_p: Option<f64>,
    pub reject_h0: Option<bool>,
    pub nemenyi_cd: Option<f64>,
}

/// What a finished `run` wrote.
#[derive(Debug)]
pub struct RunOutcome {
    pub run_files: Vec<PathBuf>,
    pub summary: PathBuf,
    pub rows: Vec<SummaryRow>,
}

struct Cell<'a> {
    dataset: &'a Dataset,
    variant: LearnerVariant,
    seed: u64,
}

fn open_source(dataset: &Dataset, seed: u64) -> anyhow::Result<Box<dyn StreamSource>> {
    Ok(match &dataset.source {
        DatasetSource::Generator { generator } => {
            let mut spec = generator.clone();
            spec.seed = seed;
            Box::new(spec.stream()?)
        }
        DatasetSource::Csv { csv, schema } => {
            let decl = SchemaDecl::load(schema)?;
            Box::new(CsvStream::open(csv, &decl)?)
        }
    })
}

fn run_cell(config: &RunConfig, cell: &Cell) -> anyhow::Result<WindowedReport> {
    let tree_config = config.tree.tree_config(cell.variant, cell.seed);
    let mut source = open_source(cell.dataset, cell.seed)?;
    log::info!("{} / {} / seed {}", cell.dataset.name, cell.variant, cell.seed);
    run_prequential(&tree_config, source.as_mut(), &config.prequential, &cell.dataset.name)
        .with_context(|| format!("{} / {} / seed {}", cell.dataset.name, cell.variant, cell.seed))
}

/// Runs every cell on `jobs` threads (all cores when `None`) and writes the
/// report files under `out`.
pub fn cmd_run(config: &RunConfig, out: &Path, jobs: Option<usize>) -> Result<RunOutcome, Failure> {
    let seeds = config.prequential.run_seeds(config.seed);
    let mut cells = Vec::new();
    for dataset in &config.datasets {
        for &variant in &config.variants {
            cells.extend(seeds.iter().map(|&seed| Cell { dataset, variant, seed }));
        }
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {jobs:?} workers: {e}")))?;
    let reports: Vec<WindowedReport> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(config, c))
            .collect::<anyhow::Result<_>>()
    })?;

    let mut run_files = Vec::with_capacity(reports.len());
    for (cell, report) in cells.iter().zip(&reports) {
        let dir = out.join(&cell.dataset.name);
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let path = dir.join(run_file_name(cell.variant, cell.seed));
        write_run(&path, report)?;
        run_files.push(path);
    }

    let rows = summarize(config, &cells, &reports)?;
    let summary = out.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary).with_context(|| format!("cannot write {}", summary.display()))?;
    for row in &rows {
        w.serialize(row).context("writing summary")?;
    }
    w.flush().context("writing summary")?;
    Ok(RunOutcome {
        run_files,
        summary,
        rows,
    })
}

/// Per dataset and variant: run statistics plus window-blocked ranks.
fn summarize(config: &RunConfig, cells: &[Cell], reports: &[WindowedReport]) -> anyhow::Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for dataset in &config.datasets {
        let runs_of = |v: LearnerVariant| -> Vec<&WindowedReport> {
            cells
                .iter()
                .zip(reports)
                .filter(|(c, _)| c.dataset.name == dataset.name && c.variant == v)
                .map(|(_, r)| r)
                .collect()
        };
        // mean window aRMSE over seeds, one block per window
        let n_windows = runs_of(config.variants[0])
            .iter()
            .map(|r| r.windows.len())
            .min()
            .unwrap_or(0);
        let blocks: Vec<Vec<f64>> = (0..n_windows)
            .map(|w| {
                config
                    .variants
                    .iter()
                    .map(|&v| {
                        let runs = runs_of(v);
                        runs.iter().map(|r| r.windows[w].armse).sum::<f64>() / runs.len() as f64
                    })
                    .collect()
            })
            .collect();
        let names = config.variants.iter().map(|v| v.key().to_string()).collect();
        let test = if config.variants.len() >= 2 && n_windows >= 2 {
            Some(friedman_nemenyi(&RankTable::from_scores(names, &blocks)?, ALPHA)?)
        } else {
            None
        };
        for (j, &v) in config.variants.iter().enumerate() {
            let runs = runs_of(v);
            let armse: Vec<f64> = runs.iter().map(|r| r.cumulative_armse().unwrap_or(f64::NAN)).collect();
            let elapsed: Vec<f64> = runs.iter().map(|r| r.elapsed_s).collect();
            let bytes: Vec<f64> = runs.iter().map(|r| r.model_bytes as f64).collect();
            let (armse_mean, armse_sd) = mean_sd(&armse);
            let (elapsed_mean_s, elapsed_sd_s) = mean_sd(&elapsed);
            let (model_bytes_mean, model_bytes_sd) = mean_sd(&bytes);
            rows.push(SummaryRow {
                dataset: dataset.name.clone(),
                variant: v.key().to_string(),
                runs: runs.len(),
                armse_mean,
                armse_sd,
                elapsed_mean_s,
                elapsed_sd_s,
                model_bytes_mean,
                model_bytes_sd,
                avg_rank: test.as_ref().map(|t| t.average_ranks[j]),
                friedman_chi2: test.as_ref().map(|t| t.chi2),
                friedman_p: test.as_ref().map(|t| t.p_value),
                reject_h0: test.as_ref().map(|t| t.reject),
                nemenyi_cd: test.as_ref().map(|t| t.cd),
            });
        }
    }
    Ok(rows)
}
