//! `stacktree compare`: Friedman/Nemenyi over a directory of run reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::ValueEnum;
use serde::Serialize;
use stacktree::eval::{friedman_nemenyi, FriedmanNemenyi, RankTable};
use stacktree::LearnerVariant;

use crate::reports::{read_run, scan};
use crate::Failure;

/// What one block of the rank table is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Blocks {
    /// One block per dataset, scored by the summed window aRMSE.
    Datasets,
    /// One block per window of every dataset.
    Windows,
}

#[derive(Debug, Clone, Serialize)]
struct AlgorithmRow {
    algorithm: String,
    avg_rank: f64,
    mean_score: f64,
    /// 1-based indices of the CD groups containing the algorithm.
    groups: String,
}

#[derive(Debug, Clone, Serialize)]
struct TestRow {
    blocks: &'static str,
    k: usize,
    n_blocks: usize,
    alpha: f64,
    chi2: f64,
    f_stat: f64,
    p_value: f64,
    reject_h0: bool,
    cd: f64,
}

#[derive(Debug)]
pub struct Comparison {
    pub algorithms: Vec<LearnerVariant>,
    pub scores: Vec<Vec<f64>>,
    pub test: FriedmanNemenyi,
    pub text: String,
    pub files: Vec<PathBuf>,
}

/// dataset -> variant -> per-seed window aRMSE
type Loaded = BTreeMap<String, BTreeMap<LearnerVariant, Vec<Vec<f64>>>>;

fn load(dir: &Path) -> anyhow::Result<Loaded> {
    let mut data: Loaded = BTreeMap::new();
    for f in scan(dir)? {
        let windows = read_run(&f.path)?.into_iter().map(|r| r.armse).collect();
        data.entry(f.dataset)
            .or_default()
            .entry(f.variant)
            .or_default()
            .push(windows);
    }
    if data.is_empty() {
        bail!(
            "{} holds no run reports (<dataset>/<variant>__seed<n>.csv)",
            dir.display()
        );
    }
    Ok(data)
}

fn check_alignment(data: &Loaded) -> Result<Vec<LearnerVariant>, Failure> {
    let mut algorithms: Option<Vec<LearnerVariant>> = None;
    for (dataset, by_variant) in data {
        let present: Vec<LearnerVariant> = by_variant.keys().copied().collect();
        match &algorithms {
            None => algorithms = Some(present),
            Some(a) if *a != present => {
                return Err(Failure::Runtime(anyhow!(
                    "misaligned reports: dataset `{dataset}` has variants [{}] but others have [{}]",
                    keys(&present),
                    keys(a)
                )))
            }
            Some(_) => {}
        }
        let lengths: Vec<(LearnerVariant, usize)> = by_variant
            .iter()
            .flat_map(|(v, runs)| runs.iter().map(move |w| (*v, w.len())))
            .collect();
        if let Some(&(v, n)) = lengths.iter().find(|(_, n)| *n != lengths[0].1) {
            return Err(Failure::Runtime(anyhow!(
                "misaligned windows in dataset `{dataset}`: {} has {n} windows, {} has {}",
                v.key(),
                lengths[0].0.key(),
                lengths[0].1
            )));
        }
        if lengths[0].1 == 0 {
            return Err(Failure::Runtime(anyhow!(
                "dataset `{dataset}` has no evaluated windows"
            )));
        }
    }
    let algorithms = algorithms.expect("at least one dataset");
    if algorithms.len() < 2 {
        return Err(Failure::Runtime(anyhow!(
            "need reports from at least two variants, found {}",
            keys(&algorithms)
        )));
    }
    Ok(algorithms)
}

fn keys(vs: &[LearnerVariant]) -> String {
    vs.iter().map(|v| v.key()).collect::<Vec<_>>().join(", ")
}

fn seed_mean(runs: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> f64 {
    runs.iter().map(|w| f(w)).sum::<f64>() / runs.len() as f64
}

/// Builds the rank table, runs the tests, and writes `comparison.csv` and
/// `friedman.csv` into `out`.
pub fn cmd_compare(dir: &Path, blocks: Blocks, alpha: f64, out: &Path) -> Result<Comparison, Failure> {
    let data = load(dir)?;
    let algorithms = check_alignment(&data)?;
    let algs = &algorithms;
    let scores: Vec<Vec<f64>> = match blocks {
        Blocks::Datasets => data
            .values()
            .map(|by_v| algs.iter().map(|v| seed_mean(&by_v[v], |w| w.iter().sum())).collect())
            .collect(),
        Blocks::Windows => data
            .values()
            .flat_map(|by_v| {
                let n = by_v[&algs[0]][0].len();
                (0..n).map(move |i| algs.iter().map(|v| seed_mean(&by_v[v], |w| w[i])).collect())
            })
            .collect(),
    };
    let names: Vec<String> = algorithms.iter().map(|v| v.key().to_string()).collect();
    let table = RankTable::from_scores(names.clone(), &scores).map_err(|e| Failure::Runtime(e.into()))?;
    let test = friedman_nemenyi(&table, alpha).map_err(|e| Failure::Runtime(e.into()))?;
    let blocks_name = match blocks {
        Blocks::Datasets => "datasets",
        Blocks::Windows => "windows",
    };

    let rows: Vec<AlgorithmRow> = (0..algorithms.len())
        .map(|j| AlgorithmRow {
            algorithm: names[j].clone(),
            avg_rank: test.average_ranks[j],
            mean_score: scores.iter().map(|r| r[j]).sum::<f64>() / scores.len() as f64,
            groups: test
                .groups
                .iter()
                .enumerate()
                .filter(|(_, g)| g.contains(&j))
                .map(|(i, _)| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect();

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{} algorithms over {} {blocks_name} blocks",
        test.k, test.n_blocks
    );
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].avg_rank.total_cmp(&rows[b].avg_rank));
    for &j in &order {
        let _ = writeln!(
            text,
            "  {:<18} avg rank {:.3}  groups {}",
            rows[j].algorithm, rows[j].avg_rank, rows[j].groups
        );
    }
    let _ = writeln!(
        text,
        "Friedman chi2 = {:.4}, F = {:.4}, p = {:.4} -> {} at alpha = {alpha}",
        test.chi2,
        test.f_stat,
        test.p_value,
        if test.reject { "reject H0" } else { "cannot reject H0" }
    );
    let _ = writeln!(text, "Nemenyi CD = {:.4}", test.cd);

    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let comparison = out.join("comparison.csv");
    let mut w =
        csv::Writer::from_path(&comparison).with_context(|| format!("cannot write {}", comparison.display()))?;
    for row in &rows {
        w.serialize(row).context("writing comparison")?;
    }
    w.flush().context("writing comparison")?;
    let friedman = out.join("friedman.csv");
    let mut w = csv::Writer::from_path(&friedman).with_context(|| format!("cannot write {}", friedman.display()))?;
    w.serialize(TestRow {
        blocks: blocks_name,
        k: test.k,
        n_blocks: test.n_blocks,
        alpha,
        chi2: test.chi2,
        f_stat: test.f_stat,
        p_value: test.p_value,
        reject_h0: test.reject,
        cd: test.cd,
    })
    .context("writing friedman")?;
    w.flush().context("writing friedman")?;

    Ok(Comparison {
        algorithms,
        scores,
        test,
        text,
        files: vec![comparison, friedman],
    })
}
