//! Friedman test with the Iman-Davenport F refinement and the Nemenyi
//! post-hoc critical difference.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

/// Two-tailed Nemenyi critical values `q_α` (studentized range / √2) for
/// k = 2..=10, from Demšar (2006), Table 5.
const Q_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_010: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub fn nemenyi_q(k: usize, alpha: f64) -> Option<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_005
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_010
    } else {
        return None;
    };
    (2..=10).contains(&k).then(|| table[k - 2])
}

pub fn critical_difference(k: usize, n_blocks: usize, alpha: f64) -> Result<f64> {
    let q = nemenyi_q(k, alpha)
        .ok_or_else(|| Error::Config(format!("no Nemenyi critical value tabulated for k={k}, alpha={alpha}")))?;
    if n_blocks == 0 {
        return Err(Error::ZeroCount("the critical difference"));
    }
    Ok(q * (k as f64 * (k as f64 + 1.0) / (6.0 * n_blocks as f64)).sqrt())
}

/// Ranks of `k` algorithms within each block; ties share the average rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTable {
    algorithms: Vec<String>,
    ranks: Vec<Vec<f64>>,
}

/// Average ranks (1-based) of `values`, smallest first.
pub fn rank_ascending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

impl RankTable {
    /// `scores[block][algorithm]`, lower is better.
    pub fn from_scores(algorithms: Vec<String>, scores: &[Vec<f64>]) -> Result<Self> {
        let k = algorithms.len();
        if let Some(row) = scores.iter().find(|r| r.len() != k) {
            return Err(Error::Config(format!(
                "score row has {} entries for {k} algorithms",
                row.len()
            )));
        }
        if scores.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("scores must be finite".into()));
        }
        Ok(Self {
            algorithms,
            ranks: scores.iter().map(|r| rank_ascending(r)).collect(),
        })
    }

    pub fn from_ranks(algorithms: Vec<String>, ranks: Vec<Vec<f64>>) -> Result<Self> {
        let k = algorithms.len();
        if ranks.iter().any(|r| r.len() != k) {
            return Err(Error::Config("rank rows must have one entry per algorithm".into()));
        }
        Ok(Self { algorithms, ranks })
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn ranks(&self) -> &[Vec<f64>] {
        &self.ranks
    }

    pub fn n_blocks(&self) -> usize {
        self.ranks.len()
    }

    pub fn average_ranks(&self) -> Vec<f64> {
        let n = self.ranks.len() as f64;
        (0..self.algorithms.len())
            .map(|j| self.ranks.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FriedmanNemenyi {
    pub k: usize,
    pub n_blocks: usize,
    pub alpha: f64,
    pub average_ranks: Vec<f64>,
    pub chi2: f64,
    pub f_stat: f64,
    pub p_value: f64,
    pub reject: bool,
    pub cd: f64,
    /// Algorithm indices whose average ranks lie within one CD, best first.
    pub groups: Vec<Vec<usize>>,
}

impl FriedmanNemenyi {
    pub fn significantly_different(&self, a: usize, b: usize) -> bool {
        (self.average_ranks[a] - self.average_ranks[b]).abs() > self.cd
    }
}

pub fn friedman_nemenyi(table: &RankTable, alpha: f64) -> Result<FriedmanNemenyi> {
    let k = table.algorithms.len();
    let n = table.n_blocks();
    if k < 2 || n < 2 {
        return Err(Error::Config(format!(
            "need at least 2 algorithms and 2 blocks, got k={k}, N={n}"
        )));
    }
    let avg = table.average_ranks();
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = avg.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let denom = nf * (kf - 1.0) - chi2;
    let f_stat = if chi2 == 0.0 {
        0.0
    } else if denom <= 0.0 {
        f64::INFINITY
    } else {
        (nf - 1.0) * chi2 / denom
    };
    let p_value = if f_stat.is_infinite() {
        0.0
    } else {
        let dist = FisherSnedecor::new(kf - 1.0, (kf - 1.0) * (nf - 1.0))
            .map_err(|e| Error::Config(format!("F distribution: {e}")))?;
        1.0 - dist.cdf(f_stat)
    };
    let cd = critical_difference(k, n, alpha)?;
    Ok(FriedmanNemenyi {
        k,
        n_blocks: n,
        alpha,
        groups: cd_groups(&avg, cd),
        average_ranks: avg,
        chi2,
        f_stat,
        p_value,
        reject: chi2 > 0.0 && p_value < alpha,
        cd,
    })
}

/// Maximal runs of rank-sorted algorithms spanning at most `cd`.
fn cd_groups(avg: &[f64], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..avg.len()).collect();
    order.sort_by(|&a, &b| avg[a].total_cmp(&avg[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_end = 0;
    for i in 0..order.len() {
        let mut j = i;
        while j + 1 < order.len() && avg[order[j + 1]] - avg[order[i]] <= cd {
            j += 1;
        }
        if j + 1 > last_end {
            groups.push(order[i..=j].to_vec());
            last_end = j + 1;
        }
    }
    groups
}
