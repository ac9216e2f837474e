use serde::{Deserialize, Serialize};

use super::{FeatureSplits, Predicate, SplitSuggestion};
use crate::stats::{icvar, RunningStats};

/// Per-category target statistics for one nominal feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalObserver {
    d: usize,
    arity: usize,
    /// `d` entries per category.
    stats: Vec<RunningStats>,
}

impl NominalObserver {
    pub fn new(arity: usize, d: usize) -> Self {
        Self {
            d,
            arity,
            stats: vec![RunningStats::new(); arity * d],
        }
    }

    pub fn category(&self, c: usize) -> &[RunningStats] {
        &self.stats[c * self.d..(c + 1) * self.d]
    }

    pub fn update(&mut self, category: u32, y: &[f64]) {
        let start = category as usize * self.d;
        for (s, &v) in self.stats[start..start + self.d].iter_mut().zip(y) {
            s.update(v);
        }
    }

    pub fn observed(&self) -> u64 {
        (0..self.arity).map(|c| self.category(c)[0].n()).sum()
    }

    /// One multiway suggestion over all declared categories.
    pub fn suggest(&self, feature: usize) -> Option<FeatureSplits> {
        let seen = (0..self.arity).filter(|&c| self.category(c)[0].n() > 0).count();
        if seen < 2 {
            return None;
        }
        let mut total = vec![RunningStats::new(); self.d];
        for c in 0..self.arity {
            for (t, s) in total.iter_mut().zip(self.category(c)) {
                t.merge(s);
            }
        }
        let n = total[0].n() as f64;
        let weighted: f64 = (0..self.arity)
            .map(|c| self.category(c))
            .filter(|s| s[0].n() > 0)
            .map(|s| s[0].n() as f64 / n * icvar(s))
            .sum();
        Some(FeatureSplits {
            best: SplitSuggestion {
                feature,
                predicate: Predicate::Multiway { arity: self.arity },
                merit: icvar(&total) - weighted,
                branches: (0..self.arity).map(|c| self.category(c).to_vec()).collect(),
            },
            runner_up: None,
        })
    }

    pub fn size_bytes(&self) -> usize {
        self.stats.len() * crate::tree::STATS_BYTES
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_but_different_categories_recover_parent_icvar() {
        let mut o = NominalObserver::new(3, 1);
        for _ in 0..2 {
            o.update(0, &[0.0]);
            o.update(2, &[2.0]);
        }
        let s = o.suggest(4).unwrap().best;
        assert!((s.merit - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.feature, 4);
        assert_eq!(s.branches.len(), 3);
        assert_eq!(s.branches[1][0].n(), 0);
    }

    #[test]
    fn single_category_cannot_split() {
        let mut o = NominalObserver::new(2, 1);
        o.update(1, &[1.0]);
        o.update(1, &[3.0]);
        assert!(o.suggest(0).is_none());
    }

    #[test]
    fn identical_branches_have_no_positive_merit() {
        let mut o = NominalObserver::new(2, 2);
        for c in 0..2 {
            for v in [1.0, 3.0, 5.0] {
                o.update(c, &[v, -v]);
            }
        }
        // sample variances: parent 16/5, each branch 8/2
        assert!((o.suggest(0).unwrap().best.merit - (3.2 - 4.0)).abs() < 1e-12);
        assert_eq!(o.observed(), 6);
    }
}
