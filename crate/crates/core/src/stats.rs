//! Incremental sufficient statistics and z-score standardization.
//!
//! [`RunningStats`] exposes the classic `(n, Σv, Σv²)` triple but stores the
//! equivalent `(n, mean, M2)` form internally, which keeps variances accurate
//! when values sit far from zero. Partitions are combined and split with the
//! pairwise update formulas, so E-BST scans can derive right-side statistics
//! as `parent - left`.

use serde::{Deserialize, Serialize};

/// Standard deviations below this are treated as zero.
pub const SD_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub const fn new() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut s = Self::new();
        for v in values {
            s.update(v);
        }
        s
    }

    #[inline]
    pub fn update(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    /// Folds another partition into this one.
    #[inline]
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    /// Statistics of `self` with the sub-partition `part` removed.
    #[inline]
    pub fn without(&self, part: &RunningStats) -> RunningStats {
        debug_assert!(part.n <= self.n);
        let n = self.n.saturating_sub(part.n);
        if n == 0 {
            return RunningStats::new();
        }
        if part.n == 0 {
            return *self;
        }
        let (nt, na, nb) = (self.n as f64, part.n as f64, n as f64);
        let mean = (nt * self.mean - na * part.mean) / nb;
        let delta = part.mean - mean;
        let m2 = self.m2 - part.m2 - delta * delta * na * nb / nt;
        RunningStats {
            n,
            mean,
            m2: m2.max(0.0),
        }
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sum(&self) -> f64 {
        self.mean * self.n as f64
    }

    pub fn sum_sq(&self) -> f64 {
        self.m2 + self.n as f64 * self.mean * self.mean
    }

    /// Mean of the observed values, 0 before any data.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance; 0 for fewer than two observations.
    #[inline]
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    #[inline]
    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    #[inline]
    fn is_degenerate(&self) -> bool {
        self.n < 2 || self.sd() < SD_EPSILON
    }

    #[inline]
    pub fn zscore(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (v - self.mean) / self.sd()
        }
    }

    #[inline]
    pub fn inverse_zscore(&self, z: f64) -> f64 {
        if self.is_degenerate() {
            self.mean
        } else {
            z * self.sd() + self.mean
        }
    }
}

/// Mean per-target variance of a partition: the intra-cluster variance.
pub fn icvar(targets: &[RunningStats]) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    targets.iter().map(RunningStats::variance).sum::<f64>() / targets.len() as f64
}

/// Per-variable statistics for a leaf: every feature (nominal ones by
/// category index) and every target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorStats {
    pub features: Vec<RunningStats>,
    pub targets: Vec<RunningStats>,
}

impl VectorStats {
    pub fn new(m: usize, d: usize) -> Self {
        Self {
            features: vec![RunningStats::new(); m],
            targets: vec![RunningStats::new(); d],
        }
    }

    pub fn n(&self) -> u64 {
        self.targets.first().map_or(0, RunningStats::n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn batch_mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() < 2 {
            0.0
        } else {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        (mean, var)
    }

    #[test]
    fn single_update() {
        let s = RunningStats::from_values([3.0]);
        assert_eq!(s.n(), 1);
        assert_eq!(s.sum(), 3.0);
        assert_eq!(s.sum_sq(), 9.0);
    }

    #[test]
    fn two_values_accumulate() {
        let s = RunningStats::from_values([0.0, 2.0]);
        assert_eq!((s.n(), s.sum(), s.sum_sq()), (2, 2.0, 4.0));
        assert!((s.variance() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(RunningStats::from_values([5.0]).variance(), 0.0);
        assert_eq!(RunningStats::new().variance(), 0.0);
        let s = RunningStats::from_values([0.0, 0.0, 2.0, 2.0]);
        assert!((s.variance() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::approx_constant)] // the worked example's rounded z
    fn zscore_examples() {
        let s = RunningStats::from_values([0.0, 2.0]);
        assert!((s.zscore(2.0) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.zscore(1.0), 0.0);
        assert!((s.inverse_zscore(0.70711) - 2.0).abs() < 1e-4);
        assert_eq!(s.inverse_zscore(0.0), 1.0);

        let constant = RunningStats::from_values([4.0; 10]);
        assert_eq!(constant.zscore(123.0), 0.0);
        assert_eq!(constant.inverse_zscore(3.0), 4.0);
        assert_eq!(RunningStats::new().inverse_zscore(3.0), 0.0);
        assert_eq!(RunningStats::from_values([4.0]).inverse_zscore(3.0), 4.0);
    }

    #[test]
    fn million_normal_draws_center_on_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = RunningStats::new();
        for _ in 0..1_000_000 {
            s.update(rng.sample::<f64, _>(StandardNormal));
        }
        assert!(s.mean().abs() < 0.01);
        assert!((s.variance() - 1.0).abs() < 0.01);
    }

    #[test]
    fn without_recovers_complement() {
        let left = RunningStats::from_values([1.0, 2.0, 3.0]);
        let right = RunningStats::from_values([10.0, 20.0]);
        let mut all = left;
        all.merge(&right);
        let r = all.without(&left);
        assert_eq!(r.n(), 2);
        assert!((r.mean() - 15.0).abs() < 1e-12);
        assert!((r.variance() - right.variance()).abs() < 1e-9);
        assert_eq!(all.without(&all), RunningStats::new());
    }

    proptest! {
        #[test]
        fn incremental_equals_batch(v in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let s = RunningStats::from_values(v.iter().copied());
            let (mean, var) = batch_mean_var(&v);
            prop_assert!((s.mean() - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            prop_assert!((s.variance() - var).abs() <= 1e-9 * var.max(1.0));
        }

        #[test]
        fn shift_stability(v in prop::collection::vec(-1e3f64..1e3, 2..200), c in -1e6f64..1e6) {
            let s = RunningStats::from_values(v.iter().copied());
            let t = RunningStats::from_values(v.iter().map(|x| x + c));
            prop_assert!((t.mean() - s.mean() - c).abs() <= 1e-6 * c.abs().max(1.0));
            prop_assert!((t.variance() - s.variance()).abs() <= 1e-6 * s.variance().max(1e-3));
        }

        #[test]
        fn merge_equals_sequential(a in prop::collection::vec(-50f64..50., 0..50), b in prop::collection::vec(-50f64..50., 0..50)) {
            let mut merged = RunningStats::from_values(a.iter().copied());
            merged.merge(&RunningStats::from_values(b.iter().copied()));
            let seq = RunningStats::from_values(a.iter().chain(&b).copied());
            prop_assert_eq!(merged.n(), seq.n());
            prop_assert!((merged.mean() - seq.mean()).abs() < 1e-9);
            prop_assert!((merged.variance() - seq.variance()).abs() < 1e-9);
        }

        #[test]
        fn sum_sq_dominates_sum_squared(v in prop::collection::vec(-1e3f64..1e3, 1..100)) {
            let s = RunningStats::from_values(v.iter().copied());
            let lhs = s.sum_sq();
            let rhs = s.sum() * s.sum() / s.n() as f64;
            prop_assert!(lhs >= rhs - 1e-9 * lhs.abs().max(1.0));
        }
    }
}
