//! Split-candidate bookkeeping per input feature.

mod ebst;
mod nominal;

pub use ebst::{ebst_node_bytes, Ebst};
pub use nominal::NominalObserver;

use serde::{Deserialize, Serialize};

use crate::schema::{FeatureKind, StreamSchema, Value};
use crate::stats::RunningStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    /// Left branch takes `v <= threshold`.
    Threshold(f64),
    /// One branch per declared category.
    Multiway { arity: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSuggestion {
    pub feature: usize,
    pub predicate: Predicate,
    /// Intra-cluster variance reduction.
    pub merit: f64,
    /// Per-branch target statistics, in branch order.
    pub branches: Vec<Vec<RunningStats>>,
}

/// Highest- and second-highest-merit suggestions for a single feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSplits {
    pub best: SplitSuggestion,
    pub runner_up: Option<SplitSuggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureObserver {
    Numeric(Ebst),
    Nominal(NominalObserver),
}

impl FeatureObserver {
    pub fn for_schema(schema: &StreamSchema) -> Vec<FeatureObserver> {
        let d = schema.n_targets();
        schema
            .features()
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Numeric => FeatureObserver::Numeric(Ebst::new(d)),
                FeatureKind::Nominal { categories } => {
                    FeatureObserver::Nominal(NominalObserver::new(categories.len(), d))
                }
            })
            .collect()
    }

    /// Missing values are not observed.
    #[inline]
    pub fn update(&mut self, value: Value, y: &[f64]) {
        match (self, value) {
            (FeatureObserver::Numeric(t), Value::Num(v)) if v.is_finite() => t.insert(v, y),
            (FeatureObserver::Nominal(o), Value::Cat(c)) => o.update(c, y),
            _ => {}
        }
    }

    pub fn best_splits(&self, feature: usize) -> Option<FeatureSplits> {
        match self {
            FeatureObserver::Numeric(t) => t.best_splits(feature),
            FeatureObserver::Nominal(o) => o.suggest(feature),
        }
    }

    pub fn size_bytes(&self) -> usize {
        8 + match self {
            FeatureObserver::Numeric(t) => t.size_bytes(),
            FeatureObserver::Nominal(o) => o.size_bytes(),
        }
    }
}

/// Ranks each feature's best suggestion and returns the overall best and the
/// best suggestion on a different feature. Equal merits go to the lower
/// feature index.
pub fn rank_features(observers: &[FeatureObserver]) -> Option<(SplitSuggestion, Option<SplitSuggestion>)> {
    let mut best: Option<SplitSuggestion> = None;
    let mut second: Option<SplitSuggestion> = None;
    for (j, obs) in observers.iter().enumerate() {
        let Some(splits) = obs.best_splits(j) else { continue };
        let cand = splits.best;
        if !cand.merit.is_finite() {
            continue;
        }
        match &best {
            Some(b) if cand.merit <= b.merit => {
                if second.as_ref().is_none_or(|s| cand.merit > s.merit) {
                    second = Some(cand);
                }
            }
            _ => second = best.replace(cand),
        }
    }
    best.map(|b| (b, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::icvar;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-pass evaluation of every distinct value as threshold.
    fn brute_force(values: &[f64], ys: &[Vec<f64>]) -> Vec<(f64, f64)> {
        let d = ys[0].len();
        let batch_var = |idx: &[usize]| -> f64 {
            (0..d)
                .map(|t| {
                    let v: Vec<f64> = idx.iter().map(|&i| ys[i][t]).collect();
                    let n = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / n;
                    if v.len() < 2 {
                        0.0
                    } else {
                        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
                    }
                })
                .sum::<f64>()
                / d as f64
        };
        let all: Vec<usize> = (0..values.len()).collect();
        let parent = batch_var(&all);
        let mut keys = values.to_vec();
        keys.sort_by(f64::total_cmp);
        keys.dedup();
        keys.pop();
        keys.into_iter()
            .map(|k| {
                let l: Vec<usize> = all.iter().copied().filter(|&i| values[i] <= k).collect();
                let r: Vec<usize> = all.iter().copied().filter(|&i| values[i] > k).collect();
                let n = values.len() as f64;
                let merit = parent - l.len() as f64 / n * batch_var(&l) - r.len() as f64 / n * batch_var(&r);
                (k, merit)
            })
            .collect()
    }

    #[test]
    fn scan_matches_exhaustive_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = 3;
            let mut t = Ebst::new(d);
            let mut values = Vec::new();
            let mut ys = Vec::new();
            for _ in 0..200 {
                let v = (rng.random::<f64>() * 50.0).round();
                let y: Vec<f64> = (0..d)
                    .map(|k| if v > 20.0 { 5.0 * k as f64 } else { 0.0 } + rng.random::<f64>())
                    .collect();
                t.insert(v, &y);
                values.push(v);
                ys.push(y);
            }
            let expected = brute_force(&values, &ys);
            let mut scanned = Vec::new();
            let total = t.totals();
            t.for_each_threshold(|k, left| {
                if left[0].n() < total[0].n() {
                    let right: Vec<_> = total.iter().zip(left).map(|(a, b)| a.without(b)).collect();
                    scanned.push((k, ebst::variance_reduction(icvar(&total), total[0].n(), left, &right)));
                }
            });
            scanned.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(scanned.len(), expected.len());
            for ((k1, m1), (k2, m2)) in scanned.iter().zip(&expected) {
                assert_eq!(k1, k2);
                assert!((m1 - m2).abs() < 1e-9, "{m1} vs {m2}");
            }
            let best = expected.iter().fold(
                (f64::NAN, f64::NEG_INFINITY),
                |acc, &(k, m)| if m > acc.1 { (k, m) } else { acc },
            );
            let s = t.best_splits(0).unwrap().best;
            assert_eq!(s.predicate, Predicate::Threshold(best.0));
            assert!((s.merit - best.1).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_prefers_lower_feature_on_ties() {
        let mut a = Ebst::new(1);
        let mut b = Ebst::new(1);
        for (v, y) in [(0.0, 0.0), (1.0, 4.0)] {
            a.insert(v, &[y]);
            b.insert(v, &[y]);
        }
        let obs = vec![FeatureObserver::Numeric(a), FeatureObserver::Numeric(b)];
        let (best, second) = rank_features(&obs).unwrap();
        assert_eq!(best.feature, 0);
        assert_eq!(second.unwrap().feature, 1);
    }

    #[test]
    fn lone_feature_has_no_runner_up() {
        let mut a = Ebst::new(1);
        a.insert(0.0, &[0.0]);
        a.insert(1.0, &[1.0]);
        let obs = vec![FeatureObserver::Numeric(a), FeatureObserver::Numeric(Ebst::new(1))];
        let (best, second) = rank_features(&obs).unwrap();
        assert_eq!(best.feature, 0);
        assert!(second.is_none());
    }

    #[test]
    fn missing_values_are_skipped() {
        let mut o = FeatureObserver::Numeric(Ebst::new(1));
        o.update(Value::Missing, &[1.0]);
        o.update(Value::Num(f64::NAN), &[1.0]);
        assert_eq!(o, FeatureObserver::Numeric(Ebst::new(1)));
    }

    proptest! {
        #[test]
        fn merits_do_not_depend_on_insertion_order(
            pairs in prop::collection::vec((0u8..30, -10f64..10.), 2..120),
            seed in any::<u64>(),
        ) {
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let collect = |ps: &[(u8, f64)]| {
                let mut t = Ebst::new(1);
                for &(k, y) in ps {
                    t.insert(k as f64, &[y]);
                }
                let total = t.totals();
                let mut out = Vec::new();
                t.for_each_threshold(|k, left| {
                    let right: Vec<_> = total.iter().zip(left).map(|(a, b)| a.without(b)).collect();
                    let m = if right[0].n() == 0 { 0.0 } else { ebst::variance_reduction(icvar(&total), total[0].n(), left, &right) };
                    out.push((k, left[0].n(), m));
                });
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                out
            };
            let a = collect(&pairs);
            let b = collect(&shuffled);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.0, y.0);
                prop_assert_eq!(x.1, y.1);
                prop_assert!((x.2 - y.2).abs() < 1e-9);
            }
        }
    }
}
