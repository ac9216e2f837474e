//! Extended binary search tree over one numeric feature.
//!
//! Each node stores, per target, the statistics of every instance routed
//! through it whose value is `<= key`. Scanning accumulates these along the
//! descent to recover the left partition of every candidate threshold; the
//! right partition is the total minus the left.

use serde::{Deserialize, Serialize};

use super::{FeatureSplits, Predicate, SplitSuggestion};
use crate::stats::{icvar, RunningStats};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ebst {
    d: usize,
    keys: Vec<f64>,
    children: Vec<[u32; 2]>,
    /// `d` entries per node.
    left_stats: Vec<RunningStats>,
}

impl Ebst {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            keys: Vec::new(),
            children: Vec::new(),
            left_stats: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn n_targets(&self) -> usize {
        self.d
    }

    pub fn root_key(&self) -> Option<f64> {
        self.keys.first().copied()
    }

    /// Keys of the left and right children of the node holding `key`.
    pub fn children_of(&self, key: f64) -> Option<(Option<f64>, Option<f64>)> {
        let idx = self.keys.iter().position(|&k| k == key)?;
        let get = |c: u32| (c != NONE).then(|| self.keys[c as usize]);
        let [l, r] = self.children[idx];
        Some((get(l), get(r)))
    }

    /// Left-side statistics stored at the node holding `key`.
    pub fn node_stats(&self, key: f64) -> Option<&[RunningStats]> {
        let idx = self.keys.iter().position(|&k| k == key)?;
        Some(self.stats(idx as u32))
    }

    fn stats(&self, node: u32) -> &[RunningStats] {
        let start = node as usize * self.d;
        &self.left_stats[start..start + self.d]
    }

    fn push_node(&mut self, key: f64, y: &[f64]) -> u32 {
        let idx = self.keys.len() as u32;
        self.keys.push(key);
        self.children.push([NONE, NONE]);
        self.left_stats
            .extend(y.iter().map(|&v| RunningStats::from_values([v])));
        idx
    }

    fn add(&mut self, node: u32, y: &[f64]) {
        let start = node as usize * self.d;
        for (s, &v) in self.left_stats[start..start + self.d].iter_mut().zip(y) {
            s.update(v);
        }
    }

    pub fn insert(&mut self, v: f64, y: &[f64]) {
        debug_assert_eq!(y.len(), self.d);
        if self.keys.is_empty() {
            self.push_node(v, y);
            return;
        }
        let mut node = 0u32;
        loop {
            let key = self.keys[node as usize];
            let side = if v == key {
                self.add(node, y);
                return;
            } else if v < key {
                self.add(node, y);
                0
            } else {
                1
            };
            let next = self.children[node as usize][side];
            if next == NONE {
                let child = self.push_node(v, y);
                self.children[node as usize][side] = child;
                return;
            }
            node = next;
        }
    }

    /// Statistics over every inserted instance: the sum of the left
    /// statistics along the rightmost path.
    pub fn totals(&self) -> Vec<RunningStats> {
        let mut total = vec![RunningStats::new(); self.d];
        if self.keys.is_empty() {
            return total;
        }
        let mut node = 0u32;
        while node != NONE {
            for (t, s) in total.iter_mut().zip(self.stats(node)) {
                t.merge(s);
            }
            node = self.children[node as usize][1];
        }
        total
    }

    /// Calls `visit(key, left)` once per distinct key, where `left` holds the
    /// statistics of all instances with value `<= key`. Visit order follows
    /// the tree, not key order.
    pub fn for_each_threshold(&self, mut visit: impl FnMut(f64, &[RunningStats])) {
        if self.keys.is_empty() {
            return;
        }
        let d = self.d;
        // Accumulated stats of everything smaller than the frame's subtree.
        let mut acc_pool: Vec<RunningStats> = Vec::with_capacity(self.keys.len() * d);
        let mut stack: Vec<(u32, usize)> = Vec::new();
        acc_pool.extend(std::iter::repeat_n(RunningStats::new(), d));
        stack.push((0, 0));
        let mut left = vec![RunningStats::new(); d];
        while let Some((node, acc)) = stack.pop() {
            for t in 0..d {
                left[t] = acc_pool[acc + t];
                left[t].merge(&self.stats(node)[t]);
            }
            visit(self.keys[node as usize], &left);
            let [l, r] = self.children[node as usize];
            if r != NONE {
                let offset = acc_pool.len();
                acc_pool.extend_from_slice(&left);
                stack.push((r, offset));
            }
            if l != NONE {
                stack.push((l, acc));
            }
        }
    }

    /// Best and runner-up thresholds by variance reduction.
    pub fn best_splits(&self, feature: usize) -> Option<FeatureSplits> {
        if self.keys.len() < 2 {
            return None;
        }
        let total = self.totals();
        let n = total[0].n();
        let parent_icvar = icvar(&total);
        let mut right = vec![RunningStats::new(); self.d];
        // (merit, key, left stats)
        let mut best: Option<(f64, f64, Vec<RunningStats>)> = None;
        let mut second: Option<(f64, f64, Vec<RunningStats>)> = None;
        self.for_each_threshold(|key, left| {
            let n_left = left[0].n();
            if n_left == 0 || n_left >= n {
                return;
            }
            for (r, (t, l)) in right.iter_mut().zip(total.iter().zip(left)) {
                *r = t.without(l);
            }
            let merit = variance_reduction(parent_icvar, n, left, &right);
            let beats = |cur: &Option<(f64, f64, Vec<RunningStats>)>| match cur {
                None => true,
                Some((m, k, _)) => merit > *m || (merit == *m && key < *k),
            };
            if beats(&best) {
                second = best.take();
                best = Some((merit, key, left.to_vec()));
            } else if beats(&second) {
                second = Some((merit, key, left.to_vec()));
            }
        });
        let build = |(merit, key, left): (f64, f64, Vec<RunningStats>)| {
            let right = total.iter().zip(&left).map(|(t, l)| t.without(l)).collect();
            SplitSuggestion {
                feature,
                predicate: Predicate::Threshold(key),
                merit,
                branches: vec![left, right],
            }
        };
        let best = build(best?);
        Some(FeatureSplits {
            best,
            runner_up: second.map(build),
        })
    }

    pub fn size_bytes(&self) -> usize {
        self.keys.len() * ebst_node_bytes(self.d)
    }
}

/// Accounted size of one E-BST node: key, two child links, `d` stats.
pub const fn ebst_node_bytes(d: usize) -> usize {
    8 + 2 * 8 + d * crate::tree::STATS_BYTES
}

pub(crate) fn variance_reduction(parent_icvar: f64, n: u64, left: &[RunningStats], right: &[RunningStats]) -> f64 {
    let n = n as f64;
    let wl = left[0].n() as f64 / n;
    let wr = right[0].n() as f64 / n;
    parent_icvar - wl * icvar(left) - wr * icvar(right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_insertion_creates_root() {
        let mut t = Ebst::new(2);
        t.insert(1.0, &[3.0, 4.0]);
        assert_eq!(t.len(), 1);
        assert_eq!(t.node_stats(1.0).unwrap()[0].n(), 1);
    }

    #[test]
    fn bst_ordering() {
        let mut t = Ebst::new(1);
        for k in [2.0, 1.0, 3.0] {
            t.insert(k, &[0.0]);
        }
        assert_eq!(t.root_key(), Some(2.0));
        assert_eq!(t.children_of(2.0), Some((Some(1.0), Some(3.0))));
        // equal key updates in place
        t.insert(2.0, &[1.0]);
        assert_eq!(t.len(), 3);
        // root holds itself plus the left subtree
        assert_eq!(t.node_stats(2.0).unwrap()[0].n(), 3);
    }

    #[test]
    fn threshold_partitions_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = Ebst::new(1);
        let mut values = Vec::new();
        for _ in 0..1000 {
            // coarse grid so duplicates occur
            let v = (rng.random::<f64>() * 300.0).floor();
            values.push(v);
            t.insert(v, &[rng.random()]);
        }
        let mut visited = 0;
        t.for_each_threshold(|key, left| {
            visited += 1;
            let expected = values.iter().filter(|&&v| v <= key).count() as u64;
            assert_eq!(left[0].n(), expected);
        });
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        assert_eq!(visited, distinct.len());
        assert_eq!(t.totals()[0].n(), 1000);
    }

    #[test]
    fn separated_groups_merit() {
        let mut t = Ebst::new(1);
        t.insert(1.0, &[0.0]);
        t.insert(1.0, &[0.0]);
        t.insert(5.0, &[2.0]);
        t.insert(5.0, &[2.0]);
        let s = t.best_splits(0).unwrap();
        assert_eq!(s.best.predicate, Predicate::Threshold(1.0));
        assert!((s.best.merit - 4.0 / 3.0).abs() < 1e-12);
        assert!(s.runner_up.is_none());
        assert_eq!(s.best.branches[0][0].n(), 2);
        assert_eq!(s.best.branches[1][0].n(), 2);
    }

    #[test]
    fn constant_targets_have_zero_merit() {
        let mut t = Ebst::new(2);
        for k in 0..20 {
            t.insert(k as f64, &[3.0, -1.0]);
        }
        let s = t.best_splits(0).unwrap();
        assert!(s.best.merit.abs() < 1e-12);
        assert!(s.runner_up.unwrap().merit.abs() < 1e-12);
    }

    #[test]
    fn single_key_cannot_split() {
        let mut t = Ebst::new(1);
        t.insert(1.0, &[1.0]);
        t.insert(1.0, &[5.0]);
        assert!(t.best_splits(0).is_none());
    }

    #[test]
    fn sorted_insertions_do_not_recurse() {
        let mut t = Ebst::new(1);
        for k in 0..50_000 {
            t.insert(k as f64, &[k as f64]);
        }
        let s = t.best_splits(0).unwrap();
        assert!(s.best.merit > 0.0);
    }
}
