//! Hoeffding-tree induction for multi-target regression.
//!
//! Nodes live in an arena; a leaf that splits is replaced in place by a split
//! node whose children are appended. Split decisions read only the leaf's
//! target statistics and feature observers, so every [`LearnerVariant`]
//! grows the same skeleton from the same stream.

use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaf::{LeafPredictorSet, UpdateSign};
use crate::observers::{rank_features, FeatureObserver, Predicate, SplitSuggestion};
use crate::schema::{Instance, LearnerVariant, Prediction, StreamSchema, Value};
use crate::split::{decide_split, HoeffdingParams, MeritRatio, SplitDecision};
use crate::stats::VectorStats;

/// Accounted bytes of one [`RunningStats`]: count plus two moments.
pub const STATS_BYTES: usize = 24;
/// Tree-level bookkeeping: configuration and counters.
pub const TREE_HEADER_BYTES: usize = 64;
/// Split node without its child links: feature, predicate, kind, arity.
pub const SPLIT_NODE_BYTES: usize = 32;
/// Leaf counters: examples seen, since last attempt, merit-ratio sum and count.
pub const LEAF_HEADER_BYTES: usize = 32;

pub const SNAPSHOT_FORMAT: &str = "stacktree-tree";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub variant: LearnerVariant,
    #[serde(flatten)]
    pub hoeffding: HoeffdingParams,
    pub learning_rate: f64,
    pub update_sign: UpdateSign,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            variant: LearnerVariant::SsthtAdaptive,
            hoeffding: HoeffdingParams::default(),
            learning_rate: 0.01,
            update_sign: UpdateSign::ErrorDescent,
            seed: 1,
        }
    }
}

impl TreeConfig {
    pub fn new(variant: LearnerVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.hoeffding.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    stats: VectorStats,
    observers: Vec<FeatureObserver>,
    predictors: LeafPredictorSet,
    ratio: MeritRatio,
    seen: u64,
    since_attempt: u64,
}

impl Leaf {
    fn new(stats: VectorStats, observers: Vec<FeatureObserver>, predictors: LeafPredictorSet) -> Self {
        Self {
            stats,
            observers,
            predictors,
            ratio: MeritRatio::default(),
            seen: 0,
            since_attempt: 0,
        }
    }

    pub fn stats(&self) -> &VectorStats {
        &self.stats
    }

    pub fn observers(&self) -> &[FeatureObserver] {
        &self.observers
    }

    pub fn predictors(&self) -> &LeafPredictorSet {
        &self.predictors
    }

    pub fn merit_ratio(&self) -> &MeritRatio {
        &self.ratio
    }

    /// Examples learned at this leaf since it was created.
    pub fn examples_seen(&self) -> u64 {
        self.seen
    }

    pub fn examples_since_attempt(&self) -> u64 {
        self.since_attempt
    }

    pub fn predict(&self, x: &Instance) -> Prediction {
        self.predictors
            .select(&self.predictors.forward(&self.stats, &x.features))
    }

    fn size_bytes(&self) -> usize {
        LEAF_HEADER_BYTES
            + (self.stats.features.len() + self.stats.targets.len()) * STATS_BYTES
            + self.observers.iter().map(FeatureObserver::size_bytes).sum::<usize>()
            + self.predictors.size_bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub feature: usize,
    pub predicate: Predicate,
    children: Vec<u32>,
}

impl SplitNode {
    #[inline]
    fn branch(&self, value: Value) -> usize {
        match (self.predicate, value) {
            (Predicate::Threshold(t), Value::Num(v)) if v.is_finite() => usize::from(v > t),
            (Predicate::Multiway { arity }, Value::Cat(c)) if (c as usize) < arity => c as usize,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Box<Leaf>),
    Split(SplitNode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    schema: StreamSchema,
    config: TreeConfig,
    nodes: Vec<Node>,
    rejected: u64,
    split_attempts: u64,
}

#[derive(Serialize)]
struct Snapshot<'a> {
    format: &'static str,
    version: u32,
    tree: &'a Tree,
}

#[derive(Deserialize)]
struct OwnedSnapshot {
    format: String,
    version: u32,
    tree: Tree,
}

impl Tree {
    pub fn new(schema: StreamSchema, config: TreeConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (m, d) = (schema.n_features(), schema.n_targets());
        let root = Leaf::new(
            VectorStats::new(m, d),
            FeatureObserver::for_schema(&schema),
            LeafPredictorSet::new(config.variant, m, d, &mut rng),
        );
        Ok(Self {
            schema,
            config,
            nodes: vec![Node::Leaf(Box::new(root))],
            rejected: 0,
            split_attempts: 0,
        })
    }

    pub fn schema(&self) -> &StreamSchema {
        &self.schema
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn variant(&self) -> LearnerVariant {
        self.config.variant
    }

    /// Instances skipped by `learn` because a target was not finite.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn split_attempts(&self) -> u64 {
        self.split_attempts
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    pub fn depth(&self) -> usize {
        let mut depth = 0;
        let mut stack = vec![(0u32, 0usize)];
        while let Some((idx, level)) = stack.pop() {
            depth = depth.max(level);
            if let Node::Split(s) = &self.nodes[idx as usize] {
                stack.extend(s.children.iter().map(|&c| (c, level + 1)));
            }
        }
        depth
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(l) => Some(l.as_ref()),
            Node::Split(_) => None,
        })
    }

    /// Split nodes in arena order.
    pub fn splits(&self) -> impl Iterator<Item = &SplitNode> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split(s) => Some(s),
            Node::Leaf(_) => None,
        })
    }

    #[inline]
    fn route_index(&self, x: &[Value]) -> usize {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf(_) => return idx,
                Node::Split(s) => idx = s.children[s.branch(x[s.feature])] as usize,
            }
        }
    }

    /// The leaf `x` falls into. Missing numeric values go left and unknown
    /// categories go to the first branch.
    pub fn route(&self, x: &Instance) -> &Leaf {
        match &self.nodes[self.route_index(&x.features)] {
            Node::Leaf(l) => l,
            Node::Split(_) => unreachable!("routing ends at a leaf"),
        }
    }

    fn check_shape(&self, x: &Instance) -> Result<()> {
        if x.features.len() != self.schema.n_features() || x.targets.len() != self.schema.n_targets() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features and {} targets, got {} and {}",
                self.schema.n_features(),
                self.schema.n_targets(),
                x.features.len(),
                x.targets.len()
            )));
        }
        Ok(())
    }

    /// Prediction for `x`; target values of `x` are ignored.
    pub fn predict(&self, x: &Instance) -> Result<Prediction> {
        self.check_shape(x)?;
        Ok(self.route(x).predict(x))
    }

    /// Prediction from feature values alone.
    pub fn predict_features(&self, features: &[Value]) -> Result<Prediction> {
        if features.len() != self.schema.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.schema.n_features(),
                features.len()
            )));
        }
        let Node::Leaf(leaf) = &self.nodes[self.route_index(features)] else {
            unreachable!()
        };
        let fwd = leaf.predictors.forward(&leaf.stats, features);
        Ok(leaf.predictors.select(&fwd))
    }

    pub fn learn(&mut self, x: &Instance) -> Result<()> {
        self.schema.validate(x)?;
        if !x.has_finite_targets() {
            self.rejected += 1;
            if self.rejected == 1 {
                log::warn!("skipping instance with non-finite target values");
            }
            return Ok(());
        }
        let idx = self.route_index(&x.features);
        let Node::Leaf(leaf) = &mut self.nodes[idx] else {
            unreachable!()
        };
        let leaf = leaf.as_mut();
        let y = x.targets.as_slice();

        let fwd = leaf.predictors.forward(&leaf.stats, &x.features);
        leaf.predictors.record_errors(&fwd, y);

        for (s, v) in leaf.stats.features.iter_mut().zip(&x.features) {
            if let Some(v) = v.as_f64() {
                s.update(v);
            }
        }
        for (s, &v) in leaf.stats.targets.iter_mut().zip(y) {
            s.update(v);
        }
        for (obs, &v) in leaf.observers.iter_mut().zip(&x.features) {
            obs.update(v, y);
        }
        leaf.predictors.train(
            &leaf.stats,
            &x.features,
            y,
            self.config.learning_rate,
            self.config.update_sign,
        );

        leaf.seen += 1;
        leaf.since_attempt += 1;
        if leaf.since_attempt >= self.config.hoeffding.grace_period {
            self.attempt_split(idx);
        }
        Ok(())
    }

    fn attempt_split(&mut self, idx: usize) {
        self.split_attempts += 1;
        let Node::Leaf(leaf) = &mut self.nodes[idx] else {
            unreachable!()
        };
        leaf.since_attempt = 0;
        let Some((best, second)) = rank_features(&leaf.observers) else {
            return;
        };
        let outcome = decide_split(
            &best,
            second.as_ref(),
            &mut leaf.ratio,
            leaf.seen,
            &self.config.hoeffding,
        );
        if outcome.decision == SplitDecision::Split {
            self.split_leaf(idx, best);
        }
    }

    fn split_leaf(&mut self, idx: usize, suggestion: SplitSuggestion) {
        let first_child = self.nodes.len() as u32;
        let Node::Leaf(parent) = &self.nodes[idx] else {
            unreachable!()
        };
        let children: Vec<Node> = suggestion
            .branches
            .into_iter()
            .map(|targets| {
                // inherited weights only make sense under the standardization
                // they were trained with, so feature statistics carry over too
                Node::Leaf(Box::new(Leaf::new(
                    VectorStats {
                        features: parent.stats.features.clone(),
                        targets,
                    },
                    FeatureObserver::for_schema(&self.schema),
                    parent.predictors.inherit(),
                )))
            })
            .collect();
        let ids = (first_child..first_child + children.len() as u32).collect();
        self.nodes.extend(children);
        self.nodes[idx] = Node::Split(SplitNode {
            feature: suggestion.feature,
            predicate: suggestion.predicate,
            children: ids,
        });
        log::debug!(
            "split leaf {idx} on feature {} ({} leaves)",
            suggestion.feature,
            self.n_leaves()
        );
    }

    /// Deterministic size estimate in bytes; see the README for the formula.
    pub fn model_size_bytes(&self) -> usize {
        TREE_HEADER_BYTES
            + self
                .nodes
                .iter()
                .map(|n| match n {
                    Node::Leaf(l) => l.size_bytes(),
                    Node::Split(s) => SPLIT_NODE_BYTES + 8 * s.children.len(),
                })
                .sum::<usize>()
    }

    /// Bytes attributable to leaves alone.
    pub fn leaf_size_bytes(&self) -> usize {
        self.leaves().map(Leaf::size_bytes).sum()
    }

    /// Tree structure only: one line per node in pre-order.
    pub fn skeleton(&self) -> String {
        let mut out = format!("{SNAPSHOT_FORMAT}-skeleton v{SNAPSHOT_VERSION}\n");
        let mut stack = vec![(0u32, 0usize)];
        while let Some((idx, level)) = stack.pop() {
            let indent = "  ".repeat(level);
            match &self.nodes[idx as usize] {
                Node::Leaf(_) => {
                    let _ = writeln!(out, "{indent}leaf");
                }
                Node::Split(s) => {
                    let name = &self.schema.features()[s.feature].name;
                    let _ = match s.predicate {
                        Predicate::Threshold(t) => writeln!(out, "{indent}split {name} <= {t:?}"),
                        Predicate::Multiway { arity } => writeln!(out, "{indent}split {name} in {arity} categories"),
                    };
                    stack.extend(s.children.iter().rev().map(|&c| (c, level + 1)));
                }
            }
        }
        out
    }

    /// Versioned JSON snapshot of the complete model state.
    pub fn write_snapshot<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(
            w,
            &Snapshot {
                format: SNAPSHOT_FORMAT,
                version: SNAPSHOT_VERSION,
                tree: self,
            },
        )?;
        Ok(())
    }

    pub fn read_snapshot<R: std::io::Read>(r: R) -> Result<Self> {
        let snap: OwnedSnapshot = serde_json::from_reader(r)?;
        if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
            return Err(Error::Config(format!(
                "unsupported snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        Ok(snap.tree)
    }
}

/// Schema-derived width of the statistics a leaf always carries.
pub fn leaf_stats_bytes(schema: &StreamSchema) -> usize {
    (schema.n_features() + schema.n_targets()) * STATS_BYTES
}

/// Per-leaf bytes of the stacked layer: meta weights plus its faded errors.
pub const fn stacked_overhead_bytes(d: usize) -> usize {
    d * (d + 1) * 8 + d * 16
}

#[cfg(test)]
pub(crate) fn is_nominal(schema: &StreamSchema, feature: usize) -> bool {
    matches!(
        schema.features()[feature].kind,
        crate::schema::FeatureKind::Nominal { .. }
    )
}
