//! Leaf prediction stack: mean predictor, base perceptrons, stacked meta
//! perceptrons, and per-target selection by faded mean absolute error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::schema::{LearnerVariant, Prediction, PredictorKind, Value};
use crate::stats::{RunningStats, VectorStats};

/// Decay applied to past absolute errors.
pub const FADE: f64 = 0.95;

/// Direction of the delta-rule step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSign {
    /// `w += η (target - output) x`, descending the squared error.
    #[default]
    ErrorDescent,
    /// `w += η (output - target) x`, as the update is sometimes printed.
    PaperLiteral,
}

/// Dense affine map `outputs × (inputs + 1)`, bias in column 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
}

/// First-layer perceptrons over standardized features.
pub type PerceptronLayer = LinearLayer;
/// Second-layer perceptrons over the base outputs.
pub type MetaLayer = LinearLayer;

impl LinearLayer {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; outputs * (inputs + 1)],
        }
    }

    /// Weights drawn from U[-1, 1], row by row.
    pub fn uniform<R: Rng + ?Sized>(outputs: usize, inputs: usize, rng: &mut R) -> Self {
        let weights = (0..outputs * (inputs + 1))
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
        }
    }

    /// Identity passthrough; needs `inputs == outputs`.
    pub fn identity(size: usize) -> Self {
        let mut layer = Self::zeros(size, size);
        for t in 0..size {
            layer.row_mut(t)[t + 1] = 1.0;
        }
        layer
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, |r| r.len() - 1);
        assert!(rows.iter().all(|r| r.len() == inputs + 1), "ragged weight rows");
        Self {
            inputs,
            outputs,
            weights: rows.concat(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn n_weights(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.inputs + 1;
        &self.weights[t * w..(t + 1) * w]
    }

    fn row_mut(&mut self, t: usize) -> &mut [f64] {
        let w = self.inputs + 1;
        &mut self.weights[t * w..(t + 1) * w]
    }

    #[inline]
    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        for (t, o) in out.iter_mut().enumerate().take(self.outputs) {
            let row = self.row(t);
            *o = row[0] + row[1..].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        self.predict_into(x, &mut out);
        out
    }

    /// One delta-rule step given this layer's `output` for `x`.
    #[inline]
    pub fn update(&mut self, x: &[f64], output: &[f64], target: &[f64], eta: f64, sign: UpdateSign) {
        for t in 0..self.outputs {
            let err = match sign {
                UpdateSign::ErrorDescent => target[t] - output[t],
                UpdateSign::PaperLiteral => output[t] - target[t],
            };
            let step = eta * err;
            if step == 0.0 {
                continue;
            }
            let row = self.row_mut(t);
            row[0] += step;
            for (w, v) in row[1..].iter_mut().zip(x) {
                *w += step * v;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

/// Exponentially faded absolute errors, one cell per (predictor, target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadedError {
    kinds: Vec<PredictorKind>,
    d: usize,
    /// `[numerator, denominator]` per cell.
    cells: Vec<[f64; 2]>,
}

impl FadedError {
    pub fn new(kinds: &[PredictorKind], d: usize) -> Self {
        Self {
            kinds: kinds.to_vec(),
            d,
            cells: vec![[0.0; 2]; kinds.len() * d],
        }
    }

    fn slot(&self, kind: PredictorKind) -> Option<usize> {
        self.kinds.iter().position(|&k| k == kind)
    }

    pub fn update(&mut self, kind: PredictorKind, target: usize, abs_error: f64) {
        debug_assert!(abs_error >= 0.0);
        if let Some(s) = self.slot(kind) {
            let cell = &mut self.cells[s * self.d + target];
            cell[0] = FADE * cell[0] + abs_error;
            cell[1] = FADE * cell[1] + 1.0;
        }
    }

    /// `None` before the first error or for predictors not tracked here.
    pub fn fmae(&self, kind: PredictorKind, target: usize) -> Option<f64> {
        let cell = self.cells[self.slot(kind)? * self.d + target];
        (cell[1] > 0.0).then(|| cell[0] / cell[1])
    }

    pub fn denominator(&self, kind: PredictorKind, target: usize) -> Option<f64> {
        self.slot(kind).map(|s| self.cells[s * self.d + target][1])
    }

    pub fn kinds(&self) -> &[PredictorKind] {
        &self.kinds
    }

    pub fn size_bytes(&self) -> usize {
        self.cells.len() * 16
    }
}

/// Predictions of every carried predictor for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Original scale, indexed by [`PredictorKind::index`]; empty when the
    /// predictor is not carried.
    pub by_kind: [Vec<f64>; 3],
}

impl Forward {
    pub fn get(&self, kind: PredictorKind) -> Option<&[f64]> {
        let v = &self.by_kind[kind.index()];
        (!v.is_empty()).then_some(v.as_slice())
    }
}

/// Standardizes features with leaf statistics; missing values map to 0.
pub fn standardize_features(stats: &[RunningStats], x: &[Value], out: &mut Vec<f64>) {
    out.clear();
    out.extend(
        stats
            .iter()
            .zip(x)
            .map(|(s, v)| v.as_f64().map_or(0.0, |v| s.zscore(v))),
    );
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafPredictorSet {
    variant: LearnerVariant,
    base: Option<PerceptronLayer>,
    meta: Option<MetaLayer>,
    faded: FadedError,
}

impl LeafPredictorSet {
    /// Root predictors; base then meta weights are drawn from `rng`.
    pub fn new<R: Rng + ?Sized>(variant: LearnerVariant, m: usize, d: usize, rng: &mut R) -> Self {
        let base = variant.uses_perceptron().then(|| LinearLayer::uniform(d, m, rng));
        let meta = variant.uses_stacking().then(|| LinearLayer::uniform(d, d, rng));
        Self::from_layers(variant, d, base, meta)
    }

    pub fn from_layers(
        variant: LearnerVariant,
        d: usize,
        base: Option<PerceptronLayer>,
        meta: Option<MetaLayer>,
    ) -> Self {
        assert_eq!(
            base.is_some(),
            variant.uses_perceptron(),
            "base layer must match the variant"
        );
        assert_eq!(
            meta.is_some(),
            variant.uses_stacking(),
            "meta layer must match the variant"
        );
        Self {
            variant,
            base,
            meta,
            faded: FadedError::new(variant.carried(), d),
        }
    }

    /// Predictors for a child leaf: same weights, fresh error tracking.
    pub fn inherit(&self) -> Self {
        Self {
            variant: self.variant,
            base: self.base.clone(),
            meta: self.meta.clone(),
            faded: FadedError::new(self.variant.carried(), self.faded.d),
        }
    }

    pub fn variant(&self) -> LearnerVariant {
        self.variant
    }

    pub fn base(&self) -> Option<&PerceptronLayer> {
        self.base.as_ref()
    }

    pub fn meta(&self) -> Option<&MetaLayer> {
        self.meta.as_ref()
    }

    pub fn faded(&self) -> &FadedError {
        &self.faded
    }

    pub fn forward(&self, stats: &VectorStats, x: &[Value]) -> Forward {
        let d = stats.targets.len();
        let mut by_kind: [Vec<f64>; 3] = Default::default();
        by_kind[PredictorKind::Mean.index()] = stats.targets.iter().map(RunningStats::mean).collect();
        if let Some(base) = &self.base {
            let mut xs = Vec::with_capacity(x.len());
            standardize_features(&stats.features, x, &mut xs);
            let mut base_out = vec![0.0; d];
            base.predict_into(&xs, &mut base_out);
            by_kind[PredictorKind::Perceptron.index()] = stats
                .targets
                .iter()
                .zip(&base_out)
                .map(|(s, &z)| s.inverse_zscore(z))
                .collect();
            if let Some(meta) = &self.meta {
                let mut meta_out = vec![0.0; d];
                meta.predict_into(&base_out, &mut meta_out);
                by_kind[PredictorKind::Stacked.index()] = stats
                    .targets
                    .iter()
                    .zip(&meta_out)
                    .map(|(s, &z)| s.inverse_zscore(z))
                    .collect();
            }
        }
        Forward { by_kind }
    }

    /// Per target: the fixed predictor, or the carried predictor with the
    /// lowest faded error (ties to the cheaper model).
    pub fn select(&self, fwd: &Forward) -> Prediction {
        let d = fwd.by_kind[PredictorKind::Mean.index()].len();
        let mut values = Vec::with_capacity(d);
        let mut sources = Vec::with_capacity(d);
        for t in 0..d {
            let kind = match self.variant.fixed_predictor() {
                Some(k) => k,
                None => self.best_for_target(t),
            };
            let v = fwd.by_kind[kind.index()][t];
            values.push(if v.is_finite() {
                v
            } else {
                fwd.by_kind[PredictorKind::Mean.index()][t]
            });
            sources.push(kind);
        }
        Prediction { values, sources }
    }

    pub fn best_for_target(&self, t: usize) -> PredictorKind {
        let carried = self.variant.carried();
        let mut best = carried[0];
        let mut best_err = self.faded.fmae(best, t).unwrap_or(f64::INFINITY);
        for &k in &carried[1..] {
            let e = self.faded.fmae(k, t).unwrap_or(f64::INFINITY);
            if e < best_err {
                best = k;
                best_err = e;
            }
        }
        best
    }

    pub fn record_errors(&mut self, fwd: &Forward, y: &[f64]) {
        for &kind in self.variant.carried() {
            let pred = &fwd.by_kind[kind.index()];
            for (t, (&p, &truth)) in pred.iter().zip(y).enumerate() {
                self.faded.update(kind, t, (truth - p).abs());
            }
        }
    }

    /// Delta-rule step for the base and meta layers on one example,
    /// standardized with `stats` (which already include it).
    pub fn train(&mut self, stats: &VectorStats, x: &[Value], y: &[f64], eta: f64, sign: UpdateSign) {
        let Some(base) = &mut self.base else { return };
        let d = y.len();
        let mut xs = Vec::with_capacity(x.len());
        standardize_features(&stats.features, x, &mut xs);
        let ys: Vec<f64> = stats.targets.iter().zip(y).map(|(s, &v)| s.zscore(v)).collect();
        let mut base_out = vec![0.0; d];
        base.predict_into(&xs, &mut base_out);
        base.update(&xs, &base_out, &ys, eta, sign);
        if let Some(meta) = &mut self.meta {
            let mut meta_out = vec![0.0; d];
            meta.predict_into(&base_out, &mut meta_out);
            meta.update(&base_out, &meta_out, &ys, eta, sign);
        }
    }

    pub fn size_bytes(&self) -> usize {
        self.base.as_ref().map_or(0, |l| l.n_weights() * 8)
            + self.meta.as_ref().map_or(0, |l| l.n_weights() * 8)
            + self.faded.size_bytes()
    }
}
