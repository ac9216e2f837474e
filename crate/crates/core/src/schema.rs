//! Stream schema, instances, predictions and the learner variants.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Nominal { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Nominal {
                categories: categories.into_iter().map(Into::into).collect(),
            },
        }
    }

    /// Number of declared categories, `None` for numeric features.
    pub fn arity(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Numeric => None,
            FeatureKind::Nominal { categories } => Some(categories.len()),
        }
    }
}

/// Input features and target names of a stream. Fixed for the stream's lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSchema {
    features: Vec<FeatureSpec>,
    targets: Vec<String>,
}

impl StreamSchema {
    pub fn new(features: Vec<FeatureSpec>, targets: Vec<String>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Schema("at least one feature is required".into()));
        }
        if targets.is_empty() {
            return Err(Error::Schema("at least one target is required".into()));
        }
        let mut seen = HashSet::new();
        for name in features.iter().map(|f| &f.name).chain(targets.iter()) {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{name}`")));
            }
        }
        for f in &features {
            if let FeatureKind::Nominal { categories } = &f.kind {
                if categories.is_empty() {
                    return Err(Error::Schema(format!("nominal feature `{}` has no categories", f.name)));
                }
                let distinct: HashSet<_> = categories.iter().collect();
                if distinct.len() != categories.len() {
                    return Err(Error::Schema(format!(
                        "nominal feature `{}` repeats a category",
                        f.name
                    )));
                }
            }
        }
        Ok(Self { features, targets })
    }

    /// All-numeric schema with generated names `x1..xm`, `y1..yd`.
    pub fn numeric(m: usize, d: usize) -> Result<Self> {
        Self::new(
            (1..=m).map(|j| FeatureSpec::numeric(format!("x{j}"))).collect(),
            (1..=d).map(|t| format!("y{t}")).collect(),
        )
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn n_numeric(&self) -> usize {
        self.features.iter().filter(|f| f.arity().is_none()).count()
    }

    /// Checks lengths and nominal index ranges. Target finiteness is left to
    /// the learner, which counts and skips such instances.
    pub fn validate(&self, x: &Instance) -> Result<()> {
        if x.features.len() != self.features.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} feature values, got {}",
                self.features.len(),
                x.features.len()
            )));
        }
        if x.targets.len() != self.targets.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} target values, got {}",
                self.targets.len(),
                x.targets.len()
            )));
        }
        for (spec, value) in self.features.iter().zip(&x.features) {
            match (&spec.kind, value) {
                (_, Value::Missing) => {}
                (FeatureKind::Numeric, Value::Num(_)) => {}
                (FeatureKind::Nominal { categories }, Value::Cat(c)) => {
                    if *c as usize >= categories.len() {
                        return Err(Error::SchemaMismatch(format!(
                            "category index {c} out of range for `{}` ({} categories)",
                            spec.name,
                            categories.len()
                        )));
                    }
                }
                (FeatureKind::Numeric, Value::Cat(_)) => {
                    return Err(Error::SchemaMismatch(format!(
                        "`{}` is numeric, got a category",
                        spec.name
                    )))
                }
                (FeatureKind::Nominal { .. }, Value::Num(_)) => {
                    return Err(Error::SchemaMismatch(format!(
                        "`{}` is nominal, got a number",
                        spec.name
                    )))
                }
            }
        }
        Ok(())
    }
}

/// A single feature value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(u32),
    Missing,
}

impl Value {
    /// Numeric reading used by statistics and the perceptrons; nominal
    /// values contribute their category index.
    #[inline]
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Value::Num(v) if v.is_finite() => Some(v),
            Value::Num(_) | Value::Missing => None,
            Value::Cat(c) => Some(c as f64),
        }
    }

    pub fn is_missing(self) -> bool {
        self.as_f64().is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<Value>,
    pub targets: Vec<f64>,
}

impl Instance {
    pub fn new(features: Vec<Value>, targets: Vec<f64>) -> Self {
        Self { features, targets }
    }

    pub fn numeric(features: &[f64], targets: &[f64]) -> Self {
        Self {
            features: features.iter().map(|&v| Value::Num(v)).collect(),
            targets: targets.to_vec(),
        }
    }

    pub fn has_finite_targets(&self) -> bool {
        self.targets.iter().all(|y| y.is_finite())
    }
}

/// The leaf predictors a learner can choose from, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PredictorKind {
    Mean,
    Perceptron,
    Stacked,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 3] = [PredictorKind::Mean, PredictorKind::Perceptron, PredictorKind::Stacked];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub sources: Vec<PredictorKind>,
}

/// The five tree learners compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerVariant {
    MtrhtMean,
    MtrhtPerceptron,
    IsoupAdaptive,
    Sstht,
    SsthtAdaptive,
}

impl LearnerVariant {
    pub const ALL: [LearnerVariant; 5] = [
        LearnerVariant::MtrhtMean,
        LearnerVariant::MtrhtPerceptron,
        LearnerVariant::IsoupAdaptive,
        LearnerVariant::Sstht,
        LearnerVariant::SsthtAdaptive,
    ];

    /// Predictors whose state a leaf carries for this variant.
    pub fn carried(self) -> &'static [PredictorKind] {
        use PredictorKind::*;
        match self {
            LearnerVariant::MtrhtMean => &[Mean],
            LearnerVariant::MtrhtPerceptron | LearnerVariant::IsoupAdaptive => &[Mean, Perceptron],
            LearnerVariant::Sstht | LearnerVariant::SsthtAdaptive => &[Mean, Perceptron, Stacked],
        }
    }

    /// The single predictor used by non-adaptive variants.
    pub fn fixed_predictor(self) -> Option<PredictorKind> {
        match self {
            LearnerVariant::MtrhtMean => Some(PredictorKind::Mean),
            LearnerVariant::MtrhtPerceptron => Some(PredictorKind::Perceptron),
            LearnerVariant::Sstht => Some(PredictorKind::Stacked),
            LearnerVariant::IsoupAdaptive | LearnerVariant::SsthtAdaptive => None,
        }
    }

    pub fn is_adaptive(self) -> bool {
        self.fixed_predictor().is_none()
    }

    pub fn uses_perceptron(self) -> bool {
        self.carried().contains(&PredictorKind::Perceptron)
    }

    pub fn uses_stacking(self) -> bool {
        self.carried().contains(&PredictorKind::Stacked)
    }

    pub fn key(self) -> &'static str {
        match self {
            LearnerVariant::MtrhtMean => "mtrht_mean",
            LearnerVariant::MtrhtPerceptron => "mtrht_perceptron",
            LearnerVariant::IsoupAdaptive => "isoup_adaptive",
            LearnerVariant::Sstht => "sstht",
            LearnerVariant::SsthtAdaptive => "sstht_adaptive",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LearnerVariant::MtrhtMean => "MTR-HT_Mean",
            LearnerVariant::MtrhtPerceptron => "MTR-HT_Perceptron",
            LearnerVariant::IsoupAdaptive => "iSOUP-Tree",
            LearnerVariant::Sstht => "SST-HT",
            LearnerVariant::SsthtAdaptive => "SST-HT_Adaptive",
        }
    }
}

impl fmt::Display for LearnerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for LearnerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        LearnerVariant::ALL
            .into_iter()
            .find(|v| {
                let key: String = v.key().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
                let label: String = v
                    .label()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                norm == key || norm == label
            })
            .ok_or_else(|| Error::Config(format!("unknown learner variant `{s}`")))
    }
}
