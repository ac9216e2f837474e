use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Instance, LearnerVariant, Prediction};
use crate::streams::StreamSource;
use crate::tree::{Tree, TreeConfig};

/// Average of per-target RMSE over `count` examples.
pub fn armse(sq_sums: &[f64], count: u64) -> Result<f64> {
    if count == 0 {
        return Err(Error::ZeroCount("aRMSE"));
    }
    if sq_sums.is_empty() {
        return Ok(0.0);
    }
    let n = count as f64;
    Ok(sq_sums.iter().map(|s| (s / n).sqrt()).sum::<f64>() / sq_sums.len() as f64)
}

/// Per-target squared-error sums over a run of evaluated examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSums {
    pub sq_sums: Vec<f64>,
    pub count: u64,
}

impl ErrorSums {
    pub fn new(d: usize) -> Self {
        Self {
            sq_sums: vec![0.0; d],
            count: 0,
        }
    }

    pub fn add(&mut self, truth: &[f64], predicted: &[f64]) {
        for (s, (y, p)) in self.sq_sums.iter_mut().zip(truth.iter().zip(predicted)) {
            *s += (y - p) * (y - p);
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &ErrorSums) {
        for (a, b) in self.sq_sums.iter_mut().zip(&other.sq_sums) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn armse(&self) -> Result<f64> {
        armse(&self.sq_sums, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrequentialConfig {
    pub window: usize,
    pub warm_start: usize,
    pub repetitions: usize,
    /// Explicit seeds, one per repetition; derived when empty.
    pub seeds: Vec<u64>,
}

impl Default for PrequentialConfig {
    fn default() -> Self {
        Self {
            window: 200,
            warm_start: 200,
            repetitions: 30,
            seeds: Vec::new(),
        }
    }
}

impl PrequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !self.seeds.is_empty() && self.seeds.len() != self.repetitions {
            return Err(Error::Config(format!(
                "{} seeds given for {} repetitions",
                self.seeds.len(),
                self.repetitions
            )));
        }
        Ok(())
    }

    /// Explicit seeds, or `base_seed, base_seed + 1, ...`.
    pub fn run_seeds(&self, base_seed: u64) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.repetitions as u64)
                .map(|i| base_seed.wrapping_add(i))
                .collect()
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub index: usize,
    pub armse: f64,
    pub cum_armse: f64,
    /// Learner time since the start of the run, warm start included.
    pub elapsed_s: f64,
    pub model_bytes: usize,
    pub errors: ErrorSums,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedReport {
    pub variant: LearnerVariant,
    pub dataset: String,
    pub seed: u64,
    pub windows: Vec<WindowRecord>,
    pub totals: ErrorSums,
    pub examples: u64,
    pub rejected: u64,
    pub elapsed_s: f64,
    pub model_bytes: usize,
    pub leaves: usize,
}

impl WindowedReport {
    /// aRMSE over every evaluated example; `None` when nothing was evaluated.
    pub fn cumulative_armse(&self) -> Option<f64> {
        self.totals.armse().ok()
    }

    /// Sum of the windowed aRMSE values.
    pub fn summed_window_armse(&self) -> f64 {
        self.windows.iter().map(|w| w.armse).sum()
    }
}

fn close_window(
    window: &mut ErrorSums,
    totals: &ErrorSums,
    tree: &Tree,
    busy: Duration,
    windows: &mut Vec<WindowRecord>,
) -> Result<()> {
    let d = window.sq_sums.len();
    windows.push(WindowRecord {
        index: windows.len(),
        armse: window.armse()?,
        cum_armse: totals.armse()?,
        elapsed_s: busy.as_secs_f64(),
        model_bytes: tree.model_size_bytes(),
        errors: std::mem::replace(window, ErrorSums::new(d)),
    });
    Ok(())
}

/// Test-then-train over `source`; see [`run_prequential_with`].
pub fn run_prequential(
    tree_config: &TreeConfig,
    source: &mut dyn StreamSource,
    config: &PrequentialConfig,
    dataset: &str,
) -> Result<WindowedReport> {
    run_prequential_with(tree_config, source, config, dataset, |_, _| {})
}

/// The first `warm_start` instances only train the tree. Every later instance
/// is predicted, passed to `on_eval`, and then learned. Windows close every
/// `window` evaluated instances; a trailing partial window is kept.
pub fn run_prequential_with(
    tree_config: &TreeConfig,
    source: &mut dyn StreamSource,
    config: &PrequentialConfig,
    dataset: &str,
    mut on_eval: impl FnMut(&Instance, &Prediction),
) -> Result<WindowedReport> {
    config.validate()?;
    let mut tree = Tree::new(source.schema().clone(), tree_config.clone())?;
    let d = source.schema().n_targets();
    let mut busy = Duration::ZERO;
    let mut examples = 0u64;
    let mut totals = ErrorSums::new(d);
    let mut window = ErrorSums::new(d);
    let mut windows = Vec::new();

    for item in &mut *source {
        let x = item?;
        examples += 1;
        if examples as usize <= config.warm_start || !x.has_finite_targets() {
            let start = Instant::now();
            tree.learn(&x)?;
            busy += start.elapsed();
            continue;
        }
        let start = Instant::now();
        let prediction = tree.predict(&x)?;
        tree.learn(&x)?;
        busy += start.elapsed();

        on_eval(&x, &prediction);
        window.add(&x.targets, &prediction.values);
        totals.add(&x.targets, &prediction.values);
        if window.count as usize == config.window {
            close_window(&mut window, &totals, &tree, busy, &mut windows)?;
        }
    }
    if examples == 0 {
        return Err(Error::EmptyStream);
    }
    if window.count > 0 {
        close_window(&mut window, &totals, &tree, busy, &mut windows)?;
    }
    Ok(WindowedReport {
        variant: tree_config.variant,
        dataset: dataset.to_string(),
        seed: tree_config.seed,
        windows,
        totals,
        examples,
        rejected: tree.rejected(),
        elapsed_s: busy.as_secs_f64(),
        model_bytes: tree.model_size_bytes(),
        leaves: tree.n_leaves(),
    })
}
