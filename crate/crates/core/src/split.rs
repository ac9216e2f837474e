//! Hoeffding-bound split decisions over ranked suggestions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observers::SplitSuggestion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoeffdingParams {
    pub delta: f64,
    pub tau: f64,
    pub grace_period: u64,
}

impl Default for HoeffdingParams {
    fn default() -> Self {
        Self {
            delta: 1e-7,
            tau: 0.05,
            grace_period: 200,
        }
    }
}

impl HoeffdingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return Err(Error::Config(format!("tau must be non-negative, got {}", self.tau)));
        }
        if self.grace_period == 0 {
            return Err(Error::Config("grace_period must be at least 1".into()));
        }
        Ok(())
    }
}

/// `sqrt(ln(2/delta) / 2n)`.
pub fn hoeffding_bound(n: u64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroCount("the Hoeffding bound"));
    }
    Ok(((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Running mean of the second-best / best merit ratio at one leaf.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeritRatio {
    sum: f64,
    count: u64,
}

impl MeritRatio {
    pub fn observe(&mut self, ratio: f64) {
        self.sum += ratio;
        self.count += 1;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitDecision {
    Split,
    KeepWaiting,
}

/// What a split attempt saw, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptOutcome {
    pub decision: SplitDecision,
    pub ratio_mean: f64,
    pub bound: f64,
}

/// Applies `r̄ + ξ < 1 || ξ < τ`, after folding this attempt's merit ratio
/// into `ratio`. `n` is the number of examples the leaf has observed.
pub fn decide_split(
    best: &SplitSuggestion,
    second: Option<&SplitSuggestion>,
    ratio: &mut MeritRatio,
    n: u64,
    params: &HoeffdingParams,
) -> AttemptOutcome {
    let bound = hoeffding_bound(n.max(1), params.delta).unwrap_or(f64::INFINITY);
    if best.merit.is_nan() || best.merit <= 0.0 {
        return AttemptOutcome {
            decision: SplitDecision::KeepWaiting,
            ratio_mean: ratio.mean(),
            bound,
        };
    }
    let h_sb = second.map_or(0.0, |s| s.merit.max(0.0));
    ratio.observe((h_sb / best.merit).clamp(0.0, 1.0));
    let r = ratio.mean();
    let decision = if r + bound < 1.0 || bound < params.tau {
        SplitDecision::Split
    } else {
        SplitDecision::KeepWaiting
    };
    AttemptOutcome {
        decision,
        ratio_mean: r,
        bound,
    }
}
