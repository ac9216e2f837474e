//! Prequential evaluation and cross-algorithm statistical comparison.

mod prequential;
mod ranking;

pub use prequential::{
    armse, run_prequential, run_prequential_with, ErrorSums, PrequentialConfig, WindowRecord, WindowedReport,
};
pub use ranking::{critical_difference, friedman_nemenyi, nemenyi_q, rank_ascending, FriedmanNemenyi, RankTable};
