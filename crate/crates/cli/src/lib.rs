//! Benchmark harness behind the `stacktree` binary: run prequential
//! experiments from a config file, compare the resulting reports, and
//! export generator streams.

pub mod compare;
pub mod config;
pub mod generate;
pub mod reports;
pub mod run;

pub use compare::{cmd_compare, Blocks};
pub use config::RunConfig;
pub use generate::cmd_generate;
pub use run::cmd_run;

/// Directory used when neither `--out`, the environment nor the config names one.
pub const DEFAULT_OUT_DIR: &str = "stacktree-out";
pub const OUT_DIR_ENV: &str = "STACKTREE_OUT_DIR";

/// A command failure, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    /// Bad invocation or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that went wrong while doing the work; exit code 1.
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<stacktree::Error> for Failure {
    fn from(e: stacktree::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.into())
    }
}
