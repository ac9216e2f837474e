//! Incremental multi-target regression with Hoeffding trees.
//!
//! A [`Tree`] learns from one [`Instance`] at a time and predicts all targets
//! at once. Leaves carry a mean predictor, per-target perceptrons over
//! standardized inputs, and optionally a second stacked layer of perceptrons
//! over the first layer's outputs; adaptive variants pick the predictor with
//! the lowest faded absolute error per target.
//!
//! ```
//! use stacktree::{GeneratorSpec, Family, Tree, TreeConfig, LearnerVariant};
//!
//! let spec = GeneratorSpec::new(Family::FriedmanMt, 1_000, 3, 7);
//! let mut tree = Tree::new(spec.schema(), TreeConfig::new(LearnerVariant::SsthtAdaptive)).unwrap();
//! for x in spec.stream().unwrap() {
//!     let x = x.unwrap();
//!     let _ = tree.predict(&x).unwrap();
//!     tree.learn(&x).unwrap();
//! }
//! ```

pub mod error;
pub mod eval;
pub mod leaf;
pub mod observers;
pub mod schema;
pub mod split;
pub mod stats;
pub mod streams;
pub mod tree;

pub use error::{Error, Result};
pub use eval::{run_prequential, PrequentialConfig, WindowedReport};
pub use leaf::UpdateSign;
pub use schema::{FeatureSpec, Instance, LearnerVariant, Prediction, PredictorKind, StreamSchema, Value};
pub use split::HoeffdingParams;
pub use stats::RunningStats;
pub use streams::{CsvStream, Family, GeneratorSpec, SchemaDecl, StreamSource};
pub use tree::{Tree, TreeConfig};
