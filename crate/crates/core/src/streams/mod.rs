//! Stream sources: CSV files with a declared schema, and seeded synthetic
//! multi-target generators.

mod csv;
mod generators;

pub use self::csv::{ColumnDecl, CsvStream, SchemaDecl};
pub use generators::{Drift, DriftMode, Family, GeneratorSpec, GeneratorStream};

use crate::error::Result;
use crate::schema::{Instance, StreamSchema};

/// An ordered, single-consumer sequence of instances conforming to a schema.
pub trait StreamSource: Iterator<Item = Result<Instance>> + Send {
    fn schema(&self) -> &StreamSchema;

    /// Total number of instances, when known up front.
    fn len_hint(&self) -> Option<usize> {
        None
    }
}
