use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StreamSource;
use crate::error::{Error, Result};
use crate::schema::{FeatureKind, FeatureSpec, Instance, StreamSchema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Nominal,
}

/// One declared input column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnDecl {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    /// Numeric value that encodes a missing field, e.g. `-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentinel: Option<f64>,
    /// Treat unparsable numeric fields as missing instead of rejecting the row.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub parse_errors_as_missing: bool,
}

/// Schema declaration file, stored as TOML next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaDecl {
    pub targets: Vec<String>,
    pub features: Vec<ColumnDecl>,
}

impl SchemaDecl {
    pub fn from_schema(schema: &StreamSchema) -> Self {
        Self {
            targets: schema.targets().to_vec(),
            features: schema
                .features()
                .iter()
                .map(|f| ColumnDecl {
                    name: f.name.clone(),
                    kind: match f.kind {
                        FeatureKind::Numeric => ColumnKind::Numeric,
                        FeatureKind::Nominal { .. } => ColumnKind::Nominal,
                    },
                    categories: match &f.kind {
                        FeatureKind::Numeric => Vec::new(),
                        FeatureKind::Nominal { categories } => categories.clone(),
                    },
                    sentinel: None,
                    parse_errors_as_missing: false,
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema declarations always serialize")
    }

    pub fn schema(&self) -> Result<StreamSchema> {
        let features = self
            .features
            .iter()
            .map(|c| match c.kind {
                ColumnKind::Numeric if !c.categories.is_empty() => {
                    Err(Error::Schema(format!("numeric column `{}` lists categories", c.name)))
                }
                ColumnKind::Numeric => Ok(FeatureSpec::numeric(&c.name)),
                ColumnKind::Nominal if c.sentinel.is_some() => Err(Error::Schema(format!(
                    "nominal column `{}` cannot declare a sentinel",
                    c.name
                ))),
                ColumnKind::Nominal => Ok(FeatureSpec::nominal(&c.name, c.categories.iter().cloned())),
            })
            .collect::<Result<Vec<_>>>()?;
        StreamSchema::new(features, self.targets.clone())
    }
}

enum Parser {
    Numeric { sentinel: Option<f64>, lenient: bool },
    Nominal(HashMap<String, u32>),
}

/// Rows of a headed, comma-separated UTF-8 file, in file order. Malformed
/// rows are skipped and counted.
pub struct CsvStream {
    path: PathBuf,
    schema: StreamSchema,
    reader: ::csv::Reader<File>,
    feature_cols: Vec<(usize, Parser)>,
    target_cols: Vec<usize>,
    record: ::csv::StringRecord,
    line: u64,
    skipped: u64,
    done: bool,
}

fn is_missing_token(field: &str) -> bool {
    matches!(field, "" | "?" | "NA" | "NaN" | "nan")
}

impl CsvStream {
    pub fn open(path: impl AsRef<Path>, decl: &SchemaDecl) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let schema = decl.schema()?;
        let mut reader = ::csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(::csv::Trim::All)
            .from_path(&path)?;
        let headers = reader.headers()?.clone();
        let column = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Input {
                path: path.clone(),
                message: format!("header has no column `{name}`"),
            })
        };
        let feature_cols = decl
            .features
            .iter()
            .map(|c| {
                let parser = match c.kind {
                    ColumnKind::Numeric => Parser::Numeric {
                        sentinel: c.sentinel,
                        lenient: c.parse_errors_as_missing,
                    },
                    ColumnKind::Nominal => Parser::Nominal(
                        c.categories
                            .iter()
                            .enumerate()
                            .map(|(i, s)| (s.clone(), i as u32))
                            .collect(),
                    ),
                };
                Ok((column(&c.name)?, parser))
            })
            .collect::<Result<Vec<_>>>()?;
        let target_cols = decl.targets.iter().map(|t| column(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            path,
            schema,
            reader,
            feature_cols,
            target_cols,
            record: ::csv::StringRecord::new(),
            line: 1,
            skipped: 0,
            done: false,
        })
    }

    /// Rows rejected so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    fn parse_record(&self) -> std::result::Result<Instance, String> {
        let field = |i: usize| self.record.get(i).ok_or_else(|| format!("missing column {}", i + 1));
        let mut features = Vec::with_capacity(self.feature_cols.len());
        for (col, parser) in &self.feature_cols {
            let raw = field(*col)?;
            let value = if is_missing_token(raw) {
                Value::Missing
            } else {
                match parser {
                    Parser::Numeric { sentinel, lenient } => match raw.parse::<f64>() {
                        Ok(v) if Some(v) == *sentinel => Value::Missing,
                        Ok(v) if v.is_finite() => Value::Num(v),
                        _ if *lenient => Value::Missing,
                        _ => return Err(format!("`{raw}` is not a number")),
                    },
                    Parser::Nominal(map) => match map.get(raw) {
                        Some(&c) => Value::Cat(c),
                        None => return Err(format!("`{raw}` is not a declared category")),
                    },
                }
            };
            features.push(value);
        }
        let mut targets = Vec::with_capacity(self.target_cols.len());
        for &col in &self.target_cols {
            let raw = field(col)?;
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => targets.push(v),
                _ => return Err(format!("target `{raw}` is not a finite number")),
            }
        }
        Ok(Instance::new(features, targets))
    }
}

impl Iterator for CsvStream {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.reader.read_record(&mut self.record) {
                Ok(false) => {
                    self.done = true;
                    if self.skipped > 0 {
                        log::warn!("{}: skipped {} malformed rows", self.path.display(), self.skipped);
                    }
                }
                Ok(true) => {
                    self.line += 1;
                    match self.parse_record() {
                        Ok(x) => return Some(Ok(x)),
                        Err(msg) => {
                            self.skipped += 1;
                            log::debug!("{}:{}: {msg}", self.path.display(), self.line);
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        None
    }
}

impl StreamSource for CsvStream {
    fn schema(&self) -> &StreamSchema {
        &self.schema
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn decl() -> SchemaDecl {
        toml::from_str(
            r#"
            targets = ["y"]
            [[features]]
            name = "a"
            kind = "numeric"
            sentinel = -1.0
            [[features]]
            name = "b"
            kind = "nominal"
            categories = ["lo", "hi"]
            "#,
        )
        .unwrap()
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_rows_in_order() {
        let f = write("a,b,y\n1.5,lo,2\n2.5,hi,3\n-1,hi,4\n");
        let rows: Vec<_> = CsvStream::open(f.path(), &decl())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], Instance::new(vec![Value::Num(1.5), Value::Cat(0)], vec![2.0]));
        assert_eq!(rows[2].features[0], Value::Missing);
    }

    #[test]
    fn non_numeric_target_skips_row() {
        let f = write("a,b,y\n1,lo,x\n2,hi,3\n");
        let mut s = CsvStream::open(f.path(), &decl()).unwrap();
        let rows: Vec<_> = s.by_ref().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(s.skipped(), 1);
    }

    #[test]
    fn unknown_category_and_short_rows_are_skipped() {
        let f = write("a,b,y\n1,mid,2\n1\n3,lo,1\n");
        let mut s = CsvStream::open(f.path(), &decl()).unwrap();
        assert_eq!(s.by_ref().count(), 1);
        assert_eq!(s.skipped(), 2);
    }

    #[test]
    fn missing_header_is_fatal() {
        let f = write("a,y\n1,2\n");
        assert!(matches!(CsvStream::open(f.path(), &decl()), Err(Error::Input { .. })));
    }

    #[test]
    fn extra_columns_are_ignored_and_order_is_free() {
        let f = write("id,y,b,a\n7,2,hi,0.5\n");
        let rows: Vec<_> = CsvStream::open(f.path(), &decl())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(
            rows,
            vec![Instance::new(vec![Value::Num(0.5), Value::Cat(1)], vec![2.0])]
        );
    }

    #[test]
    fn lenient_numeric_column() {
        let mut d = decl();
        d.features[0].parse_errors_as_missing = true;
        let f = write("a,b,y\nabc,lo,1\n");
        let rows: Vec<_> = CsvStream::open(f.path(), &d).unwrap().map(Result::unwrap).collect();
        assert_eq!(rows[0].features[0], Value::Missing);
    }

    #[test]
    fn rereading_is_deterministic() {
        let f = write("a,b,y\n1,lo,2\n3,hi,4\n");
        let a: Vec<_> = CsvStream::open(f.path(), &decl())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        let b: Vec<_> = CsvStream::open(f.path(), &decl())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn declaration_round_trips_through_toml() {
        let d = decl();
        let back: SchemaDecl = toml::from_str(&d.to_toml()).unwrap();
        assert_eq!(back, d);
        assert_eq!(d.schema().unwrap().n_features(), 2);
    }
}
