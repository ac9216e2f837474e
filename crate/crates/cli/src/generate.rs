//! `stacktree generate`: materialize a generator as CSV plus schema file.

use std::path::{Path, PathBuf};

use anyhow::Context;
use stacktree::schema::FeatureKind;
use stacktree::streams::SchemaDecl;
use stacktree::{GeneratorSpec, Value};

use crate::config::is_safe_name;
use crate::Failure;

/// Writes `<out>/<name>.csv` and `<out>/<name>.schema.toml`; returns both paths.
pub fn cmd_generate(spec: &GeneratorSpec, name: &str, out: &Path) -> Result<(PathBuf, PathBuf), Failure> {
    spec.validate().map_err(|e| Failure::usage(e.to_string()))?;
    if !is_safe_name(name) {
        return Err(Failure::usage(format!("`{name}` is not a usable file name")));
    }
    let schema = spec.schema();
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let csv_path = out.join(format!("{name}.csv"));
    let schema_path = out.join(format!("{name}.schema.toml"));

    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?;
    let header: Vec<&str> = schema
        .features()
        .iter()
        .map(|f| f.name.as_str())
        .chain(schema.targets().iter().map(String::as_str))
        .collect();
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for x in spec.stream()? {
        let x = x?;
        record.clear();
        for (spec, value) in schema.features().iter().zip(&x.features) {
            // `{}` on f64 prints the shortest string that parses back exactly
            record.push(match (value, &spec.kind) {
                (Value::Num(v), _) => v.to_string(),
                (Value::Cat(c), FeatureKind::Nominal { categories }) => categories[*c as usize].clone(),
                (Value::Cat(c), FeatureKind::Numeric) => c.to_string(),
                (Value::Missing, _) => String::new(),
            });
        }
        record.extend(x.targets.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    std::fs::write(&schema_path, SchemaDecl::from_schema(&schema).to_toml())
        .with_context(|| format!("cannot write {}", schema_path.display()))?;
    Ok((csv_path, schema_path))
}
