//! The `run` configuration document.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stacktree::eval::PrequentialConfig;
use stacktree::split::HoeffdingParams;
use stacktree::{GeneratorSpec, LearnerVariant, TreeConfig, UpdateSign};

use crate::Failure;

/// Tree hyperparameters shared by every cell; variant and seed vary per cell.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSettings {
    pub delta: f64,
    pub tau: f64,
    pub grace_period: u64,
    pub learning_rate: f64,
    pub update_sign: UpdateSign,
}

impl Default for TreeSettings {
    fn default() -> Self {
        let base = TreeConfig::default();
        Self {
            delta: base.hoeffding.delta,
            tau: base.hoeffding.tau,
            grace_period: base.hoeffding.grace_period,
            learning_rate: base.learning_rate,
            update_sign: base.update_sign,
        }
    }
}

impl TreeSettings {
    pub fn tree_config(&self, variant: LearnerVariant, seed: u64) -> TreeConfig {
        TreeConfig {
            variant,
            hoeffding: HoeffdingParams {
                delta: self.delta,
                tau: self.tau,
                grace_period: self.grace_period,
            },
            learning_rate: self.learning_rate,
            update_sign: self.update_sign,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    /// Synthetic stream; its seed is replaced by each run's seed.
    Generator { generator: GeneratorSpec },
    /// Exported CSV plus its schema declaration, relative to the config file.
    Csv { csv: PathBuf, schema: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Dataset {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "all_variants", deserialize_with = "variant_names")]
    pub variants: Vec<LearnerVariant>,
    /// First run seed; later repetitions count up from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tree: TreeSettings,
    #[serde(default)]
    pub prequential: PrequentialConfig,
    pub datasets: Vec<Dataset>,
}

fn all_variants() -> Vec<LearnerVariant> {
    LearnerVariant::ALL.to_vec()
}

/// Accepts keys (`sstht_adaptive`) as well as labels (`SST-HT_Adaptive`).
fn variant_names<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Vec<LearnerVariant>, D::Error> {
    Vec::<String>::deserialize(de)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    /// Parses and validates `path`; relative CSV paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut config.datasets {
            if let DatasetSource::Csv { csv, schema } = &mut d.source {
                *csv = base.join(&*csv);
                *schema = base.join(&*schema);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let usage = |e: stacktree::Error| Failure::usage(e.to_string());
        if self.datasets.is_empty() {
            return Err(Failure::usage("config declares no [[datasets]]"));
        }
        if self.variants.is_empty() {
            return Err(Failure::usage("config selects no variants"));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Failure::usage(format!("dataset `{}` is declared twice", w[0])));
        }
        if let Some(d) = self.datasets.iter().find(|d| !is_safe_name(&d.name)) {
            return Err(Failure::usage(format!(
                "dataset name `{}` must be non-empty and use only letters, digits, `-`, `_` or `.`",
                d.name
            )));
        }
        let mut variants = self.variants.clone();
        variants.sort_unstable();
        variants.dedup();
        if variants.len() != self.variants.len() {
            return Err(Failure::usage("a variant is listed twice"));
        }
        self.tree
            .tree_config(self.variants[0], self.seed)
            .validate()
            .map_err(usage)?;
        self.prequential.validate().map_err(usage)?;
        for d in &self.datasets {
            if let DatasetSource::Generator { generator } = &d.source {
                generator.validate().map_err(usage)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn is_safe_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
