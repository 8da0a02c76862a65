//! Declarative run configuration: one TOML document whose values any
//! command-line flag can override. The resolved settings of every run are
//! echoed into the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use namefair_core::corpus::ColumnMap;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub api: ApiSection,
    pub census: CensusSection,
    pub audit: AuditSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    pub max_malformed_fraction: Option<f64>,
    /// canonical field -> column name in the file
    pub columns: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub family: Option<String>,
    pub ratio: Option<f64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub embed_dim: Option<usize>,
    pub max_len: Option<usize>,
    pub ngram_min: Option<usize>,
    pub ngram_max: Option<usize>,
    pub min_df: Option<u32>,
    pub balance: Option<bool>,
    pub with_state: Option<bool>,
    pub class_weighting: Option<bool>,
    pub patience: Option<usize>,
    pub validation_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApiSection {
    pub service: Option<String>,
    pub base_url: Option<String>,
    /// Name of the environment variable holding the credential; the
    /// credential itself never lives in config files.
    pub credential_env: Option<String>,
    pub daily_quota: Option<u32>,
    pub cache: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub period: Option<String>,
    pub cumulative: Option<bool>,
    pub post_count_basis: Option<bool>,
    pub provenance: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parse config {}", path.display()))
    }

    pub fn load_opt(path: Option<&PathBuf>) -> Result<RunConfig> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

/// Builds a [`ColumnMap`] from `field=column` pairs (flags) layered over a
/// config-file map. Unknown canonical fields are rejected.
pub fn column_map(
    file_map: Option<&BTreeMap<String, String>>,
    flag_pairs: &[String],
) -> Result<ColumnMap> {
    let mut merged: BTreeMap<String, String> = file_map.cloned().unwrap_or_default();
    for pair in flag_pairs {
        let (field, column) = pair
            .split_once('=')
            .with_context(|| format!("--map expects FIELD=COLUMN, got {pair:?}"))?;
        merged.insert(field.to_string(), column.to_string());
    }
    let mut map = ColumnMap::default();
    for (field, column) in merged {
        let slot = match field.as_str() {
            "name" => {
                map.name = column;
                continue;
            }
            "gender" => &mut map.gender,
            "caste" => &mut map.caste,
            "year" => &mut map.year,
            "state" => &mut map.state,
            "rank" => &mut map.rank,
            "followers" => &mut map.followers,
            "posts" => &mut map.posts,
            "created_at" => &mut map.created_at,
            other => bail!("unknown corpus field {other:?} in column mapping"),
        };
        *slot = if column.is_empty() { None } else { Some(column) };
    }
    Ok(map)
}
