//! Run configuration file.
//!
//! TOML. Relative paths resolve against the directory holding the config
//! file. Command-line flags override the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skucast::features::SeasonWindows;
use skucast::model::Hyperparameters;
use skucast::tuning::CvGeometry;
use skucast::{presets, SkuId};

use crate::InputError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub sales: Option<PathBuf>,
    pub covid: Option<PathBuf>,
    pub holidays: Option<PathBuf>,
    /// Future COVID averages that replace the projected columns.
    pub scenario: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Hyperparameters for a SKU: a shipped preset by name, or inline values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresetRef {
    Named(String),
    Inline(Hyperparameters),
}

impl PresetRef {
    pub fn resolve(&self) -> anyhow::Result<Hyperparameters> {
        match self {
            PresetRef::Named(name) => Ok(presets::by_name(name)?),
            PresetRef::Inline(hp) => {
                hp.validate()?;
                Ok(*hp)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Forecast horizon in days.
    pub horizon: usize,
    /// Central interval probability.
    pub level: f64,
    /// Monte-Carlo draws per interval.
    pub samples: usize,
    /// Tuning trials.
    pub budget: usize,
    pub paths: Paths,
    pub cv: CvGeometry,
    pub windows: SeasonWindows,
    pub presets: BTreeMap<SkuId, PresetRef>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            horizon: 90,
            level: 0.8,
            samples: 1000,
            budget: 40,
            paths: Paths::default(),
            cv: CvGeometry::default(),
            windows: SeasonWindows::default(),
            presets: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, InputError> {
        toml::from_str(text).map_err(|e| InputError(format!("config: {e}")))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Read a config file, resolving its relative paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.paths;
        for slot in [&mut p.sales, &mut p.covid, &mut p.holidays, &mut p.scenario, &mut p.checkpoint, &mut p.output_dir]
        {
            if let Some(rel) = slot.as_mut() {
                if rel.is_relative() {
                    *rel = base.join(&*rel);
                }
            }
        }
        Ok(cfg)
    }

    /// Hyperparameters configured for `sku`; a shipped preset with the same
    /// name as the SKU, or the library defaults.
    pub fn hyperparameters(&self, sku: &SkuId) -> anyhow::Result<Hyperparameters> {
        match self.presets.get(sku) {
            Some(p) => p.resolve(),
            None => Ok(presets::by_name(sku.as_str()).unwrap_or_default()),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// The config at `path`, or defaults.
pub fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}
