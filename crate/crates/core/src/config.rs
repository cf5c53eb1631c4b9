//! Run configuration: one TOML document holding every setting a command
//! needs. All fields have defaults, so an empty file is a valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contexts::ContextSets;
use crate::data::{ColumnSchema, HolidayCalendar};
use crate::error::{Error, Result};
use crate::evaluation::{BaselineKind, SynthConfig};
use crate::learning::FitConfig;
use crate::model::{default_priors, ModelConfig, PriorSpec};

pub const CONFIG_VERSION: u32 = 1;

/// Default certainty `α` of the built-in contexts.
pub const DEFAULT_CERTAINTY: f64 = 0.9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathSettings {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSettings {
    /// Forecast steps per window.
    pub horizon: usize,
    /// Steps between window origins.
    pub stride: usize,
    /// Seed of the wrong-context shuffle.
    pub variant_seed: u64,
    pub baselines: Vec<BaselineKind>,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self { horizon: 12, stride: 12, variant_seed: 1, baselines: BaselineKind::defaults().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub version: u32,
    pub paths: PathSettings,
    pub columns: ColumnSchema,
    /// Dates treated like weekend days.
    pub holidays: HolidayCalendar,
    pub model: ModelConfig,
    pub contexts: ContextSets,
    pub priors: PriorSpec,
    pub fit: FitConfig,
    pub benchmark: BenchmarkSettings,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            paths: PathSettings::default(),
            columns: ColumnSchema::default(),
            holidays: HolidayCalendar::default(),
            model: ModelConfig::default(),
            contexts: ContextSets::defaults(DEFAULT_CERTAINTY),
            priors: default_priors(),
            fit: FitConfig::default(),
            benchmark: BenchmarkSettings::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// Applies one seed to fitting, generation and the context shuffle.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fit.seed = seed;
        self.synth.seed = seed;
        self.benchmark.variant_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidConfig(format!(
                "config.version is {} but this build reads version {CONFIG_VERSION}",
                self.version
            )));
        }
        self.model.validate()?;
        self.contexts.validate()?;
        self.priors.validate(&self.contexts)?;
        self.fit.validate()?;
        self.synth.validate()?;
        if self.benchmark.horizon == 0 || self.benchmark.stride == 0 {
            return Err(Error::InvalidConfig("benchmark.horizon and benchmark.stride must be >= 1".into()));
        }
        for b in &self.benchmark.baselines {
            match *b {
                BaselineKind::Ridge { strength } | BaselineKind::Lasso { strength } if !(strength >= 0.0) => {
                    return Err(Error::InvalidConfig("benchmark.baselines strength must be non-negative".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
