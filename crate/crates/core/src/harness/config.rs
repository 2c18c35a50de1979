//! Experiment configuration and the key/value config file.

use crate::error::{Error, Result};
use crate::reflect::ModelParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Consistency,
    Normality,
    Sequential,
    Girsanov,
    QueueDemo,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistency" => Ok(ExperimentKind::Consistency),
            "normality" => Ok(ExperimentKind::Normality),
            "sequential" => Ok(ExperimentKind::Sequential),
            "girsanov" => Ok(ExperimentKind::Girsanov),
            "queue-demo" => Ok(ExperimentKind::QueueDemo),
            _ => Err(Error::Config(format!("unknown experiment kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown format '{s}' (csv or json)"))),
        }
    }
}

/// One experiment. For sequential runs `horizon/steps` fixes the step and
/// the first simulated chunk, and the path is extended up to `max_horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelParams,
    pub horizon: f64,
    pub steps: usize,
    pub reps: usize,
    pub seed: u64,
    pub h_level: Option<f64>,
    pub max_horizon: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, model: ModelParams, horizon: f64, steps: usize, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            model,
            horizon,
            steps,
            reps,
            seed,
            h_level: None,
            max_horizon: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn sequential(model: ModelParams, h: f64, dt: f64, max_horizon: f64, reps: usize, seed: u64) -> Self {
        let chunk = 500;
        let mut c = ExperimentConfig::new(ExperimentKind::Sequential, model, dt * chunk as f64, chunk, reps, seed);
        c.h_level = Some(h);
        c.max_horizon = Some(max_horizon);
        c
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || self.steps < 2 {
            return Err(Error::Config("need horizon > 0 and steps ≥ 2".into()));
        }
        if self.kind == ExperimentKind::Sequential {
            match (self.h_level, self.max_horizon) {
                (Some(h), Some(t)) if h > 0.0 && t > 0.0 && h.is_finite() && t.is_finite() => {}
                _ => return Err(Error::Config("sequential runs need h-level > 0 and max-horizon > 0".into())),
            }
        }
        Ok(())
    }
}

/// Flat key/value file mirroring the CLI flags (TOML, or JSON by extension).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<ExperimentKind>,
    pub hurst: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub barrier: Option<f64>,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub reps: Option<usize>,
    pub h_level: Option<f64>,
    pub max_horizon: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
    }

    pub fn parse(text: &str, json: bool) -> Result<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            kind: over.kind.or(self.kind),
            hurst: over.hurst.or(self.hurst),
            alpha: over.alpha.or(self.alpha),
            sigma: over.sigma.or(self.sigma),
            barrier: over.barrier.or(self.barrier),
            x0: over.x0.or(self.x0),
            horizon: over.horizon.or(self.horizon),
            steps: over.steps.or(self.steps),
            reps: over.reps.or(self.reps),
            h_level: over.h_level.or(self.h_level),
            max_horizon: over.max_horizon.or(self.max_horizon),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
        }
    }

    /// Fills gaps with defaults and validates.
    pub fn resolve(&self, default_kind: ExperimentKind) -> Result<ExperimentConfig> {
        let model = ModelParams {
            alpha: self.alpha.unwrap_or(1.0),
            sigma: self.sigma.unwrap_or(1.0),
            barrier: self.barrier.unwrap_or(0.0),
            x0: self.x0.unwrap_or(1.0),
            hurst: self.hurst.unwrap_or(0.7),
        };
        let kind = self.kind.unwrap_or(default_kind);
        let cfg = ExperimentConfig {
            kind,
            model,
            horizon: self.horizon.unwrap_or(10.0),
            steps: self.steps.unwrap_or(1000),
            reps: self.reps.unwrap_or(100),
            seed: self.seed.unwrap_or(0),
            h_level: self.h_level.or((kind == ExperimentKind::Sequential).then_some(50.0)),
            max_horizon: self.max_horizon.or((kind == ExperimentKind::Sequential).then_some(2000.0)),
            out: self.out.clone(),
            format: self.format.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
