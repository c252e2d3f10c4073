use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ridgenet::estimators::{PPConfig, SmoothConfig};
use ridgenet::simbench::{BenchConfig, RateConfig};
use serde::{Deserialize, Serialize};

pub const RUN_SCHEMA: u32 = 1;

/// Largest feature count `fit` accepts before refusing.
pub const DEFAULT_MAX_FEATURES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Fit,
    Predict,
    Bench,
    Rate,
    ApproxCheck,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Smooth,
    #[default]
    Projection,
}

/// Everything one invocation needs. Loaded from JSON, then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub smooth: SmoothConfig,
    #[serde(default)]
    pub projection: PPConfig,
    /// Benchmark settings; defaults to the full or quick preset.
    #[serde(default)]
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub rate: Option<RateConfig>,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub quick: bool,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
}

fn default_max_features() -> usize {
    DEFAULT_MAX_FEATURES
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: RUN_SCHEMA,
            command: None,
            estimator: EstimatorKind::default(),
            smooth: SmoothConfig::default(),
            projection: PPConfig::default(),
            bench: None,
            rate: None,
            input: None,
            model: None,
            output: None,
            seed: None,
            workers: None,
            quick: false,
            max_features: DEFAULT_MAX_FEATURES,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.schema != RUN_SCHEMA {
            bail!(
                "config {} has schema {}, expected {RUN_SCHEMA}",
                path.display(),
                cfg.schema
            );
        }
        Ok(cfg)
    }

    /// Checks the fields `command` needs before any work starts.
    pub fn validate(&self) -> Result<()> {
        let Some(command) = self.command else {
            bail!("no command given");
        };
        if self.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        let need = |field: &Option<PathBuf>, name: &str| -> Result<()> {
            if field.is_none() {
                bail!("{} requires --{name}", command_label(command));
            }
            Ok(())
        };
        match command {
            CommandName::Fit => {
                need(&self.input, "input")?;
                need(&self.model, "model")?;
            }
            CommandName::Predict => {
                need(&self.input, "input")?;
                need(&self.model, "model")?;
            }
            CommandName::Bench => self.bench_config().validate()?,
            CommandName::Rate | CommandName::ApproxCheck => {}
        }
        Ok(())
    }

    pub fn bench_config(&self) -> BenchConfig {
        let seed = self.seed.unwrap_or(0);
        let mut c = match &self.bench {
            Some(b) => b.clone(),
            None if self.quick => BenchConfig::quick(seed),
            None => BenchConfig::full(seed),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }

    pub fn rate_config(&self) -> RateConfig {
        let mut c = self.rate.clone().unwrap_or_default();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }

    pub fn projection_config(&self) -> PPConfig {
        let mut c = self.projection.clone();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

pub fn command_label(c: CommandName) -> &'static str {
    match c {
        CommandName::Fit => "fit",
        CommandName::Predict => "predict",
        CommandName::Bench => "bench",
        CommandName::Rate => "rate",
        CommandName::ApproxCheck => "approx-check",
    }
}
