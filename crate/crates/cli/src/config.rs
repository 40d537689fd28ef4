//! BP settings: built-in defaults, overridden by a TOML config file,
//! overridden by command-line flags. The config file is `bplp.toml` in the
//! working directory unless `BPLP_CONFIG` names another path.

use bplp_core::{BpConfig, InitMode};
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

pub const CONFIG_ENV: &str = "BPLP_CONFIG";
pub const DEFAULT_CONFIG: &str = "bplp.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Uniform,
    Random,
}

/// Every field optional; unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub max_iters: Option<usize>,
    pub residual_tol: Option<f64>,
    pub tie_tol: Option<f64>,
    pub stable_window: Option<usize>,
    pub init: Option<InitKind>,
    pub init_range: Option<f64>,
    pub seed: Option<u64>,
    pub parallel: Option<bool>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad config {path}: {message}")]
    Parse { path: String, message: String },
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse { path: shown, message: e.to_string() })
    }

    /// The file named by `BPLP_CONFIG`, else `bplp.toml` if present, else
    /// empty settings.
    pub fn from_env() -> Result<Self, ConfigError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ if Path::new(DEFAULT_CONFIG).is_file() => Self::load(Path::new(DEFAULT_CONFIG)),
            _ => Ok(Settings::default()),
        }
    }

    /// `self` wins wherever it is set.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            max_iters: self.max_iters.or(base.max_iters),
            residual_tol: self.residual_tol.or(base.residual_tol),
            tie_tol: self.tie_tol.or(base.tie_tol),
            stable_window: self.stable_window.or(base.stable_window),
            init: self.init.or(base.init),
            init_range: self.init_range.or(base.init_range),
            seed: self.seed.or(base.seed),
            parallel: self.parallel.or(base.parallel),
        }
    }

    pub fn to_bp_config(&self) -> BpConfig {
        let d = BpConfig::default();
        let init = match self.init.unwrap_or(InitKind::Uniform) {
            InitKind::Uniform => InitMode::Uniform,
            InitKind::Random => InitMode::RandomSeeded {
                seed: self.seed.unwrap_or(0),
                range: self.init_range.unwrap_or(1.0),
            },
        };
        BpConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            residual_tol: self.residual_tol.unwrap_or(d.residual_tol),
            tie_tol: self.tie_tol.or(d.tie_tol),
            stable_window: self.stable_window.unwrap_or(d.stable_window),
            init,
            record_trace: false,
            parallel: self.parallel.unwrap_or(d.parallel),
        }
    }
}
