//! JSON run configuration. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use homoclinic_core::scan::GridSpec;
use homoclinic_core::{NonlinearitySpec, ShotConfig, Sigma, StepControl};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub shot: ShotFields,
    pub grid: Option<GridSpec>,
    pub output_dir: Option<PathBuf>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub k: Option<usize>,
    pub sigma: Option<Sigma>,
}

/// Shot settings as they appear in the file; missing fields take defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotFields {
    pub epsilon: Option<f64>,
    pub t_max: Option<f64>,
    pub r_max: Option<f64>,
    pub k_max: Option<usize>,
    pub ctrl: Option<StepControl>,
}

impl ShotFields {
    pub fn resolve(&self) -> ShotConfig {
        let d = ShotConfig::default();
        ShotConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            sigma: d.sigma,
            t_max: self.t_max.unwrap_or(d.t_max),
            r_max: self.r_max.unwrap_or(d.r_max),
            k_max: self.k_max.unwrap_or(d.k_max),
            ctrl: self.ctrl.unwrap_or(d.ctrl),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec, CliError> {
        self.nonlinearity
            .clone()
            .ok_or_else(|| CliError::Config("config needs a \"nonlinearity\"".into()))
    }

    pub fn require_a(&self) -> Result<f64, CliError> {
        self.a.ok_or_else(|| CliError::Config("parameter a is required (--a)".into()))
    }

    pub fn require_b(&self) -> Result<f64, CliError> {
        self.b.ok_or_else(|| CliError::Config("parameter b is required (--b)".into()))
    }

    pub fn require_grid(&self) -> Result<GridSpec, CliError> {
        self.grid
            .ok_or_else(|| CliError::Config("a \"grid\" is required for this command".into()))
    }

    /// Checks every present child before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.shot
            .resolve()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        for (name, v) in [("a", self.a), ("b", self.b)] {
            if matches!(v, Some(x) if !x.is_finite()) {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        if let Some([lo, hi]) = self.bracket {
            if !(lo.is_finite() && hi.is_finite()) || lo == hi {
                return Err(CliError::Config("bracket must be two distinct finite values".into()));
            }
        }
        if self.k == Some(0) {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}
