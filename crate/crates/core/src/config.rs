//! Run-configuration files: JSON schemas for the solver and analysis runs.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::energy::LyapunovParams;
use crate::error::{Error, Result};
use crate::solver::{InitProfile, SolverConfig};
use crate::system::EulerMaxwellParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(default = "default_dims")]
    pub dims: usize,
}

fn default_dims() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitConfig {
    pub profile: InitProfile,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
}

fn default_sample_dt() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv_path: Option<String>,
    #[serde(default)]
    pub json_path: Option<String>,
    #[serde(default = "default_subsample")]
    pub spectra_subsample: usize,
}

fn default_subsample() -> usize {
    8
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv_path: None,
            json_path: None,
            spectra_subsample: default_subsample(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub params: EulerMaxwellParams,
    pub init: InitConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub linear: bool,
    #[serde(default)]
    pub lyapunov: Option<LyapunovParams>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.dims != 3 {
            return Err(Error::Config(
                "the solver runs on three-dimensional grids only".into(),
            ));
        }
        self.solver_config()?.validate()
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        Ok(SolverConfig {
            grid_n: self.grid.n,
            box_len: self.grid.l,
            params: self.params.clone(),
            profile: self.init.profile,
            epsilon: self.init.epsilon,
            seed: self.init.seed,
            t_end: self.time.t_end,
            dt: self.time.dt,
            sample_dt: self.time.sample_dt,
            linear: self.linear,
            spectra_subsample: self.outputs.spectra_subsample,
            lyapunov: self.lyapunov,
        })
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
