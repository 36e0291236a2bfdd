//! Experiment configuration, read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qht_core::simulate::StateSpec;
use qht_core::{GammaMixtureConfig, McmcConfig, NoiseModel, WilsonPriorConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateSpec,
    pub data: DataConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub mcmc: McmcSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub grid: GridConfig,
    /// Named overrides selected with `--profile`.
    #[serde(default)]
    pub profiles: BTreeMap<String, Profile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n: usize,
    pub eta: f64,
    #[serde(default = "default_data_seed")]
    pub seed: u64,
}

fn default_data_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    #[default]
    Wilson,
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    pub wilson: WilsonPriorConfig,
    pub mixture: GammaMixtureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub seed: u64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub step_amplitude: f64,
    pub step_phase: f64,
    pub step_location: f64,
    pub step_shell: f64,
    pub z_move_prob: f64,
    pub target_acceptance: f64,
    pub adapt: bool,
}

impl Default for McmcSection {
    fn default() -> Self {
        let d = McmcConfig::default();
        Self {
            seed: 11,
            n_iter: d.n_iter,
            burn_in: d.burn_in,
            step_amplitude: d.step_amplitude,
            step_phase: d.step_phase,
            step_location: d.step_location,
            step_shell: d.step_shell,
            z_move_prob: d.z_move_prob,
            target_acceptance: d.target_acceptance,
            adapt: d.adapt,
        }
    }
}

impl McmcSection {
    pub fn sampler(&self) -> McmcConfig {
        McmcConfig {
            n_iter: self.n_iter,
            burn_in: self.burn_in,
            step_amplitude: self.step_amplitude,
            step_phase: self.step_phase,
            step_location: self.step_location,
            step_shell: self.step_shell,
            z_move_prob: self.z_move_prob,
            target_acceptance: self.target_acceptance,
            adapt: self.adapt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Evaluation grids for the exported summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
    pub x_half_width: f64,
    pub x_points: usize,
    pub thetas: Vec<f64>,
    pub band_level: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            points: 161,
            x_half_width: 5.0,
            x_points: 201,
            thetas: vec![0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2, 3.0 * std::f64::consts::FRAC_PI_4],
            band_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    pub n: Option<usize>,
    pub n_iter: Option<usize>,
    pub burn_in: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.output.dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn apply_profile(&mut self, name: &str) -> Result<()> {
        let p = self
            .profiles
            .get(name)
            .cloned()
            .ok_or_else(|| CliError::Config(format!("unknown profile `{name}`")))?;
        if let Some(n) = p.n {
            self.data.n = n;
        }
        if let Some(v) = p.n_iter {
            self.mcmc.n_iter = v;
        }
        if let Some(v) = p.burn_in {
            self.mcmc.burn_in = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        NoiseModel::new(self.data.eta)?;
        self.prior.wilson.validate()?;
        self.prior.mixture.validate()?;
        self.mcmc.sampler().validate()?;
        let g = &self.grid;
        if !(g.half_width > 0.0 && g.x_half_width > 0.0) || g.points < 2 || g.x_points < 2 {
            return Err(CliError::Config("field `grid`: widths must be positive and point counts at least 2".into()));
        }
        if g.thetas.iter().any(|t| !(0.0..=std::f64::consts::PI).contains(t)) {
            return Err(CliError::Config("field `grid.thetas`: angles must lie in [0, pi]".into()));
        }
        if !(g.band_level > 0.0 && g.band_level <= 1.0) {
            return Err(CliError::Config("field `grid.band_level`: must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        Ok(NoiseModel::new(self.data.eta)?)
    }
}
