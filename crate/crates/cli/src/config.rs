//! Experiment configuration: JSON schema and the three bundled presets.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gibbsel_core::{LatticeShape, ModelSpec, StatSubset};

/// Table sizes per role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Master seeds per role; the three must be distinct so the tables are
/// independent streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSeeds {
    pub train: u64,
    pub valid: u64,
    pub test: u64,
}

/// Full description of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub height: usize,
    pub width: usize,
    /// Swendsen-Wang sweeps per simulated field; `null` uses the default
    /// formula for the lattice size.
    #[serde(default)]
    pub sweeps: Option<usize>,
    pub models: Vec<ModelSpec>,
    pub sizes: TableSizes,
    pub seeds: TableSeeds,
    /// Statistic subsets compared by the run.
    pub subsets: Vec<StatSubset>,
    /// Calibration grid; `null` uses the default log-spaced grid.
    #[serde(default)]
    pub k_grid: Option<Vec<usize>>,
    /// Ancillary coordinates appended to the 2D statistics for the
    /// dimension study; 0 disables it.
    #[serde(default)]
    pub ancillary: usize,
    /// Resolution of emitted local-error surface grids.
    #[serde(default = "default_surface_grid")]
    pub surface_grid: usize,
}

fn default_surface_grid() -> usize {
    64
}

impl ExperimentConfig {
    pub fn shape(&self) -> Result<LatticeShape> {
        LatticeShape::new(self.height, self.width).context("invalid lattice shape")
    }

    pub fn sweeps_or_default(&self) -> usize {
        self.sweeps
            .unwrap_or_else(|| gibbsel_core::default_sweeps(LatticeShape::new(self.height.max(1), self.width.max(1)).expect("nonzero")))
    }

    pub fn validate(&self) -> Result<()> {
        self.shape()?;
        if self.models.is_empty() {
            bail!("config has no models");
        }
        for (i, spec) in self.models.iter().enumerate() {
            spec.validate().with_context(|| format!("model {}", i + 1))?;
        }
        let weight_sum: f64 = self.models.iter().map(|m| m.weight).sum();
        if (weight_sum - 1.0).abs() > 1e-9 {
            bail!("model prior weights sum to {weight_sum}, not 1");
        }
        if self.sizes.train == 0 || self.sizes.valid == 0 || self.sizes.test == 0 {
            bail!("table sizes must be at least 1");
        }
        if self.seeds.train == self.seeds.valid
            || self.seeds.train == self.seeds.test
            || self.seeds.valid == self.seeds.test
        {
            bail!("the three table seeds must be distinct");
        }
        if self.subsets.is_empty() {
            bail!("config selects no statistic subsets");
        }
        if let Some(grid) = &self.k_grid {
            if grid.is_empty() {
                bail!("k grid is empty");
            }
            if grid.iter().any(|&k| k == 0) {
                bail!("k grid entries must be positive");
            }
        }
        if self.surface_grid < 2 {
            bail!("surface grid resolution must be at least 2");
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }
}

/// The bundled presets, compiled into the binary and also shipped as files.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "exp1" => Some(include_str!("../presets/exp1.json")),
        "exp2" => Some(include_str!("../presets/exp2.json")),
        "exp3" => Some(include_str!("../presets/exp3.json")),
        _ => None,
    }
}

/// Load a config either from a bundled preset name or a file path.
pub fn load_config(spec: &str) -> Result<ExperimentConfig> {
    if let Some(text) = preset(spec) {
        let config: ExperimentConfig =
            serde_json::from_str(text).context("parsing bundled preset")?;
        config.validate()?;
        return Ok(config);
    }
    ExperimentConfig::load(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_presets_parse_and_validate() {
        for name in ["exp1", "exp2", "exp3"] {
            let config = load_config(name).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            assert_eq!(config.name, name);
            assert_eq!(config.models.len(), 2);
        }
    }

    #[test]
    fn preset_priors_are_the_published_ones() {
        use gibbsel_core::{GraphKind, NoisePrior, ParamPrior};

        let exp1 = load_config("exp1").unwrap();
        assert_eq!(exp1.models[0].graph, GraphKind::G4);
        assert_eq!(exp1.models[0].beta.as_pair(), (0.0, 1.0));
        assert_eq!(exp1.models[1].beta.as_pair(), (0.0, 0.35));
        for m in &exp1.models {
            assert_eq!(m.num_colors, 2);
            assert_eq!(m.weight, 0.5);
            match m.noise {
                NoisePrior::Switch { alpha } => assert_eq!(alpha.as_pair(), (0.42, 2.3)),
                _ => panic!("exp1 uses the switch channel"),
            }
        }

        let exp2 = load_config("exp2").unwrap();
        assert_eq!(exp2.models[0].beta.as_pair(), (0.0, 2.4));
        assert_eq!(exp2.models[1].beta.as_pair(), (0.0, 1.0));
        for m in &exp2.models {
            assert_eq!(m.num_colors, 16);
            match m.noise {
                NoisePrior::Switch { alpha } => assert_eq!(alpha.as_pair(), (1.78, 4.8)),
                _ => panic!("exp2 uses the switch channel"),
            }
        }

        let exp3 = load_config("exp3").unwrap();
        assert_eq!(exp3.models[0].beta.as_pair(), (0.0, 1.0));
        assert_eq!(exp3.models[1].beta.as_pair(), (0.0, 0.35));
        for m in &exp3.models {
            assert_eq!(m.num_colors, 2);
            match m.noise {
                NoisePrior::Gaussian { sigma } => {
                    assert_eq!(sigma, ParamPrior::Fixed(0.39));
                }
                _ => panic!("exp3 uses the gaussian channel"),
            }
        }
    }

    #[test]
    fn duplicate_seeds_fail_validation() {
        let mut config = load_config("exp1").unwrap();
        config.seeds.valid = config.seeds.train;
        assert!(config.validate().is_err());
    }
}
