//! Observation channels: independent per-site noise applied to a latent
//! discrete field, and the pointwise densities the exact oracle needs.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DiscreteField, LatticeShape};
use crate::rng::SimRng;

/// A noise channel with its parameters pinned.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    /// Keeps each color with probability `exp(a) / (exp(a) + (K-1) exp(-a))`,
    /// otherwise redraws uniformly among the other K-1 colors. K = 2 is the
    /// plain pixel-switch channel.
    Switch { alpha: f64, num_colors: usize },
    /// Adds centered Gaussian noise with the given standard deviation to the
    /// integer color values.
    Gaussian { sigma: f64 },
}

/// One observed site value, discrete or continuous depending on the channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiteValue {
    Discrete(u8),
    Continuous(f64),
}

/// Probability of keeping the latent color under the switch channel.
pub fn switch_keep_probability(alpha: f64, num_colors: usize) -> f64 {
    let k1 = (num_colors - 1) as f64;
    alpha.exp() / (alpha.exp() + k1 * (-alpha).exp())
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Switch { alpha, num_colors } => {
                if num_colors < 2 {
                    return Err(Error::invalid(format!(
                        "switch channel needs at least 2 colors, got {num_colors}"
                    )));
                }
                if !alpha.is_finite() {
                    return Err(Error::invalid("switch alpha must be finite"));
                }
            }
            NoiseSpec::Gaussian { sigma } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::invalid(format!(
                        "gaussian sigma must be positive, got {sigma}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log density of one observed site value given the latent color.
    pub fn log_density(&self, observed: SiteValue, latent: u8) -> Result<f64> {
        self.validate()?;
        match (*self, observed) {
            (NoiseSpec::Switch { alpha, num_colors }, SiteValue::Discrete(y)) => {
                if (y as usize) >= num_colors || (latent as usize) >= num_colors {
                    return Err(Error::invalid("color out of range for switch channel"));
                }
                let agree = if y == latent { 1.0 } else { -1.0 };
                let norm = alpha.exp() + (num_colors - 1) as f64 * (-alpha).exp();
                Ok(alpha * agree - norm.ln())
            }
            (NoiseSpec::Gaussian { sigma }, SiteValue::Continuous(y)) => {
                let z = (y - latent as f64) / sigma;
                Ok(-0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln())
            }
            (NoiseSpec::Switch { .. }, SiteValue::Continuous(_)) => Err(Error::invalid(
                "switch channel observed a continuous value",
            )),
            (NoiseSpec::Gaussian { .. }, SiteValue::Discrete(_)) => Err(Error::invalid(
                "gaussian channel observed a discrete value",
            )),
        }
    }
}

/// Pass a field through the K-color switch channel. K is taken from the field.
pub fn apply_kcolor_noise(x: &DiscreteField, alpha: f64, rng: &mut SimRng) -> Result<DiscreteField> {
    let k = x.num_colors();
    NoiseSpec::Switch { alpha, num_colors: k }.validate()?;
    let keep = switch_keep_probability(alpha, k);
    let colors = x
        .colors()
        .iter()
        .map(|&c| {
            if rng.random::<f64>() < keep {
                c
            } else {
                // Uniform among the K-1 colors other than c.
                let draw = rng.random_range(0..k as u32 - 1) as u8;
                if draw >= c {
                    draw + 1
                } else {
                    draw
                }
            }
        })
        .collect();
    DiscreteField::new(x.shape(), k, colors)
}

/// Real-valued observations on a lattice, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousField {
    shape: LatticeShape,
    values: Vec<f64>,
}

impl ContinuousField {
    pub fn new(shape: LatticeShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.num_sites() {
            return Err(Error::invalid(format!(
                "value array has {} entries for a lattice of {} sites",
                values.len(),
                shape.num_sites()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("continuous field contains a non-finite value"));
        }
        Ok(ContinuousField { shape, values })
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Write as a CSV matrix: one row per lattice row, comma-separated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.values.chunks(self.shape.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in BufReader::new(input).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad CSV number `{tok}`")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let height = rows.len();
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Format("ragged CSV matrix".into()));
        }
        let shape = LatticeShape::new(height, width)?;
        ContinuousField::new(shape, rows.concat())
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        ContinuousField::read_csv(BufReader::new(file))
    }
}

/// Observe a field through homoscedastic Gaussian noise centered on the
/// integer color values.
pub fn apply_gaussian_noise(
    x: &DiscreteField,
    sigma: f64,
    rng: &mut SimRng,
) -> Result<ContinuousField> {
    NoiseSpec::Gaussian { sigma }.validate()?;
    let values = x
        .colors()
        .iter()
        .map(|&c| c as f64 + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ContinuousField::new(x.shape(), values)
}
