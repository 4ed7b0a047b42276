//! Random single-gateway deployments with log-distance path loss and
//! Rayleigh fading.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::radio::RadioProfile;
use crate::rng::{self, SimRng};

/// How fading draws relate across channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingModel {
    /// One independent draw per (channel, node).
    #[default]
    Independent,
    /// One draw per node, repeated on every channel.
    Shared,
}

impl FadingModel {
    pub fn name(self) -> &'static str {
        match self {
            FadingModel::Independent => "independent",
            FadingModel::Shared => "shared",
        }
    }
}

impl FromStr for FadingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "independent" => Ok(FadingModel::Independent),
            "shared" => Ok(FadingModel::Shared),
            other => Err(Error::Config(format!(
                "unknown fading model {other:?}; expected independent or shared"
            ))),
        }
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub node_count: usize,
    pub radius_m: f64,
    pub channel_count: usize,
    pub time_slot_count: usize,
    pub path_loss_exponent: f64,
    pub path_loss_constant: f64,
    /// Distances are clamped to at least this value to stay clear of the
    /// `d^-beta` pole at the gateway.
    pub min_distance_m: f64,
    pub fading: FadingModel,
    pub rng_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            node_count: 100,
            radius_m: 1000.0,
            channel_count: 8,
            time_slot_count: 6,
            path_loss_exponent: 3.5,
            path_loss_constant: 1.0,
            min_distance_m: 1.0,
            fading: FadingModel::Independent,
            rng_seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::Config("node_count must be at least 1".into()));
        }
        if self.channel_count == 0 {
            return Err(Error::Config("channel_count must be at least 1".into()));
        }
        if self.time_slot_count == 0 {
            return Err(Error::Config("time_slot_count must be at least 1".into()));
        }
        if !(self.radius_m > 0.0) || !self.radius_m.is_finite() {
            return Err(Error::Config(format!(
                "radius must be positive, got {}",
                self.radius_m
            )));
        }
        if !(self.min_distance_m > 0.0) || self.min_distance_m > self.radius_m {
            return Err(Error::Config(format!(
                "min_distance_m must lie in (0, radius], got {}",
                self.min_distance_m
            )));
        }
        if !(self.path_loss_constant > 0.0) {
            return Err(Error::Config(format!(
                "path_loss_constant must be positive, got {}",
                self.path_loss_constant
            )));
        }
        if !self.path_loss_exponent.is_finite() || self.path_loss_exponent <= 0.0 {
            return Err(Error::Config(format!(
                "path_loss_exponent must be positive, got {}",
                self.path_loss_exponent
            )));
        }
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(3.0..=5.0).contains(&self.path_loss_exponent) {
            out.push(format!(
                "path_loss_exponent {} lies outside the shadowed-urban range [3, 5]",
                self.path_loss_exponent
            ));
        }
        out
    }
}

/// One network instance: node distances, fading draws and the resulting
/// per-channel gains. Matrices are stored channel-major (`[k][n]`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deployment {
    distances_m: Vec<f64>,
    fading: Vec<Vec<f64>>,
    gains: Vec<Vec<f64>>,
    normalized: Vec<Vec<f64>>,
    noise_mw: f64,
}

pub fn path_gain(distance_m: f64, fading: f64, exponent: f64, constant: f64) -> f64 {
    constant * fading * distance_m.powf(-exponent)
}

/// Draws a deployment: positions uniform over the disc, unit-mean
/// exponential power fading per (channel, node) or per node, depending on
/// [`NetworkConfig::fading`].
pub fn generate_deployment(config: &NetworkConfig, profile: &RadioProfile) -> Result<Deployment> {
    config.validate()?;
    let mut rng = rng::stream(config.rng_seed, rng::STREAM_DEPLOYMENT);
    let distances = sample_distances(&mut rng, config);
    let fading = match config.fading {
        FadingModel::Independent => (0..config.channel_count)
            .map(|_| (0..config.node_count).map(|_| rng.sample(Exp1)).collect())
            .collect(),
        FadingModel::Shared => {
            let row: Vec<f64> = (0..config.node_count).map(|_| rng.sample(Exp1)).collect();
            vec![row; config.channel_count]
        }
    };
    Deployment::from_parts(distances, fading, config, profile)
}

fn sample_distances(rng: &mut SimRng, config: &NetworkConfig) -> Vec<f64> {
    (0..config.node_count)
        .map(|_| {
            let u: f64 = rng.random();
            (config.radius_m * u.sqrt()).max(config.min_distance_m)
        })
        .collect()
}

impl Deployment {
    /// Builds a deployment from given distances and fading (`fading[k][n]`).
    pub fn from_parts(
        distances_m: Vec<f64>,
        fading: Vec<Vec<f64>>,
        config: &NetworkConfig,
        profile: &RadioProfile,
    ) -> Result<Self> {
        let n = distances_m.len();
        if n == 0 {
            return Err(Error::Config("deployment needs at least one node".into()));
        }
        if fading.is_empty() || fading.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!(
                "fading must be a non-empty K x {n} matrix"
            )));
        }
        if let Some(d) = distances_m.iter().find(|&&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::Config(format!("distance {d} is not positive")));
        }
        if let Some(h) = fading.iter().flatten().find(|&&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::Config(format!("fading draw {h} is not positive")));
        }
        let noise_mw = profile.noise_mw();
        let gains: Vec<Vec<f64>> = fading
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&distances_m)
                    .map(|(&h, &d)| {
                        path_gain(d, h, config.path_loss_exponent, config.path_loss_constant)
                    })
                    .collect()
            })
            .collect();
        let normalized = gains
            .iter()
            .map(|row| row.iter().map(|g| g / noise_mw).collect())
            .collect();
        Ok(Deployment {
            distances_m,
            fading,
            gains,
            normalized,
            noise_mw,
        })
    }

    pub fn node_count(&self) -> usize {
        self.distances_m.len()
    }

    pub fn channel_count(&self) -> usize {
        self.gains.len()
    }

    pub fn distances_m(&self) -> &[f64] {
        &self.distances_m
    }

    pub fn distance_m(&self, n: usize) -> f64 {
        self.distances_m[n]
    }

    pub fn fading(&self) -> &[Vec<f64>] {
        &self.fading
    }

    pub fn gains(&self) -> &[Vec<f64>] {
        &self.gains
    }

    pub fn gain(&self, k: usize, n: usize) -> f64 {
        self.gains[k][n]
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    /// `gamma[k][n] = g[k][n] / sigma^2`, with bounds checking.
    pub fn normalized_gain(&self, k: usize, n: usize) -> Result<f64> {
        self.normalized
            .get(k)
            .and_then(|row| row.get(n))
            .copied()
            .ok_or_else(|| {
                Error::Usage(format!(
                    "gain index (channel {k}, node {n}) outside {} x {}",
                    self.channel_count(),
                    self.node_count()
                ))
            })
    }

    pub fn normalized_gains(&self) -> &[Vec<f64>] {
        &self.normalized
    }
}
