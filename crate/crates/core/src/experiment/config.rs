//! Experiment configuration and its flat `key = value` file format.
//!
//! Grammar, one setting per line:
//!
//! ```text
//! # comment
//! key = value          # trailing comments are allowed
//! list-key = a, b, c
//! ```
//!
//! Keys are case-sensitive; `-` and `_` are interchangeable. Later lines
//! override earlier ones, and command-line flags override the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::RankBy;
use crate::error::{Error, Result};
use crate::interference::ReceiverModel;
use crate::network::{FadingModel, NetworkConfig};
use crate::power::{OrderConstraint, PowerOptions};
use crate::radio::{RadioParams, RadioProfile};
use crate::time_alloc::TimeStrategy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelStrategy {
    RoundRobin,
    Random,
}

impl ChannelStrategy {
    pub fn name(self) -> &'static str {
        match self {
            ChannelStrategy::RoundRobin => "roundrobin",
            ChannelStrategy::Random => "random",
        }
    }
}

impl FromStr for ChannelStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roundrobin" | "round-robin" => Ok(ChannelStrategy::RoundRobin),
            "random" => Ok(ChannelStrategy::Random),
            _ => Err(Error::Config(format!(
                "unknown channel strategy {s:?} (expected roundrobin | random)"
            ))),
        }
    }
}

impl fmt::Display for ChannelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerStrategy {
    /// Every node at `p_max`.
    MaxPower,
    /// Per-channel max-min bisection.
    Optimal,
}

impl PowerStrategy {
    pub fn name(self) -> &'static str {
        match self {
            PowerStrategy::MaxPower => "max_power",
            PowerStrategy::Optimal => "optimal",
        }
    }
}

impl FromStr for PowerStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_power" | "max-power" | "max" => Ok(PowerStrategy::MaxPower),
            "optimal" => Ok(PowerStrategy::Optimal),
            _ => Err(Error::Config(format!(
                "unknown power strategy {s:?} (expected max_power | optimal)"
            ))),
        }
    }
}

impl fmt::Display for PowerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub node_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    pub channel_strategies: Vec<ChannelStrategy>,
    pub time_strategies: Vec<TimeStrategy>,
    pub power_strategies: Vec<PowerStrategy>,
    pub models: Vec<ReceiverModel>,
    pub radius_m: f64,
    pub channel_count: usize,
    pub path_loss_exponent: f64,
    pub path_loss_constant: f64,
    pub min_distance_m: f64,
    pub radio: RadioParams,
    pub rank_by: RankBy,
    pub order: OrderConstraint,
    pub fading: FadingModel,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            node_counts: vec![100, 200, 300, 400, 500],
            trials: 20,
            seed: 1,
            workers: 0,
            channel_strategies: vec![ChannelStrategy::RoundRobin],
            time_strategies: vec![TimeStrategy::Unfair],
            power_strategies: vec![PowerStrategy::MaxPower],
            models: vec![ReceiverModel::NomaSic],
            radius_m: 1000.0,
            channel_count: 8,
            path_loss_exponent: 3.5,
            path_loss_constant: 1.0,
            min_distance_m: 1.0,
            radio: RadioParams::default(),
            rank_by: RankBy::Mean,
            order: OrderConstraint::Off,
            fading: FadingModel::Independent,
            epsilon: 1e-6,
            out: None,
        }
    }
}

/// Every key understood by [`ExperimentConfig::set`].
pub const KEYS: &[&str] = &[
    "nodes",
    "trials",
    "seed",
    "workers",
    "channel-strategy",
    "time-strategy",
    "power-strategy",
    "models",
    "out",
    "radius",
    "channels",
    "path-loss-exponent",
    "path-loss-constant",
    "min-distance",
    "bandwidth",
    "noise-figure",
    "sf",
    "demod-snr",
    "payload-bits",
    "p-min-dbm",
    "p-max-dbm",
    "epsilon",
    "rank-by",
    "order-constraint",
    "fading",
];

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_enum_list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "nodes" => self.node_counts = parse_list(&key, value)?,
            "trials" => self.trials = parse_one(&key, value)?,
            "seed" => self.seed = parse_one(&key, value)?,
            "workers" => self.workers = parse_one(&key, value)?,
            "channel-strategy" => self.channel_strategies = parse_enum_list(value)?,
            "time-strategy" => self.time_strategies = parse_enum_list(value)?,
            "power-strategy" => self.power_strategies = parse_enum_list(value)?,
            "models" => self.models = parse_enum_list(value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "radius" => self.radius_m = parse_one(&key, value)?,
            "channels" => self.channel_count = parse_one(&key, value)?,
            "path-loss-exponent" => self.path_loss_exponent = parse_one(&key, value)?,
            "path-loss-constant" => self.path_loss_constant = parse_one(&key, value)?,
            "min-distance" => self.min_distance_m = parse_one(&key, value)?,
            "bandwidth" => self.radio.bandwidth_hz = parse_one(&key, value)?,
            "noise-figure" => self.radio.noise_figure_db = parse_one(&key, value)?,
            "sf" => self.radio.sf_values = parse_list(&key, value)?,
            "demod-snr" => {
                self.radio.demod_snr_db = match value {
                    "" | "default" => None,
                    _ => Some(parse_list(&key, value)?),
                }
            }
            "payload-bits" => self.radio.payload_bits = parse_one(&key, value)?,
            "p-min-dbm" => self.radio.p_min_dbm = parse_one(&key, value)?,
            "p-max-dbm" => self.radio.p_max_dbm = parse_one(&key, value)?,
            "epsilon" => self.epsilon = parse_one(&key, value)?,
            "rank-by" => self.rank_by = value.parse()?,
            "order-constraint" => self.order = value.parse()?,
            "fading" => self.fading = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every setting in `text`; `origin` only labels errors.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = ExperimentConfig::default();
        config.apply_text(&text, path)?;
        Ok(config)
    }

    /// Renders the resolved configuration in the file grammar.
    pub fn to_text(&self) -> String {
        fn join<T: ToString>(items: &[T]) -> String {
            items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let mut lines = vec![
            format!("nodes = {}", join(&self.node_counts)),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
            format!("workers = {}", self.workers),
            format!("channel-strategy = {}", join(&self.channel_strategies)),
            format!("time-strategy = {}", join(&self.time_strategies)),
            format!("power-strategy = {}", join(&self.power_strategies)),
            format!("models = {}", join(&self.models)),
            format!("radius = {}", self.radius_m),
            format!("channels = {}", self.channel_count),
            format!("path-loss-exponent = {}", self.path_loss_exponent),
            format!("path-loss-constant = {}", self.path_loss_constant),
            format!("min-distance = {}", self.min_distance_m),
            format!("bandwidth = {}", self.radio.bandwidth_hz),
            format!("noise-figure = {}", self.radio.noise_figure_db),
            format!("sf = {}", join(&self.radio.sf_values)),
            format!(
                "demod-snr = {}",
                self.radio.demod_snr_db.as_deref().map_or("default".to_string(), join)
            ),
            format!("payload-bits = {}", self.radio.payload_bits),
            format!("p-min-dbm = {}", self.radio.p_min_dbm),
            format!("p-max-dbm = {}", self.radio.p_max_dbm),
            format!("epsilon = {}", self.epsilon),
            format!("rank-by = {}", self.rank_by),
            format!("order-constraint = {}", self.order),
            format!("fading = {}", self.fading),
        ];
        if let Some(out) = &self.out {
            lines.push(format!("out = {}", out.display()));
        }
        lines.join("\n") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.node_counts.is_empty() || self.node_counts.contains(&0) {
            return Err(Error::Config("nodes must be a non-empty list of positive counts".into()));
        }
        for (name, empty) in [
            ("channel-strategy", self.channel_strategies.is_empty()),
            ("time-strategy", self.time_strategies.is_empty()),
            ("power-strategy", self.power_strategies.is_empty()),
            ("models", self.models.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("{name} must name at least one option")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        self.profile()?;
        self.network(self.node_counts[0], 0).validate()
    }

    pub fn profile(&self) -> Result<RadioProfile> {
        RadioProfile::new(self.radio.clone())
    }

    pub fn network(&self, node_count: usize, rng_seed: u64) -> NetworkConfig {
        NetworkConfig {
            node_count,
            radius_m: self.radius_m,
            channel_count: self.channel_count,
            time_slot_count: self.radio.sf_values.len(),
            path_loss_exponent: self.path_loss_exponent,
            path_loss_constant: self.path_loss_constant,
            min_distance_m: self.min_distance_m,
            fading: self.fading,
            rng_seed,
        }
    }

    pub fn power_options(&self) -> PowerOptions {
        PowerOptions {
            epsilon: self.epsilon,
            order: self.order,
            ..PowerOptions::default()
        }
    }
}
