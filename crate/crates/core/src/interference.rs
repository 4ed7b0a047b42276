//! Interference, SINR and rate evaluation under the three receiver models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::Allocation;
use crate::error::{Error, Result};
use crate::network::Deployment;
use crate::radio::RadioProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverModel {
    /// Successive interference cancellation in decreasing normalized gain.
    NomaSic,
    /// Every same-channel signal is interference.
    Plain,
    /// Each node alone in one of `N` time slots.
    Oma,
}

impl ReceiverModel {
    pub const ALL: [ReceiverModel; 3] = [ReceiverModel::NomaSic, ReceiverModel::Plain, ReceiverModel::Oma];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverModel::NomaSic => "noma_sic",
            ReceiverModel::Plain => "plain",
            ReceiverModel::Oma => "oma",
        }
    }
}

impl FromStr for ReceiverModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReceiverModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown receiver model {s:?} (expected noma_sic | plain | oma)")))
    }
}

impl fmt::Display for ReceiverModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fraction of the desired node's frame overlapped by an interferer when
/// both start together.
pub fn collision_factor(desired_s: f64, interferer_s: f64) -> f64 {
    desired_s.min(interferer_s) / desired_s
}

pub fn rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

/// Received-power view of one channel in decode order.
pub(crate) struct ChannelView<'a> {
    /// Time index of each member, in decode order.
    pub time_idx: Vec<usize>,
    pub times_s: &'a [f64],
}

impl<'a> ChannelView<'a> {
    pub fn new(members: &[usize], time_of: &[usize], times_s: &'a [f64]) -> Self {
        ChannelView {
            time_idx: members.iter().map(|&n| time_of[n]).collect(),
            times_s,
        }
    }

    fn weighted(&self, desired_f: usize, sums: &[f64]) -> f64 {
        let t = self.times_s[desired_f];
        sums.iter()
            .zip(self.times_s)
            .filter(|(s, _)| **s != 0.0)
            .map(|(s, &ti)| collision_factor(t, ti) * s)
            .sum()
    }

    /// Interference left after SIC for each member: only members later in
    /// the decode order (weaker gain) contribute.
    pub fn sic_interference(&self, received: &[f64]) -> Vec<f64> {
        let mut suffix = vec![0.0; self.times_s.len()];
        let mut out = vec![0.0; received.len()];
        for m in (0..received.len()).rev() {
            let f = self.time_idx[m];
            out[m] = self.weighted(f, &suffix);
            suffix[f] += received[m];
        }
        out
    }

    /// Interference without cancellation: every other member contributes.
    pub fn full_interference(&self, received: &[f64]) -> Vec<f64> {
        let mut out = self.sic_interference(received);
        let mut prefix = vec![0.0; self.times_s.len()];
        for m in 0..received.len() {
            let f = self.time_idx[m];
            out[m] += self.weighted(f, &prefix);
            prefix[f] += received[m];
        }
        out
    }
}

/// Per-node SINR and rate under one receiver model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub model: ReceiverModel,
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub min_rate: f64,
    /// Minimum rate per channel; `None` for empty channels.
    pub channel_min: Vec<Option<f64>>,
}

impl RateReport {
    fn build(model: ReceiverModel, sinr: Vec<f64>, rate: Vec<f64>, alloc: &Allocation) -> Self {
        let channel_min: Vec<Option<f64>> = alloc
            .channel_orders()
            .iter()
            .map(|members| members.iter().map(|&n| rate[n]).reduce(f64::min))
            .collect();
        RateReport {
            model,
            min_rate: min_rate(&rate),
            sinr,
            rate,
            channel_min,
        }
    }

    pub fn mean_rate(&self) -> f64 {
        self.rate.iter().sum::<f64>() / self.rate.len() as f64
    }
}

pub fn min_rate(rates: &[f64]) -> f64 {
    rates.iter().copied().fold(f64::INFINITY, f64::min)
}

fn check_powers(powers: &[f64], alloc: &Allocation) -> Result<()> {
    if powers.len() != alloc.node_count() {
        return Err(Error::Usage(format!(
            "{} powers given for {} nodes",
            powers.len(),
            alloc.node_count()
        )));
    }
    Ok(())
}

fn received_in_order(members: &[usize], k: usize, powers: &[f64], deployment: &Deployment) -> Vec<f64> {
    members.iter().map(|&n| powers[n] * deployment.gain(k, n)).collect()
}

fn sinr_all(
    cancel: bool,
    powers: &[f64],
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> Result<Vec<f64>> {
    check_powers(powers, alloc)?;
    let time_of = alloc.times()?;
    let noise = deployment.noise_mw();
    let mut sinr = vec![0.0; alloc.node_count()];
    for (k, members) in alloc.channel_orders().iter().enumerate() {
        let view = ChannelView::new(members, time_of, profile.times_s());
        let q = received_in_order(members, k, powers, deployment);
        let interference = if cancel {
            view.sic_interference(&q)
        } else {
            view.full_interference(&q)
        };
        for (m, &n) in members.iter().enumerate() {
            sinr[n] = q[m] / (interference[m] + noise);
        }
    }
    Ok(sinr)
}

/// SINR of every node without cancellation.
pub fn sinr_plain_all(
    powers: &[f64],
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> Result<Vec<f64>> {
    sinr_all(false, powers, alloc, deployment, profile)
}

/// SINR of every node after SIC.
pub fn sinr_noma_all(
    powers: &[f64],
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> Result<Vec<f64>> {
    sinr_all(true, powers, alloc, deployment, profile)
}

fn check_node(node: usize, alloc: &Allocation) -> Result<()> {
    if node >= alloc.node_count() {
        return Err(Error::Usage(format!("node {node} out of range ({} nodes)", alloc.node_count())));
    }
    Ok(())
}

pub fn sinr_plain(
    node: usize,
    powers: &[f64],
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> Result<f64> {
    check_node(node, alloc)?;
    Ok(sinr_plain_all(powers, alloc, deployment, profile)?[node])
}

pub fn sinr_noma(
    node: usize,
    powers: &[f64],
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> Result<f64> {
    check_node(node, alloc)?;
    Ok(sinr_noma_all(powers, alloc, deployment, profile)?[node])
}

/// Orthogonal baseline: each of the `N` nodes transmits alone for `1/N` of
/// the time on its assigned channel.
pub fn oma_min_rate(
    deployment: &Deployment,
    alloc: &Allocation,
    profile: &RadioProfile,
    powers: &[f64],
) -> Result<RateReport> {
    check_powers(powers, alloc)?;
    let noise = deployment.noise_mw();
    let share = profile.bandwidth_hz() / alloc.node_count() as f64;
    let sinr: Vec<f64> = alloc
        .channel_of()
        .iter()
        .enumerate()
        .map(|(n, &k)| powers[n] * deployment.gain(k, n) / noise)
        .collect();
    let rates = sinr.iter().map(|&s| rate(s, share)).collect();
    Ok(RateReport::build(ReceiverModel::Oma, sinr, rates, alloc))
}

pub fn evaluate(
    model: ReceiverModel,
    powers: &[f64],
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> Result<RateReport> {
    let sinr = match model {
        ReceiverModel::Oma => return oma_min_rate(deployment, alloc, profile, powers),
        ReceiverModel::NomaSic => sinr_noma_all(powers, alloc, deployment, profile)?,
        ReceiverModel::Plain => sinr_plain_all(powers, alloc, deployment, profile)?,
    };
    let bw = profile.bandwidth_hz();
    let rates = sinr.iter().map(|&s| rate(s, bw)).collect();
    Ok(RateReport::build(model, sinr, rates, alloc))
}
