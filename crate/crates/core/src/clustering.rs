//! Node-to-channel assignment and the per-channel SIC decode order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Deployment;

/// Statistic used to rank nodes before any channel is assigned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankBy {
    /// Normalized gain averaged over all channels.
    #[default]
    Mean,
    /// Normalized gain on the first channel.
    Channel0,
}

impl FromStr for RankBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(RankBy::Mean),
            "channel-0" | "channel0" | "channel_0" => Ok(RankBy::Channel0),
            _ => Err(Error::Config(format!(
                "unknown rank-by policy {s:?} (expected mean | channel-0)"
            ))),
        }
    }
}

impl fmt::Display for RankBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankBy::Mean => "mean",
            RankBy::Channel0 => "channel-0",
        })
    }
}

/// Resource-block assignment: each node's channel, optionally its time
/// index, and each channel's members in decode order.
///
/// Channel and time indices are 0-based here; reports add one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Allocation {
    channel_of: Vec<usize>,
    time_of: Option<Vec<usize>>,
    channel_order: Vec<Vec<usize>>,
    fair_fallback: bool,
}

/// Descending normalized gain, ties to the lower node id.
pub(crate) fn decode_cmp(gamma: &[f64], a: usize, b: usize) -> Ordering {
    gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b))
}

impl Allocation {
    /// Wraps an explicit channel map, deriving the decode order from the
    /// gains of each node's own channel.
    pub fn from_channels(deployment: &Deployment, channel_count: usize, channel_of: Vec<usize>) -> Result<Self> {
        if channel_of.len() != deployment.node_count() {
            return Err(Error::Usage(format!(
                "channel map covers {} nodes, deployment has {}",
                channel_of.len(),
                deployment.node_count()
            )));
        }
        if channel_count == 0 || channel_count > deployment.channel_count() {
            return Err(Error::Usage(format!(
                "{channel_count} channels requested, deployment carries gains for {}",
                deployment.channel_count()
            )));
        }
        let mut channel_order = vec![Vec::new(); channel_count];
        for (n, &k) in channel_of.iter().enumerate() {
            channel_order
                .get_mut(k)
                .ok_or_else(|| Error::Usage(format!("node {n} mapped to channel {k} of {channel_count}")))?
                .push(n);
        }
        for (k, members) in channel_order.iter_mut().enumerate() {
            let gamma = &deployment.normalized_gains()[k];
            members.sort_by(|&a, &b| decode_cmp(gamma, a, b));
        }
        Ok(Allocation {
            channel_of,
            time_of: None,
            channel_order,
            fair_fallback: false,
        })
    }

    /// Returns a copy carrying the given time map.
    pub fn with_times(&self, time_of: Vec<usize>, time_count: usize) -> Result<Self> {
        if time_of.len() != self.channel_of.len() {
            return Err(Error::Usage(format!(
                "time map covers {} nodes, allocation has {}",
                time_of.len(),
                self.channel_of.len()
            )));
        }
        if let Some((n, f)) = time_of.iter().enumerate().find(|(_, &f)| f >= time_count) {
            return Err(Error::Usage(format!("node {n} mapped to time {f} of {time_count}")));
        }
        Ok(Allocation {
            time_of: Some(time_of),
            fair_fallback: false,
            ..self.clone()
        })
    }

    pub(crate) fn mark_fair_fallback(&mut self) {
        self.fair_fallback = true;
    }

    pub fn node_count(&self) -> usize {
        self.channel_of.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channel_order.len()
    }

    pub fn channel_of(&self) -> &[usize] {
        &self.channel_of
    }

    pub fn time_of(&self) -> Option<&[usize]> {
        self.time_of.as_deref()
    }

    pub fn times(&self) -> Result<&[usize]> {
        self.time_of()
            .ok_or_else(|| Error::Usage("allocation has no transmission times yet".into()))
    }

    /// Members of channel `k`, strongest normalized gain first.
    pub fn channel_order(&self, k: usize) -> &[usize] {
        &self.channel_order[k]
    }

    pub fn channel_orders(&self) -> &[Vec<usize>] {
        &self.channel_order
    }

    /// Set when the fair time repair needed the deterministic fallback on at
    /// least one channel.
    pub fn fair_fallback(&self) -> bool {
        self.fair_fallback
    }

    /// `N_k` per channel.
    pub fn channel_counts(&self) -> Vec<usize> {
        self.channel_order.iter().map(Vec::len).collect()
    }

    /// `N_k^f` as a `[k][f]` table.
    pub fn cluster_counts(&self, time_count: usize) -> Result<Vec<Vec<usize>>> {
        let times = self.times()?;
        let mut counts = vec![vec![0; time_count]; self.channel_count()];
        for (n, &k) in self.channel_of.iter().enumerate() {
            *counts[k]
                .get_mut(times[n])
                .ok_or_else(|| Error::Usage(format!("time index {} >= {time_count}", times[n])))? += 1;
        }
        Ok(counts)
    }
}

fn ranking_statistic(deployment: &Deployment, channel_count: usize, rank_by: RankBy) -> Vec<f64> {
    let gamma = deployment.normalized_gains();
    match rank_by {
        RankBy::Channel0 => gamma[0].clone(),
        RankBy::Mean => (0..deployment.node_count())
            .map(|n| gamma[..channel_count].iter().map(|row| row[n]).sum::<f64>() / channel_count as f64)
            .collect(),
    }
}

/// Sorts nodes by normalized gain and deals them out like cards: rank `m`
/// (0-based) lands on channel `m mod K`, so the first `N mod K` channels end
/// up with one extra node.
pub fn allocate_channels_roundrobin(
    deployment: &Deployment,
    channel_count: usize,
    rank_by: RankBy,
) -> Result<Allocation> {
    if channel_count == 0 || channel_count > deployment.channel_count() {
        return Err(Error::Usage(format!(
            "{channel_count} channels requested, deployment carries gains for {}",
            deployment.channel_count()
        )));
    }
    let stat = ranking_statistic(deployment, channel_count, rank_by);
    let mut ranked: Vec<usize> = (0..deployment.node_count()).collect();
    ranked.sort_by(|&a, &b| decode_cmp(&stat, a, b));
    let mut channel_of = vec![0; ranked.len()];
    for (m, &n) in ranked.iter().enumerate() {
        channel_of[n] = m % channel_count;
    }
    Allocation::from_channels(deployment, channel_count, channel_of)
}

/// Uniform random channel per node.
pub fn allocate_channels_random<R: Rng + ?Sized>(
    deployment: &Deployment,
    channel_count: usize,
    rng: &mut R,
) -> Result<Allocation> {
    if channel_count == 0 {
        return Err(Error::Usage("channel_count must be at least 1".into()));
    }
    let channel_of = (0..deployment.node_count())
        .map(|_| rng.random_range(0..channel_count))
        .collect();
    Allocation::from_channels(deployment, channel_count, channel_of)
}

/// Global rank of each node under the round-robin ranking statistic.
pub fn global_ranks(deployment: &Deployment, channel_count: usize, rank_by: RankBy) -> Vec<usize> {
    let stat = ranking_statistic(deployment, channel_count, rank_by);
    let mut ranked: Vec<usize> = (0..deployment.node_count()).collect();
    ranked.sort_by(|&a, &b| decode_cmp(&stat, a, b));
    let mut rank = vec![0; ranked.len()];
    for (m, &n) in ranked.iter().enumerate() {
        rank[n] = m;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_deployment, NetworkConfig};
    use crate::radio::RadioProfile;
    use crate::rng;

    fn deployment(n: usize, k: usize, seed: u64) -> Deployment {
        let cfg = NetworkConfig {
            node_count: n,
            channel_count: k,
            rng_seed: seed,
            ..NetworkConfig::default()
        };
        generate_deployment(&cfg, &RadioProfile::lora_default()).unwrap()
    }

    /// One channel, node `i` with gamma proportional to `6 - i`.
    fn ladder(n: usize, k: usize) -> Deployment {
        let cfg = NetworkConfig {
            node_count: n,
            channel_count: k,
            ..NetworkConfig::default()
        };
        let fading = vec![(0..n).map(|i| (n - i) as f64).collect(); k];
        Deployment::from_parts(vec![100.0; n], fading, &cfg, &RadioProfile::lora_default()).unwrap()
    }

    #[test]
    fn ten_nodes_four_channels() {
        let alloc = allocate_channels_roundrobin(&deployment(10, 4, 1), 4, RankBy::Mean).unwrap();
        assert_eq!(alloc.channel_counts(), vec![3, 3, 2, 2]);
    }

    #[test]
    fn one_node_per_channel() {
        let dep = deployment(8, 8, 3);
        let alloc = allocate_channels_roundrobin(&dep, 8, RankBy::Mean).unwrap();
        assert_eq!(alloc.channel_counts(), vec![1; 8]);
        let ranks = global_ranks(&dep, 8, RankBy::Mean);
        assert_eq!(ranks[alloc.channel_order(0)[0]], 0);
    }

    #[test]
    fn six_ranks_two_channels() {
        let alloc = allocate_channels_roundrobin(&ladder(6, 2), 2, RankBy::Mean).unwrap();
        assert_eq!(alloc.channel_order(0), &[0, 2, 4]);
        assert_eq!(alloc.channel_order(1), &[1, 3, 5]);
    }

    #[test]
    fn ties_go_to_lower_id() {
        let cfg = NetworkConfig {
            node_count: 3,
            channel_count: 1,
            ..NetworkConfig::default()
        };
        let dep = Deployment::from_parts(
            vec![10.0; 3],
            vec![vec![1.0, 1.0, 1.0]],
            &cfg,
            &RadioProfile::lora_default(),
        )
        .unwrap();
        let alloc = allocate_channels_roundrobin(&dep, 1, RankBy::Channel0).unwrap();
        assert_eq!(alloc.channel_order(0), &[0, 1, 2]);
    }

    #[test]
    fn random_single_channel() {
        let dep = deployment(40, 1, 2);
        let alloc = allocate_channels_random(&dep, 1, &mut rng::stream(5, 1)).unwrap();
        assert_eq!(alloc.channel_counts(), vec![40]);
    }

    #[test]
    fn random_is_deterministic() {
        let dep = deployment(200, 8, 2);
        let a = allocate_channels_random(&dep, 8, &mut rng::stream(5, 1)).unwrap();
        let b = allocate_channels_random(&dep, 8, &mut rng::stream(5, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_is_balanced_in_law() {
        let dep = deployment(1000, 8, 11);
        let alloc = allocate_channels_random(&dep, 8, &mut rng::stream(11, 1)).unwrap();
        // Binomial(1000, 1/8): mean 125, sd sqrt(1000 * 1/8 * 7/8) ~ 10.46
        let sd = (1000.0 * 0.125 * 0.875f64).sqrt();
        for c in alloc.channel_counts() {
            assert!((c as f64 - 125.0).abs() <= 5.0 * sd, "{c}");
        }
    }

    #[test]
    fn decode_order_descends_on_own_channel() {
        let dep = deployment(300, 8, 4);
        for alloc in [
            allocate_channels_roundrobin(&dep, 8, RankBy::Mean).unwrap(),
            allocate_channels_random(&dep, 8, &mut rng::stream(4, 1)).unwrap(),
        ] {
            for k in 0..8 {
                let gamma = &dep.normalized_gains()[k];
                for w in alloc.channel_order(k).windows(2) {
                    assert!(gamma[w[0]] > gamma[w[1]]);
                }
            }
        }
    }

    #[test]
    fn rejects_too_many_channels() {
        let dep = deployment(5, 2, 0);
        assert!(allocate_channels_roundrobin(&dep, 3, RankBy::Mean).is_err());
        assert!(Allocation::from_channels(&dep, 2, vec![0, 1, 2, 0, 0]).is_err());
    }

    #[test]
    fn times_required_for_cluster_counts() {
        let dep = deployment(5, 2, 0);
        let alloc = allocate_channels_roundrobin(&dep, 2, RankBy::Mean).unwrap();
        assert!(matches!(alloc.cluster_counts(3), Err(Error::Usage(_))));
        assert!(alloc.with_times(vec![0, 1, 2, 0, 3], 3).is_err());
        let timed = alloc.with_times(vec![0, 1, 2, 0, 2], 3).unwrap();
        let counts = timed.cluster_counts(3).unwrap();
        assert_eq!(counts.iter().flatten().sum::<usize>(), 5);
    }
}
