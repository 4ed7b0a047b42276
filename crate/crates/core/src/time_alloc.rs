//! Transmission-time (spreading factor) assignment within each channel.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::Allocation;
use crate::error::{Error, Result};
use crate::network::Deployment;
use crate::radio::RadioProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeStrategy {
    Unfair,
    Fair,
    Random,
    Distance,
}

impl TimeStrategy {
    pub const ALL: [TimeStrategy; 4] = [
        TimeStrategy::Unfair,
        TimeStrategy::Fair,
        TimeStrategy::Random,
        TimeStrategy::Distance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimeStrategy::Unfair => "unfair",
            TimeStrategy::Fair => "fair",
            TimeStrategy::Random => "random",
            TimeStrategy::Distance => "distance",
        }
    }
}

impl FromStr for TimeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TimeStrategy::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown time strategy {s:?} (expected unfair | random | fair | distance)"
                ))
            })
    }
}

impl fmt::Display for TimeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Equal group sizes, remainder to the first groups.
pub fn unfair_group_sizes(members: usize, time_count: usize) -> Vec<usize> {
    let base = members / time_count;
    let extra = members % time_count;
    (0..time_count).map(|g| base + usize::from(g < extra)).collect()
}

/// Splits `members` evenly into `F` groups and hands out the longest time to
/// the strongest group: walking the decode order, group 1 gets `T_F`,
/// group 2 gets `T_{F-1}`, and so on down to `T_1`.
pub fn allocate_time_unfair(alloc: &Allocation, profile: &RadioProfile) -> Result<Allocation> {
    let time_count = profile.time_count();
    let mut time_of = vec![0; alloc.node_count()];
    for members in alloc.channel_orders() {
        let sizes = unfair_group_sizes(members.len(), time_count);
        let mut walk = members.iter();
        for (g, &size) in sizes.iter().enumerate() {
            let f = time_count - 1 - g;
            for &n in walk.by_ref().take(size) {
                time_of[n] = f;
            }
        }
    }
    alloc.with_times(time_of, time_count)
}

pub fn allocate_time_random<R: Rng + ?Sized>(
    alloc: &Allocation,
    profile: &RadioProfile,
    rng: &mut R,
) -> Result<Allocation> {
    let time_count = profile.time_count();
    let time_of = (0..alloc.node_count())
        .map(|_| rng.random_range(0..time_count))
        .collect();
    alloc.with_times(time_of, time_count)
}

/// Real-valued group sizes with `N_k^f * T_f` equal across `f`.
pub fn fair_targets(members: usize, times_s: &[f64]) -> Vec<f64> {
    let inv_sum: f64 = times_s.iter().map(|t| 1.0 / t).sum();
    times_s
        .iter()
        .map(|t| members as f64 / t / inv_sum)
        .collect()
}

/// Integer group sizes for the fair strategy, plus whether the fallback
/// repair was needed.
///
/// Rounds each target and then corrects the total `j = N_k - sum(round)`:
/// for `j >= 0`, the `j` targets with the largest fractional parts gain one;
/// for `j < 0`, up to `|j|` targets whose fraction exceeds 0.5 lose one
/// (nearest 0.5 first). Any deficit left after that is removed from the
/// remaining non-empty groups with fraction nearest 0.5, longer times first.
pub fn fair_group_sizes(members: usize, times_s: &[f64]) -> (Vec<usize>, bool) {
    let targets = fair_targets(members, times_s);
    let frac: Vec<f64> = targets.iter().map(|t| t - t.floor()).collect();
    let mut sizes: Vec<i64> = targets.iter().map(|t| t.round() as i64).collect();
    let j = members as i64 - sizes.iter().sum::<i64>();
    let mut fallback = false;

    if j >= 0 {
        let mut idx: Vec<usize> = (0..targets.len()).collect();
        idx.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
        // j < F/2 always, since each rounding moves a target by at most 0.5
        for &f in idx.iter().cycle().take(j as usize) {
            sizes[f] += 1;
        }
    } else {
        let mut deficit = (-j) as usize;
        let mut over: Vec<usize> = (0..targets.len()).filter(|&f| frac[f] > 0.5).collect();
        over.sort_by(|&a, &b| frac[a].total_cmp(&frac[b]).then(b.cmp(&a)));
        let mut touched = vec![false; targets.len()];
        for &f in over.iter().take(deficit) {
            sizes[f] -= 1;
            touched[f] = true;
        }
        deficit -= over.len().min(deficit);
        if deficit > 0 {
            fallback = true;
            let mut rest: Vec<usize> = (0..targets.len()).collect();
            rest.sort_by(|&a, &b| {
                touched[a]
                    .cmp(&touched[b])
                    .then((frac[a] - 0.5).abs().total_cmp(&(frac[b] - 0.5).abs()))
                    .then(b.cmp(&a))
            });
            while deficit > 0 {
                let f = *rest
                    .iter()
                    .find(|&&f| sizes[f] > 0)
                    .expect("total is positive while a deficit remains");
                sizes[f] -= 1;
                deficit -= 1;
                rest.retain(|&g| g != f);
                rest.push(f);
            }
        }
    }
    (sizes.into_iter().map(|s| s as usize).collect(), fallback)
}

/// Sizes each time group inversely to its time on air, then walks the
/// decode order giving the strongest nodes `T_1` and the weakest `T_F`.
pub fn allocate_time_fair(alloc: &Allocation, profile: &RadioProfile) -> Result<Allocation> {
    let time_count = profile.time_count();
    let mut time_of = vec![0; alloc.node_count()];
    let mut any_fallback = false;
    for members in alloc.channel_orders() {
        if members.is_empty() {
            continue;
        }
        let (sizes, fallback) = fair_group_sizes(members.len(), profile.times_s());
        any_fallback |= fallback;
        let mut walk = members.iter();
        for (f, &size) in sizes.iter().enumerate() {
            for &n in walk.by_ref().take(size) {
                time_of[n] = f;
            }
        }
        debug_assert!(walk.next().is_none());
    }
    let mut out = alloc.with_times(time_of, time_count)?;
    if any_fallback {
        out.mark_fair_fallback();
    }
    Ok(out)
}

/// Time index of a node at `distance_m`: the unique `f` (0-based) with
/// `f r / F < d <= (f + 1) r / F`.
pub fn distance_band(distance_m: f64, radius_m: f64, time_count: usize) -> Result<usize> {
    if !(distance_m > 0.0) || distance_m > radius_m {
        return Err(Error::Assignment(format!(
            "distance {distance_m} m is outside (0, {radius_m}] m"
        )));
    }
    (0..time_count)
        .find(|&f| distance_m <= (f + 1) as f64 * radius_m / time_count as f64)
        .ok_or_else(|| Error::Assignment(format!("distance {distance_m} m fits no band")))
}

/// Concentric rings: nodes farther out get longer times.
pub fn allocate_time_distance(
    alloc: &Allocation,
    deployment: &Deployment,
    radius_m: f64,
    profile: &RadioProfile,
) -> Result<Allocation> {
    let time_count = profile.time_count();
    let time_of = deployment
        .distances_m()
        .iter()
        .map(|&d| distance_band(d, radius_m, time_count))
        .collect::<Result<Vec<_>>>()?;
    alloc.with_times(time_of, time_count)
}

pub fn allocate_times<R: Rng + ?Sized>(
    strategy: TimeStrategy,
    alloc: &Allocation,
    deployment: &Deployment,
    radius_m: f64,
    profile: &RadioProfile,
    rng: &mut R,
) -> Result<Allocation> {
    match strategy {
        TimeStrategy::Unfair => allocate_time_unfair(alloc, profile),
        TimeStrategy::Fair => allocate_time_fair(alloc, profile),
        TimeStrategy::Random => allocate_time_random(alloc, profile, rng),
        TimeStrategy::Distance => allocate_time_distance(alloc, deployment, radius_m, profile),
    }
}
