use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ChannelStrategy, ExperimentConfig, PowerStrategy};
use crate::clustering::{allocate_channels_random, allocate_channels_roundrobin, Allocation};
use crate::error::{Error, Result};
use crate::interference::{evaluate, ReceiverModel};
use crate::network::{generate_deployment, Deployment};
use crate::power::optimize_powers;
use crate::radio::RadioProfile;
use crate::rng;
use crate::time_alloc::{allocate_times, TimeStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Combo {
    pub channel: ChannelStrategy,
    pub time: TimeStrategy,
    pub power: PowerStrategy,
    pub model: ReceiverModel,
}

impl std::fmt::Display for Combo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}/{}", self.channel, self.time, self.power, self.model)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Optimal power control could not meet sensitivity at any rate.
    Infeasible,
}

impl RowStatus {
    pub fn name(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Infeasible => "infeasible",
        }
    }
}

/// One evaluated (trial, strategy combination, receiver model).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub nodes: usize,
    pub trial: usize,
    /// Seed of this trial's random streams.
    pub seed: u64,
    pub combo: Combo,
    pub status: RowStatus,
    pub min_rate: f64,
    pub mean_rate: f64,
    /// Minimum rate per channel, `NaN` for empty channels.
    pub channel_min: Vec<f64>,
    pub fair_fallback: bool,
    pub note: String,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Statistic of `min_rate` over the successful trials of one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    P10,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::P10 => "p10",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub nodes: usize,
    pub combo: Combo,
    pub statistic: Statistic,
    /// Trials that entered the statistic.
    pub trials: usize,
    pub min_rate: f64,
    pub mean_rate: f64,
}

/// Everything computed for one node count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointResult {
    pub nodes: usize,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultTable {
    pub points: Vec<PointResult>,
}

impl ResultTable {
    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.points.iter().flat_map(|p| p.rows.iter())
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &AggregateRow> {
        self.points.iter().flat_map(|p| p.aggregates.iter())
    }

    pub fn aggregate(&self, nodes: usize, combo: Combo, statistic: Statistic) -> Option<&AggregateRow> {
        self.aggregates()
            .find(|a| a.nodes == nodes && a.combo == combo && a.statistic == statistic)
    }
}

/// Linear interpolation between order statistics.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn trial_seed(seed: u64, nodes: usize, trial: usize) -> u64 {
    rng::derive_seed(seed, &[nodes as u64, trial as u64])
}

struct TrialContext<'a> {
    config: &'a ExperimentConfig,
    profile: &'a RadioProfile,
}

impl TrialContext<'_> {
    fn channels(&self, strategy: ChannelStrategy, dep: &Deployment, seed: u64) -> Result<Allocation> {
        let k = self.config.channel_count;
        match strategy {
            ChannelStrategy::RoundRobin => allocate_channels_roundrobin(dep, k, self.config.rank_by),
            ChannelStrategy::Random => {
                allocate_channels_random(dep, k, &mut rng::stream(seed, rng::STREAM_CHANNELS))
            }
        }
    }

    fn run(&self, nodes: usize, trial: usize) -> Result<Vec<ResultRow>> {
        let seed = trial_seed(self.config.seed, nodes, trial);
        let dep = generate_deployment(&self.config.network(nodes, seed), self.profile)?;
        let mut rows = Vec::new();
        for &channel in &self.config.channel_strategies {
            let base = self.channels(channel, &dep, seed)?;
            for &time in &self.config.time_strategies {
                let started = Instant::now();
                let alloc = allocate_times(
                    time,
                    &base,
                    &dep,
                    self.config.radius_m,
                    self.profile,
                    &mut rng::stream(seed, rng::STREAM_TIMES),
                )?;
                let setup = started.elapsed();
                for &power in &self.config.power_strategies {
                    let started = Instant::now();
                    let mut note = String::new();
                    let powers = match power {
                        PowerStrategy::MaxPower => Some(vec![self.profile.p_max_mw(); nodes]),
                        PowerStrategy::Optimal => {
                            match optimize_powers(&alloc, &dep, self.profile, self.config.power_options()) {
                                Ok(np) => Some(np.powers_mw),
                                Err(e @ Error::StructurallyInfeasible { .. }) => {
                                    note = e.to_string();
                                    None
                                }
                                Err(e) => return Err(e),
                            }
                        }
                    };
                    for &model in &self.config.models {
                        let combo = Combo { channel, time, power, model };
                        let mut row = ResultRow {
                            nodes,
                            trial,
                            seed,
                            combo,
                            status: RowStatus::Ok,
                            min_rate: f64::NAN,
                            mean_rate: f64::NAN,
                            channel_min: vec![f64::NAN; self.config.channel_count],
                            fair_fallback: alloc.fair_fallback(),
                            note: note.clone(),
                            wall_time: Duration::ZERO,
                        };
                        match &powers {
                            Some(p) => {
                                let report = evaluate(model, p, &alloc, &dep, self.profile)?;
                                row.min_rate = report.min_rate;
                                row.mean_rate = report.mean_rate();
                                row.channel_min =
                                    report.channel_min.iter().map(|m| m.unwrap_or(f64::NAN)).collect();
                            }
                            None => row.status = RowStatus::Infeasible,
                        }
                        row.wall_time = setup + started.elapsed();
                        rows.push(row);
                    }
                }
            }
        }
        Ok(rows)
    }
}

fn aggregate(nodes: usize, rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut combos: Vec<Combo> = Vec::new();
    for r in rows {
        if !combos.contains(&r.combo) {
            combos.push(r.combo);
        }
    }
    let mut out = Vec::new();
    for combo in combos {
        let ok: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.combo == combo && r.status == RowStatus::Ok)
            .collect();
        let mins: Vec<f64> = ok.iter().map(|r| r.min_rate).collect();
        let means: Vec<f64> = ok.iter().map(|r| r.mean_rate).collect();
        let avg = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        out.push(AggregateRow {
            nodes,
            combo,
            statistic: Statistic::Mean,
            trials: ok.len(),
            min_rate: avg(&mins),
            mean_rate: avg(&means),
        });
        out.push(AggregateRow {
            nodes,
            combo,
            statistic: Statistic::P10,
            trials: ok.len(),
            min_rate: percentile(&mins, 0.10),
            mean_rate: percentile(&means, 0.10),
        });
    }
    out
}

/// Runs one node count: all trials (in parallel), rows in canonical
/// `(trial, combo)` order, then the aggregates.
pub fn run_point(config: &ExperimentConfig, profile: &RadioProfile, nodes: usize) -> Result<PointResult> {
    let ctx = TrialContext { config, profile };
    let per_trial: Vec<Result<Vec<ResultRow>>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| ctx.run(nodes, trial))
        .collect();
    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    let aggregates = aggregate(nodes, &rows);
    Ok(PointResult { nodes, rows, aggregates })
}

/// Runs the whole sweep, handing each finished point to `sink` as it
/// completes.
pub fn run_experiment_with<F>(config: &ExperimentConfig, mut sink: F) -> Result<ResultTable>
where
    F: FnMut(&PointResult) -> Result<()>,
{
    config.validate()?;
    let profile = config.profile()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut points = Vec::with_capacity(config.node_counts.len());
    for &nodes in &config.node_counts {
        let point = pool.install(|| run_point(config, &profile, nodes))?;
        sink(&point)?;
        points.push(point);
    }
    Ok(ResultTable { points })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    run_experiment_with(config, |_| Ok(()))
}
