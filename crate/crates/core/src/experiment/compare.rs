//! Paired comparison of two strategies over the same trials.
//!
//! Rows are paired when they share node count, trial, seed and every combo
//! field other than the one being compared. Significance uses a two-sided
//! sign test over the non-tied pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};

use super::runner::{Combo, ResultRow, RowStatus};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Field {
    Channel,
    Time,
    Power,
    Model,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Channel => "channel",
            Field::Time => "time",
            Field::Power => "power",
            Field::Model => "model",
        }
    }

    fn value(self, combo: &Combo) -> String {
        match self {
            Field::Channel => combo.channel.to_string(),
            Field::Time => combo.time.to_string(),
            Field::Power => combo.power.to_string(),
            Field::Model => combo.model.to_string(),
        }
    }
}

/// One side of a comparison, written `field=value` (e.g. `time=unfair`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub field: Field,
    pub value: String,
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (f, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("selector {s:?} must look like field=value")))?;
        let field = match f.trim() {
            "channel" | "channel_strategy" | "channel-strategy" => Field::Channel,
            "time" | "time_strategy" | "time-strategy" => Field::Time,
            "power" | "power_strategy" | "power-strategy" => Field::Power,
            "model" => Field::Model,
            other => {
                return Err(Error::Usage(format!(
                    "unknown selector field {other:?}; expected channel, time, power or model"
                )))
            }
        };
        Ok(Selector {
            field,
            value: v.trim().to_string(),
        })
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.field.name(), self.value)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Metric {
    #[default]
    MinRate,
    MeanRate,
}

impl Metric {
    fn of(self, row: &ResultRow) -> f64 {
        match self {
            Metric::MinRate => row.min_rate,
            Metric::MeanRate => row.mean_rate,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_rate" | "min-rate" => Ok(Metric::MinRate),
            "mean_rate" | "mean-rate" => Ok(Metric::MeanRate),
            other => Err(Error::Usage(format!("unknown metric {other:?}"))),
        }
    }
}

/// Paired statistics for one group (node count plus the shared combo fields).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedSummary {
    pub nodes: usize,
    /// The combo fields held fixed, as `field=value` pairs.
    pub context: String,
    pub pairs: usize,
    /// Pairs dropped because either side was infeasible.
    pub skipped: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Mean of `a - b`.
    pub mean_diff: f64,
    /// Mean over pairs of `10 log10(a / b)`.
    pub mean_db: f64,
    /// `10 log10(mean_a / mean_b)`.
    pub db_of_means: f64,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    /// Two-sided sign-test p-value over non-tied pairs.
    pub p_value: f64,
    /// One-sided p-value for the alternative "a beats b".
    pub p_a_greater: f64,
}

impl PairedSummary {
    /// `a` beats `b` at the given one-sided level.
    pub fn a_significantly_greater(&self, alpha: f64) -> bool {
        self.p_a_greater < alpha
    }
}

/// `P(X >= k)` for `X ~ Bin(n, 1/2)`.
pub fn sign_test_upper(k: usize, n: usize) -> f64 {
    if n == 0 || k == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n as u64).expect("valid binomial");
    b.sf(k as u64 - 1)
}

/// Two-sided sign test for `wins` successes in `n` non-tied pairs.
pub fn sign_test_two_sided(wins: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let k = wins.max(n - wins);
    (2.0 * sign_test_upper(k, n)).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct PairKey {
    nodes: usize,
    context: String,
    trial: usize,
    seed: u64,
}

fn context(combo: &Combo, skip: Field) -> String {
    [Field::Channel, Field::Time, Field::Power, Field::Model]
        .into_iter()
        .filter(|&f| f != skip)
        .map(|f| format!("{}={}", f.name(), f.value(combo)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Compares selector `a` against selector `b` over paired trial rows.
pub fn compare_strategies(
    rows: &[ResultRow],
    a: &Selector,
    b: &Selector,
    metric: Metric,
) -> Result<Vec<PairedSummary>> {
    if a.field != b.field {
        return Err(Error::Usage(format!(
            "selectors {a} and {b} compare different fields; pairing needs the same field"
        )));
    }
    let field = a.field;
    let side = |sel: &Selector| -> Result<BTreeMap<PairKey, &ResultRow>> {
        let mut map = BTreeMap::new();
        for r in rows.iter().filter(|r| field.value(&r.combo) == sel.value) {
            let key = PairKey {
                nodes: r.nodes,
                context: context(&r.combo, field),
                trial: r.trial,
                seed: r.seed,
            };
            if map.insert(key, r).is_some() {
                return Err(Error::Usage(format!(
                    "duplicate rows for {sel} at N={} trial={}",
                    r.nodes, r.trial
                )));
            }
        }
        Ok(map)
    };
    let ra = side(a)?;
    let rb = side(b)?;
    if ra.is_empty() || rb.is_empty() {
        return Err(Error::Usage(format!(
            "no rows match {}",
            if ra.is_empty() { a } else { b }
        )));
    }
    let unmatched = ra.keys().filter(|k| !rb.contains_key(k)).count()
        + rb.keys().filter(|k| !ra.contains_key(k)).count();
    if unmatched > 0 {
        return Err(Error::Usage(format!(
            "{unmatched} rows of {a} vs {b} have no partner with the same N, trial, seed and other strategies"
        )));
    }

    let mut groups: BTreeMap<(usize, String), Vec<(Option<f64>, Option<f64>)>> = BTreeMap::new();
    for (key, ra_row) in &ra {
        let rb_row = rb[key];
        let val = |r: &ResultRow| (r.status == RowStatus::Ok).then(|| metric.of(r));
        groups
            .entry((key.nodes, key.context.clone()))
            .or_default()
            .push((val(ra_row), val(rb_row)));
    }

    Ok(groups
        .into_iter()
        .map(|((nodes, context), pairs)| summarize(nodes, context, &pairs))
        .collect())
}

fn summarize(nodes: usize, context: String, raw: &[(Option<f64>, Option<f64>)]) -> PairedSummary {
    let pairs: Vec<(f64, f64)> = raw
        .iter()
        .filter_map(|&(a, b)| Some((a?, b?)))
        .collect();
    let n = pairs.len();
    let mean = |v: &mut dyn Iterator<Item = f64>| {
        if n == 0 {
            f64::NAN
        } else {
            v.sum::<f64>() / n as f64
        }
    };
    let mean_a = mean(&mut pairs.iter().map(|p| p.0));
    let mean_b = mean(&mut pairs.iter().map(|p| p.1));
    let mean_diff = mean(&mut pairs.iter().map(|p| p.0 - p.1));
    let mean_db = mean(&mut pairs.iter().map(|&(a, b)| db_ratio(a, b)));
    let wins_a = pairs.iter().filter(|p| p.0 > p.1).count();
    let wins_b = pairs.iter().filter(|p| p.0 < p.1).count();
    let ties = n - wins_a - wins_b;
    PairedSummary {
        nodes,
        context,
        pairs: n,
        skipped: raw.len() - n,
        mean_a,
        mean_b,
        mean_diff,
        mean_db,
        db_of_means: db_ratio(mean_a, mean_b),
        wins_a,
        wins_b,
        ties,
        p_value: sign_test_two_sided(wins_a, wins_a + wins_b),
        p_a_greater: sign_test_upper(wins_a, wins_a + wins_b),
    }
}

/// `10 log10(a / b)`, with equal values mapping to exactly 0 dB.
pub fn db_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        10.0 * (a / b).log10()
    }
}

impl fmt::Display for PairedSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={:<5} {:<50} pairs={:<3} skipped={:<2} mean_a={:.4e} mean_b={:.4e} diff={:.4e} \
             mean_dB={:+.3} dB_of_means={:+.3} wins={}/{}/{} p={:.3e}",
            self.nodes,
            self.context,
            self.pairs,
            self.skipped,
            self.mean_a,
            self.mean_b,
            self.mean_diff,
            self.mean_db,
            self.db_of_means,
            self.wins_a,
            self.wins_b,
            self.ties,
            self.p_value
        )
    }
}
