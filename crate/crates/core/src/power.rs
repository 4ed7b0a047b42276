//! Max-min rate power control on one channel.
//!
//! For a rate target `tau` every member must reach SINR `c = 2^(tau/B) - 1`
//! after SIC. In received powers `q_n = p_n g_n` the constraints read
//!
//! ```text
//! q_n >= max(p_min g_n, theta_f(n))                      (C1 low, C2)
//! q_n >= q_{n-1}                                        (C3, decode order)
//! q_n >= c (sum_{i weaker than n} col(n, i) q_i + sigma^2)  (rate target)
//! q_n <= p_max g_n                                       (C1 high)
//! ```
//!
//! Every right-hand side is monotone in `q`, so the system has a least
//! solution whenever it is feasible. [`PowerProblem::feasibility_solve`]
//! finds it by fixed-point iteration from the lower corner, and
//! [`PowerProblem::maximize_min_rate`] bisects on `tau`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::Allocation;
use crate::error::{Error, Result};
use crate::interference::{collision_factor, rate, ChannelView};
use crate::network::Deployment;
use crate::radio::RadioProfile;

/// How the decode order constrains received powers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderConstraint {
    /// `q_n >= q_{n-1}`: each later-decoded (weaker-gain) node is received
    /// at least as strongly as its predecessor.
    #[default]
    Literal,
    /// `q_n <= q_{n-1}`: received powers decrease along the decode order.
    Decode,
    /// No ordering constraint.
    Off,
}

impl FromStr for OrderConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(OrderConstraint::Literal),
            "decode" => Ok(OrderConstraint::Decode),
            "off" => Ok(OrderConstraint::Off),
            _ => Err(Error::Config(format!(
                "unknown order constraint {s:?} (expected literal | decode | off)"
            ))),
        }
    }
}

impl fmt::Display for OrderConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderConstraint::Literal => "literal",
            OrderConstraint::Decode => "decode",
            OrderConstraint::Off => "off",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    /// Bisection stopping width, bits/s.
    pub epsilon: f64,
    pub order: OrderConstraint,
    pub max_sweeps: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            epsilon: 1e-6,
            order: OrderConstraint::Literal,
            max_sweeps: 10_000,
        }
    }
}

/// Relative slack allowed on the upper power bound.
const BOX_RTOL: f64 = 1e-12;
/// A sweep that moves no component by more than this (relative) ends the
/// iteration.
const SETTLE_RTOL: f64 = 1e-15;
/// Try an exact solve of the currently active pieces every this many sweeps.
const JUMP_EVERY: usize = 4;

/// The per-channel power control instance. Members are held in decode order
/// (descending normalized gain).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerProblem {
    channel: usize,
    nodes: Vec<usize>,
    gains: Vec<f64>,
    thresholds_mw: Vec<f64>,
    time_idx: Vec<usize>,
    times_s: Vec<f64>,
    noise_mw: f64,
    p_min_mw: f64,
    p_max_mw: f64,
    bandwidth_hz: f64,
    options: PowerOptions,
}

/// Outcome of one feasibility probe.
#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    /// Least-power transmit powers, in member order.
    Feasible(Vec<f64>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSolution {
    pub channel: usize,
    /// Node ids in decode order.
    pub nodes: Vec<usize>,
    /// Transmit powers in mW, aligned with `nodes`.
    pub powers_mw: Vec<f64>,
    /// Largest rate target found feasible, bits/s.
    pub tau_star: f64,
    /// Smallest rate target found (or bounded) infeasible.
    pub tau_upper: f64,
    pub iterations: usize,
    /// `(tau, feasible)` for each bisection probe.
    pub probes: Vec<(f64, bool)>,
}

enum Solve {
    Settled(Vec<f64>),
    Exceeds(usize),
}

impl PowerProblem {
    /// Builds a problem from raw per-member data, already in decode order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        channel: usize,
        nodes: Vec<usize>,
        gains: Vec<f64>,
        thresholds_mw: Vec<f64>,
        time_idx: Vec<usize>,
        times_s: Vec<f64>,
        noise_mw: f64,
        p_min_mw: f64,
        p_max_mw: f64,
        bandwidth_hz: f64,
        options: PowerOptions,
    ) -> Result<Self> {
        let m = nodes.len();
        if m == 0 {
            return Err(Error::Usage(format!("channel {channel} has no members")));
        }
        if gains.len() != m || thresholds_mw.len() != m || time_idx.len() != m {
            return Err(Error::Usage("member vectors differ in length".into()));
        }
        if time_idx.iter().any(|&f| f >= times_s.len()) {
            return Err(Error::Usage("time index beyond the time table".into()));
        }
        if gains.iter().any(|&g| !(g > 0.0)) || times_s.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Usage("gains and times must be positive".into()));
        }
        if !(options.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", options.epsilon)));
        }
        if !(noise_mw > 0.0) || !(p_min_mw > 0.0) || p_min_mw > p_max_mw || !(bandwidth_hz > 0.0) {
            return Err(Error::Config("need noise > 0, 0 < p_min <= p_max, bandwidth > 0".into()));
        }
        Ok(PowerProblem {
            channel,
            nodes,
            gains,
            thresholds_mw,
            time_idx,
            times_s,
            noise_mw,
            p_min_mw,
            p_max_mw,
            bandwidth_hz,
            options,
        })
    }

    /// The members of channel `k` under `alloc`.
    pub fn from_allocation(
        k: usize,
        alloc: &Allocation,
        deployment: &Deployment,
        profile: &RadioProfile,
        options: PowerOptions,
    ) -> Result<Self> {
        let time_of = alloc.times()?;
        let nodes = alloc.channel_order(k).to_vec();
        PowerProblem::new(
            k,
            nodes.clone(),
            nodes.iter().map(|&n| deployment.gain(k, n)).collect(),
            nodes.iter().map(|&n| profile.threshold_mw(time_of[n])).collect(),
            nodes.iter().map(|&n| time_of[n]).collect(),
            profile.times_s().to_vec(),
            deployment.noise_mw(),
            profile.p_min_mw(),
            profile.p_max_mw(),
            profile.bandwidth_hz(),
            options,
        )
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn thresholds_mw(&self) -> &[f64] {
        &self.thresholds_mw
    }

    pub fn time_idx(&self) -> &[usize] {
        &self.time_idx
    }

    pub fn times_s(&self) -> &[f64] {
        &self.times_s
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    pub fn p_min_mw(&self) -> f64 {
        self.p_min_mw
    }

    pub fn p_max_mw(&self) -> f64 {
        self.p_max_mw
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn options(&self) -> PowerOptions {
        self.options
    }

    /// Collision weight of member `i` on member `m`.
    pub fn col(&self, m: usize, i: usize) -> f64 {
        collision_factor(self.times_s[self.time_idx[m]], self.times_s[self.time_idx[i]])
    }

    /// SINR target for a rate target.
    pub fn sinr_target(&self, tau: f64) -> f64 {
        (tau / self.bandwidth_hz).exp2() - 1.0
    }

    /// `B log2(1 + p_max max(g) / sigma^2)`: no member can beat the
    /// strongest one transmitting alone at full power.
    pub fn tau_upper_bound(&self) -> f64 {
        let g_max = self.gains.iter().copied().fold(0.0, f64::max);
        rate(self.p_max_mw * g_max / self.noise_mw, self.bandwidth_hz)
    }

    fn view(&self) -> ChannelView<'_> {
        ChannelView {
            time_idx: self.time_idx.clone(),
            times_s: &self.times_s,
        }
    }

    fn lower(&self, m: usize) -> f64 {
        (self.p_min_mw * self.gains[m]).max(self.thresholds_mw[m])
    }

    fn upper(&self, m: usize) -> f64 {
        self.p_max_mw * self.gains[m]
    }

    /// SIC interference seen by each member given received powers.
    pub fn sic_interference(&self, received: &[f64]) -> Vec<f64> {
        self.view().sic_interference(received)
    }

    /// Achieved SIC rates for transmit powers in member order.
    pub fn rates(&self, powers_mw: &[f64]) -> Vec<f64> {
        let q: Vec<f64> = powers_mw.iter().zip(&self.gains).map(|(p, g)| p * g).collect();
        let interference = self.sic_interference(&q);
        q.iter()
            .zip(&interference)
            .map(|(&q, &i)| rate(q / (i + self.noise_mw), self.bandwidth_hz))
            .collect()
    }

    pub fn min_rate(&self, powers_mw: &[f64]) -> f64 {
        self.rates(powers_mw).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Slack of every received-power constraint other than C1, in mW:
    /// sensitivity, decode order (when enabled) and rate target, in that
    /// order per member. Non-negative means satisfied.
    pub fn slacks(&self, powers_mw: &[f64], tau: f64) -> Vec<f64> {
        let c = self.sinr_target(tau);
        let q: Vec<f64> = powers_mw.iter().zip(&self.gains).map(|(p, g)| p * g).collect();
        let interference = self.sic_interference(&q);
        let mut out = Vec::with_capacity(3 * q.len());
        for m in 0..q.len() {
            out.push(q[m] - self.thresholds_mw[m]);
            match self.options.order {
                OrderConstraint::Literal if m > 0 => out.push(q[m] - q[m - 1]),
                OrderConstraint::Decode if m > 0 => out.push(q[m - 1] - q[m]),
                _ => {}
            }
            out.push(q[m] - c * (interference[m] + self.noise_mw));
        }
        out
    }

    /// Whether `powers_mw` meets C1-C3 and the rate target `tau`, up to a
    /// relative tolerance on each received-power comparison.
    pub fn satisfies(&self, powers_mw: &[f64], tau: f64, rtol: f64) -> bool {
        if powers_mw.len() != self.len() {
            return false;
        }
        let box_ok = powers_mw
            .iter()
            .all(|&p| p >= self.p_min_mw * (1.0 - rtol) && p <= self.p_max_mw * (1.0 + rtol));
        if !box_ok {
            return false;
        }
        let c = self.sinr_target(tau);
        let q: Vec<f64> = powers_mw.iter().zip(&self.gains).map(|(p, g)| p * g).collect();
        let interference = self.sic_interference(&q);
        (0..q.len()).all(|m| {
            let tol = rtol * q[m];
            let order_ok = match self.options.order {
                OrderConstraint::Literal if m > 0 => q[m] >= q[m - 1] - tol,
                OrderConstraint::Decode if m > 0 => q[m - 1] >= q[m] - rtol * q[m - 1],
                _ => true,
            };
            order_ok
                && q[m] >= self.thresholds_mw[m] - tol
                && q[m] >= c * (interference[m] + self.noise_mw) - tol
        })
    }

    /// One pass from the weakest member up (rate target and the decode-order
    /// variant), then one from the strongest down (literal order). Returns
    /// the largest relative increase.
    fn sweep(&self, c: f64, q: &mut [f64]) -> f64 {
        let m_count = q.len();
        let mut suffix = vec![0.0; self.times_s.len()];
        let mut moved: f64 = 0.0;
        let mut raise = |q: &mut f64, v: f64| {
            if v > *q {
                moved = moved.max((v - *q) / v);
                *q = v;
            }
        };
        for m in (0..m_count).rev() {
            let f = self.time_idx[m];
            let t = self.times_s[f];
            let interference: f64 = suffix
                .iter()
                .zip(&self.times_s)
                .map(|(s, &ti)| collision_factor(t, ti) * s)
                .sum();
            let mut v = c * (interference + self.noise_mw);
            if self.options.order == OrderConstraint::Decode && m + 1 < m_count {
                v = v.max(q[m + 1]);
            }
            raise(&mut q[m], v);
            suffix[f] += q[m];
        }
        if self.options.order == OrderConstraint::Literal {
            for m in 1..m_count {
                let prev = q[m - 1];
                raise(&mut q[m], prev);
            }
        }
        moved
    }

    fn first_exceeding(&self, q: &[f64]) -> Option<usize> {
        (0..q.len()).find(|&m| q[m] > self.upper(m) * (1.0 + BOX_RTOL))
    }

    /// Solves the currently active branch of every `max` exactly. Accepted
    /// only if the resulting linear map is a contraction in the M-matrix
    /// sense, which makes its fixed point a lower bound of the least
    /// solution.
    fn policy_jump(&self, c: f64, q: &[f64]) -> Option<Vec<f64>> {
        let m_count = q.len();
        let interference = self.sic_interference(q);
        let mut a = vec![vec![0.0; m_count]; m_count];
        let mut b = vec![0.0; m_count];
        for m in 0..m_count {
            a[m][m] = 1.0;
            let target = c * (interference[m] + self.noise_mw);
            let order = match self.options.order {
                OrderConstraint::Literal if m > 0 => Some((q[m - 1], m - 1)),
                OrderConstraint::Decode if m + 1 < m_count => Some((q[m + 1], m + 1)),
                _ => None,
            };
            let floor = self.lower(m);
            if target >= floor && order.map_or(true, |(v, _)| target >= v) {
                for i in m + 1..m_count {
                    a[m][i] = -c * self.col(m, i);
                }
                b[m] = c * self.noise_mw;
            } else if let Some((_, j)) = order.filter(|(v, _)| *v >= floor) {
                a[m][j] = -1.0;
            } else {
                b[m] = floor;
            }
        }
        let ones = vec![1.0; m_count];
        let (x, y) = solve_two(a, b, ones)?;
        let positive_inverse = y.iter().all(|&v| v >= 0.0 && v.is_finite());
        let above = x.iter().zip(q).all(|(&xv, &qv)| xv >= qv * (1.0 - 1e-12));
        (positive_inverse && above).then(|| x.iter().zip(q).map(|(&xv, &qv)| xv.max(qv)).collect())
    }

    fn least_received(&self, c: f64) -> Result<Solve> {
        let mut q: Vec<f64> = (0..self.len()).map(|m| self.lower(m)).collect();
        for sweep in 1..=self.options.max_sweeps {
            let moved = self.sweep(c, &mut q);
            if let Some(m) = self.first_exceeding(&q) {
                return Ok(Solve::Exceeds(m));
            }
            if moved <= SETTLE_RTOL {
                return Ok(Solve::Settled(q));
            }
            if self.options.order == OrderConstraint::Literal && sweep % JUMP_EVERY == 0 {
                if let Some(x) = self.policy_jump(c, &q) {
                    q = x;
                    if let Some(m) = self.first_exceeding(&q) {
                        return Ok(Solve::Exceeds(m));
                    }
                }
            }
        }
        Err(Error::NumericalFailure {
            channel: self.channel,
            sweeps: self.options.max_sweeps,
        })
    }

    fn to_powers(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .zip(&self.gains)
            .map(|(&q, &g)| (q / g).clamp(self.p_min_mw, self.p_max_mw))
            .collect()
    }

    /// Least transmit powers meeting C1-C3 and rate target `tau`, or
    /// [`Feasibility::Infeasible`].
    ///
    /// Fails with [`Error::StructurallyInfeasible`] when even `tau = 0`
    /// cannot be met.
    pub fn feasibility_solve(&self, tau: f64) -> Result<Feasibility> {
        if !(tau >= 0.0) {
            return Err(Error::Usage(format!("rate target must be non-negative, got {tau}")));
        }
        if tau > 0.0 {
            self.check_structure()?;
        }
        self.probe(tau)
    }

    fn probe(&self, tau: f64) -> Result<Feasibility> {
        match self.least_received(self.sinr_target(tau))? {
            Solve::Settled(q) => Ok(Feasibility::Feasible(self.to_powers(&q))),
            Solve::Exceeds(m) if tau == 0.0 => {
                let required = self.structural_requirement(m);
                Err(Error::StructurallyInfeasible {
                    channel: self.channel,
                    node: self.nodes[m],
                    required_mw: required,
                    reachable_mw: self.upper(m),
                })
            }
            Solve::Exceeds(_) => Ok(Feasibility::Infeasible),
        }
    }

    fn structural_requirement(&self, m: usize) -> f64 {
        let mut q: Vec<f64> = (0..self.len()).map(|i| self.lower(i)).collect();
        self.sweep(0.0, &mut q);
        q[m]
    }

    fn check_structure(&self) -> Result<()> {
        self.probe(0.0).map(|_| ())
    }

    /// Bisection on the common rate target.
    pub fn maximize_min_rate(&self) -> Result<PowerSolution> {
        let mut best = match self.probe(0.0)? {
            Feasibility::Feasible(p) => p,
            Feasibility::Infeasible => unreachable!("tau = 0 infeasibility is reported as an error"),
        };
        let mut lo = 0.0;
        let mut hi = self.tau_upper_bound();
        let mut probes = Vec::new();
        while hi - lo >= self.options.epsilon {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                // interval below floating-point resolution
                break;
            }
            match self.probe(mid)? {
                Feasibility::Feasible(p) => {
                    best = p;
                    lo = mid;
                    probes.push((mid, true));
                }
                Feasibility::Infeasible => {
                    hi = mid;
                    probes.push((mid, false));
                }
            }
        }
        Ok(PowerSolution {
            channel: self.channel,
            nodes: self.nodes.clone(),
            powers_mw: best,
            tau_star: lo,
            tau_upper: hi,
            iterations: probes.len(),
            probes,
        })
    }
}

/// Gaussian elimination with partial pivoting for two right-hand sides.
fn solve_two(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, mut d: Vec<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        d.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let row = &top[col];
        for (off, other) in rest.iter_mut().enumerate() {
            let factor = other[col] / row[col];
            if factor != 0.0 {
                for c in col..n {
                    other[c] -= factor * row[c];
                }
                b[col + 1 + off] -= factor * b[col];
                d[col + 1 + off] -= factor * d[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut sb = b[col];
        let mut sd = d[col];
        for c in col + 1..n {
            sb -= a[col][c] * b[c];
            sd -= a[col][c] * d[c];
        }
        b[col] = sb / a[col][col];
        d[col] = sd / a[col][col];
    }
    Some((b, d))
}

/// Optimal powers for a whole allocation, channel by channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkPowers {
    /// Transmit power per node id.
    pub powers_mw: Vec<f64>,
    /// One entry per channel, `None` when the channel is empty.
    pub channels: Vec<Option<PowerSolution>>,
}

impl NetworkPowers {
    pub fn tau_star(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .map(|s| s.tau_star)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn optimize_powers(
    alloc: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
    options: PowerOptions,
) -> Result<NetworkPowers> {
    let mut powers = vec![profile.p_max_mw(); alloc.node_count()];
    let mut channels = Vec::with_capacity(alloc.channel_count());
    for k in 0..alloc.channel_count() {
        if alloc.channel_order(k).is_empty() {
            channels.push(None);
            continue;
        }
        let problem = PowerProblem::from_allocation(k, alloc, deployment, profile, options)?;
        let solution = problem.maximize_min_rate()?;
        for (&n, &p) in solution.nodes.iter().zip(&solution.powers_mw) {
            powers[n] = p;
        }
        channels.push(Some(solution));
    }
    Ok(NetworkPowers {
        powers_mw: powers,
        channels,
    })
}
