//! Shared helpers: random per-channel power problems and a brute-force
//! oracle for their least feasible received powers.

#![allow(dead_code)]

use noma_lpwa::power::{Feasibility, OrderConstraint, PowerOptions, PowerProblem};
use noma_lpwa::rng::SimRng;
use noma_lpwa::{Error, RadioProfile};
use rand::{Rng, SeedableRng};

pub const NOISE_MW: f64 = 1e-12;
pub const BW: f64 = 125e3;

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn orders() -> [OrderConstraint; 3] {
    [OrderConstraint::Literal, OrderConstraint::Decode, OrderConstraint::Off]
}

/// A random channel with `m` members in decode order. Gains span two
/// decades, so every order variant sees a mix of feasible and infeasible
/// targets.
pub fn random_problem(rng: &mut SimRng, m: usize, order: OrderConstraint) -> PowerProblem {
    let profile = RadioProfile::lora_default();
    let time_count = profile.time_count();
    let mut gains: Vec<f64> = (0..m).map(|_| 1e-11 * 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let time_idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..time_count)).collect();
    PowerProblem::new(
        0,
        (0..m).collect(),
        gains,
        time_idx.iter().map(|&f| profile.threshold_mw(f)).collect(),
        time_idx,
        profile.times_s().to_vec(),
        NOISE_MW,
        1.0,
        100.0,
        BW,
        PowerOptions {
            order,
            ..PowerOptions::default()
        },
    )
    .unwrap()
}

/// Solver decision as an option; structural infeasibility counts as
/// infeasible.
pub fn solve(problem: &PowerProblem, tau: f64) -> Option<Vec<f64>> {
    match problem.feasibility_solve(tau) {
        Ok(Feasibility::Feasible(p)) => Some(p),
        Ok(Feasibility::Infeasible) | Err(Error::StructurallyInfeasible { .. }) => None,
        Err(e) => panic!("solver failed: {e}"),
    }
}

#[derive(Clone, Copy, Debug)]
enum Branch {
    Floor,
    Order,
    Rate,
}

fn order_partner(order: OrderConstraint, m: usize, len: usize) -> Option<usize> {
    match order {
        OrderConstraint::Literal if m > 0 => Some(m - 1),
        OrderConstraint::Decode if m + 1 < len => Some(m + 1),
        _ => None,
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * b[k]).sum();
        b[c] = (b[c] - s) / a[c][c];
    }
    Some(b)
}

/// Least received powers meeting every constraint at rate target `tau`,
/// found by enumerating which piece of each `max` is active, solving the
/// resulting linear system and keeping the in-box fixed points. Returns
/// transmit powers, or `None` when no fixed point fits the box.
pub fn oracle(problem: &PowerProblem, tau: f64) -> Option<Vec<f64>> {
    let len = problem.len();
    let g = problem.gains();
    let c = problem.sinr_target(tau);
    let order = problem.options().order;
    let floor: Vec<f64> = (0..len)
        .map(|m| (problem.p_min_mw() * g[m]).max(problem.thresholds_mw()[m]))
        .collect();
    let upper: Vec<f64> = (0..len).map(|m| problem.p_max_mw() * g[m]).collect();
    let rhs = |q: &[f64], m: usize| -> f64 {
        let interf: f64 = (m + 1..len).map(|i| problem.col(m, i) * q[i]).sum();
        let mut v = floor[m].max(c * (interf + problem.noise_mw()));
        if let Some(j) = order_partner(order, m, len) {
            v = v.max(q[j]);
        }
        v
    };

    let mut best: Option<Vec<f64>> = None;
    let total = 3usize.pow(len as u32);
    for code in 0..total {
        let branches: Vec<Branch> = (0..len)
            .map(|m| match (code / 3usize.pow(m as u32)) % 3 {
                0 => Branch::Floor,
                1 => Branch::Order,
                _ => Branch::Rate,
            })
            .collect();
        let mut a = vec![vec![0.0; len]; len];
        let mut b = vec![0.0; len];
        let mut valid = true;
        for m in 0..len {
            a[m][m] = 1.0;
            match branches[m] {
                Branch::Floor => b[m] = floor[m],
                Branch::Order => match order_partner(order, m, len) {
                    Some(j) => a[m][j] = -1.0,
                    None => valid = false,
                },
                Branch::Rate => {
                    for i in m + 1..len {
                        a[m][i] = -c * problem.col(m, i);
                    }
                    b[m] = c * problem.noise_mw();
                }
            }
        }
        if !valid {
            continue;
        }
        let Some(q) = gauss(a, b) else { continue };
        let fixed = (0..len).all(|m| {
            let r = rhs(&q, m);
            (q[m] - r).abs() <= 1e-9 * r.abs().max(1e-300)
        });
        let in_box = (0..len).all(|m| q[m] <= upper[m] * (1.0 + 1e-9));
        if fixed && in_box {
            best = Some(match best {
                None => q,
                Some(prev) => prev.iter().zip(&q).map(|(a, b)| a.min(*b)).collect(),
            });
        }
    }
    best.map(|q| q.iter().zip(g).map(|(q, g)| q / g).collect())
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()))
        .fold(0.0, f64::max)
}

/// A profile with `f` transmission times (SF 5.. with explicit demodulation
/// SNRs so any `f <= 8` works).
pub fn profile_with_times(f: usize) -> RadioProfile {
    let sf: Vec<u32> = (0..f as u32).map(|i| 5 + i).collect();
    RadioProfile::new(noma_lpwa::RadioParams {
        demod_snr_db: Some(sf.iter().map(|&s| -2.5 * (s as f64 - 4.0)).collect()),
        sf_values: sf,
        ..noma_lpwa::RadioParams::default()
    })
    .unwrap()
}

/// Conservation and balance checks for every allocation strategy on one
/// random deployment. Returns a description of the first violation.
pub fn check_allocation(n: usize, k: usize, f: usize, seed: u64) -> Result<(), String> {
    use noma_lpwa::clustering::global_ranks;
    use noma_lpwa::time_alloc::{allocate_times, fair_targets, TimeStrategy};
    use noma_lpwa::{allocate_channels_random, allocate_channels_roundrobin, generate_deployment, NetworkConfig, RankBy};

    let profile = profile_with_times(f);
    let cfg = NetworkConfig {
        node_count: n,
        channel_count: k,
        time_slot_count: f,
        rng_seed: seed,
        ..NetworkConfig::default()
    };
    let dep = generate_deployment(&cfg, &profile).map_err(|e| e.to_string())?;
    let rr = allocate_channels_roundrobin(&dep, k, RankBy::Mean).map_err(|e| e.to_string())?;
    let random = allocate_channels_random(&dep, k, &mut rng(seed)).map_err(|e| e.to_string())?;

    let counts = rr.channel_counts();
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    if hi - lo > 1 {
        return Err(format!("round-robin imbalance {counts:?}"));
    }
    let ranks = global_ranks(&dep, k, RankBy::Mean);
    for (ch, members) in rr.channel_orders().iter().enumerate() {
        let mut r: Vec<usize> = members.iter().map(|&m| ranks[m]).collect();
        r.sort_unstable();
        if r.iter().enumerate().any(|(i, &x)| x != ch + i * k) {
            return Err(format!("channel {ch} ranks are not spaced by K"));
        }
    }

    for (label, base) in [("roundrobin", &rr), ("random", &random)] {
        if base.channel_counts().iter().sum::<usize>() != n {
            return Err(format!("{label}: channel counts do not sum to N"));
        }
        for strategy in TimeStrategy::ALL {
            let a = allocate_times(strategy, base, &dep, cfg.radius_m, &profile, &mut rng(seed ^ 7))
                .map_err(|e| e.to_string())?;
            let clusters = a.cluster_counts(f).map_err(|e| e.to_string())?;
            for (ch, row) in clusters.iter().enumerate() {
                if row.iter().sum::<usize>() != a.channel_counts()[ch] {
                    return Err(format!("{label}/{strategy}: channel {ch} clusters {row:?} lose nodes"));
                }
            }
            if strategy == TimeStrategy::Unfair {
                for row in &clusters {
                    if row.iter().max().unwrap() - row.iter().min().unwrap() > 1 {
                        return Err(format!("{label}/unfair: unbalanced groups {row:?}"));
                    }
                }
            }
        }
    }

    for &nk in &rr.channel_counts() {
        let targets = fair_targets(nk, profile.times_s());
        let products: Vec<f64> = targets.iter().zip(profile.times_s()).map(|(x, t)| x * t).collect();
        let want = nk as f64 / profile.times_s().iter().map(|t| 1.0 / t).sum::<f64>();
        if products.iter().any(|p| (p - want).abs() > 1e-9 * want.max(f64::MIN_POSITIVE)) {
            return Err(format!("fair products {products:?} differ from {want}"));
        }
    }
    Ok(())
}
