mod common;

use approx::assert_relative_eq;
use common::*;
use noma_lpwa::power::{OrderConstraint, PowerOptions, PowerProblem};
use noma_lpwa::Error;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn solver_matches_branch_enumeration() {
    let mut r = rng(11);
    let (mut feasible, mut infeasible) = (0, 0);
    for case in 0..600 {
        let order = orders()[case % 3];
        let m = r.random_range(1..=4);
        let p = random_problem(&mut r, m, order);
        let tau = r.random_range(0.0..1.0) * p.tau_upper_bound();
        let got = solve(&p, tau);
        let want = oracle(&p, tau);
        match (&got, &want) {
            (Some(a), Some(b)) => {
                feasible += 1;
                assert!(max_rel_err(a, b) < 1e-6, "case {case} {order}: {a:?} vs {b:?}");
            }
            (None, None) => infeasible += 1,
            _ => panic!("case {case} {order} tau={tau}: solver {got:?} oracle {want:?}"),
        }
    }
    assert!(feasible > 100 && infeasible > 100, "{feasible} feasible, {infeasible} infeasible");
}

fn two_nodes(gains: [f64; 2], times: [usize; 2], order: OrderConstraint) -> PowerProblem {
    let profile = noma_lpwa::RadioProfile::lora_default();
    PowerProblem::new(
        0,
        vec![0, 1],
        gains.to_vec(),
        times.iter().map(|&f| profile.threshold_mw(f)).collect(),
        times.to_vec(),
        profile.times_s().to_vec(),
        NOISE_MW,
        1.0,
        100.0,
        BW,
        PowerOptions { order, ..PowerOptions::default() },
    )
    .unwrap()
}

/// Least powers for two nodes without an order constraint.
fn closed_form(p: &PowerProblem, tau: f64) -> Option<[f64; 2]> {
    let g = p.gains();
    let c = p.sinr_target(tau);
    let s2 = p.noise_mw();
    let lo = |m: usize| (p.p_min_mw() * g[m]).max(p.thresholds_mw()[m]);
    let q1 = lo(1).max(c * s2);
    let q0 = lo(0).max(c * (p.col(0, 1) * q1 + s2));
    let out = [q0 / g[0], q1 / g[1]];
    out.iter().all(|&x| x <= p.p_max_mw()).then_some(out)
}

#[test]
fn two_node_closed_form() {
    let mut r = rng(5);
    let mut checked = 0;
    for _ in 0..500 {
        let mut g = [1e-11 * 10f64.powf(r.random_range(-1.5..1.5)), 1e-11 * 10f64.powf(r.random_range(-1.5..1.5))];
        g.sort_by(|a, b| b.total_cmp(a));
        let t = [r.random_range(0..6), r.random_range(0..6)];
        let p = two_nodes(g, t, OrderConstraint::Off);
        let tau = r.random_range(0.0..1.0) * p.tau_upper_bound();
        match (solve(&p, tau), closed_form(&p, tau)) {
            (Some(a), Some(b)) => {
                checked += 1;
                assert!(max_rel_err(&a, &b) < 1e-6, "{a:?} vs {b:?}");
            }
            (None, None) => {}
            (a, b) => panic!("tau={tau}: solver {a:?} closed form {b:?}"),
        }
    }
    assert!(checked > 100);
}

#[test]
fn two_node_literal_chain() {
    // equal times, strong node first; the order constraint binds on node 1
    let p = two_nodes([4e-11, 2e-11], [0, 0], OrderConstraint::Literal);
    let tau = 0.3 * BW;
    let c = p.sinr_target(tau);
    let got = solve(&p, tau).unwrap();
    // q1 = q0 and q0 = c (q1 + s2)  =>  q0 = c s2 / (1 - c)
    let q = c * NOISE_MW / (1.0 - c);
    let floor0 = 4e-11;
    let q0 = q.max(floor0);
    assert_relative_eq!(got[0] * 4e-11, q0, max_relative = 1e-9);
    assert_relative_eq!(got[1] * 2e-11, q0.max(2e-11), max_relative = 1e-9);
}

#[test]
fn bisection_beats_grid_search() {
    let mut r = rng(21);
    for case in 0..60 {
        let order = orders()[case % 3];
        let p = random_problem(&mut r, 2, order);
        let sol = match p.maximize_min_rate() {
            Ok(s) => s,
            Err(Error::StructurallyInfeasible { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let n = 120;
        let grid: Vec<f64> = (0..=n).map(|i| 10f64.powf(2.0 * i as f64 / n as f64)).collect();
        let mut best: f64 = 0.0;
        for &a in &grid {
            for &b in &grid {
                let pw = [a, b];
                if p.satisfies(&pw, 0.0, 0.0) {
                    best = best.max(p.min_rate(&pw));
                }
            }
        }
        assert!(sol.tau_star >= best - 1e-6, "case {case}: tau* {} < grid {best}", sol.tau_star);
        assert!(p.min_rate(&sol.powers_mw) >= sol.tau_star - 1e-6);
    }
}

#[test]
fn least_power_dominated_by_feasible_samples() {
    let mut r = rng(8);
    let mut hits = 0;
    for case in 0..200 {
        let order = orders()[case % 3];
        let m = r.random_range(2..=4);
        let p = random_problem(&mut r, m, order);
        let tau = r.random_range(0.0..0.5) * p.tau_upper_bound();
        let Some(least) = solve(&p, tau) else { continue };
        for _ in 0..300 {
            let pw: Vec<f64> = (0..m).map(|_| 10f64.powf(r.random_range(0.0..2.0))).collect();
            if p.satisfies(&pw, tau, 0.0) {
                hits += 1;
                for (x, l) in pw.iter().zip(&least) {
                    assert!(*x >= l * (1.0 - 1e-9), "sample {pw:?} below least {least:?}");
                }
            }
        }
    }
    assert!(hits > 50, "only {hits} feasible samples");
}

#[test]
fn structural_infeasibility_is_an_error() {
    // node 1 cannot reach its own sensitivity floor at full power
    let p = two_nodes([1e-11, 1e-17], [0, 0], OrderConstraint::Off);
    assert!(matches!(
        p.feasibility_solve(0.5 * BW),
        Err(Error::StructurallyInfeasible { node: 1, .. })
    ));
    assert!(matches!(p.maximize_min_rate(), Err(Error::StructurallyInfeasible { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_powers_grow_with_target(seed in any::<u64>(), m in 1usize..=6, oi in 0usize..3, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, m, orders()[oi]);
        let (lo, hi) = (a.min(b) * p.tau_upper_bound(), a.max(b) * p.tau_upper_bound());
        if let Some(high) = solve(&p, hi) {
            let low = solve(&p, lo).expect("feasibility is monotone in the target");
            for (l, h) in low.iter().zip(&high) {
                prop_assert!(*l <= h * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn returned_powers_are_feasible(seed in any::<u64>(), m in 1usize..=12, oi in 0usize..3, a in 0.0f64..1.0) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, m, orders()[oi]);
        let tau = a * p.tau_upper_bound();
        if let Some(pw) = solve(&p, tau) {
            prop_assert!(p.satisfies(&pw, tau, 1e-9));
        }
    }

    #[test]
    fn common_gain_scaling_keeps_rates(seed in any::<u64>(), m in 1usize..=5, s in 0.5f64..2.0) {
        // scaling every gain, threshold and the noise by s leaves SINRs unchanged
        let mut r = rng(seed);
        let p = random_problem(&mut r, m, OrderConstraint::Off);
        let q = PowerProblem::new(
            0,
            p.nodes().to_vec(),
            p.gains().iter().map(|g| g * s).collect(),
            p.thresholds_mw().iter().map(|t| t * s).collect(),
            p.time_idx().to_vec(),
            p.times_s().to_vec(),
            p.noise_mw() * s,
            p.p_min_mw(),
            p.p_max_mw(),
            p.bandwidth_hz(),
            p.options(),
        ).unwrap();
        match (p.maximize_min_rate(), q.maximize_min_rate()) {
            (Ok(a), Ok(b)) => prop_assert!((a.tau_star - b.tau_star).abs() <= 2.0 * p.options().epsilon),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|s| s.tau_star), b.map(|s| s.tau_star)),
        }
    }
}
