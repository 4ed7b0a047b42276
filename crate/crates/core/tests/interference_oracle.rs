use noma_lpwa::interference::{collision_factor, evaluate, sinr_noma_all, sinr_plain_all, ReceiverModel};
use noma_lpwa::time_alloc::{allocate_times, TimeStrategy};
use noma_lpwa::{allocate_channels_random, allocate_channels_roundrobin, generate_deployment, rng, NetworkConfig, RadioProfile, RankBy};
use proptest::prelude::*;
use rand::Rng;

/// Direct double-sum SINR. Node `i` interferes with `n` when they share a
/// channel and, under SIC, `i` is decoded after `n`.
fn brute(cancel: bool, powers: &[f64], a: &noma_lpwa::Allocation, dep: &noma_lpwa::Deployment, p: &RadioProfile) -> Vec<f64> {
    let t = a.times().unwrap();
    let mut pos = vec![0; powers.len()];
    for members in a.channel_orders() {
        for (m, &n) in members.iter().enumerate() {
            pos[n] = m;
        }
    }
    (0..powers.len())
        .map(|n| {
            let k = a.channel_of()[n];
            let mut interference = 0.0;
            for i in 0..powers.len() {
                if i == n || a.channel_of()[i] != k || (cancel && pos[i] < pos[n]) {
                    continue;
                }
                interference += collision_factor(p.time_s(t[n]), p.time_s(t[i])) * powers[i] * dep.gain(k, i);
            }
            powers[n] * dep.gain(k, n) / (interference + dep.noise_mw())
        })
        .collect()
}

fn setup(n: usize, k: usize, seed: u64, strategy: TimeStrategy, random_channels: bool) -> (noma_lpwa::Deployment, noma_lpwa::Allocation, RadioProfile) {
    let profile = RadioProfile::lora_default();
    let cfg = NetworkConfig { node_count: n, channel_count: k, rng_seed: seed, ..NetworkConfig::default() };
    let dep = generate_deployment(&cfg, &profile).unwrap();
    let base = if random_channels {
        allocate_channels_random(&dep, k, &mut rng::stream(seed, 1)).unwrap()
    } else {
        allocate_channels_roundrobin(&dep, k, RankBy::Mean).unwrap()
    };
    let a = allocate_times(strategy, &base, &dep, cfg.radius_m, &profile, &mut rng::stream(seed, 2)).unwrap();
    (dep, a, profile)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_sums_match_double_sum(n in 1usize..=150, k in 1usize..=8, si in 0usize..4, rc in any::<bool>(), seed in any::<u64>()) {
        let (dep, a, p) = setup(n, k, seed, TimeStrategy::ALL[si], rc);
        let mut r = rng::stream(seed, 9);
        let powers: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(0.0..2.0))).collect();
        let fast = sinr_noma_all(&powers, &a, &dep, &p).unwrap();
        let slow = brute(true, &powers, &a, &dep, &p);
        for (x, y) in fast.iter().zip(&slow) {
            prop_assert!(rel(*x, *y) < 1e-9, "noma {} vs {}", x, y);
        }
        let fast = sinr_plain_all(&powers, &a, &dep, &p).unwrap();
        let slow = brute(false, &powers, &a, &dep, &p);
        for (x, y) in fast.iter().zip(&slow) {
            prop_assert!(rel(*x, *y) < 1e-9, "plain {} vs {}", x, y);
        }
    }

    #[test]
    fn sic_never_loses(n in 1usize..=300, k in 1usize..=8, si in 0usize..4, seed in any::<u64>()) {
        let (dep, a, p) = setup(n, k, seed, TimeStrategy::ALL[si], false);
        let mut r = rng::stream(seed, 9);
        let powers: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(0.0..2.0))).collect();
        let noma = evaluate(ReceiverModel::NomaSic, &powers, &a, &dep, &p).unwrap();
        let plain = evaluate(ReceiverModel::Plain, &powers, &a, &dep, &p).unwrap();
        for (x, y) in noma.rate.iter().zip(&plain.rate) {
            prop_assert!(x >= y);
        }
        prop_assert!(noma.min_rate >= plain.min_rate);
        prop_assert!(noma.rate.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn oma_shares_bandwidth(n in 1usize..=200, seed in any::<u64>()) {
        let (dep, a, p) = setup(n, 8, seed, TimeStrategy::Unfair, false);
        let powers = vec![p.p_max_mw(); n];
        let oma = evaluate(ReceiverModel::Oma, &powers, &a, &dep, &p).unwrap();
        for node in 0..n {
            let k = a.channel_of()[node];
            let want = p.bandwidth_hz() / n as f64 * (1.0 + powers[node] * dep.gain(k, node) / dep.noise_mw()).log2();
            prop_assert!(rel(oma.rate[node], want) < 1e-12);
        }
    }
}

#[test]
fn lone_node_per_channel_is_interference_free() {
    let (dep, a, p) = setup(8, 8, 4, TimeStrategy::Unfair, false);
    let powers = vec![p.p_max_mw(); 8];
    let noma = evaluate(ReceiverModel::NomaSic, &powers, &a, &dep, &p).unwrap();
    let plain = evaluate(ReceiverModel::Plain, &powers, &a, &dep, &p).unwrap();
    for n in 0..8 {
        let k = a.channel_of()[n];
        let alone = p.bandwidth_hz() * (1.0 + p.p_max_mw() * dep.gain(k, n) / dep.noise_mw()).log2();
        assert!(rel(noma.rate[n], alone) < 1e-12);
        assert!(rel(plain.rate[n], alone) < 1e-12);
    }
}
