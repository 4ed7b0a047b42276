mod common;

use noma_lpwa::clustering::global_ranks;
use noma_lpwa::time_alloc::{allocate_time_fair, fair_group_sizes, TimeStrategy};
use noma_lpwa::{allocate_channels_roundrobin, generate_deployment, FadingModel, NetworkConfig, RadioProfile, RankBy};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conservation_across_strategies(n in 1usize..=10_000, k in 1usize..=16, f in 1usize..=8, seed in any::<u64>()) {
        if let Err(msg) = common::check_allocation(n, k, f, seed) {
            prop_assert!(false, "N={} K={} F={}: {}", n, k, f, msg);
        }
    }

    #[test]
    fn fair_sizes_always_sum(nk in 1usize..=10_000, f in 1usize..=8) {
        let profile = common::profile_with_times(f);
        let (sizes, _) = fair_group_sizes(nk, profile.times_s());
        prop_assert_eq!(sizes.iter().sum::<usize>(), nk);
    }

    #[test]
    fn fair_sizes_with_arbitrary_times(nk in 1usize..=500, times in prop::collection::vec(1e-3f64..1.0, 1..=8)) {
        let (sizes, _) = fair_group_sizes(nk, &times);
        prop_assert_eq!(sizes.iter().sum::<usize>(), nk);
    }

    #[test]
    fn shared_fading_spaces_decode_order_by_k(n in 2usize..=400, k in 1usize..=16, seed in any::<u64>()) {
        // with identical gains on every channel the decode order follows the global ranking
        let profile = RadioProfile::lora_default();
        let cfg = NetworkConfig { node_count: n, channel_count: k, fading: FadingModel::Shared, rng_seed: seed, ..NetworkConfig::default() };
        let dep = generate_deployment(&cfg, &profile).unwrap();
        let a = allocate_channels_roundrobin(&dep, k, RankBy::Mean).unwrap();
        let ranks = global_ranks(&dep, k, RankBy::Mean);
        for members in a.channel_orders() {
            for w in members.windows(2) {
                prop_assert_eq!(ranks[w[1]], ranks[w[0]] + k);
            }
        }
    }
}

#[test]
fn fair_head_gets_shortest_time() {
    let profile = RadioProfile::lora_default();
    let cfg = NetworkConfig { node_count: 100, channel_count: 1, ..NetworkConfig::default() };
    let dep = generate_deployment(&cfg, &profile).unwrap();
    let a = allocate_channels_roundrobin(&dep, 1, RankBy::Mean).unwrap();
    let fair = allocate_time_fair(&a, &profile).unwrap();
    let t = fair.times().unwrap();
    let order = fair.channel_order(0);
    let seq: Vec<usize> = order.iter().map(|&n| t[n]).collect();
    assert!(seq.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(fair.cluster_counts(6).unwrap()[0], vec![46, 26, 14, 8, 4, 2]);
}

#[test]
fn every_strategy_has_a_name() {
    for s in TimeStrategy::ALL {
        assert_eq!(s.name().parse::<TimeStrategy>().unwrap(), s);
    }
}
