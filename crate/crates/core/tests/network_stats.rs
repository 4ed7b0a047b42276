use noma_lpwa::{generate_deployment, NetworkConfig, RadioProfile};

fn deployment(n: usize, seed: u64) -> noma_lpwa::Deployment {
    let cfg = NetworkConfig { node_count: n, rng_seed: seed, ..NetworkConfig::default() };
    generate_deployment(&cfg, &RadioProfile::lora_default()).unwrap()
}

#[test]
fn mean_distance_is_two_thirds_radius() {
    let dep = deployment(100_000, 3);
    let mean = dep.distances_m().iter().sum::<f64>() / 100_000.0;
    assert!((mean / (2000.0 / 3.0) - 1.0).abs() < 0.02, "mean distance {mean}");
}

#[test]
fn distance_law_passes_ks() {
    // P(d <= x r) = x^2 on the disc
    let n = 20_000;
    let mut u: Vec<f64> = deployment(n, 17).distances_m().iter().map(|d| d / 1000.0).collect();
    u.sort_by(f64::total_cmp);
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = x * x;
            (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value
    assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn fading_has_unit_mean_and_independent_channels() {
    let dep = deployment(20_000, 5);
    let all: Vec<f64> = dep.fading().iter().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    assert!((mean - 1.0).abs() < 0.02, "fading mean {mean}");
    let var = all.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / all.len() as f64;
    assert!((var - 1.0).abs() < 0.05, "fading variance {var}");
    // correlation between channel 0 and 1 draws
    let (a, b) = (&dep.fading()[0], &dep.fading()[1]);
    let cov = a.iter().zip(b).map(|(x, y)| (x - 1.0) * (y - 1.0)).sum::<f64>() / a.len() as f64;
    assert!(cov.abs() < 0.05, "cross-channel covariance {cov}");
}

#[test]
fn gains_follow_path_loss() {
    let dep = deployment(500, 1);
    for k in 0..dep.channel_count() {
        for n in 0..dep.node_count() {
            let want = dep.fading()[k][n] * dep.distance_m(n).powf(-3.5);
            assert!((dep.gain(k, n) / want - 1.0).abs() < 1e-12);
            let gamma = dep.normalized_gain(k, n).unwrap();
            assert!((gamma * dep.noise_mw() / dep.gain(k, n) - 1.0).abs() < 1e-12);
        }
    }
}
