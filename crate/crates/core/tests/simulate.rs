use proptest::prelude::*;
use tournament_core::noise::NoiseDistribution;
use tournament_core::rank_stats::compute_beta;
use tournament_core::simulate::{mc_beta, mc_rank_probabilities, SimulationConfig};

fn cfg(samples: u64, seed: u64) -> SimulationConfig {
    SimulationConfig {
        samples,
        seed,
        ..SimulationConfig::default()
    }
}

#[test]
fn same_seed_same_estimates() {
    let d = NoiseDistribution::burr();
    let a = mc_beta(&d, 6, &cfg(20_000, 3)).unwrap();
    let b = mc_beta(&d, 6, &cfg(20_000, 3)).unwrap();
    assert_eq!(a, b);
    let c = mc_beta(&d, 6, &cfg(20_000, 4)).unwrap();
    assert_ne!(a.estimates, c.estimates);
}

#[test]
fn normal_beta_within_noise() {
    let d = NoiseDistribution::normal(1.0).unwrap();
    let exact = compute_beta(&d, 5).unwrap();
    let mc = mc_beta(&d, 5, &cfg(400_000, 11)).unwrap();
    for (e, x) in mc.estimates.iter().zip(exact.beta()) {
        assert!(e.z_score(*x).abs() < 4.5, "{e:?} vs {x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn estimates_are_coherent(seed in any::<u64>(), n in 2usize..8, delta in -0.5f64..0.5) {
        let d = NoiseDistribution::gumbel();
        let c = cfg(2_000, seed);
        let p = mc_rank_probabilities(&d, n, delta, &c).unwrap();
        let total: f64 = p.iter().map(|e| e.value).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        // paired differences: every replication leaves one rank and enters another
        let beta = mc_beta(&d, n, &c).unwrap();
        let sum: f64 = beta.estimates.iter().map(|e| e.value).sum();
        prop_assert!(sum.abs() < 1e-9);
        let ones = vec![1.0; n];
        prop_assert_eq!(beta.combination(&ones).unwrap().value, 0.0);
    }
}
