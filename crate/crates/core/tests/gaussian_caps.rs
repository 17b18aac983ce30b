use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::SQRT_2;
use tradeoff_ann::gaussian_caps::*;

#[test]
fn alpha_beta_endpoints() {
    let (a, b) = alpha_beta(SQRT_2).unwrap();
    assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
    assert_eq!(alpha_beta(0.0).unwrap(), (1.0, 0.0));
    let (a, b) = alpha_beta(2.0).unwrap();
    assert_eq!(a, -1.0);
    assert!(b.abs() < 1e-15);
    assert!(alpha_beta(2.5).is_err());
    assert!(alpha_beta(-0.1).is_err());
}

#[test]
fn cap_prob_values() {
    assert_eq!(cap_prob(0.0), 0.5);
    // Tabulated upper tail of the standard normal at 1.
    assert!((cap_prob(1.0) - 0.158_655_253_931_457).abs() < 1e-14);
}

#[test]
fn cap_prob_matches_sampling_at_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 2_000_000;
    let hits = (0..trials).filter(|_| rng.sample::<f64, _>(StandardNormal) >= 1.0).count();
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((p - cap_prob(1.0)).abs() < 4.0 * se);
}

#[test]
fn log_tail_asymptotics() {
    let r = -log_cap_prob(8.0) / 32.0;
    assert!((r - 1.0).abs() < 0.15, "{r}");
    // Deep tail stays finite where F itself underflows.
    assert!(cap_prob(40.0) == 0.0 || cap_prob(40.0) < 1e-300);
    let l = log_cap_prob(40.0);
    assert!(l.is_finite() && (l / -800.0 - 1.0).abs() < 0.01);
    // Continuity across the switch to the continued fraction.
    assert!((log_cap_prob(30.0 - 1e-9) - log_cap_prob(30.0)).abs() < 1e-6);
}

#[test]
fn inverse_of_log_cap() {
    for eta in [-2.0, 0.0, 1.5, 7.0, 25.0, 45.0] {
        let back = inv_log_cap_prob(log_cap_prob(eta)).unwrap();
        assert!((back - eta).abs() < 1e-8, "{eta} -> {back}");
    }
    assert!(inv_log_cap_prob(0.1).is_err());
}

#[test]
fn joint_independent_and_coincident() {
    for (a, b) in [(0.0, 0.0), (1.0, -0.5), (3.0, 2.0)] {
        let g = joint_cap_prob(SQRT_2, a, b).unwrap();
        assert!((g - cap_prob(a) * cap_prob(b)).abs() < 1e-12);
    }
    let g = joint_cap_prob(1e-6, 1.0, 1.5).unwrap();
    assert!((g - cap_prob(1.5)).abs() < 1e-5);
    assert!(joint_cap_prob(0.0, 1.0, 1.0).is_err());
    assert!(joint_cap_prob(2.0, 1.0, 1.0).is_err());
}

#[test]
fn joint_against_sampling() {
    let rho = alpha(1.0);
    let k = (1.0 - rho * rho).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 2_000_000u64;
    let mut hits = 0u64;
    for _ in 0..trials {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        hits += (x >= 1.0 && rho * x + k * y >= 1.0) as u64;
    }
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    let g = joint_cap_prob(1.0, 1.0, 1.0).unwrap();
    assert!((g - p).abs() < 3.0 * se, "{g} vs {p} ± {se}");
}

#[test]
fn log_exponents_examples() {
    let e = log_exponents(SQRT_2, 3.0, 3.0).unwrap();
    assert!((e.g_exp - 9.0).abs() < 1e-12);
    let s = 0.8;
    let e = log_exponents(s, 2.0, 0.0).unwrap();
    assert!((e.g_exp - 4.0 / (2.0 * beta(s).powi(2))).abs() < 1e-12);
    let e = log_exponents(1.0, 2.0, 2.0).unwrap();
    assert!((e.g_exp - 8.0 / 3.0).abs() < 1e-12);
    assert!((e.f_exp_u - 2.0).abs() < 1e-12);
}

#[test]
fn large_threshold_consistency() {
    for (s, a, b) in [(1.0, 6.0, 6.0), (0.5, 6.0, 7.0), (1.2, 8.0, 6.5)] {
        let lg = -log_joint_cap_prob(s, a, b).unwrap();
        let ge = log_exponents(s, a, b).unwrap().g_exp;
        assert!((lg / ge - 1.0).abs() < 0.2, "s={s}: {lg} vs {ge}");
    }
}

proptest! {
    #[test]
    fn cap_symmetry(eta in -8.0f64..8.0) {
        prop_assert!((cap_prob(eta) + cap_prob(-eta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_bounded_by_marginals(s in 0.05f64..1.95, a in -3.0f64..5.0, b in -3.0f64..5.0) {
        let g = joint_cap_prob(s, a, b).unwrap();
        prop_assert!(g <= cap_prob(a).min(cap_prob(b)) * (1.0 + 1e-9) + 1e-300);
        prop_assert!(g >= 0.0);
    }

    #[test]
    fn joint_decreasing_in_distance(s1 in 0.05f64..1.9, ds in 0.01f64..0.09, a in -2.0f64..4.0, b in -2.0f64..4.0) {
        let g1 = joint_cap_prob(s1, a, b).unwrap();
        let g2 = joint_cap_prob(s1 + ds, a, b).unwrap();
        prop_assert!(g1 >= g2 * (1.0 - 1e-9));
    }
}
