use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tradeoff_ann::lower_bounds::*;
use tradeoff_ann::tradeoff::random_curve_rho_u;

/// `T_σ f(x) = Σ_y f(y) Π_i w(x_i, y_i)` by direct summation.
fn noise_brute(f: &[f64], d: u32, sigma: f64) -> Vec<f64> {
    let (keep, flip) = ((1.0 + sigma) / 2.0, (1.0 - sigma) / 2.0);
    (0..f.len())
        .map(|x| {
            (0..f.len())
                .map(|y| {
                    let h = ((x ^ y) as u32).count_ones() as i32;
                    f[y] * flip.powi(h) * keep.powi(d as i32 - h)
                })
                .sum()
        })
        .collect()
}

#[test]
fn noise_operator_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in [1u32, 3, 6] {
        let f: Vec<f64> = (0..1 << d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for sigma in [0.0, 0.3, 0.9, 1.0] {
            let got = noise_operator_apply(&f, sigma).unwrap();
            let want = noise_brute(&f, d, sigma);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn characters_are_eigenfunctions() {
    let d = 5u32;
    let sigma = 0.4;
    for s in 0..(1u32 << d) {
        let chi: Vec<f64> = (0..1u32 << d).map(|x| if (x & s).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let t = noise_operator_apply(&chi, sigma).unwrap();
        let lam = sigma.powi(s.count_ones() as i32);
        for (a, b) in t.iter().zip(&chi) {
            assert!((a - lam * b).abs() < 1e-12);
        }
    }
}

#[test]
fn noise_operator_self_adjoint_and_mean_preserving() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f: Vec<f64> = (0..256).map(|_| rng.random()).collect();
    let g: Vec<f64> = (0..256).map(|_| rng.random()).collect();
    let tf = noise_operator_apply(&f, 0.6).unwrap();
    let tg = noise_operator_apply(&g, 0.6).unwrap();
    assert!((inner(&tf, &g) - inner(&f, &tg)).abs() < 1e-12);
    let ones = vec![1.0; 256];
    assert!((inner(&tf, &ones) - inner(&f, &ones)).abs() < 1e-12);
}

#[test]
fn hypercontractivity_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 8u32;
    for _ in 0..100 {
        let sigma: f64 = rng.random_range(0.05..0.95);
        let p: f64 = rng.random_range(1.01..6.0);
        let np = NoiseParams::from_p(sigma, p).unwrap();
        let pick = |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(1..60);
            let m: Vec<u32> = (0..k).map(|_| rng.random_range(0..1u32 << d)).collect();
            indicator(d, &m).unwrap()
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let r = hypercontractive_check(&a, &b, &np).unwrap();
        assert!(r.holds, "{r:?} σ={sigma} p={p}");
    }
}

#[test]
fn hypercontractivity_sigma_zero_is_product() {
    let a = hamming_ball(6, 0, 2).unwrap();
    let b = hamming_ball(6, 63, 1).unwrap();
    let r = hypercontractive_check(&a, &b, &NoiseParams::new(0.0, 1.0, 3.0).unwrap()).unwrap();
    let (ma, mb) = (22.0 / 64.0, 7.0 / 64.0);
    assert!((r.lhs - ma * mb).abs() < 1e-15);
    assert!((r.rhs - ma * mb.powf(1.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn hamming_ball_sizes() {
    let b = hamming_ball(10, 0b1010101010, 3).unwrap();
    assert_eq!(b.iter().sum::<f64>(), (1 + 10 + 45 + 120) as f64);
    assert!(hamming_ball(17, 0, 1).is_err());
    assert!(indicator(4, &[16]).is_err());
}

#[test]
fn check_rejects_bad_tables() {
    let np = NoiseParams::from_p(0.5, 2.0).unwrap();
    let a = hamming_ball(4, 0, 1).unwrap();
    assert!(hypercontractive_check(&a, &hamming_ball(5, 0, 1).unwrap(), &np).is_err());
    assert!(hypercontractive_check(&a, &vec![0.0; 16], &np).is_err());
}

#[test]
fn robust_expansion_examples() {
    let np = NoiseParams::new(0.5, 1.5, 1.5).unwrap();
    // γ = 1: m^{1 + 1 − 1.5} = √m.
    assert!((robust_expansion_lb(100.0, 1.0, &np).unwrap() - 10.0).abs() < 1e-12);
    assert!((robust_expansion_lb(100.0, 0.5, &np).unwrap() - 10.0 * 0.5f64.powf(1.5)).abs() < 1e-12);
    assert!(robust_expansion_lb(0.5, 1.0, &np).is_err());
    assert!(robust_expansion_lb(10.0, 0.0, &np).is_err());
}

#[test]
fn list_of_points_equals_random_curve_at_root_c() {
    // Hamming c is Euclidean √c; the lower bound coincides with the upper curve.
    for c in [1.5, 2.0, 3.0, 5.0] {
        let hi = list_of_points_max_rho_u(c).unwrap();
        assert!((hi - (2.0 * c - 1.0) / ((c - 1.0) * (c - 1.0))).abs() < 1e-12);
        assert!((list_of_points_rho_q(c, 0.0).unwrap() - (2.0 * c - 1.0) / (c * c)).abs() < 1e-12);
        for i in 1..20 {
            let u = hi * i as f64 / 20.0;
            let q = list_of_points_rho_q(c, u).unwrap();
            let back = random_curve_rho_u(c.sqrt(), q).unwrap();
            assert!((back - u).abs() < 1e-9, "c={c} u={u} back={back}");
        }
    }
}

#[test]
fn list_of_points_detail_consistent() {
    let c = 2.0;
    let sigma = NoiseParams::sigma_for(c).unwrap();
    for i in 1..30 {
        let u = 2.9 * i as f64 / 30.0;
        let (q, regime, p, qq) = list_of_points_detail(c, u).unwrap();
        assert!(((p - 1.0) * (qq - 1.0) - sigma * sigma).abs() < 1e-9);
        assert!(((1.0 + u) * (1.0 - qq) + qq / p - q).abs() < 1e-9);
        let low = u <= 1.0 / (2.0 * c - 1.0);
        assert_eq!(regime == LopRegime::Low, low);
    }
}

#[test]
fn one_probe_limits() {
    assert_eq!(one_probe_space_exponent(2.0).unwrap(), 4.0);
    assert!((one_probe_space_exponent(3.0).unwrap() - 2.25).abs() < 1e-12);
    let mut last = 0.0;
    for e in [4.0, 6.0, 10.0, 30.0, 100.0, 300.0] {
        let v = one_probe_schedule_exponent(2.0, 10f64.powf(e)).unwrap();
        assert!(v > last && v < 4.0);
        last = v;
    }
    assert!(4.0 - last < 0.2);
    assert!(one_probe_schedule_exponent(2.0, 10.0).is_err());
    assert!(one_probe_space_exponent(1.0).is_err());
}
