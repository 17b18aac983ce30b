use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tradeoff_ann::instance::gen_hamming;
use tradeoff_ann::points::{dist, norm, PointSet, Space};
use tradeoff_ann::reductions::*;

#[test]
fn hamming_embedding_is_exact() {
    let inst = gen_hamming(60, 100, 2.0, 1, 3).unwrap();
    let s = hamming_to_sphere(&inst.points).unwrap();
    for i in 0..60 {
        assert!((norm(s.row(i)) - 1.0).abs() < 1e-12);
        for j in 0..60 {
            let h = hamming_distance(inst.points.row(i), inst.points.row(j)) as f64;
            let e = dist(s.row(i), s.row(j));
            assert!((e * e - 4.0 * h / 100.0).abs() < 1e-12);
        }
    }
    let a = PointSet::from_rows(4, Space::Hamming, &[vec![1.0, 1.0, 1.0, 1.0], vec![-1.0; 4]]).unwrap();
    let s = hamming_to_sphere(&a).unwrap();
    assert!((dist(s.row(0), s.row(1)) - 2.0).abs() < 1e-12);
    let q = PointSet::from_rows(4, Space::Hamming, &[vec![1.0, 1.0, 1.0, 1.0], vec![-1.0, 1.0, 1.0, 1.0]]).unwrap();
    let s = hamming_to_sphere(&q).unwrap();
    assert!((dist(s.row(0), s.row(1)) - 1.0).abs() < 1e-12);
    let bad = PointSet::from_rows(2, Space::Euclidean, &[vec![0.5, 1.0]]).unwrap();
    assert!(hamming_to_sphere(&bad).is_err());
}

#[test]
fn jl_distortion() {
    let n = 200;
    let d = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pts = PointSet::new(d, Space::Euclidean, data).unwrap();
    let k = (40.0 * (n as f64).ln()).ceil() as usize;
    let (proj, m) = jl_project(&pts, k, 5).unwrap();
    assert_eq!(m.out_dim, k);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let (i, j) = (t, (t * 7 + 3) % n);
        if i == j {
            continue;
        }
        let a = dist(pts.row(i), pts.row(j));
        let b = dist(proj.row(i), proj.row(j));
        worst = worst.max((b / a - 1.0).abs());
    }
    assert!(worst <= 0.25, "{worst}");
    // The retained map reproduces the projection of the data.
    assert_eq!(m.apply(pts.row(3)), proj.row(3));
}

#[test]
fn jl_orthonormal_square_is_isometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 12;
    let pts = PointSet::new(d, Space::Euclidean, (0..5 * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let m = JlProjection::new(d, d, JlMode::Orthonormal, 3).unwrap();
    let out = m.apply_set(&pts).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert!((dist(pts.row(i), pts.row(j)) - dist(out.row(i), out.row(j))).abs() < 1e-10);
        }
    }
}

#[test]
fn grid_lift_norms_and_distortion() {
    let d = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data: Vec<f64> = (0..300 * d).map(|_| rng.random_range(0.0..60.0)).collect();
    let pts = PointSet::new(d, Space::Euclidean, data).unwrap();
    let lift = grid_lift(&pts, 1.0, 7).unwrap();
    assert!((lift.cube_side - 10.0 * (d as f64).sqrt()).abs() < 1e-12);
    assert!((lift.radius - default_lift_radius(d, 300)).abs() < 1e-12);
    for cube in lift.cubes.values() {
        for (a, &ia) in cube.members.iter().enumerate() {
            let la = cube.lifted.row(a);
            assert!((norm(la) - lift.radius).abs() < 1e-9 * lift.radius);
            for (b, &ib) in cube.members.iter().enumerate() {
                let (pa, pb) = (pts.row(ia as usize), pts.row(ib as usize));
                let orig = dist(pa, pb);
                let lifted = dist(la, cube.lifted.row(b));
                let ca: Vec<f64> = pa.iter().zip(&cube.center).map(|(x, c)| x - c).collect();
                let cb: Vec<f64> = pb.iter().zip(&cube.center).map(|(x, c)| x - c).collect();
                let bound = lift.distortion_bound(norm(&ca), norm(&cb));
                assert!(lifted <= orig + 1e-9);
                assert!(lifted >= orig - bound - 1e-9);
                // The proof's additive form, with the constant for the cube half-diagonal.
                assert!(orig - lifted <= 25.0 * (d * d) as f64 / lift.radius + 1e-9);
            }
        }
        // Query side lands on the same sphere.
        let (key, lq) = lift.lift_query(pts.row(cube.members[0] as usize));
        assert_eq!(key, cube.key);
        assert!((dist(&lq, cube.lifted.row(0))).abs() < 1e-9);
    }
}

#[test]
fn grid_lift_single_point() {
    let pts = PointSet::from_rows(3, Space::Euclidean, &[vec![0.3, -2.0, 5.0]]).unwrap();
    let lift = grid_lift(&pts, 0.5, 1).unwrap();
    assert_eq!(lift.cubes.len(), 1);
    let c = lift.cubes.values().next().unwrap();
    assert!((norm(c.lifted.row(0)) - lift.radius).abs() < 1e-9);
}
