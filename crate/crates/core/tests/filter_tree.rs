use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use tradeoff_ann::filter_tree::*;
use tradeoff_ann::instance::gen_sphere;
use tradeoff_ann::io::{decode_tree, encode_tree, AnyTree};
use tradeoff_ann::points::{dist, PointSet, Space};
use tradeoff_ann::tradeoff::{curve_point, solve_thresholds_with, Target, TradeoffPoint};

const R: f64 = SQRT_2 / 2.0;

fn params(n: usize, k: u32) -> TradeoffPoint {
    solve_thresholds_with(&curve_point(2.0, R, Target::Balanced).unwrap(), n, k, 3.0).unwrap()
}

#[test]
fn build_errors() {
    let p = params(100, 2);
    let empty = PointSet::with_capacity(4, Space::Sphere, 0);
    assert!(FilterTree::build(&empty, &p, 0).is_err());
    let off = PointSet::from_rows(2, Space::Euclidean, &[vec![1.0, 1.0]]).unwrap();
    assert!(FilterTree::build(&off, &p, 0).is_err());
    let unsolved = curve_point(2.0, R, Target::Balanced).unwrap();
    let one = PointSet::from_rows(2, Space::Sphere, &[vec![1.0, 0.0]]).unwrap();
    assert!(FilterTree::build(&one, &unsolved, 0).is_err());
}

#[test]
fn single_point_stored_once_per_leaf() {
    let one = PointSet::from_rows(3, Space::Sphere, &[vec![0.6, 0.8, 0.0]]).unwrap();
    let tree = FilterTree::build(&one, &params(1000, 2), 4).unwrap();
    let mut leaves = 0;
    tree.walk(|v| {
        if v.level == 2 {
            assert_eq!(v.points, &[0]);
            leaves += 1;
        }
    });
    assert_eq!(tree.stored_points(), leaves);
    tree.replay(&one).unwrap();
}

#[test]
fn huge_threshold_gives_bare_root() {
    let inst = gen_sphere(50, 16, 2.0, 1, 1).unwrap();
    let mut p = params(50, 2);
    p.eta_u = 50.0;
    let tree = FilterTree::build(&inst.points, &p, 1).unwrap();
    assert_eq!(tree.node_count(), 1);
    assert_eq!(tree.stored_points(), 0);
}

#[test]
fn replay_and_depth() {
    let inst = gen_sphere(1500, 64, 2.0, 20, 2).unwrap();
    let p = params(1500, 3);
    let tree = FilterTree::build(&inst.points, &p, 9).unwrap();
    tree.replay(&inst.points).unwrap();
    // Leaves only at level K; every non-root node non-empty.
    let mut parent_level: HashMap<usize, u32> = HashMap::new();
    tree.walk(|v| {
        if v.children.is_empty() && v.points.is_empty() {
            assert!(v.level < 3);
        }
        assert!(v.level <= 3);
        if v.level == 3 {
            assert!(!v.points.is_empty());
        }
        for c in v.children.clone() {
            parent_level.insert(c, v.level);
        }
    });
    assert_eq!(parent_level.len(), tree.node_count() - 1);
    // A different dataset is refused.
    let other = gen_sphere(1500, 64, 2.0, 1, 3).unwrap();
    assert!(tree.replay(&other.points).is_err());
}

#[test]
fn deterministic_build() {
    let inst = gen_sphere(800, 32, 2.0, 1, 5).unwrap();
    let p = params(800, 2);
    assert_eq!(FilterTree::build(&inst.points, &p, 3).unwrap(), FilterTree::build(&inst.points, &p, 3).unwrap());
}

#[test]
fn raising_query_threshold_never_adds_work() {
    let inst = gen_sphere(2000, 64, 2.0, 40, 6).unwrap();
    let p = params(2000, 3);
    let tree = FilterTree::build(&inst.points, &p, 6).unwrap();
    for q in inst.queries.rows() {
        let mut last = u64::MAX;
        for bump in [0.0, 0.2, 0.5, 1.0, 3.0] {
            let o = QueryOptions { eta_q: Some(p.eta_q + bump), stop_at_first: false };
            let v = tree.query_with(&inst.points, q, 1.0, o).stats.nodes_visited;
            assert!(v <= last);
            last = v;
        }
        let o = QueryOptions { eta_q: Some(1e9), stop_at_first: false };
        let s = tree.query_with(&inst.points, q, 1.0, o);
        assert_eq!(s.found, None);
        assert_eq!(s.stats.leaves_visited, 0);
    }
}

#[test]
fn answers_are_sound_and_stored_points_found() {
    let inst = gen_sphere(2000, 128, 2.0, 200, 7).unwrap();
    let p = params(2000, 3);
    let tree = FilterTree::build(&inst.points, &p, 7).unwrap();
    let acc = inst.truth.accept_radius();
    let mut hits = 0;
    for q in inst.queries.rows() {
        if let Some(f) = tree.query(&inst.points, q, acc).found {
            assert!(dist(q, inst.points.row(f as usize)) <= acc);
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.85 * 200.0, "recall {hits}/200");
    // Querying with a stored point: found whenever one of its leaves is reached.
    let mut leaves_of: HashMap<u32, usize> = HashMap::new();
    tree.walk(|v| v.points.iter().for_each(|&x| *leaves_of.entry(x).or_default() += 1));
    for i in 0..50u32 {
        let o = tree.query(&inst.points, inst.points.row(i as usize), 1e-9);
        if leaves_of.contains_key(&i) && o.stats.leaves_visited > 0 {
            assert!(o.found.is_some() || o.stats.points_scanned > 0);
        }
    }
}

#[test]
fn serialization_roundtrip() {
    let inst = gen_sphere(500, 32, 2.0, 10, 8).unwrap();
    let tree = FilterTree::build(&inst.points, &params(500, 2), 8).unwrap();
    let mut buf = Vec::new();
    encode_tree(&AnyTree::Di(tree.clone()), &mut buf).unwrap();
    let AnyTree::Di(back) = decode_tree(&mut buf.as_slice()).unwrap() else { panic!("wrong kind") };
    assert_eq!(back, tree);
    for q in inst.queries.rows() {
        assert_eq!(back.query(&inst.points, q, 1.2), tree.query(&inst.points, q, 1.2));
    }
}
