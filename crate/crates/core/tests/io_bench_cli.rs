use std::collections::BTreeMap;
use std::process::Command;
use tempfile::tempdir;
use tradeoff_ann::bench::*;
use tradeoff_ann::instance::{gen_clustered, gen_hamming, gen_sphere};
use tradeoff_ann::io::*;
use tradeoff_ann::points::{PointSet, Space};
use tradeoff_ann::Error;

const BIN: &str = env!("CARGO_BIN_EXE_tradeoff-ann");

fn run(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(BIN).args(args).output().unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

#[test]
fn points_roundtrip_sphere_and_hamming() {
    let s = gen_sphere(37, 9, 2.0, 1, 1).unwrap();
    let mut buf = Vec::new();
    encode_points(&s.points, &mut buf).unwrap();
    assert_eq!(buf.len(), 32 + 37 * 9 * 4);
    let back = decode_points(&mut buf.as_slice()).unwrap();
    for (a, b) in back.rows().zip(s.points.rows()) {
        assert!((tradeoff_ann::points::norm(a) - 1.0).abs() < 1e-12);
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-6);
        }
    }
    let h = gen_hamming(5, 13, 2.0, 1, 2).unwrap();
    let mut buf = Vec::new();
    encode_points(&h.points, &mut buf).unwrap();
    assert_eq!(buf.len(), 32 + 5 * 2);
    assert_eq!(decode_points(&mut buf.as_slice()).unwrap(), h.points);
}

#[test]
fn hamming_bit_layout() {
    let mut row = vec![1.0; 10];
    row[0] = -1.0;
    row[9] = -1.0;
    let p = PointSet::from_rows(10, Space::Hamming, &[row]).unwrap();
    let mut buf = Vec::new();
    encode_points(&p, &mut buf).unwrap();
    assert_eq!(&buf[..8], DATA_MAGIC);
    assert_eq!(&buf[32..], &[0b0000_0001, 0b0000_0010]);
}

#[test]
fn corrupt_files_are_format_errors() {
    let s = gen_sphere(4, 3, 2.0, 1, 1).unwrap();
    let mut buf = Vec::new();
    encode_points(&s.points, &mut buf).unwrap();
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(decode_points(&mut bad.as_slice()), Err(Error::Format(_))));
    let short = &buf[..buf.len() - 1];
    assert!(decode_points(&mut &short[..]).is_err());
    let mut long = buf.clone();
    long.push(0);
    assert!(decode_points(&mut long.as_slice()).is_err());
    let mut ver = buf.clone();
    ver[8] = 9;
    assert!(decode_points(&mut ver.as_slice()).is_err());
    assert!(decode_tree(&mut &b"TANNTREE\x01\0\0\0\x07\0\0\0"[..]).is_err());
}

#[test]
fn dataset_roundtrip_through_files() {
    let dir = tempdir().unwrap();
    let stem = dir.path().join("ds");
    let inst = gen_clustered(64, 16, 2.0, 2, 0.3, 8, 4).unwrap();
    let params = BTreeMap::from([("c".to_string(), 2.0)]);
    write_dataset(&stem, &inst, "clustered", 4, params).unwrap();
    let (back, meta) = read_dataset(&stem).unwrap();
    assert_eq!(meta.n, 64);
    assert_eq!(meta.q_count, 8);
    assert_eq!(meta.seed, 4);
    assert_eq!(back.truth.planted_pairs, inst.truth.planted_pairs);
    let (_, _, m) = dataset_paths(&stem);
    let (again, _) = read_dataset(&m).unwrap();
    assert_eq!(again.points, back.points);
}

#[test]
fn fit_exponent_examples() {
    let s: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&n: &f64| (n, 5.0 * n.powf(0.3))).collect();
    let (b, r2) = fit_exponent(&s).unwrap();
    assert!((b - 0.3).abs() < 1e-12);
    assert!((r2 - 1.0).abs() < 1e-12);
    let flat = [(10.0, 2.0), (20.0, 2.0), (40.0, 2.0)];
    assert_eq!(fit_exponent(&flat).unwrap(), (0.0, 1.0));
    assert!(fit_exponent(&s[..2]).is_err());
    assert!(fit_exponent(&[(10.0, 1.0), (5.0, 1.0), (20.0, 1.0)]).is_err());
    assert!(fit_exponent(&[(10.0, 1.0), (20.0, 0.0), (40.0, 1.0)]).is_err());
    assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
    assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
}

#[test]
fn bench_is_deterministic_and_sound() {
    for structure in [Structure::Di, Structure::Dd] {
        let cfg = BenchConfig { d: 64, q_count: 50, ..BenchConfig::new(structure, 600, 2.0, 3) };
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&cfg).unwrap();
        assert_eq!(a.render_deterministic(), b.render_deterministic());
        assert_eq!(a.main.false_positives, 0);
        assert!(a.main.recall >= 0.8, "{} recall {}", structure.name(), a.main.recall);
        assert_eq!(strip_timing(&a.render()), a.render_deterministic());
    }
    let h = BenchConfig { d: 64, q_count: 30, workload: Workload::Hamming, ..BenchConfig::new(Structure::Dd, 300, 2.0, 3) };
    assert_eq!(run_bench(&h).unwrap().main.false_positives, 0);
}

#[test]
fn cli_gen_build_query() {
    let dir = tempdir().unwrap();
    let stem = dir.path().join("s");
    let tree = dir.path().join("s.tree");
    let (s, t) = (stem.to_str().unwrap(), tree.to_str().unwrap());
    let (code, _, err) = run(&["gen", "--kind", "sphere", "--n", "300", "--d", "32", "--queries", "20", "--seed", "2", "--out", s]);
    assert_eq!(code, 0, "{err}");
    for structure in ["di", "dd"] {
        let (code, _, err) = run(&["build", "--data", s, "--structure", structure, "--seed", "1", "--out", t]);
        assert_eq!(code, 0, "{err}");
        let (code, out, err) = run(&["query", "--tree", t, "--data", s]);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "query,found,distance,nodes_visited,points_scanned");
        assert_eq!(lines.len(), 21);
        assert!(err.contains("answered"));
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempdir().unwrap();
    let junk = dir.path().join("junk.meta.json");
    std::fs::write(&junk, "not json").unwrap();
    // Malformed input → 2.
    assert_eq!(run(&["build", "--data", junk.to_str().unwrap(), "--out", "/dev/null"]).0, 2);
    // Missing file → 2.
    assert_eq!(run(&["build", "--data", "/nonexistent/x", "--out", "/dev/null"]).0, 2);
    // Usage error → 2.
    assert_eq!(run(&["solve"]).0, 2);
    // Domain error → 3.
    assert_eq!(run(&["solve", "--c", "0.5"]).0, 3);
    assert_eq!(run(&["lb", "--c", "2", "--list-of-points", "--rho-u", "100"]).0, 3);
}

#[test]
fn cli_solve_and_lb_values() {
    let (code, out, _) = run(&["solve", "--c", "2", "--regime", "random", "--rho-q", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.777777777778"), "{out}");
    assert!(out.contains("1.777777777778"), "{out}");
    let (code, out, _) = run(&["lb", "--c", "2", "--list-of-points", "--rho-u", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.750000000000"), "{out}");
    let (code, out, _) = run(&["lb", "--c", "2", "--one-probe"]);
    assert_eq!(code, 0);
    assert!(out.contains("4.000000000000"), "{out}");
}
