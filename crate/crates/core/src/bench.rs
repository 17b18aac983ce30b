//! Build/query loop, recall and work counters, and the text report.

use crate::dd_tree::{desk_eps, DDParams, DDTree};
use crate::error::{domain, Error, Result};
use crate::filter_tree::{FilterTree, QueryOptions};
use crate::instance::{gen_clustered, gen_hamming, gen_sphere, Instance};
use crate::points::{dist, PointSet, Space};
use crate::reductions::hamming_to_sphere;
use crate::tradeoff::{curve_point, default_k, solve_thresholds_with, Target, TradeoffPoint};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    /// Data-independent cap tree.
    Di,
    /// Data-dependent partition tree.
    Dd,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::Di => "di",
            Structure::Dd => "dd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Workload {
    Sphere,
    Hamming,
    Clustered { clusters: usize, radius_factor: f64 },
}

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::Sphere => "sphere",
            Workload::Hamming => "hamming",
            Workload::Clustered { .. } => "clustered",
        }
    }

    pub fn generate(self, n: usize, d: usize, c: f64, q_count: usize, seed: u64) -> Result<Instance> {
        match self {
            Workload::Sphere => gen_sphere(n, d, c, q_count, seed),
            Workload::Hamming => gen_hamming(n, d, c, q_count, seed),
            Workload::Clustered { clusters, radius_factor } => {
                gen_clustered(n, d, c, clusters, radius_factor, q_count, seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub structure: Structure,
    pub workload: Workload,
    pub n: usize,
    pub d: usize,
    pub c: f64,
    pub q_count: usize,
    pub seed: u64,
    /// `None`: `round(√ln n)`.
    pub k: Option<u32>,
    pub success_const: f64,
    /// `None`: balanced point.
    pub rho_q: Option<f64>,
    /// Extra dataset sizes for the exponent fit (empty: no fit).
    pub series: Vec<usize>,
    /// Walk the whole tree instead of stopping at the first acceptable point.
    pub full_walk: bool,
}

impl BenchConfig {
    pub fn new(structure: Structure, n: usize, c: f64, seed: u64) -> BenchConfig {
        BenchConfig {
            structure,
            workload: Workload::Sphere,
            n,
            d: 128,
            c,
            q_count: 200,
            seed,
            k: None,
            success_const: 3.0,
            rho_q: None,
            series: Vec::new(),
            full_walk: false,
        }
    }

    fn target(&self) -> Target {
        self.rho_q.map_or(Target::Balanced, Target::RhoQ)
    }
}

/// The instance in unit-sphere form plus the radii the structures use.
pub struct SphereView {
    pub points: PointSet,
    pub queries: PointSet,
    pub r: f64,
    /// Far radius `c·r` in sphere distance.
    pub far: f64,
    pub accept: f64,
}

impl SphereView {
    /// Approximation factor in sphere distance (differs from `c` for Hamming input).
    pub fn c(&self) -> f64 {
        self.far / self.r
    }
}

pub fn sphere_view(inst: &Instance) -> Result<SphereView> {
    let t = &inst.truth;
    match t.space {
        Space::Hamming => Ok(SphereView {
            points: hamming_to_sphere(&inst.points)?,
            queries: hamming_to_sphere(&inst.queries)?,
            r: t.to_sphere_distance(t.r),
            far: t.to_sphere_distance(t.cr),
            accept: t.to_sphere_distance(t.accept_radius()),
        }),
        _ => Ok(SphereView {
            points: inst.points.clone(),
            queries: inst.queries.clone(),
            r: t.r,
            far: t.cr,
            accept: t.accept_radius(),
        }),
    }
}

/// Data-dependent parameters used by the bench and CLI: library defaults with
/// `eps` raised for low dimensions (see [`desk_eps`]).
pub fn dd_params(dim: usize, k: Option<u32>, rho_q: Option<f64>, success_const: f64) -> DDParams {
    let base = DDParams::default();
    DDParams { eps: desk_eps(dim, base.eps_cover), k, rho_q, success_const, ..base }
}

/// Solved cap-tree parameters for a dataset of size `n`.
pub fn di_params(c: f64, r: f64, target: Target, n: usize, k: Option<u32>, success_const: f64) -> Result<TradeoffPoint> {
    let p = curve_point(c, r, target)?;
    solve_thresholds_with(&p, n, k.unwrap_or_else(|| default_k(n)), success_const)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryRecord {
    pub found: Option<u32>,
    /// Found point verified within the accept radius.
    pub ok: bool,
    pub planted_hit: bool,
    pub nodes: u64,
    pub scanned: u64,
    pub far_scanned: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n: usize,
    pub queries: usize,
    pub recall: f64,
    pub planted_hits: usize,
    pub false_positives: usize,
    pub mean_nodes: f64,
    pub median_nodes: f64,
    pub mean_scanned: f64,
    pub median_scanned: f64,
    pub mean_far_scanned: f64,
    pub stored_points: usize,
    pub node_count: usize,
    /// Human-readable structure parameters.
    pub params: String,
    pub build_secs: f64,
    pub query_secs: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn summarize(n: usize, recs: &[QueryRecord]) -> RunSummary {
    let col = |f: fn(&QueryRecord) -> u64| recs.iter().map(|r| f(r) as f64).collect::<Vec<_>>();
    let (nodes, scanned, far) = (col(|r| r.nodes), col(|r| r.scanned), col(|r| r.far_scanned));
    RunSummary {
        n,
        queries: recs.len(),
        recall: recs.iter().filter(|r| r.ok).count() as f64 / recs.len().max(1) as f64,
        planted_hits: recs.iter().filter(|r| r.planted_hit).count(),
        false_positives: recs.iter().filter(|r| r.found.is_some() && !r.ok).count(),
        mean_nodes: mean(&nodes),
        median_nodes: median(&nodes),
        mean_scanned: mean(&scanned),
        median_scanned: median(&scanned),
        mean_far_scanned: mean(&far),
        stored_points: 0,
        node_count: 0,
        params: String::new(),
        build_secs: 0.0,
        query_secs: 0.0,
    }
}

fn record(view: &SphereView, inst: &Instance, qi: usize, found: Option<u32>) -> QueryRecord {
    let q = view.queries.row(qi);
    let ok = found.is_some_and(|p| dist(q, view.points.row(p as usize)) <= view.accept);
    let planted_hit = found.is_some() && found.map(|p| p as usize) == inst.truth.planted_for(qi);
    QueryRecord { found, ok, planted_hit, ..Default::default() }
}

/// Generates, builds and queries once at size `n`.
pub fn run_once(cfg: &BenchConfig, n: usize) -> Result<RunSummary> {
    let inst = cfg.workload.generate(n, cfg.d, cfg.c, cfg.q_count, cfg.seed)?;
    let view = sphere_view(&inst)?;
    let t0 = Instant::now();
    let mut recs = Vec::with_capacity(view.queries.len());
    let (stored, nodes, params, build_secs);
    match cfg.structure {
        Structure::Di => {
            let p = di_params(view.c(), view.r, cfg.target(), n, cfg.k, cfg.success_const)?;
            let tree = FilterTree::build(&view.points, &p, cfg.seed)?;
            build_secs = t0.elapsed().as_secs_f64();
            let opts = QueryOptions { eta_q: None, stop_at_first: !cfg.full_walk };
            for qi in 0..view.queries.len() {
                let out = tree.query_with(&view.points, view.queries.row(qi), view.accept, opts);
                let mut rec = record(&view, &inst, qi, out.found);
                rec.nodes = out.stats.nodes_visited;
                rec.scanned = out.stats.points_scanned;
                rec.far_scanned = out.stats.far_scanned;
                recs.push(rec);
            }
            stored = tree.stored_points();
            nodes = tree.node_count();
            params = format!(
                "rho_q={:?} rho_u={:?} eta_u={:?} eta_q={:?} T={} K={}",
                p.rho_q, p.rho_u, p.eta_u, p.eta_q, p.t, p.k
            );
        }
        Structure::Dd => {
            // Built for the instance's (c, r); answers are re-checked against the accept radius.
            let c_build = view.c();
            let dp = dd_params(view.points.dim(), cfg.k, cfg.rho_q, cfg.success_const);
            let tree = DDTree::build(&view.points, c_build, view.r, &dp, cfg.seed)?;
            build_secs = t0.elapsed().as_secs_f64();
            for qi in 0..view.queries.len() {
                let out = tree.query(&view.points, view.queries.row(qi), view.accept);
                let mut rec = record(&view, &inst, qi, out.found);
                rec.nodes = out.stats.nodes_visited;
                rec.scanned = out.stats.points_scanned;
                recs.push(rec);
            }
            let st = tree.stats();
            stored = st.stored_points;
            nodes = tree.nodes().len();
            params = format!("c_build={:?} {}", c_build, st.schedule);
        }
    }
    let query_secs = t0.elapsed().as_secs_f64() - build_secs;
    Ok(RunSummary { stored_points: stored, node_count: nodes, params, build_secs, query_secs, ..summarize(n, &recs) })
}

/// Least-squares slope of `ln work` against `ln n`, with `r²`.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<(f64, f64)> {
    if series.len() < 3 {
        return domain(format!("need at least 3 series points, got {}", series.len()));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return domain("series sizes must be strictly increasing");
    }
    if series.iter().any(|&(n, y)| !(n > 0.0 && y > 0.0 && n.is_finite() && y.is_finite())) {
        return domain("series values must be positive and finite");
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, r2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub main: RunSummary,
    pub series: Vec<RunSummary>,
    pub fit: Option<(f64, f64)>,
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.q_count == 0 {
        return Err(Error::Empty("bench needs at least one query".into()));
    }
    let main = run_once(cfg, cfg.n)?;
    let series = cfg.series.iter().map(|&n| run_once(cfg, n)).collect::<Result<Vec<_>>>()?;
    let fit = if series.len() >= 3 {
        Some(fit_exponent(&series.iter().map(|s| (s.n as f64, s.mean_scanned.max(1e-300))).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(BenchReport { config: cfg.clone(), main, series, fit })
}

impl BenchReport {
    /// Everything except wall times; identical across runs with the same config.
    pub fn render_deterministic(&self) -> String {
        let c = &self.config;
        let m = &self.main;
        let mut s = String::from("[config]\n");
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv(&mut s, "structure", c.structure.name().into());
        kv(&mut s, "workload", c.workload.name().into());
        if let Workload::Clustered { clusters, radius_factor } = c.workload {
            kv(&mut s, "clusters", clusters.to_string());
            kv(&mut s, "radius_factor", format!("{radius_factor:?}"));
        }
        kv(&mut s, "n", c.n.to_string());
        kv(&mut s, "d", c.d.to_string());
        kv(&mut s, "c", format!("{:?}", c.c));
        kv(&mut s, "q_count", c.q_count.to_string());
        kv(&mut s, "seed", c.seed.to_string());
        kv(&mut s, "k", c.k.map_or("auto".into(), |k| k.to_string()));
        kv(&mut s, "success_const", format!("{:?}", c.success_const));
        kv(&mut s, "rho_q", c.rho_q.map_or("balanced".into(), |x| format!("{x:?}")));
        kv(&mut s, "full_walk", c.full_walk.to_string());
        s.push_str("[results]\n");
        kv(&mut s, "params", m.params.clone());
        kv(&mut s, "recall", format!("{:?}", m.recall));
        kv(&mut s, "planted_hits", m.planted_hits.to_string());
        kv(&mut s, "false_positives", m.false_positives.to_string());
        kv(&mut s, "mean_nodes_visited", format!("{:?}", m.mean_nodes));
        kv(&mut s, "median_nodes_visited", format!("{:?}", m.median_nodes));
        kv(&mut s, "mean_points_scanned", format!("{:?}", m.mean_scanned));
        kv(&mut s, "median_points_scanned", format!("{:?}", m.median_scanned));
        kv(&mut s, "mean_far_scanned", format!("{:?}", m.mean_far_scanned));
        kv(&mut s, "stored_points", m.stored_points.to_string());
        kv(&mut s, "node_count", m.node_count.to_string());
        if !self.series.is_empty() {
            s.push_str("[series]\nn,recall,mean_nodes,mean_scanned,median_scanned,stored_points\n");
            for r in &self.series {
                let _ = writeln!(
                    s,
                    "{},{:?},{:?},{:?},{:?},{}",
                    r.n, r.recall, r.mean_nodes, r.mean_scanned, r.median_scanned, r.stored_points
                );
            }
        }
        if let Some((slope, r2)) = self.fit {
            let _ = writeln!(s, "[fit]\nslope={slope:?}\nr_squared={r2:?}");
        }
        s
    }

    pub fn render(&self) -> String {
        let mut s = self.render_deterministic();
        let _ = writeln!(s, "[timing]\nbuild_secs={:.6}\nquery_secs={:.6}", self.main.build_secs, self.main.query_secs);
        for r in &self.series {
            let _ = writeln!(s, "series_{}_secs={:.6}", r.n, r.build_secs + r.query_secs);
        }
        s
    }
}

/// Drops the `[timing]` section of a rendered report.
pub fn strip_timing(report: &str) -> &str {
    match report.find("[timing]\n") {
        Some(i) => &report[..i],
        None => report,
    }
}
