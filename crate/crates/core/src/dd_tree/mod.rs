//! Data-dependent partition tree.
//!
//! `ProcessSphere` handles points on a sphere `∂B(o, R)`: it stores leaves at
//! depth `K`, a single point when `r2 ≥ 2R`, and otherwise — if the target
//! exponents are not reachable at the current geometry — carves dense clusters
//! (≥ τ·m points within `(√2 − ε)R` of a sphere point) into `ProcessBall`
//! children before one layer of Gaussian caps over the remainder.
//! `ProcessBall` snaps radii to multiples of `δ·r1` and builds one sphere
//! child per (annulus, possible query radius) pair, with thresholds mapped by
//! [`project_distance`].
//!
//! Distances are rescaled so that `r1 = 1` at the root. Answers are always
//! re-checked against the original points.

pub mod seb;

use crate::error::{domain, Error, Result};
use crate::filter_tree::root_key;
use crate::gaussian_caps::{alpha, beta};
use crate::points::{dist2, dot, norm, PointSet};
use crate::reductions::{grid_lift_with_radius, default_lift_radius, GridLift, JlMode, JlProjection};
use crate::rng::{derive, fill_gaussian, keyed, tag};
use crate::tradeoff::{curve_point_geometry, default_k, solve_thresholds_with, Target, TradeoffPoint};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::SQRT_2;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DDParams {
    /// Dense clusters live in balls of radius `(√2 − eps)·R`.
    pub eps: f64,
    /// Annulus width as a fraction of `r1`.
    pub delta: f64,
    /// A cluster needs at least `cluster_tau·m` points.
    pub cluster_tau: f64,
    /// Absolute floor on the cluster size, so small nodes do not shatter into singletons.
    pub min_cluster: usize,
    /// Depth; `None` means `round(√ln n)`.
    pub k: Option<u32>,
    pub ball_depth_cap: u32,
    /// Target exponents; `None` means the balanced point `1/(2c² − 1)`.
    pub rho_q: Option<f64>,
    pub rho_u: Option<f64>,
    /// Relative slack on the trade-off inequality; geometry within it counts as failing,
    /// so the cluster search runs.
    pub line9_tol: f64,
    /// Added to the target `ρ_q` when picking cap thresholds.
    pub line19_slack: f64,
    /// Candidate balls are widened by `1 + eps_cover`.
    pub eps_cover: f64,
    pub seb_tol: f64,
    /// `T = ⌈C / G⌉`.
    pub success_const: f64,
    /// Johnson–Lindenstrauss target dimension; `None` skips the projection.
    pub jl_dim: Option<usize>,
    /// Lifted sphere radius; `None` means `d²·ln ln n`.
    pub lift_radius: Option<f64>,
    /// Always use the grid lift, even when the input already lies on a sphere.
    pub force_lift: bool,
    /// Only pair annulus `i` with query radius `j` when `|i − j| ≤ window`.
    pub annulus_window: Option<u32>,
}

impl Default for DDParams {
    fn default() -> Self {
        DDParams {
            eps: 0.15,
            delta: 0.05,
            cluster_tau: 0.02,
            min_cluster: 16,
            k: None,
            ball_depth_cap: 8,
            rho_q: None,
            rho_u: None,
            line9_tol: 1e-9,
            line19_slack: 0.0,
            eps_cover: 0.05,
            seb_tol: 1e-4,
            success_const: crate::tradeoff::DEFAULT_SUCCESS_CONST,
            jl_dim: None,
            lift_radius: None,
            force_lift: false,
            annulus_window: None,
        }
    }
}

impl DDParams {
    pub fn validate(&self, c: f64) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("delta", self.delta), ("cluster_tau", self.cluster_tau)] {
            if !(v > 0.0 && v < 1.0) {
                return domain(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if self.ball_depth_cap < 1 {
            return domain("ball_depth_cap must be at least 1");
        }
        if !(c > 1.0 + 4.0 * self.delta) {
            return domain(format!(
                "c = {c} must exceed 1 + 4·delta = {} so annulus thresholds stay ordered",
                1.0 + 4.0 * self.delta
            ));
        }
        if !(self.success_const > 0.0) || !(self.seb_tol > 0.0) || !(self.eps_cover >= 0.0) {
            return domain("success_const and seb_tol must be positive, eps_cover non-negative");
        }
        Ok(())
    }

    fn targets(&self, c: f64) -> (f64, f64) {
        let bal = 1.0 / (2.0 * c * c - 1.0);
        match (self.rho_q, self.rho_u) {
            (Some(q), Some(u)) => (q, u),
            (Some(q), None) => (q, crate::tradeoff::random_curve_rho_u(c, q).unwrap_or(bal)),
            (None, Some(u)) => {
                // Invert the random curve for ρ_q.
                let c2 = c * c;
                let x = ((2.0 * c2 - 1.0).sqrt() - (c2 - 1.0) * u.sqrt()).max(0.0) / c2;
                (x * x, u)
            }
            (None, None) => (bal, bal),
        }
    }
}

/// Smallest `eps` (never below the 0.15 default) for which a widened cluster
/// ball on the unit sphere only captures points whose inner product with the
/// centre exceeds 2.7 standard deviations of a random pair in dimension `dim`.
/// Below that, uniformly random data already looks "dense" and gets carved.
pub fn desk_eps(dim: usize, eps_cover: f64) -> f64 {
    let t = (2.7 / (dim.max(1) as f64).sqrt()).min(0.9);
    let reach = (2.0 * (1.0 - t)).sqrt() / (1.0 + eps_cover);
    (SQRT_2 - reach).max(0.15)
}

/// `√(R1·(r² − (R1 − R2)²)/R2)`: distance from a point on the sphere of radius
/// `R1` to the radial projection onto that sphere of a point at distance `r`
/// on the concentric sphere of radius `R2`.
pub fn project_distance(r1_radius: f64, r2_radius: f64, r: f64) -> Result<f64> {
    if !(r1_radius > 0.0) || !(r2_radius > 0.0) {
        return domain(format!("radii {r1_radius}, {r2_radius} must be positive"));
    }
    let gap = r1_radius - r2_radius;
    // Annulus radii are multiples of one step, so `r = |gap|` arrives with rounding noise.
    if r < gap.abs() * (1.0 - 1e-12) {
        return domain(format!("distance {r} is below the radius gap {}", gap.abs()));
    }
    Ok((r1_radius * (r * r - gap * gap) / r2_radius).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub r1: f64,
    pub r2: f64,
    /// Index into the tree's centre table.
    pub center: u32,
    pub radius: f64,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapLayer {
    pub key: u64,
    pub eta_u: f64,
    pub eta_q: f64,
    pub t: u64,
    pub rho_q: f64,
    pub rho_u: f64,
    pub r_star: f64,
    /// `(slot, child node)` in slot order.
    pub children: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusChild {
    pub i: u32,
    pub j: u32,
    pub node: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleReason {
    /// `r2 ≥ 2R` on a sphere.
    SphereBaseCase,
    /// `r1 + 2R ≤ r2` in a ball.
    TrivialBall,
    /// The whole input is one point.
    SingleInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DdNode {
    SphereInner {
        geo: Geometry,
        /// Whether the trade-off check failed and cluster carving ran.
        carved: bool,
        clusters: Vec<u32>,
        caps: Option<CapLayer>,
    },
    BallInner {
        geo: Geometry,
        /// Annulus width `δ·r1`.
        step: f64,
        trivial: bool,
        /// Sorted by `(j, i)`.
        children: Vec<AnnulusChild>,
    },
    LeafList {
        geo: Geometry,
        first: u32,
        len: u32,
    },
    SinglePoint {
        geo: Geometry,
        point: u32,
        reason: SingleReason,
    },
}

impl DdNode {
    pub fn geometry(&self) -> &Geometry {
        match self {
            DdNode::SphereInner { geo, .. }
            | DdNode::BallInner { geo, .. }
            | DdNode::LeafList { geo, .. }
            | DdNode::SinglePoint { geo, .. } => geo,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DdNode::SphereInner { .. } => "sphere",
            DdNode::BallInner { .. } => "ball",
            DdNode::LeafList { .. } => "leaf",
            DdNode::SinglePoint { .. } => "single",
        }
    }
}

/// How queries reach the root sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// The rescaled input already lies on a sphere of this radius about the origin.
    Sphere { radius: f64 },
    /// Shifted-grid lift; one root per occupied cube.
    Lift(GridLift),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DdBuildStats {
    pub sphere_nodes: usize,
    pub ball_nodes: usize,
    pub leaf_nodes: usize,
    pub single_nodes: usize,
    pub stored_points: usize,
    pub clusters_carved: usize,
    pub max_cluster_fanout: usize,
    pub max_ball_depth: u32,
    /// Largest `|‖p − o‖ − R| / R` seen at a sphere node.
    pub max_sphere_error: f64,
    /// Sphere nodes whose cap thresholds could not be solved and stored their points instead.
    pub fallback_leaves: usize,
    pub schedule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DDTree {
    pub(crate) c: f64,
    pub(crate) r: f64,
    pub(crate) params: DDParams,
    pub(crate) seed: u64,
    pub(crate) n: usize,
    pub(crate) dim: usize,
    pub(crate) fingerprint: u64,
    pub(crate) k: u32,
    pub(crate) jl: Option<JlProjection>,
    pub(crate) frame: Frame,
    pub(crate) roots: BTreeMap<Vec<i64>, u32>,
    pub(crate) nodes: Vec<DdNode>,
    pub(crate) centers: Vec<Vec<f64>>,
    pub(crate) leaf_points: Vec<u32>,
    pub(crate) stats: DdBuildStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DdQueryStats {
    pub nodes_visited: u64,
    pub balls_entered: u64,
    pub clusters_probed: u64,
    pub points_scanned: u64,
    pub inner_products: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DdQueryOutcome {
    pub found: Option<u32>,
    pub stats: DdQueryStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub nodes_checked: usize,
    pub min_ratio: f64,
    pub max_r2: f64,
    pub max_ball_depth: u32,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Coordinates that one or more nodes refer to by row.
struct Work {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<u32>,
}

impl Work {
    fn row(&self, i: u32) -> &[f64] {
        &self.coords[i as usize * self.dim..(i as usize + 1) * self.dim]
    }
}

struct Builder<'a> {
    p: &'a DDParams,
    n: usize,
    k: u32,
    target: (f64, f64),
    nodes: Vec<DdNode>,
    centers: Vec<Vec<f64>>,
    leaf_points: Vec<u32>,
    stats: DdBuildStats,
    caps_cache: HashMap<(u64, u64), Option<TradeoffPoint>>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, node: DdNode) -> u32 {
        match &node {
            DdNode::SphereInner { .. } => self.stats.sphere_nodes += 1,
            DdNode::BallInner { .. } => self.stats.ball_nodes += 1,
            DdNode::LeafList { len, .. } => {
                self.stats.leaf_nodes += 1;
                self.stats.stored_points += *len as usize;
            }
            DdNode::SinglePoint { .. } => {
                self.stats.single_nodes += 1;
                self.stats.stored_points += 1;
            }
        }
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    fn add_center(&mut self, c: Vec<f64>) -> u32 {
        self.centers.push(c);
        (self.centers.len() - 1) as u32
    }

    /// Cap thresholds at normalised geometry `(near, far)`: the curve point
    /// with the target `ρ_q` (plus slack), or the `ρ_u = 0` end when the
    /// target is beyond reach of this geometry.
    fn cap_point(&mut self, near: f64, far: f64) -> Option<TradeoffPoint> {
        let key = (near.to_bits(), far.to_bits());
        if let Some(p) = self.caps_cache.get(&key) {
            return *p;
        }
        let want = self.target.0 + self.p.line19_slack;
        let point = curve_point_geometry(near, far, Target::RhoQ(want))
            .or_else(|_| curve_point_geometry(near, far, Target::RhoU(0.0)))
            .and_then(|pt| solve_thresholds_with(&pt, self.n, self.k, self.p.success_const))
            .ok()
            .filter(|pt| pt.t <= u32::MAX as u64);
        self.caps_cache.insert(key, point);
        point
    }

    #[allow(clippy::too_many_arguments)]
    fn sphere(
        &mut self,
        work: &Arc<Work>,
        rows: Vec<u32>,
        r1: f64,
        r2: f64,
        center: u32,
        radius: f64,
        level: u32,
        key: u64,
        depth: u32,
    ) -> Result<u32> {
        let geo = Geometry { r1, r2, center, radius, level };
        let o = self.centers[center as usize].clone();
        for &i in &rows {
            let e = (dist2(work.row(i), &o).sqrt() - radius).abs() / radius;
            self.stats.max_sphere_error = self.stats.max_sphere_error.max(e);
        }
        if level == self.k {
            return Ok(self.leaf(work, &rows, geo));
        }
        if r2 >= 2.0 * radius {
            let point = work.ids[rows[0] as usize];
            return Ok(self.push(DdNode::SinglePoint { geo, point, reason: SingleReason::SphereBaseCase }));
        }
        let (near, far) = (r1 / radius, r2 / radius);
        let (xq, xu) = (self.target.0.sqrt(), self.target.1.sqrt());
        let lhs = (1.0 - alpha(near) * alpha(far)) * xq + (alpha(near) - alpha(far)) * xu;
        let rhs = beta(near) * beta(far);
        // Ties (the unit-sphere root at cr = √2 sits exactly on the line) run the search.
        let carved = lhs < rhs * (1.0 + self.p.line9_tol);
        let mut rest = rows;
        let mut clusters = Vec::new();
        let mut r_star = r2;
        if carved {
            let m = rest.len();
            let need = ((self.p.cluster_tau * m as f64).ceil() as usize).max(self.p.min_cluster).max(1);
            let reach = (SQRT_2 - self.p.eps) * radius * (1.0 + self.p.eps_cover);
            let reach2 = reach * reach;
            let mut idx = 0;
            // Counts only shrink as clusters are removed, so a rejected
            // candidate never needs to be revisited.
            while idx < rest.len() {
                let x = project_onto(work.row(rest[idx]), &o, radius);
                let count = rest.iter().filter(|&&p| dist2(work.row(p), &x) <= reach2).count();
                if count < need {
                    idx += 1;
                    continue;
                }
                let (members, keep): (Vec<u32>, Vec<u32>) =
                    rest.iter().partition(|&&p| dist2(work.row(p), &x) <= reach2);
                rest = keep;
                if depth + 1 > self.p.ball_depth_cap {
                    return Err(Error::Invariant(format!(
                        "more than {} nested balls on one path",
                        self.p.ball_depth_cap
                    )));
                }
                let ball = seb::smallest_enclosing_ball(&work.coords, work.dim, &members, 2.0 * self.p.seb_tol);
                let ckey = derive(derive(key, tag::CLUSTER), clusters.len() as u64);
                let id = self.ball(work, members, r1, r2, ball.center, ball.radius, level, ckey, depth + 1)?;
                clusters.push(id);
                self.stats.clusters_carved += 1;
            }
            self.stats.max_cluster_fanout = self.stats.max_cluster_fanout.max(clusters.len());
            r_star = SQRT_2 * radius;
        }
        let mut caps = None;
        if !rest.is_empty() {
            let far_eff = if r_star / radius > near && r_star / radius < 2.0 { r_star / radius } else { far };
            match self.cap_point(near, far_eff) {
                None => {
                    self.stats.fallback_leaves += 1;
                    let leaf = self.leaf(work, &rest, geo);
                    // Keep the sphere node so the clusters stay reachable.
                    caps = Some(CapLayer {
                        key,
                        eta_u: f64::NEG_INFINITY,
                        eta_q: f64::NEG_INFINITY,
                        t: 1,
                        rho_q: f64::NAN,
                        rho_u: f64::NAN,
                        r_star,
                        children: vec![(0, leaf)],
                    });
                }
                Some(pt) => {
                    let mut z = vec![0.0; work.dim];
                    let mut children = Vec::new();
                    let cut = pt.eta_u * radius;
                    for slot in 0..pt.t {
                        let ck = derive(key, slot);
                        fill_gaussian(&mut keyed(ck), &mut z);
                        let zo = dot(&z, &o);
                        let sub: Vec<u32> =
                            rest.iter().copied().filter(|&p| dot(&z, work.row(p)) - zo >= cut).collect();
                        if !sub.is_empty() {
                            let id = self.sphere(work, sub, r1, r2, center, radius, level + 1, ck, depth)?;
                            children.push((slot as u32, id));
                        }
                    }
                    caps = Some(CapLayer {
                        key,
                        eta_u: pt.eta_u,
                        eta_q: pt.eta_q,
                        t: pt.t,
                        rho_q: pt.rho_q,
                        rho_u: pt.rho_u,
                        r_star,
                        children,
                    });
                }
            }
        }
        Ok(self.push(DdNode::SphereInner { geo, carved, clusters, caps }))
    }

    fn leaf(&mut self, work: &Work, rows: &[u32], geo: Geometry) -> u32 {
        let first = self.leaf_points.len() as u32;
        self.leaf_points.extend(rows.iter().map(|&i| work.ids[i as usize]));
        self.push(DdNode::LeafList { geo, first, len: rows.len() as u32 })
    }

    #[allow(clippy::too_many_arguments)]
    fn ball(
        &mut self,
        work: &Arc<Work>,
        rows: Vec<u32>,
        r1: f64,
        r2: f64,
        o: Vec<f64>,
        radius: f64,
        level: u32,
        key: u64,
        depth: u32,
    ) -> Result<u32> {
        self.stats.max_ball_depth = self.stats.max_ball_depth.max(depth);
        let center = self.add_center(o);
        let geo = Geometry { r1, r2, center, radius, level };
        if r1 + 2.0 * radius <= r2 {
            let point = work.ids[rows[0] as usize];
            let single = self.push(DdNode::SinglePoint { geo, point, reason: SingleReason::TrivialBall });
            return Ok(self.push(DdNode::BallInner {
                geo,
                step: self.p.delta * r1,
                trivial: true,
                children: vec![AnnulusChild { i: 0, j: 0, node: single }],
            }));
        }
        let step = self.p.delta * r1;
        let o = self.centers[center as usize].clone();
        let (snapped, annulus) = snap(work, &rows, &o, step);
        let snapped = Arc::new(snapped);
        let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (row, &i) in annulus.iter().enumerate() {
            groups.entry(i).or_default().push(row as u32);
        }
        let jmax = ((radius + r1 + 2.0 * step) / step).ceil() as u32;
        let mut children = Vec::new();
        for (&i, members) in &groups {
            for j in 1..=jmax.max(i) {
                let gap = i.abs_diff(j);
                if step * gap as f64 > r1 + 2.0 * step {
                    continue;
                }
                if let Some(w) = self.p.annulus_window {
                    if gap > w {
                        continue;
                    }
                }
                let (ri, rj) = (step * i as f64, step * j as f64);
                let r1t = project_distance(ri, rj, r1 + 2.0 * step)?;
                let r2t = project_distance(ri, rj, r2 - 2.0 * step)?;
                let ckey = derive(derive(derive(key, tag::BALL), i as u64), j as u64);
                let node = self.sphere(&snapped, members.clone(), r1t, r2t, center, ri, level, ckey, depth)?;
                children.push(AnnulusChild { i, j, node });
            }
        }
        children.sort_by_key(|a| (a.j, a.i));
        Ok(self.push(DdNode::BallInner { geo, step, trivial: false, children }))
    }
}

fn unit_or_axis(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[0] = 1.0;
    }
}

fn project_onto(p: &[f64], o: &[f64], radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
    unit_or_axis(&mut v);
    o.iter().zip(&v).map(|(a, b)| a + radius * b).collect()
}

/// Round each point's distance from `o` up to a positive multiple of `step`,
/// keeping its direction. Returns the snapped points and their annulus indices.
fn snap(work: &Work, rows: &[u32], o: &[f64], step: f64) -> (Work, Vec<u32>) {
    let dim = work.dim;
    let mut coords = Vec::with_capacity(rows.len() * dim);
    let mut ids = Vec::with_capacity(rows.len());
    let mut annulus = Vec::with_capacity(rows.len());
    for &r in rows {
        let p = work.row(r);
        let mut v: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
        let rho = norm(&v);
        let i = ((rho / step).ceil() as u32).max(1);
        unit_or_axis(&mut v);
        let s = step * i as f64;
        coords.extend(o.iter().zip(&v).map(|(a, b)| a + s * b));
        ids.push(work.ids[r as usize]);
        annulus.push(i);
    }
    (Work { dim, coords, ids }, annulus)
}

/// Snap a single point (used by tests and queries).
pub fn snap_point(p: &[f64], o: &[f64], step: f64) -> (Vec<f64>, u32) {
    let mut v: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
    let rho = norm(&v);
    let i = ((rho / step).ceil() as u32).max(1);
    unit_or_axis(&mut v);
    let s = step * i as f64;
    (o.iter().zip(&v).map(|(a, b)| a + s * b).collect(), i)
}

impl DDTree {
    /// Build for `(c, r)`-ANN over `points`.
    pub fn build(points: &PointSet, c: f64, r: f64, params: &DDParams, seed: u64) -> Result<DDTree> {
        if points.is_empty() {
            return Err(Error::Empty("cannot build a tree over no points".into()));
        }
        if !(r > 0.0) || !r.is_finite() {
            return domain(format!("near distance r = {r} must be positive"));
        }
        params.validate(c)?;
        let n = points.len();
        let k = params.k.unwrap_or_else(|| default_k(n));
        if k == 0 {
            return domain("depth K must be positive");
        }
        let jl = match params.jl_dim {
            Some(t) => Some(JlProjection::new(points.dim(), t, JlMode::Gaussian, derive(seed, tag::JL))?),
            None => None,
        };
        let work_dim = jl.as_ref().map_or(points.dim(), |m| m.out_dim);
        let mut scaled = Vec::with_capacity(n * work_dim);
        for p in points.rows() {
            let v = jl.as_ref().map_or_else(|| p.to_vec(), |m| m.apply(p));
            scaled.extend(v.iter().map(|x| x / r));
        }
        let target = params.targets(c);
        let mut b = Builder {
            p: params,
            n,
            k,
            target,
            nodes: Vec::new(),
            centers: Vec::new(),
            leaf_points: Vec::new(),
            stats: DdBuildStats::default(),
            caps_cache: HashMap::new(),
        };
        b.stats.schedule = format!(
            "eps={} delta={} tau={} K={} ball_depth_cap={} rho_q={:.6} rho_u={:.6} C={} eps_cover={}",
            params.eps, params.delta, params.cluster_tau, k, params.ball_depth_cap, target.0, target.1,
            params.success_const, params.eps_cover
        );
        let mut roots = BTreeMap::new();
        let sphere_radius = common_norm(&scaled, work_dim);
        let frame;
        if n == 1 {
            let radius = norm(&scaled).max(1.0);
            let center = b.add_center(vec![0.0; work_dim]);
            let geo = Geometry { r1: 1.0, r2: c, center, radius, level: 0 };
            let id = b.push(DdNode::SinglePoint { geo, point: 0, reason: SingleReason::SingleInput });
            roots.insert(Vec::new(), id);
            frame = Frame::Sphere { radius };
        } else if let (Some(radius), false) = (sphere_radius, params.force_lift) {
            let work = Arc::new(Work { dim: work_dim, coords: scaled, ids: (0..n as u32).collect() });
            let center = b.add_center(vec![0.0; work_dim]);
            let rows = (0..n as u32).collect();
            let id = b.sphere(&work, rows, 1.0, c, center, radius, 0, root_key(seed), 0)?;
            roots.insert(Vec::new(), id);
            frame = Frame::Sphere { radius };
        } else {
            let scaled_set = PointSet::new(work_dim, crate::Space::Euclidean, scaled)?;
            let lift_r = params.lift_radius.unwrap_or_else(|| default_lift_radius(work_dim, n));
            let mut lift = grid_lift_with_radius(&scaled_set, 1.0, lift_r, derive(seed, tag::GRID))?;
            for (cube_key, cube) in std::mem::take(&mut lift.cubes) {
                let work = Arc::new(Work {
                    dim: work_dim + 1,
                    coords: cube.lifted.into_inner(),
                    ids: cube.members.clone(),
                });
                let center = b.add_center(vec![0.0; work_dim + 1]);
                let rows = (0..cube.members.len() as u32).collect();
                let key = cube_key.iter().fold(root_key(seed), |h, &x| derive(h, x as u64));
                let id = b.sphere(&work, rows, 1.0, c, center, lift_r, 0, key, 0)?;
                roots.insert(cube_key.clone(), id);
                // Keep the cube's key and centre only.
                lift.cubes.insert(
                    cube_key,
                    crate::reductions::CubeInstance {
                        key: cube.key,
                        center: cube.center,
                        members: Vec::new(),
                        lifted: PointSet::with_capacity(work_dim + 1, crate::Space::Euclidean, 0),
                    },
                );
            }
            frame = Frame::Lift(lift);
        }
        Ok(DDTree {
            c,
            r,
            params: *params,
            seed,
            n,
            dim: points.dim(),
            fingerprint: points.fingerprint(),
            k,
            jl,
            frame,
            roots,
            nodes: b.nodes,
            centers: b.centers,
            leaf_points: b.leaf_points,
            stats: b.stats,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn params(&self) -> &DDParams {
        &self.params
    }

    pub fn stats(&self) -> &DdBuildStats {
        &self.stats
    }

    pub fn nodes(&self) -> &[DdNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &BTreeMap<Vec<i64>, u32> {
        &self.roots
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn center(&self, id: u32) -> &[f64] {
        &self.centers[id as usize]
    }

    pub fn leaf_points(&self, first: u32, len: u32) -> &[u32] {
        &self.leaf_points[first as usize..(first + len) as usize]
    }

    pub fn dataset_len(&self) -> usize {
        self.n
    }

    pub fn check_dataset(&self, points: &PointSet) -> Result<()> {
        if points.len() != self.n || points.dim() != self.dim || points.fingerprint() != self.fingerprint {
            return Err(Error::Format("dataset does not match the one the tree was built on".into()));
        }
        Ok(())
    }

    /// Map a query into the working frame; `None` when its cube holds no data.
    fn enter(&self, q: &[f64]) -> Option<(u32, Vec<f64>)> {
        let v = self.jl.as_ref().map_or_else(|| q.to_vec(), |m| m.apply(q));
        let v: Vec<f64> = v.iter().map(|x| x / self.r).collect();
        match &self.frame {
            Frame::Sphere { radius } => {
                let root = *self.roots.get(&Vec::new())?;
                let o = vec![0.0; v.len()];
                Some((root, project_onto(&v, &o, *radius)))
            }
            Frame::Lift(lift) => {
                let (key, lifted) = lift.lift_query(&v);
                Some((*self.roots.get(&key)?, lifted))
            }
        }
    }

    /// First point within `c·r` of `q`.
    pub fn query_cr(&self, points: &PointSet, q: &[f64]) -> DdQueryOutcome {
        self.query(points, q, self.c * self.r)
    }

    /// First point within `radius` of `q` (original metric) found by the walk.
    pub fn query(&self, points: &PointSet, q: &[f64], radius: f64) -> DdQueryOutcome {
        let mut st = DdQueryStats::default();
        let found = match self.enter(q) {
            None => None,
            Some((root, qw)) => {
                let mut z = Vec::new();
                self.visit(root, &qw, points, q, radius * radius, &mut st, &mut z)
            }
        };
        DdQueryOutcome { found, stats: st }
    }

    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        id: u32,
        qw: &[f64],
        points: &PointSet,
        q: &[f64],
        r2max: f64,
        st: &mut DdQueryStats,
        z: &mut Vec<f64>,
    ) -> Option<u32> {
        st.nodes_visited += 1;
        let check = |p: u32, st: &mut DdQueryStats| {
            st.points_scanned += 1;
            (dist2(points.row(p as usize), q) <= r2max).then_some(p)
        };
        match &self.nodes[id as usize] {
            DdNode::SinglePoint { point, .. } => check(*point, st),
            DdNode::LeafList { first, len, .. } => {
                self.leaf_points(*first, *len).iter().find_map(|&p| check(p, st))
            }
            DdNode::SphereInner { geo, clusters, caps, .. } => {
                for &b in clusters {
                    st.clusters_probed += 1;
                    if let Some(f) = self.visit(b, qw, points, q, r2max, st, z) {
                        return Some(f);
                    }
                }
                let caps = caps.as_ref()?;
                if caps.eta_q == f64::NEG_INFINITY {
                    return self.visit(caps.children[0].1, qw, points, q, r2max, st, z);
                }
                let o = &self.centers[geo.center as usize];
                z.resize(qw.len(), 0.0);
                let cut = caps.eta_q * geo.radius;
                for &(slot, child) in &caps.children {
                    fill_gaussian(&mut keyed(derive(caps.key, slot as u64)), z);
                    st.inner_products += 1;
                    if dot(z, qw) - dot(z, o) >= cut {
                        if let Some(f) = self.visit(child, qw, points, q, r2max, st, z) {
                            return Some(f);
                        }
                    }
                }
                None
            }
            DdNode::BallInner { geo, step, trivial, children } => {
                let o = &self.centers[geo.center as usize];
                let rho = dist2(qw, o).sqrt();
                // Relative slack: a query exactly r1 from a zero-radius ball must get in.
                if rho > (geo.radius + geo.r1) * (1.0 + 1e-9) {
                    return None;
                }
                st.balls_entered += 1;
                if *trivial {
                    return self.visit(children[0].node, qw, points, q, r2max, st, z);
                }
                let j = ((rho / step).ceil() as u32).max(1);
                let mut dir: Vec<f64> = qw.iter().zip(o).map(|(a, b)| a - b).collect();
                unit_or_axis(&mut dir);
                let lo = children.partition_point(|a| a.j < j);
                for a in children[lo..].iter().take_while(|a| a.j == j) {
                    let s = step * a.i as f64;
                    let qi: Vec<f64> = o.iter().zip(&dir).map(|(x, d)| x + s * d).collect();
                    if let Some(f) = self.visit(a.node, &qi, points, q, r2max, st, z) {
                        return Some(f);
                    }
                }
                None
            }
        }
    }

    /// Check the threshold and nesting invariants at every node.
    pub fn check_invariants(&self, tol: f64) -> InvariantReport {
        let mut rep = InvariantReport {
            nodes_checked: 0,
            min_ratio: f64::INFINITY,
            max_r2: 0.0,
            max_ball_depth: 0,
            violations: Vec::new(),
        };
        let c = self.c;
        let mut stack: Vec<(u32, u32)> = self.roots.values().map(|&r| (r, 0)).collect();
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id as usize];
            let g = node.geometry();
            rep.nodes_checked += 1;
            let ratio = g.r2 / g.r1;
            rep.min_ratio = rep.min_ratio.min(ratio);
            rep.max_r2 = rep.max_r2.max(g.r2);
            let mut bad = |m: String| {
                if rep.violations.len() < 20 {
                    rep.violations.push(m);
                }
            };
            if ratio < c * (1.0 - tol) {
                bad(format!("node {id} ({}): r2/r1 = {ratio:.4} < {:.4}", node.kind(), c * (1.0 - tol)));
            }
            if g.r2 > c * (1.0 + tol) {
                bad(format!("node {id} ({}): r2 = {:.4} > {:.4}", node.kind(), g.r2, c * (1.0 + tol)));
            }
            match node {
                DdNode::LeafList { .. } if g.level != self.k => {
                    bad(format!("leaf list {id} at level {} < K", g.level))
                }
                DdNode::SinglePoint { reason: SingleReason::SphereBaseCase, .. } if g.r2 < 2.0 * g.radius => {
                    bad(format!("single point {id} without r2 ≥ 2R"))
                }
                DdNode::SinglePoint { reason: SingleReason::TrivialBall, .. } if g.r1 + 2.0 * g.radius > g.r2 => {
                    bad(format!("single point {id} in a non-trivial ball"))
                }
                _ => {}
            }
            let d = if matches!(node, DdNode::BallInner { .. }) { depth + 1 } else { depth };
            rep.max_ball_depth = rep.max_ball_depth.max(d);
            if d > self.params.ball_depth_cap {
                bad(format!("node {id}: {d} balls on the path"));
            }
            match node {
                DdNode::SphereInner { clusters, caps, .. } => {
                    stack.extend(clusters.iter().map(|&b| (b, d)));
                    if let Some(cl) = caps {
                        stack.extend(cl.children.iter().map(|&(_, ch)| (ch, d)));
                    }
                }
                DdNode::BallInner { children, .. } => stack.extend(children.iter().map(|a| (a.node, d))),
                _ => {}
            }
        }
        rep
    }

    /// For every leaf list reached purely through cap layers: the slot path and its points.
    pub fn leaf_paths(&self) -> Vec<(Vec<u32>, Vec<u32>)> {
        let mut out = Vec::new();
        for &root in self.roots.values() {
            let mut stack = vec![(root, Vec::new())];
            while let Some((id, path)) = stack.pop() {
                match &self.nodes[id as usize] {
                    DdNode::LeafList { first, len, .. } => {
                        out.push((path, self.leaf_points(*first, *len).to_vec()));
                    }
                    DdNode::SphereInner { caps: Some(cl), .. } => {
                        for &(slot, ch) in &cl.children {
                            let mut p = path.clone();
                            p.push(slot);
                            stack.push((ch, p));
                        }
                    }
                    _ => {}
                }
            }
        }
        out.sort();
        out
    }
}

/// The common norm of all rows if they agree to 1e−9 relative, else `None`.
fn common_norm(coords: &[f64], dim: usize) -> Option<f64> {
    let norms: Vec<f64> = coords.chunks_exact(dim).map(norm).collect();
    let first = *norms.first()?;
    if !(first > 0.0) {
        return None;
    }
    norms.iter().all(|&x| (x - first).abs() <= 1e-9 * first).then_some(first)
}
