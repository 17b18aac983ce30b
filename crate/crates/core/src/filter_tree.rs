//! Data-independent Gaussian cap tree.
//!
//! Each non-root node owns a Gaussian vector `z` and the points with
//! `⟨z', p⟩ ≥ η_u` for every vector `z'` on its root path. Vectors are not
//! stored: a node's vector is regenerated from its key, and a child's key is
//! `derive(parent key, slot)` where `slot ∈ [0, T)` is the sample index.

use crate::error::{domain, Error, Result};
use crate::points::{dist2, dot, PointSet};
use crate::rng::{derive, fill_gaussian, keyed, tag};
use crate::tradeoff::TradeoffPoint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct Node {
    pub slot: u32,
    /// Children (`level < K`) or leaf points (`level == K`) start here.
    pub first: u32,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTree {
    pub(crate) params: TradeoffPoint,
    pub(crate) seed: u64,
    pub(crate) dim: usize,
    pub(crate) n: usize,
    pub(crate) fingerprint: u64,
    pub(crate) nodes: Vec<Node>,
    pub(crate) leaf_points: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Non-root nodes whose filter the query passed.
    pub nodes_visited: u64,
    pub leaves_visited: u64,
    pub points_scanned: u64,
    /// Scanned points at distance at least `c·r` (the tree's far radius).
    pub far_scanned: u64,
    pub inner_products: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOptions {
    /// Overrides the tree's query threshold.
    pub eta_q: Option<f64>,
    /// Return at the first acceptable point (otherwise walk everything).
    pub stop_at_first: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { eta_q: None, stop_at_first: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOutcome {
    pub found: Option<u32>,
    pub stats: QueryStats,
}

/// Read-only view of one node.
#[derive(Debug, Clone)]
pub struct NodeView<'a> {
    pub id: usize,
    pub level: u32,
    pub slot: u32,
    pub key: u64,
    pub children: std::ops::Range<usize>,
    pub points: &'a [u32],
}

pub(crate) fn root_key(seed: u64) -> u64 {
    derive(seed, tag::TREE)
}

/// The Gaussian vector of the node with this key.
pub fn node_vector(key: u64, dim: usize) -> Vec<f64> {
    let mut z = vec![0.0; dim];
    fill_gaussian(&mut keyed(key), &mut z);
    z
}

pub(crate) fn check_unit(points: &PointSet, tol: f64) -> Result<()> {
    for (i, p) in points.rows().enumerate() {
        let e = (dot(p, p).sqrt() - 1.0).abs();
        if !(e <= tol) {
            return domain(format!("point {i} has norm off by {e:e}; points must be unit vectors"));
        }
    }
    Ok(())
}

impl FilterTree {
    pub fn build(points: &PointSet, params: &TradeoffPoint, seed: u64) -> Result<FilterTree> {
        if points.is_empty() {
            return Err(Error::Empty("cannot build a tree over no points".into()));
        }
        if !params.is_solved() {
            return domain("parameters lack thresholds; run solve_thresholds first");
        }
        if params.k > 64 {
            return domain(format!("depth K = {} is unreasonably deep", params.k));
        }
        if params.t > u32::MAX as u64 {
            return Err(Error::TooLarge(format!("branching factor T = {}", params.t)));
        }
        check_unit(points, 1e-6)?;
        let mut tree = FilterTree {
            params: *params,
            seed,
            dim: points.dim(),
            n: points.len(),
            fingerprint: points.fingerprint(),
            nodes: vec![Node { slot: 0, first: 0, len: 0 }],
            leaf_points: Vec::new(),
        };
        let all: Vec<u32> = (0..points.len() as u32).collect();
        let mut z = vec![0.0; points.dim()];
        tree.grow(points, 0, root_key(seed), 0, &all, &mut z)?;
        Ok(tree)
    }

    fn grow(&mut self, points: &PointSet, id: usize, key: u64, level: u32, pts: &[u32], z: &mut [f64]) -> Result<()> {
        if level == self.params.k {
            self.nodes[id].first = self.leaf_points.len() as u32;
            self.nodes[id].len = pts.len() as u32;
            self.leaf_points.extend_from_slice(pts);
            if self.leaf_points.len() > u32::MAX as usize {
                return Err(Error::TooLarge("more than 2^32 stored points".into()));
            }
            return Ok(());
        }
        let eta = self.params.eta_u;
        let mut kids: Vec<(u32, Vec<u32>)> = Vec::new();
        for slot in 0..self.params.t {
            fill_gaussian(&mut keyed(derive(key, slot)), z);
            let sub: Vec<u32> = pts
                .iter()
                .copied()
                .filter(|&p| dot(z, points.row(p as usize)) >= eta)
                .collect();
            if !sub.is_empty() {
                kids.push((slot as u32, sub));
            }
        }
        let first = self.nodes.len();
        if first + kids.len() > u32::MAX as usize {
            return Err(Error::TooLarge("more than 2^32 nodes".into()));
        }
        self.nodes[id].first = first as u32;
        self.nodes[id].len = kids.len() as u32;
        self.nodes.extend(kids.iter().map(|(s, _)| Node { slot: *s, first: 0, len: 0 }));
        for (i, (slot, sub)) in kids.into_iter().enumerate() {
            self.grow(points, first + i, derive(key, slot as u64), level + 1, &sub, z)?;
        }
        Ok(())
    }

    pub fn params(&self) -> &TradeoffPoint {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of dataset points the tree was built on.
    pub fn dataset_len(&self) -> usize {
        self.n
    }

    pub fn dataset_fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Total point references over all leaves.
    pub fn stored_points(&self) -> usize {
        self.leaf_points.len()
    }

    /// Check that `points` is the dataset this tree was built on.
    pub fn check_dataset(&self, points: &PointSet) -> Result<()> {
        if points.len() != self.n || points.dim() != self.dim || points.fingerprint() != self.fingerprint {
            return Err(Error::Format(format!(
                "dataset ({} x {}) does not match the tree's ({} x {})",
                points.len(),
                points.dim(),
                self.n,
                self.dim
            )));
        }
        Ok(())
    }

    pub fn query(&self, points: &PointSet, q: &[f64], radius: f64) -> QueryOutcome {
        self.query_with(points, q, radius, QueryOptions::default())
    }

    /// Descend every child whose vector has `⟨z, q⟩ ≥ η_q`, scanning leaves in
    /// slot order; the first stored point within `radius` is returned.
    pub fn query_with(&self, points: &PointSet, q: &[f64], radius: f64, opts: QueryOptions) -> QueryOutcome {
        let eta = opts.eta_q.unwrap_or(self.params.eta_q);
        let far2 = (self.params.c * self.params.r).powi(2);
        let r2 = radius * radius;
        let mut stats = QueryStats::default();
        let mut found = None;
        let mut z = vec![0.0; self.dim];
        // (node id, key, level)
        let mut stack = vec![(0usize, root_key(self.seed), 0u32)];
        while let Some((id, key, level)) = stack.pop() {
            let node = self.nodes[id];
            let (first, len) = (node.first as usize, node.len as usize);
            if level == self.params.k {
                stats.leaves_visited += 1;
                for &p in &self.leaf_points[first..first + len] {
                    stats.points_scanned += 1;
                    let d2 = dist2(points.row(p as usize), q);
                    if d2 >= far2 {
                        stats.far_scanned += 1;
                    }
                    if d2 <= r2 && found.is_none() {
                        found = Some(p);
                        if opts.stop_at_first {
                            return QueryOutcome { found, stats };
                        }
                    }
                }
                continue;
            }
            // Push in reverse so children are explored in slot order.
            let mut pass = Vec::new();
            for c in first..first + len {
                let ck = derive(key, self.nodes[c].slot as u64);
                fill_gaussian(&mut keyed(ck), &mut z);
                stats.inner_products += 1;
                if dot(&z, q) >= eta {
                    stats.nodes_visited += 1;
                    pass.push((c, ck, level + 1));
                }
            }
            stack.extend(pass.into_iter().rev());
        }
        QueryOutcome { found, stats }
    }

    /// Visit every node in depth-first order.
    pub fn walk<F: FnMut(NodeView<'_>)>(&self, mut f: F) {
        let mut stack = vec![(0usize, root_key(self.seed), 0u32)];
        while let Some((id, key, level)) = stack.pop() {
            let node = self.nodes[id];
            let (first, len) = (node.first as usize, node.len as usize);
            let leaf = level == self.params.k;
            f(NodeView {
                id,
                level,
                slot: node.slot,
                key,
                children: if leaf { first..first } else { first..first + len },
                points: if leaf { &self.leaf_points[first..first + len] } else { &[] },
            });
            if !leaf {
                for c in (first..first + len).rev() {
                    stack.push((c, derive(key, self.nodes[c].slot as u64), level + 1));
                }
            }
        }
    }

    /// Recompute every node's point set from scratch and compare with the
    /// stored structure: each kept node is non-empty, each dropped slot is
    /// empty, and leaves hold exactly the points passing all ancestor filters.
    pub fn replay(&self, points: &PointSet) -> Result<()> {
        self.check_dataset(points)?;
        let all: Vec<u32> = (0..self.n as u32).collect();
        let mut z = vec![0.0; self.dim];
        let mut stack = vec![(0usize, root_key(self.seed), 0u32, all)];
        while let Some((id, key, level, pts)) = stack.pop() {
            let node = self.nodes[id];
            let (first, len) = (node.first as usize, node.len as usize);
            if level == self.params.k {
                if self.leaf_points[first..first + len] != pts[..] {
                    return Err(Error::Invariant(format!("leaf {id} holds the wrong points")));
                }
                continue;
            }
            let mut next = first;
            for slot in 0..self.params.t {
                fill_gaussian(&mut keyed(derive(key, slot)), &mut z);
                let sub: Vec<u32> = pts
                    .iter()
                    .copied()
                    .filter(|&p| dot(&z, points.row(p as usize)) >= self.params.eta_u)
                    .collect();
                let kept = next < first + len && self.nodes[next].slot as u64 == slot;
                match (kept, sub.is_empty()) {
                    (true, false) => {
                        stack.push((next, derive(key, slot), level + 1, sub));
                        next += 1;
                    }
                    (false, true) => {}
                    (true, true) => return Err(Error::Invariant(format!("node {next} is empty"))),
                    (false, false) => {
                        return Err(Error::Invariant(format!("slot {slot} under node {id} was dropped but is non-empty")))
                    }
                }
            }
            if next != first + len {
                return Err(Error::Invariant(format!("node {id} has children out of slot order")));
            }
        }
        Ok(())
    }
}
