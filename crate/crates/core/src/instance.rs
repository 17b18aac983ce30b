//! Random and clustered instances with planted queries.

use crate::error::{domain, Result};
use crate::gaussian_caps::{alpha, beta};
use crate::points::{dot, normalize, PointSet, Space};
use crate::rng::{fill_gaussian, substream, tag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Relative slack used when declaring a returned point acceptable.
pub const DEFAULT_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTruth {
    /// `(query index, dataset index)`.
    pub planted_pairs: Vec<(u32, u32)>,
    /// Planted distance (Hamming units for hamming instances).
    pub r: f64,
    /// Far distance.
    pub cr: f64,
    pub slack: f64,
    pub space: Space,
    /// Dimension of the original points (needed to convert Hamming units).
    pub dim: usize,
}

impl InstanceTruth {
    pub fn c(&self) -> f64 {
        self.cr / self.r
    }

    /// Any point within this distance of a query is a correct answer.
    pub fn accept_radius(&self) -> f64 {
        self.cr * (1.0 - self.slack)
    }

    /// Converts a distance of this instance into Euclidean distance between
    /// the sphere-embedded points (identity unless hamming: `2·√(h/d)`).
    pub fn to_sphere_distance(&self, x: f64) -> f64 {
        match self.space {
            Space::Hamming => 2.0 * (x / self.dim as f64).sqrt(),
            _ => x,
        }
    }

    pub fn planted_for(&self, query: usize) -> Option<usize> {
        self.planted_pairs
            .iter()
            .find(|p| p.0 as usize == query)
            .map(|p| p.1 as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub points: PointSet,
    pub queries: PointSet,
    pub truth: InstanceTruth,
}

fn check_sizes(n: usize, d: usize, c: f64, q_count: usize) -> Result<()> {
    if n == 0 || d == 0 || q_count == 0 {
        return domain(format!("n = {n}, d = {d}, q_count = {q_count} must all be positive"));
    }
    if !(c > 1.0) {
        return domain(format!("approximation c = {c} must exceed 1"));
    }
    if n > u32::MAX as usize {
        return domain("n exceeds 32-bit indices");
    }
    Ok(())
}

/// Warning text when `d` is small for the concentration the instance relies on.
pub fn dimension_warning(n: usize, d: usize) -> Option<String> {
    let want = 64.0 * (n.max(2) as f64).ln();
    ((d as f64) < want).then(|| {
        format!("d = {d} is below 64·ln n = {want:.0}; far points may not concentrate at distance cr")
    })
}

/// Uniform ±1 points; each query flips each coordinate of a uniformly chosen
/// point with probability `1/(2c)`.
pub fn gen_hamming(n: usize, d: usize, c: f64, q_count: usize, seed: u64) -> Result<Instance> {
    check_sizes(n, d, c, q_count)?;
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut rng = substream(seed, tag::POINTS, i as u64);
        data.extend((0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
    }
    let points = PointSet::new(d, Space::Hamming, data)?;
    let flip = 1.0 / (2.0 * c);
    let mut qdata = Vec::with_capacity(q_count * d);
    let mut pairs = Vec::with_capacity(q_count);
    for j in 0..q_count {
        let mut rng = substream(seed, tag::QUERIES, j as u64);
        let p = rng.random_range(0..n);
        qdata.extend(points.row(p).iter().map(|&x| if rng.random::<f64>() < flip { -x } else { x }));
        pairs.push((j as u32, p as u32));
    }
    let queries = PointSet::new(d, Space::Hamming, qdata)?;
    Ok(Instance {
        points,
        queries,
        truth: InstanceTruth {
            planted_pairs: pairs,
            r: d as f64 * flip,
            cr: d as f64 / 2.0,
            slack: DEFAULT_SLACK,
            space: Space::Hamming,
            dim: d,
        },
    })
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    loop {
        fill_gaussian(rng, &mut v);
        if dot(&v, &v) > 0.0 {
            normalize(&mut v);
            return v;
        }
    }
}

/// Unit vector at chord distance exactly `s` from unit `p`, in a uniformly random tangent direction.
pub(crate) fn point_at_distance(rng: &mut ChaCha8Rng, p: &[f64], s: f64) -> Vec<f64> {
    let d = p.len();
    if d == 1 {
        // Only ±p exist on the 0-sphere.
        return p.iter().map(|&x| if s > SQRT_2 { -x } else { x }).collect();
    }
    let mut w = vec![0.0; d];
    loop {
        fill_gaussian(rng, &mut w);
        let proj = dot(&w, p);
        w.iter_mut().zip(p).for_each(|(x, &y)| *x -= proj * y);
        if dot(&w, &w) > 1e-20 {
            break;
        }
    }
    normalize(&mut w);
    let (a, b) = (alpha(s), beta(s));
    let mut q: Vec<f64> = p.iter().zip(&w).map(|(&x, &y)| a * x + b * y).collect();
    normalize(&mut q);
    q
}

fn planted_sphere_queries(
    points: &PointSet,
    c: f64,
    q_count: usize,
    seed: u64,
) -> Result<(PointSet, Vec<(u32, u32)>)> {
    let d = points.dim();
    let s = SQRT_2 / c;
    let mut qs = PointSet::with_capacity(d, Space::Sphere, q_count);
    let mut pairs = Vec::with_capacity(q_count);
    for j in 0..q_count {
        let mut rng = substream(seed, tag::QUERIES, j as u64);
        let p = rng.random_range(0..points.len());
        qs.push_unchecked(&point_at_distance(&mut rng, points.row(p), s));
        pairs.push((j as u32, p as u32));
    }
    Ok((qs, pairs))
}

/// Uniform unit vectors; each query sits at distance exactly `√2/c` from a uniformly chosen point.
pub fn gen_sphere(n: usize, d: usize, c: f64, q_count: usize, seed: u64) -> Result<Instance> {
    check_sizes(n, d, c, q_count)?;
    let mut points = PointSet::with_capacity(d, Space::Sphere, n);
    for i in 0..n {
        let mut rng = substream(seed, tag::POINTS, i as u64);
        points.push_unchecked(&random_unit(&mut rng, d));
    }
    let (queries, pairs) = planted_sphere_queries(&points, c, q_count, seed)?;
    Ok(Instance { points, queries, truth: sphere_truth(pairs, c, d) })
}

fn sphere_truth(pairs: Vec<(u32, u32)>, c: f64, d: usize) -> InstanceTruth {
    InstanceTruth {
        planted_pairs: pairs,
        r: SQRT_2 / c,
        cr: SQRT_2,
        slack: DEFAULT_SLACK,
        space: Space::Sphere,
        dim: d,
    }
}

/// Points spread over `n_clusters` caps of chord radius `radius_factor` on the
/// unit sphere. Cluster centres are pairwise at distance at least `√2`, so
/// different clusters never merge into one dense ball. Queries are planted as
/// in [`gen_sphere`].
pub fn gen_clustered(
    n: usize,
    d: usize,
    c: f64,
    n_clusters: usize,
    radius_factor: f64,
    q_count: usize,
    seed: u64,
) -> Result<Instance> {
    check_sizes(n, d, c, q_count)?;
    if n_clusters == 0 {
        return domain("need at least one cluster");
    }
    if !(0.0..SQRT_2).contains(&radius_factor) {
        return domain(format!("cluster radius factor {radius_factor} must lie in [0, √2)"));
    }
    if n_clusters > 2 * d {
        return domain(format!(
            "{n_clusters} clusters cannot be pairwise √2 apart in dimension {d}"
        ));
    }
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(n_clusters);
    for k in 0..n_clusters {
        let mut rng = substream(seed, tag::CENTERS, k as u64);
        let mut placed = false;
        for _ in 0..10_000 {
            let u = random_unit(&mut rng, d);
            if centers.iter().all(|v| dot(v, &u) <= 0.0) {
                centers.push(u);
                placed = true;
                break;
            }
        }
        if !placed {
            return domain(format!(
                "could not place cluster centre {k} at distance ≥ √2 from the others (d = {d})"
            ));
        }
    }
    let mut points = PointSet::with_capacity(d, Space::Sphere, n);
    for i in 0..n {
        let mut rng = substream(seed, tag::POINTS, i as u64);
        let k = rng.random_range(0..n_clusters);
        // Chord radius of a uniform point in the cap, flat approximation.
        let u: f64 = rng.random();
        let s = radius_factor * u.powf(1.0 / (d.max(2) - 1) as f64);
        let p = if s > 0.0 { point_at_distance(&mut rng, &centers[k], s) } else { centers[k].clone() };
        points.push_unchecked(&p);
    }
    let (queries, pairs) = planted_sphere_queries(&points, c, q_count, seed)?;
    Ok(Instance { points, queries, truth: sphere_truth(pairs, c, d) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::dist;

    #[test]
    fn zero_sizes_rejected() {
        assert!(gen_sphere(0, 4, 2.0, 1, 0).is_err());
        assert!(gen_hamming(4, 0, 2.0, 1, 0).is_err());
        assert!(gen_sphere(4, 4, 2.0, 0, 0).is_err());
        assert!(gen_sphere(4, 4, 1.0, 1, 0).is_err());
    }

    #[test]
    fn huge_c_means_no_flips() {
        let inst = gen_hamming(20, 64, 1e12, 10, 3).unwrap();
        for &(q, p) in &inst.truth.planted_pairs {
            assert_eq!(inst.queries.row(q as usize), inst.points.row(p as usize));
        }
    }

    #[test]
    fn planted_distance_exact() {
        let inst = gen_sphere(50, 32, 2.0, 40, 9).unwrap();
        for &(q, p) in &inst.truth.planted_pairs {
            let s = dist(inst.queries.row(q as usize), inst.points.row(p as usize));
            assert!((s - SQRT_2 / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clustered_rejects_impossible_geometry() {
        assert!(gen_clustered(10, 2, 2.0, 5, 0.1, 1, 0).is_err());
        assert!(gen_clustered(10, 8, 2.0, 2, 1.5, 1, 0).is_err());
    }
}
