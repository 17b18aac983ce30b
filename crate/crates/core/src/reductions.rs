//! Reductions to the unit-sphere problem.

use crate::error::{domain, Result};
use crate::points::{dot, norm, PointSet, Space};
use crate::rng::{fill_gaussian, substream, tag};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JlMode {
    /// i.i.d. `N(0,1)` entries scaled by `1/√k`.
    Gaussian,
    /// Orthonormal rows (Gram–Schmidt of a Gaussian matrix); an isometry when `k = d`.
    Orthonormal,
    /// The first `k` coordinates.
    Identity,
}

/// A linear map `R^d → R^k` retained so queries get the same projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlProjection {
    pub in_dim: usize,
    pub out_dim: usize,
    pub mode: JlMode,
    pub seed: u64,
    matrix: Vec<f64>,
}

impl JlProjection {
    pub fn new(in_dim: usize, out_dim: usize, mode: JlMode, seed: u64) -> Result<JlProjection> {
        if out_dim < 8 {
            return domain(format!("target dimension {out_dim} below 8"));
        }
        if in_dim == 0 {
            return domain("input dimension must be positive");
        }
        let mut matrix = vec![0.0; in_dim * out_dim];
        match mode {
            JlMode::Identity => {
                for i in 0..out_dim.min(in_dim) {
                    matrix[i * in_dim + i] = 1.0;
                }
            }
            JlMode::Gaussian => {
                let scale = 1.0 / (out_dim as f64).sqrt();
                for (i, row) in matrix.chunks_exact_mut(in_dim).enumerate() {
                    fill_gaussian(&mut substream(seed, tag::JL, i as u64), row);
                    row.iter_mut().for_each(|x| *x *= scale);
                }
            }
            JlMode::Orthonormal => {
                if out_dim > in_dim {
                    return domain("orthonormal projection needs target ≤ input dimension");
                }
                for i in 0..out_dim {
                    let mut rng = substream(seed, tag::JL, i as u64);
                    loop {
                        let mut v = vec![0.0; in_dim];
                        fill_gaussian(&mut rng, &mut v);
                        for j in 0..i {
                            let prev = &matrix[j * in_dim..(j + 1) * in_dim];
                            let p = dot(&v, prev);
                            v.iter_mut().zip(prev).for_each(|(x, &y)| *x -= p * y);
                        }
                        let nv = norm(&v);
                        if nv > 1e-8 {
                            for (dst, x) in matrix[i * in_dim..(i + 1) * in_dim].iter_mut().zip(&v) {
                                *dst = x / nv;
                            }
                            break;
                        }
                    }
                }
            }
        }
        Ok(JlProjection { in_dim, out_dim, mode, seed, matrix })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.matrix.chunks_exact(self.in_dim).map(|row| dot(row, x)).collect()
    }

    pub fn apply_set(&self, points: &PointSet) -> Result<PointSet> {
        if points.dim() != self.in_dim {
            return domain(format!("points have dimension {}, projection expects {}", points.dim(), self.in_dim));
        }
        let mut out = PointSet::with_capacity(self.out_dim, Space::Euclidean, points.len());
        for p in points.rows() {
            out.push_unchecked(&self.apply(p));
        }
        Ok(out)
    }
}

/// Dense Gaussian projection to `target_dim`; returns the image and the map.
pub fn jl_project(points: &PointSet, target_dim: usize, seed: u64) -> Result<(PointSet, JlProjection)> {
    let map = JlProjection::new(points.dim(), target_dim, JlMode::Gaussian, seed)?;
    Ok((map.apply_set(points)?, map))
}

/// Scale ±1 vectors by `1/√d`: unit norm and `‖x−y‖² = 4·Ham(x,y)/d`.
pub fn hamming_to_sphere(points: &PointSet) -> Result<PointSet> {
    if points.as_slice().iter().any(|&x| x != 1.0 && x != -1.0) {
        return domain("hamming_to_sphere needs entries in {-1, +1}");
    }
    let s = 1.0 / (points.dim() as f64).sqrt();
    PointSet::new(points.dim(), Space::Sphere, points.as_slice().iter().map(|x| x * s).collect())
}

pub fn hamming_distance(a: &[f64], b: &[f64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// One cube's points, translated to the cube centre, lifted by an extra
/// coordinate `R` and pushed onto the sphere of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeInstance {
    pub key: Vec<i64>,
    pub center: Vec<f64>,
    /// Indices into the lifted input.
    pub members: Vec<u32>,
    /// Dimension `d + 1`, every row of norm `R`.
    pub lifted: PointSet,
}

/// Randomly shifted grid of side `10·√d`, each cell mapped onto a sphere of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLift {
    pub dim: usize,
    pub cube_side: f64,
    pub shift: Vec<f64>,
    pub radius: f64,
    /// Input distances are divided by this before gridding.
    pub scale: f64,
    pub cubes: BTreeMap<Vec<i64>, CubeInstance>,
}

/// `d²·max(1, ln ln n)`.
pub fn default_lift_radius(d: usize, n: usize) -> f64 {
    let lnln = (n.max(3) as f64).ln().ln();
    (d * d) as f64 * lnln.max(1.0)
}

pub fn grid_lift(points: &PointSet, r: f64, seed: u64) -> Result<GridLift> {
    grid_lift_with_radius(points, r, default_lift_radius(points.dim(), points.len()), seed)
}

/// Grid lift with an explicit sphere radius. Points are divided by `r`
/// first, so the near distance becomes 1.
pub fn grid_lift_with_radius(points: &PointSet, r: f64, radius: f64, seed: u64) -> Result<GridLift> {
    if !(r > 0.0) || !(radius > 0.0) {
        return domain(format!("scale r = {r} and radius R = {radius} must be positive"));
    }
    let d = points.dim();
    let side = 10.0 * (d as f64).sqrt();
    let mut rng = substream(seed, tag::GRID, 0);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * side).collect();
    let mut lift = GridLift { dim: d, cube_side: side, shift, radius, scale: r, cubes: BTreeMap::new() };
    let mut groups: BTreeMap<Vec<i64>, Vec<u32>> = BTreeMap::new();
    for (i, p) in points.rows().enumerate() {
        groups.entry(lift.cube_of(p)).or_default().push(i as u32);
    }
    for (key, members) in groups {
        let center = lift.cube_center(&key);
        let mut lifted = PointSet::with_capacity(d + 1, Space::Euclidean, members.len());
        for &m in &members {
            lifted.push_unchecked(&lift.lift_with_center(points.row(m as usize), &center));
        }
        lift.cubes.insert(key.clone(), CubeInstance { key, center, members, lifted });
    }
    Ok(lift)
}

impl GridLift {
    /// Cube containing `x` (given in input units).
    pub fn cube_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(&self.shift)
            .map(|(&v, &s)| ((v / self.scale + s) / self.cube_side).floor() as i64)
            .collect()
    }

    /// Centre of a cube, in rescaled units.
    pub fn cube_center(&self, key: &[i64]) -> Vec<f64> {
        key.iter()
            .zip(&self.shift)
            .map(|(&k, &s)| (k as f64 + 0.5) * self.cube_side - s)
            .collect()
    }

    fn lift_with_center(&self, x: &[f64], center: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = x.iter().zip(center).map(|(&a, &c)| a / self.scale - c).collect();
        v.push(self.radius);
        let f = self.radius / norm(&v);
        v.iter_mut().for_each(|a| *a *= f);
        v
    }

    /// Query-side map: the cube of `q` and `q` lifted onto that cube's sphere.
    pub fn lift_query(&self, q: &[f64]) -> (Vec<i64>, Vec<f64>) {
        let key = self.cube_of(q);
        let center = self.cube_center(&key);
        let v = self.lift_with_center(q, &center);
        (key, v)
    }

    /// Additive distortion bound `(‖x‖² + ‖y‖²)/(2R)` for rescaled,
    /// cube-centred `x, y`; the lift never increases distances.
    pub fn distortion_bound(&self, x_centered_norm: f64, y_centered_norm: f64) -> f64 {
        (x_centered_norm.powi(2) + y_centered_norm.powi(2)) / (2.0 * self.radius)
    }
}
