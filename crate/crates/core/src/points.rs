use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Unit vectors.
    Sphere,
    /// ±1 vectors.
    Hamming,
    /// Unconstrained real vectors.
    Euclidean,
}

impl Space {
    pub fn tag(self) -> u8 {
        match self {
            Space::Sphere => 0,
            Space::Hamming => 1,
            Space::Euclidean => 2,
        }
    }

    pub fn from_tag(t: u8) -> Option<Space> {
        match t {
            0 => Some(Space::Sphere),
            1 => Some(Space::Hamming),
            2 => Some(Space::Euclidean),
            _ => None,
        }
    }
}

/// Row-major collection of `len()` vectors of dimension `dim()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    space: Space,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, space: Space, data: Vec<f64>) -> Result<PointSet> {
        if dim == 0 {
            return domain("dimension must be positive");
        }
        if data.len() % dim != 0 {
            return domain(format!("{} values do not split into rows of {dim}", data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return domain("non-finite coordinate");
        }
        if space == Space::Hamming && data.iter().any(|&x| x != 1.0 && x != -1.0) {
            return domain("hamming points must have entries in {-1, +1}");
        }
        Ok(PointSet { dim, space, data })
    }

    pub fn from_rows(dim: usize, space: Space, rows: &[Vec<f64>]) -> Result<PointSet> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return domain(format!("row of length {} in a set of dimension {dim}", r.len()));
            }
            data.extend_from_slice(r);
        }
        PointSet::new(dim, space, data)
    }

    pub fn with_capacity(dim: usize, space: Space, n: usize) -> PointSet {
        PointSet { dim, space, data: Vec::with_capacity(n * dim) }
    }

    pub(crate) fn push_unchecked(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }

    /// Largest deviation of a row norm from 1.
    pub fn max_norm_error(&self) -> f64 {
        self.rows().map(|r| (norm(r) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// A stable 64-bit fingerprint of dimension, space and coordinates.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ self.dim as u64 ^ ((self.space.tag() as u64) << 56);
        for x in &self.data {
            h = crate::rng::derive(h, x.to_bits());
        }
        h
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators: fixed order, so results are reproducible.
    let mut s = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        s[0] += x[0] * y[0];
        s[1] += x[1] * y[1];
        s[2] += x[2] * y[2];
        s[3] += x[3] * y[3];
    }
    let mut t = (s[0] + s[1]) + (s[2] + s[3]);
    for (x, y) in ra.iter().zip(rb) {
        t += x * y;
    }
    t
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        let d2 = x[2] - y[2];
        let d3 = x[3] - y[3];
        s[0] += d0 * d0;
        s[1] += d1 * d1;
        s[2] += d2 * d2;
        s[3] += d3 * d3;
    }
    let mut t = (s[0] + s[1]) + (s[2] + s[3]);
    for (x, y) in ra.iter().zip(rb) {
        t += (x - y) * (x - y);
    }
    t
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(PointSet::new(0, Space::Sphere, vec![]).is_err());
        assert!(PointSet::new(3, Space::Sphere, vec![1.0; 4]).is_err());
        assert!(PointSet::new(2, Space::Hamming, vec![1.0, 0.5]).is_err());
        assert!(PointSet::new(2, Space::Euclidean, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn kernels_agree_with_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i * i) as f64 * 0.01).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
        let nd: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!((dist2(&a, &b) - nd).abs() < 1e-12);
    }
}
