//! Approximate smallest enclosing ball.
//!
//! Frank–Wolfe on the dual with away steps (Yildirim's core-set scheme): the
//! iterate is a convex combination of input points, moved toward the farthest
//! point or away from the closest support point. Terminates once the farthest
//! and closest support points are within a `(1 ± eps)` factor of the current
//! squared-radius estimate, which bounds the returned radius by
//! `√(1 + eps)` times the optimum.

use crate::points::dist2;

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    /// Distance from `center` to the farthest input point, so the ball always encloses.
    pub radius: f64,
    pub iterations: usize,
}

/// `rows` are the indices of the points in `data` (row-major, dimension `dim`).
pub fn smallest_enclosing_ball(data: &[f64], dim: usize, rows: &[u32], eps: f64) -> Ball {
    assert!(!rows.is_empty());
    let row = |i: usize| &data[rows[i] as usize * dim..(rows[i] as usize + 1) * dim];
    let m = rows.len();
    if m == 1 {
        return Ball { center: row(0).to_vec(), radius: 0.0, iterations: 0 };
    }
    let farthest_from = |x: &[f64]| {
        (0..m)
            .map(|i| (i, dist2(row(i), x)))
            .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
            .0
    };
    let a = farthest_from(row(0));
    let b = farthest_from(row(a));
    let mut u = vec![0.0; m];
    u[a] += 0.5;
    u[b] += 0.5;
    let mut c: Vec<f64> = row(a).iter().zip(row(b)).map(|(x, y)| 0.5 * (x + y)).collect();
    let mut d2 = vec![0.0; m];
    let mut it = 0;
    loop {
        for i in 0..m {
            d2[i] = dist2(row(i), &c);
        }
        // φ(u) = Σ u_i‖p_i‖² − ‖c‖² equals Σ u_i ‖p_i − c‖².
        let gamma: f64 = (0..m).filter(|&i| u[i] > 0.0).map(|i| u[i] * d2[i]).sum();
        let gamma = gamma.max(1e-300);
        let j = (0..m).fold(0, |a, i| if d2[i] > d2[a] { i } else { a });
        if d2[j] == 0.0 {
            // All points coincide with the centre.
            return Ball { center: c, radius: 0.0, iterations: it };
        }
        let k = (0..m)
            .filter(|&i| u[i] > 0.0)
            .fold(usize::MAX, |a, i| if a == usize::MAX || d2[i] < d2[a] { i } else { a });
        let up = d2[j] / gamma - 1.0;
        let down = 1.0 - d2[k] / gamma;
        if (up <= eps && down <= eps) || it >= 100_000 {
            return Ball { center: c, radius: d2[j].sqrt(), iterations: it };
        }
        it += 1;
        if up > down {
            let lam = up / (2.0 * (1.0 + up));
            u.iter_mut().for_each(|w| *w *= 1.0 - lam);
            u[j] += lam;
            c.iter_mut().zip(row(j)).for_each(|(x, &y)| *x = (1.0 - lam) * *x + lam * y);
        } else {
            let lam = (down / (2.0 * (1.0 - down))).min(u[k] / (1.0 - u[k]));
            u.iter_mut().for_each(|w| *w *= 1.0 + lam);
            u[k] -= lam;
            if u[k] < 1e-15 {
                u[k] = 0.0;
            }
            c.iter_mut().zip(row(k)).for_each(|(x, &y)| *x = (1.0 + lam) * *x - lam * y);
        }
    }
}
