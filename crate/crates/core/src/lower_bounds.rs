//! Lower-bound formulas and exact hypercube checks.
//!
//! Functions on `{−1, 1}^d` are tables of length `2^d`; bit `i` of the index
//! set means coordinate `i` is −1. The noise operator `T_σ` keeps each
//! coordinate with probability `σ` and re-randomises it otherwise.

use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};

pub const MAX_CUBE_DIM: u32 = 16;

/// Hölder pair for noise rate `σ`: `(p − 1)(q − 1) = σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
}

impl NoiseParams {
    pub fn new(sigma: f64, p: f64, q: f64) -> Result<NoiseParams> {
        if !(0.0..1.0).contains(&sigma) {
            return domain(format!("noise rate σ = {sigma} must lie in [0, 1)"));
        }
        if !(p >= 1.0) || !(q >= 1.0) || !p.is_finite() || !q.is_finite() {
            return domain(format!("p = {p}, q = {q} must be finite and at least 1"));
        }
        let gap = ((p - 1.0) * (q - 1.0) - sigma * sigma).abs();
        if gap > 1e-12 {
            return domain(format!("(p−1)(q−1) differs from σ² by {gap:e}"));
        }
        Ok(NoiseParams { sigma, p, q })
    }

    /// The pair with the given `p > 1`.
    pub fn from_p(sigma: f64, p: f64) -> Result<NoiseParams> {
        if !(p > 1.0) {
            return domain(format!("p = {p} must exceed 1"));
        }
        NoiseParams::new(sigma, p, 1.0 + sigma * sigma / (p - 1.0))
    }

    /// `σ = 1 − 1/c`.
    pub fn sigma_for(c: f64) -> Result<f64> {
        if !(c > 1.0) {
            return domain(format!("approximation c = {c} must exceed 1"));
        }
        Ok(1.0 - 1.0 / c)
    }
}

/// `γ^q · m^{1 + q/p − q}`.
pub fn robust_expansion_lb(m: f64, gamma: f64, np: &NoiseParams) -> Result<f64> {
    if !(m >= 1.0) {
        return domain(format!("m = {m} must be at least 1"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("γ = {gamma} must lie in (0, 1]"));
    }
    Ok(gamma.powf(np.q) * m.powf(1.0 + np.q / np.p - np.q))
}

/// `(c/(c−1))² = 1/σ²`.
pub fn one_probe_space_exponent(c: f64) -> Result<f64> {
    let s = NoiseParams::sigma_for(c)?;
    Ok(1.0 / (s * s))
}

/// The exponent `p/(q(p − 1))` reached at finite `n` by the schedule
/// `p = 1 + ln ln n / ln n`, `q = 1 + σ² ln n / ln ln n`, ignoring the
/// `γ` and word-size factors. Tends to `1/σ²` from below, slowly.
pub fn one_probe_schedule_exponent(c: f64, n: f64) -> Result<f64> {
    let s = NoiseParams::sigma_for(c)?;
    if !(n > std::f64::consts::E.exp()) {
        return domain(format!("n = {n} must exceed e^e so that ln ln n > 1"));
    }
    let l = n.ln().ln() / n.ln();
    let np = NoiseParams::from_p(s, 1.0 + l)?;
    Ok(np.p / (np.q * (np.p - 1.0)))
}

/// Upper end of the `ρ_u` range: `(2c − 1)/(c − 1)²`.
pub fn list_of_points_max_rho_u(c: f64) -> Result<f64> {
    NoiseParams::sigma_for(c)?;
    Ok((2.0 * c - 1.0) / ((c - 1.0) * (c - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LopRegime {
    /// `ρ_u = 0`.
    Linear,
    /// `0 < ρ_u ≤ 1/(2c − 1)` (`q ≥ p`).
    Low,
    /// `1/(2c − 1) < ρ_u ≤ (2c − 1)/(c − 1)²` (`q < p`).
    High,
}

/// Query exponent lower bound for a list-of-points structure with space `n^{1+ρ_u}`.
pub fn list_of_points_rho_q(c: f64, rho_u: f64) -> Result<f64> {
    Ok(list_of_points_detail(c, rho_u)?.0)
}

/// `(ρ_q, regime, p, q)`. For `ρ_u > 0`: `β = √((1−σ²)/ρ_u)`, `q = 1 − σ² + σβ`,
/// `p = β/(β − σ)` and `ρ_q = (1 + ρ_u)(1 − q) + q/p`. For `ρ_u = 0`:
/// `ρ_q = 1 − σ² = (2c − 1)/c²` (the `p → 1` limit; `p`, `q` reported as NaN).
pub fn list_of_points_detail(c: f64, rho_u: f64) -> Result<(f64, LopRegime, f64, f64)> {
    let s = NoiseParams::sigma_for(c)?;
    let hi = list_of_points_max_rho_u(c)?;
    if !(rho_u >= 0.0 && rho_u <= hi * (1.0 + 1e-12)) {
        return Err(Error::Infeasible { what: format!("rho_u = {rho_u}"), lo: 0.0, hi });
    }
    if rho_u == 0.0 {
        return Ok((1.0 - s * s, LopRegime::Linear, f64::NAN, f64::NAN));
    }
    let regime = if rho_u <= 1.0 / (2.0 * c - 1.0) { LopRegime::Low } else { LopRegime::High };
    let beta = ((1.0 - s * s) / rho_u).sqrt();
    if beta - s <= 1e-12 * s {
        // β = σ at the upper end: p = ∞, q = 1.
        return Ok((0.0, regime, f64::INFINITY, 1.0));
    }
    let q = 1.0 - s * s + s * beta;
    let p = beta / (beta - s);
    Ok((((1.0 + rho_u) * (1.0 - q) + q / p).max(0.0), regime, p, q))
}

fn cube_len(d: u32) -> Result<usize> {
    if d > MAX_CUBE_DIM {
        return Err(Error::TooLarge(format!("dimension {d} exceeds the exact-enumeration cap {MAX_CUBE_DIM}")));
    }
    Ok(1usize << d)
}

fn table_dim(f: &[f64]) -> Result<u32> {
    let len = f.len();
    if len == 0 || !len.is_power_of_two() {
        return domain(format!("table length {len} is not a power of two"));
    }
    let d = len.trailing_zeros();
    cube_len(d)?;
    Ok(d)
}

/// Exact `T_σ f`, one coordinate at a time:
/// `f(x) ← ((1+σ)/2)·f(x) + ((1−σ)/2)·f(x ⊕ e_i)`.
pub fn noise_operator_apply(f: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let d = table_dim(f)?;
    if !(0.0..=1.0).contains(&sigma) {
        return domain(format!("noise rate σ = {sigma} must lie in [0, 1]"));
    }
    let keep = 0.5 * (1.0 + sigma);
    let flip = 0.5 * (1.0 - sigma);
    let mut g = f.to_vec();
    for i in 0..d {
        let bit = 1usize << i;
        for x in 0..g.len() {
            if x & bit == 0 {
                let (a, b) = (g[x], g[x | bit]);
                g[x] = keep * a + flip * b;
                g[x | bit] = keep * b + flip * a;
            }
        }
    }
    Ok(g)
}

/// Uniform inner product `E_x[f(x) g(x)]`.
pub fn inner(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / f.len() as f64
}

pub fn indicator(d: u32, members: &[u32]) -> Result<Vec<f64>> {
    let len = cube_len(d)?;
    let mut t = vec![0.0; len];
    for &m in members {
        if m as usize >= len {
            return domain(format!("vertex {m} outside the {d}-cube"));
        }
        t[m as usize] = 1.0;
    }
    Ok(t)
}

/// Indicator of the Hamming ball of `radius` around `center`.
pub fn hamming_ball(d: u32, center: u32, radius: u32) -> Result<Vec<f64>> {
    let len = cube_len(d)?;
    Ok((0..len).map(|x| if ((x as u32) ^ center).count_ones() <= radius { 1.0 } else { 0.0 }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypercontractiveResult {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `⟨T_σ χ_A, χ_B⟩ ≤ ‖χ_A‖_p·‖χ_B‖_q`, with `A`, `B` given as indicator tables.
pub fn hypercontractive_check(a: &[f64], b: &[f64], np: &NoiseParams) -> Result<HypercontractiveResult> {
    let d = table_dim(a)?;
    if table_dim(b)? != d {
        return domain("A and B live in cubes of different dimension");
    }
    let mu_a = a.iter().sum::<f64>() / a.len() as f64;
    let mu_b = b.iter().sum::<f64>() / b.len() as f64;
    if mu_a == 0.0 || mu_b == 0.0 {
        return domain("A and B must be non-empty");
    }
    let lhs = inner(&noise_operator_apply(a, np.sigma)?, b);
    let rhs = mu_a.powf(1.0 / np.p) * mu_b.powf(1.0 / np.q);
    Ok(HypercontractiveResult { lhs, rhs, holds: lhs <= rhs + 1e-9 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_params_relation() {
        assert!(NoiseParams::new(0.5, 1.5, 1.5).is_ok());
        assert!(NoiseParams::new(0.5, 1.5, 2.0).is_err());
        let np = NoiseParams::from_p(0.3, 1.2).unwrap();
        assert!(((np.p - 1.0) * (np.q - 1.0) - 0.09).abs() < 1e-12);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(noise_operator_apply(&vec![0.0; 1 << 17], 0.5), Err(Error::TooLarge(_))));
        assert!(noise_operator_apply(&[1.0, 2.0, 3.0], 0.5).is_err());
    }

    #[test]
    fn lop_range() {
        assert!(list_of_points_rho_q(2.0, 3.0 + 1e-6).is_err());
        assert_eq!(list_of_points_rho_q(2.0, 3.0).unwrap(), 0.0);
        assert_eq!(list_of_points_detail(2.0, 0.2).unwrap().1, LopRegime::Low);
        assert_eq!(list_of_points_detail(2.0, 0.5).unwrap().1, LopRegime::High);
    }
}
