//! Exact trade-off exponents and the parameters that realise them.
//!
//! For near distance `r` and far distance `cr` on the unit sphere, write
//! `a1 = α(r)`, `a2 = α(cr)`, `b1 = β(r)`, `b2 = β(cr)`. The reachable
//! `(ρ_q, ρ_u)` pairs satisfy
//!
//! ```text
//! (1 − a1·a2)·√ρ_q + (a1 − a2)·√ρ_u = b1·b2
//! ```
//!
//! and a point on this line corresponds to cap exponents with
//! `√τ = (b2 − b1·√ρ_q)/(a1 − a2)` and `√σ = a2·√τ + b2`.

use crate::error::{domain, Error, Result};
use crate::gaussian_caps::{alpha, beta, joint_cap_prob, inv_log_cap_prob};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SUCCESS_CONST: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub c: f64,
    pub r: f64,
    pub rho_q: f64,
    pub rho_u: f64,
    pub sigma_exp: f64,
    pub tau_exp: f64,
    /// `NaN` until [`solve_thresholds`] runs.
    pub eta_u: f64,
    pub eta_q: f64,
    /// Branching factor; 0 until solved.
    pub t: u64,
    /// Depth; 0 until solved.
    pub k: u32,
}

impl TradeoffPoint {
    pub fn is_solved(&self) -> bool {
        self.t > 0 && self.k > 0 && self.eta_u.is_finite() && self.eta_q.is_finite()
    }

    pub fn far(&self) -> f64 {
        self.c * self.r
    }

    /// Space exponent: the structure uses `n^{1+ρ_u}` space.
    pub fn space_exponent(&self) -> f64 {
        1.0 + self.rho_u
    }
}

/// Which coordinate of the curve to pin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    RhoQ(f64),
    RhoU(f64),
    Balanced,
}

/// Coefficients of the trade-off line, computed without cancellation for small `r`.
#[derive(Debug, Clone, Copy)]
struct Line {
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    /// 1 − a1·a2
    kq: f64,
    /// a1 − a2
    ku: f64,
}

impl Line {
    fn new(near: f64, far: f64) -> Result<Line> {
        if !(near > 0.0) || !(far > near) || !(far < 2.0) {
            return domain(format!(
                "need 0 < r < cr < 2, got r = {near}, cr = {far}"
            ));
        }
        let (n2, f2) = (near * near, far * far);
        Ok(Line {
            a1: alpha(near),
            a2: alpha(far),
            b1: beta(near),
            b2: beta(far),
            kq: 0.5 * (n2 + f2) - 0.25 * n2 * f2,
            ku: 0.5 * (f2 - n2),
        })
    }

    fn rhs(&self) -> f64 {
        self.b1 * self.b2
    }

    fn max_sqrt_q(&self) -> f64 {
        self.rhs() / self.kq
    }

    fn max_sqrt_u(&self) -> f64 {
        self.rhs() / self.ku
    }
}

/// `√τ` range: `[a1·b2/(1 − a1·a2), b2/(a1 − a2)]` (ρ_u = 0 and ρ_q = 0 ends).
pub fn tau_range(c: f64, r: f64) -> Result<(f64, f64)> {
    let l = Line::new(r, c * r)?;
    Ok((l.a1 * l.b2 / l.kq, l.b2 / l.ku))
}

fn check_c_r(c: f64, r: f64) -> Result<()> {
    if !(c > 1.0) || !c.is_finite() {
        return domain(format!("approximation c = {c} must exceed 1"));
    }
    if !(r > 0.0) || !(c * r < 2.0) {
        return domain(format!("need 0 < cr < 2, got c = {c}, r = {r}"));
    }
    Ok(())
}

/// The unique curve point for `(c, r)` matching `target` (exponents only).
pub fn curve_point(c: f64, r: f64, target: Target) -> Result<TradeoffPoint> {
    check_c_r(c, r)?;
    curve_point_geometry(r, c * r, target)
}

/// Like [`curve_point`] for arbitrary near/far distances `0 < near < far < 2`.
pub fn curve_point_geometry(near: f64, far: f64, target: Target) -> Result<TradeoffPoint> {
    let l = Line::new(near, far)?;
    let (xq, xu) = match target {
        Target::RhoQ(rq) => {
            let hi = l.max_sqrt_q().powi(2);
            if !(0.0..=hi).contains(&rq) {
                return Err(Error::Infeasible { what: format!("rho_q = {rq}"), lo: 0.0, hi });
            }
            let x = rq.sqrt();
            (x, ((l.rhs() - l.kq * x) / l.ku).max(0.0))
        }
        Target::RhoU(ru) => {
            let hi = l.max_sqrt_u().powi(2);
            if !(0.0..=hi).contains(&ru) {
                return Err(Error::Infeasible { what: format!("rho_u = {ru}"), lo: 0.0, hi });
            }
            let y = ru.sqrt();
            (((l.rhs() - l.ku * y) / l.kq).max(0.0), y)
        }
        Target::Balanced => {
            let x = l.rhs() / (l.kq + l.ku);
            (x, x)
        }
    };
    let sqrt_tau = (l.b2 - l.b1 * xq) / l.ku;
    let sqrt_sigma = l.a2 * sqrt_tau + l.b2;
    Ok(TradeoffPoint {
        c: far / near,
        r: near,
        rho_q: xq * xq,
        rho_u: xu * xu,
        sigma_exp: sqrt_sigma * sqrt_sigma,
        tau_exp: sqrt_tau * sqrt_tau,
        eta_u: f64::NAN,
        eta_q: f64::NAN,
        t: 0,
        k: 0,
    })
}

/// Residual of the trade-off equation at a point; zero on the curve.
pub fn curve_residual(p: &TradeoffPoint) -> f64 {
    let l = match Line::new(p.r, p.far()) {
        Ok(l) => l,
        Err(_) => return f64::NAN,
    };
    l.kq * p.rho_q.sqrt() + l.ku * p.rho_u.sqrt() - l.rhs()
}

/// Recover `(ρ_q, ρ_u)` from cap exponents: `ρ_q = (√σ − a1√τ)²/b1²`, `ρ_u = (a1√σ − √τ)²/b1²`.
pub fn exponents_from_caps(r: f64, sigma_exp: f64, tau_exp: f64) -> (f64, f64) {
    let (a1, b1) = (alpha(r), beta(r));
    let (s, t) = (sigma_exp.sqrt(), tau_exp.sqrt());
    ((s - a1 * t).powi(2) / (b1 * b1), (a1 * s - t).powi(2) / (b1 * b1))
}

/// Default depth `round(√ln n)`, at least 1.
pub fn default_k(n: usize) -> u32 {
    ((n.max(2) as f64).ln().sqrt().round() as u32).max(1)
}

/// Thresholds and branching with the default success constant 100.
pub fn solve_thresholds(point: &TradeoffPoint, n: usize, k: u32) -> Result<TradeoffPoint> {
    solve_thresholds_with(point, n, k, DEFAULT_SUCCESS_CONST)
}

/// `F(η_u)^K = n^{−σ}`, `F(η_q)^K = n^{−τ}` and `T = ⌈C / G(r, η_u, η_q)⌉`.
pub fn solve_thresholds_with(
    point: &TradeoffPoint,
    n: usize,
    k: u32,
    success_const: f64,
) -> Result<TradeoffPoint> {
    if n < 2 {
        return domain(format!("n = {n} must be at least 2"));
    }
    if k == 0 {
        return domain("depth K must be positive");
    }
    if !(success_const > 0.0) {
        return domain(format!("success constant {success_const} must be positive"));
    }
    if !(point.sigma_exp > 0.0) || !(point.tau_exp > 0.0) {
        return domain(format!(
            "exponents must be positive (sigma = {}, tau = {}); a zero exponent needs an infinite threshold",
            point.sigma_exp, point.tau_exp
        ));
    }
    let ln_n = (n as f64).ln();
    let eta_u = inv_log_cap_prob(-point.sigma_exp * ln_n / k as f64)?;
    let eta_q = inv_log_cap_prob(-point.tau_exp * ln_n / k as f64)?;
    let g = joint_cap_prob(point.r, eta_u, eta_q)?;
    let t = (success_const / g).ceil();
    if !(t < 9.0e15) {
        return Err(Error::TooLarge(format!("branching factor T = {t:e}")));
    }
    Ok(TradeoffPoint { eta_u, eta_q, t: (t as u64).max(1), k, ..*point })
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 1.0) || !c.is_finite() {
        return domain(format!("approximation c = {c} must exceed 1"));
    }
    Ok(())
}

fn grid_line(kq: f64, ku: f64, rhs: f64, grid: usize) -> Vec<(f64, f64)> {
    let xmax = rhs / kq;
    (0..grid)
        .map(|i| {
            let x = xmax * i as f64 / (grid - 1) as f64;
            let y = ((rhs - kq * x) / ku).max(0.0);
            (x * x, y * y)
        })
        .collect()
}

/// Random-instance curve `c²√ρ_q + (c²−1)√ρ_u = √(2c²−1)`, `grid` points evenly spaced in `√ρ_q`.
pub fn random_curve(c: f64, grid: usize) -> Result<Vec<(f64, f64)>> {
    check_c(c)?;
    if grid < 2 {
        return domain("grid must have at least 2 points");
    }
    let c2 = c * c;
    Ok(grid_line(c2, c2 - 1.0, (2.0 * c2 - 1.0).sqrt(), grid))
}

/// Worst-case curve `(c²+1)√ρ_q + (c²−1)√ρ_u = 2c`.
pub fn worst_case_curve(c: f64, grid: usize) -> Result<Vec<(f64, f64)>> {
    check_c(c)?;
    if grid < 2 {
        return domain("grid must have at least 2 points");
    }
    let c2 = c * c;
    Ok(grid_line(c2 + 1.0, c2 - 1.0, 2.0 * c, grid))
}

/// `ρ_u` on the random-instance curve at a given `ρ_q`.
pub fn random_curve_rho_u(c: f64, rho_q: f64) -> Result<f64> {
    check_c(c)?;
    let c2 = c * c;
    let y = ((2.0 * c2 - 1.0).sqrt() - c2 * rho_q.sqrt()) / (c2 - 1.0);
    if y < 0.0 || rho_q < 0.0 {
        let hi = (2.0 * c2 - 1.0) / (c2 * c2);
        return Err(Error::Infeasible { what: format!("rho_q = {rho_q}"), lo: 0.0, hi });
    }
    Ok(y * y)
}

/// `ρ_u` on the worst-case curve at a given `ρ_q`.
pub fn worst_case_rho_u(c: f64, rho_q: f64) -> Result<f64> {
    check_c(c)?;
    let c2 = c * c;
    let y = (2.0 * c - (c2 + 1.0) * rho_q.sqrt()) / (c2 - 1.0);
    if y < 0.0 || rho_q < 0.0 {
        let hi = (2.0 * c / (c2 + 1.0)).powi(2);
        return Err(Error::Infeasible { what: format!("rho_q = {rho_q}"), lo: 0.0, hi });
    }
    Ok(y * y)
}
