//! Spherical-cap probabilities.
//!
//! For unit vectors `u, q` at distance `s` and a standard Gaussian `z`,
//! `⟨z,u⟩` and `⟨z,q⟩` are standard normals with correlation `α(s) = 1 − s²/2`.
//! `F(η)` is the upper tail of one projection, `G(s, η_u, η_q)` the joint
//! upper orthant of both.

use crate::error::{domain, Error, Result};
use crate::quad;
use std::f64::consts::FRAC_1_SQRT_2;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// `α(s)`; accepts any real, callers validate.
#[inline]
pub fn alpha(s: f64) -> f64 {
    1.0 - 0.5 * s * s
}

/// `β(s) = sqrt(1 − α²)` written as `s·sqrt(1 − s²/4)` to avoid cancellation near 0.
#[inline]
pub fn beta(s: f64) -> f64 {
    s * (1.0 - 0.25 * s * s).max(0.0).sqrt()
}

pub fn alpha_beta(s: f64) -> Result<(f64, f64)> {
    if !(0.0..=2.0).contains(&s) {
        return domain(format!("distance s = {s} outside [0, 2]"));
    }
    Ok((alpha(s), beta(s)))
}

/// `F(η) = Pr[N(0,1) ≥ η]`.
pub fn cap_prob(eta: f64) -> f64 {
    0.5 * libm::erfc(eta * FRAC_1_SQRT_2)
}

/// `ln F(η)`, accurate far into both tails.
pub fn log_cap_prob(eta: f64) -> f64 {
    if eta.is_nan() {
        return f64::NAN;
    }
    if eta < 0.0 {
        return (-cap_prob(-eta)).ln_1p();
    }
    if eta < 30.0 {
        return cap_prob(eta).ln();
    }
    // Continued fraction of the Mills ratio, evaluated backwards.
    let mut t = eta;
    for k in (1..=60).rev() {
        t = eta + k as f64 / t;
    }
    -0.5 * eta * eta - LN_SQRT_2PI - t.ln()
}

/// Standard normal log-density.
#[inline]
fn log_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// The `η` with `ln F(η) = target`; bisection on the monotone `ln F`.
pub fn inv_log_cap_prob(target: f64) -> Result<f64> {
    if !(target < 0.0) || !target.is_finite() {
        return domain(format!("log tail probability {target} must be finite and negative"));
    }
    let mut lo = -38.0;
    let mut hi = 40.0f64.max((-2.0 * target).sqrt() + 10.0);
    if log_cap_prob(lo) < target {
        return Err(Error::NoConvergence(format!(
            "target {target:e} above ln F({lo}) = {:e}",
            log_cap_prob(lo)
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_cap_prob(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    let miss = (log_cap_prob(eta) - target).abs();
    if miss > 1e-10 * target.abs().max(1.0) {
        return Err(Error::NoConvergence(format!(
            "bracket [{lo}, {hi}] leaves |ln F - target| = {miss:e}"
        )));
    }
    Ok(eta)
}

fn check_joint(s: f64, eta_u: f64, eta_q: f64) -> Result<()> {
    if !(s > 0.0 && s < 2.0) {
        return domain(format!("distance s = {s} must lie in (0, 2)"));
    }
    if !eta_u.is_finite() || !eta_q.is_finite() {
        return domain("thresholds must be finite");
    }
    Ok(())
}

/// `ln G(s, η_u, η_q)`.
///
/// `G = ∫_{η_u}^∞ φ(x) F((η_q − αx)/β) dx`. The log-integrand is strictly
/// concave with curvature at most −1, so we locate its mode, factor it out,
/// and integrate the remaining bounded function over a window that drops only
/// `e^{-800}` of mass.
pub fn log_joint_cap_prob(s: f64, eta_u: f64, eta_q: f64) -> Result<f64> {
    check_joint(s, eta_u, eta_q)?;
    let a = alpha(s);
    let b = beta(s);
    let h = |x: f64| log_phi(x) + log_cap_prob((eta_q - a * x) / b);
    // h'(x) = −x + (a/b)·φ(y)/F(y), y = (η_q − a x)/b.
    let dh = |x: f64| {
        let y = (eta_q - a * x) / b;
        -x + (a / b) * (log_phi(y) - log_cap_prob(y)).exp()
    };
    let mut mode = eta_u;
    if dh(eta_u) > 0.0 {
        let mut step = 1.0;
        let mut hi = eta_u + step;
        while dh(hi) > 0.0 {
            step *= 2.0;
            hi = eta_u + step;
        }
        let mut lo = eta_u;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dh(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mode = 0.5 * (lo + hi);
    }
    let peak = h(mode);
    let g = |x: f64| (h(x) - peak).exp();
    let mut total = 0.0;
    if mode > eta_u {
        total += quad::integrate(g, eta_u, mode, 1e-300, 1e-13).0;
    }
    total += quad::integrate(g, mode, mode + 40.0, 1e-300, 1e-13).0;
    Ok(peak + total.ln())
}

/// `G(s, η_u, η_q)`: probability that both projections clear their thresholds.
pub fn joint_cap_prob(s: f64, eta_u: f64, eta_q: f64) -> Result<f64> {
    Ok(log_joint_cap_prob(s, eta_u, eta_q)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogExponents {
    pub f_exp_u: f64,
    pub f_exp_q: f64,
    pub g_exp: f64,
}

/// Leading-order negative logs of `F(η_u)`, `F(η_q)` and `G(s, η_u, η_q)`.
pub fn log_exponents(s: f64, eta_u: f64, eta_q: f64) -> Result<LogExponents> {
    check_joint(s, eta_u, eta_q)?;
    let a = alpha(s);
    let b = beta(s);
    Ok(LogExponents {
        f_exp_u: 0.5 * eta_u * eta_u,
        f_exp_q: 0.5 * eta_q * eta_q,
        g_exp: (eta_u * eta_u + eta_q * eta_q - 2.0 * a * eta_u * eta_q) / (2.0 * b * b),
    })
}
