//! Root solver for the nonstationary filter parameter: find α with
//! `α ‖(CC* + α W)⁻¹ r‖ = t ‖r‖`.
//!
//! Everything is diagonal in the Fourier basis, so the squared left side is
//! the scalar function `Φ(α) = Σ (α/(s + αw))² |r̂|²` over the frequency grid
//! (s = blur eigenvalue magnitudes squared, r̂ in the unitary convention).
//! Φ is increasing and concave-ish in the useful range; a damped Newton
//! update converges monotonically from above, with a plain bisection on
//! [0, alpha_max] as the safeguard.

use crate::error::{Error, Result};
use crate::regop::RegWeights;
use crate::spectral::SpectrumGrid;

#[derive(Debug, Clone, Copy)]
pub struct AlphaCaps {
    pub alpha_max: f64,
    pub max_newton: u32,
    pub bisect_tol: f64,
}

impl Default for AlphaCaps {
    fn default() -> Self {
        Self {
            alpha_max: 1e12,
            max_newton: 50,
            bisect_tol: 1e-10,
        }
    }
}

pub struct AlphaProblem<'a> {
    pub u: &'a SpectrumGrid,
    pub w: &'a RegWeights,
    /// Residual spectrum in the unitary convention (Parseval holds).
    pub rhat: &'a SpectrumGrid,
    pub target_ratio: f64,
    pub alpha0: f64,
    pub caps: AlphaCaps,
}

/// `Φ(α) = Σ (α/(|u|² + α·w))² |r̂|²`, the squared filtered-residual norm.
pub fn phi(alpha: f64, p: &AlphaProblem) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for ((uv, wv), rv) in p.u.iter().zip(p.w.w.iter()).zip(p.rhat.iter()) {
        let q = alpha / (uv.norm_sqr() + alpha * wv);
        acc += q * q * rv.norm_sqr();
    }
    acc
}

/// Exact derivative dΦ/dα = `Σ 2α·|u|²/(|u|² + α·w)³ |r̂|²`.
pub fn phi_prime(alpha: f64, p: &AlphaProblem) -> f64 {
    let mut acc = 0.0;
    for ((uv, wv), rv) in p.u.iter().zip(p.w.w.iter()).zip(p.rhat.iter()) {
        let s = uv.norm_sqr();
        let d = s + alpha * wv;
        acc += 2.0 * alpha * s / (d * d * d) * rv.norm_sqr();
    }
    acc
}

/// Solves `Φ(α) = t²‖r‖²`, returning α and the Newton trace (empty when the
/// bisection fallback produced the answer).
pub fn solve_alpha_traced(p: &AlphaProblem) -> Result<(f64, Vec<f64>)> {
    let r_norm2: f64 = p.rhat.iter().map(|v| v.norm_sqr()).sum();
    if r_norm2 <= 0.0 {
        return Err(Error::Degenerate("zero residual in parameter solve".into()));
    }
    let target2 = p.target_ratio * p.target_ratio * r_norm2;

    // attainability: Φ(α) → Σ |r̂/w|² as α → ∞ (∞ where w vanishes but the
    // blur does not); the target must lie strictly below that limit
    let mut limit = 0.0f64;
    for ((uv, wv), rv) in p.u.iter().zip(p.w.w.iter()).zip(p.rhat.iter()) {
        let rh2 = rv.norm_sqr();
        if *wv > 0.0 {
            limit += rh2 / (wv * wv);
        } else if rh2 > 0.0 {
            if uv.norm_sqr() == 0.0 {
                return Err(Error::Degenerate(
                    "filter is singular: a frequency with residual energy has zero blur \
                     response and zero regularization weight"
                        .into(),
                ));
            }
            limit = f64::INFINITY;
            break;
        }
    }
    if target2 >= limit {
        return Err(Error::AlphaUnattainable {
            target: target2.sqrt(),
            limit: limit.sqrt(),
        });
    }

    let r_norm = r_norm2.sqrt();
    let tol_abs = p.caps.bisect_tol * r_norm;
    let converged = |phi_val: f64| (phi_val.sqrt() - p.target_ratio * r_norm).abs() <= tol_abs;

    // Newton converges monotonically from above; grow the start until it is
    let mut alpha = if p.alpha0.is_finite() && p.alpha0 > 0.0 {
        p.alpha0
    } else {
        1.0
    };
    let mut above = false;
    while alpha <= p.caps.alpha_max {
        if phi(alpha, p) >= target2 {
            above = true;
            break;
        }
        alpha *= 10.0;
    }

    if above {
        let mut trace = vec![alpha];
        for _ in 0..p.caps.max_newton {
            let f = phi(alpha, p);
            if converged(f) {
                return Ok((alpha, trace));
            }
            let fp = phi_prime(alpha, p);
            let denom = alpha * fp + f - target2;
            if !(denom > 0.0) || fp <= 0.0 {
                break;
            }
            let next = alpha * alpha * fp / denom;
            if !next.is_finite() || next <= 0.0 || next > p.caps.alpha_max {
                break;
            }
            alpha = next;
            trace.push(alpha);
        }
        if converged(phi(alpha, p)) {
            return Ok((alpha, trace));
        }
    }

    // safeguarded bisection on [0, alpha_max]
    if phi(p.caps.alpha_max, p) < target2 {
        return Err(Error::Numerical(format!(
            "parameter equation root exceeds cap {:e}",
            p.caps.alpha_max
        )));
    }
    let (mut lo, mut hi) = (0.0f64, p.caps.alpha_max);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..2000 {
        mid = 0.5 * (lo + hi);
        let f = phi(mid, p);
        if converged(f) {
            return Ok((mid, Vec::new()));
        }
        if f < target2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    if converged(phi(mid, p)) {
        Ok((mid, Vec::new()))
    } else {
        Err(Error::Numerical(
            "parameter bisection failed to meet tolerance".into(),
        ))
    }
}

pub fn solve_alpha(p: &AlphaProblem) -> Result<f64> {
    solve_alpha_traced(p).map(|(a, _)| a)
}
