//! Iterative thresholded restoration drivers.
//!
//! All variants share one skeleton: keep frame coefficients `z`, threshold
//! them (`x = S_μ(z)`), measure the data residual with the true boundary
//! operator `K`, and stop once `‖r‖ ≤ τδ` (discrepancy principle) or the
//! iteration cap is hit. They differ only in the correction step:
//!
//! - plain ISTA takes the gradient step `W Kᵀ r / L`;
//! - the preconditioned variants solve a one-shot Tikhonov filter in the
//!   periodic surrogate's eigenbasis with a nonstationary α chosen so the
//!   filtered residual keeps a fixed ratio to the residual;
//! - the structured variants materialize that filter as a small spatial
//!   mask re-applied under the true boundary condition.

use crate::alphasolve::{solve_alpha, AlphaCaps, AlphaProblem};
use crate::boundary::{BlurOperator, BoundaryCondition};
use crate::error::{Error, Result};
use crate::framelet::{analysis, synthesis, FrameCoeffs};
use crate::image::{Image, Psf};
use crate::regop::{h_weights, lambda_weights, RegKind, RegWeights};
use crate::spectral::{self, SpectrumGrid};
#[cfg(test)]
use ndarray::Array2;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rho: f64,
    pub q: f64,
    pub mu: f64,
    /// Noise norm ‖η‖ driving the discrepancy stop (0 disables it).
    pub delta: f64,
    pub bc: BoundaryCondition,
    pub reg_kind: RegKind,
    pub structured: bool,
    pub max_iter: usize,
    /// Use the literal scaled update z + α·h instead of z + h.
    pub alg2_update_scaled: bool,
    /// Divide the target ratio by the weights' lower bound c₁ and take τ,
    /// parameter windows relative to c₁ (study mode; default off).
    pub c1_scaling: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 0.2,
            q: 0.7,
            mu: 0.0,
            delta: 0.0,
            bc: BoundaryCondition::Reflective,
            reg_kind: RegKind::HFunction,
            structured: false,
            max_iter: 500,
            alg2_update_scaled: false,
            c1_scaling: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self, c1: f64) -> Result<()> {
        let c = if self.c1_scaling { c1 } else { 1.0 };
        if !(self.rho > 0.0 && self.rho < c / 2.0) {
            return Err(Error::Config(format!(
                "rho must lie in (0, {}), got {}",
                c / 2.0,
                self.rho
            )));
        }
        if !(self.q > 2.0 * self.rho && self.q < c) {
            return Err(Error::Config(format!(
                "q must lie in ({}, {c}), got {}",
                2.0 * self.rho,
                self.q
            )));
        }
        if self.mu < 0.0 || self.delta < 0.0 {
            return Err(Error::Config("mu and delta must be nonnegative".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Discrepancy factor τ; the residual stop is ‖r‖ ≤ τδ.
    pub fn tau(&self, c1: f64) -> f64 {
        if self.c1_scaling {
            (1.0 + 2.0 * self.rho) / (c1 - 2.0 * self.rho)
        } else {
            (1.0 + 2.0 * self.rho) / (1.0 - 2.0 * self.rho)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Discrepancy principle met: ‖r‖ ≤ τδ.
    Converged,
    MaxIter,
    /// The α equation had no solution; iteration stopped at the last good z.
    AlphaFailure,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::MaxIter => "max-iter",
            Self::AlphaFailure => "alpha-failure",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub n: usize,
    pub z: FrameCoeffs,
    pub x: FrameCoeffs,
    pub f: Image,
    pub r: Image,
    pub alpha_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub status: Termination,
}

/// Componentwise shrinkage S_μ(v) = sign(v)·max(|v| − μ, 0).
pub fn soft_threshold(c: &FrameCoeffs, mu: f64) -> FrameCoeffs {
    let mut out = c.clone();
    if mu == 0.0 {
        return out;
    }
    for sb in out.subbands.iter_mut() {
        sb.mapv_inplace(|v| v.signum() * (v.abs() - mu).max(0.0));
    }
    out
}

/// Frame coefficients of the observed image — the conventional warm start.
pub fn default_z0(g: &Image) -> Result<FrameCoeffs> {
    analysis(g)
}

/// `C*(CC* + α W)⁻¹ y` evaluated in the periodic eigenbasis.
#[cfg(test)]
pub(crate) fn filter_apply(
    u: &SpectrumGrid,
    w: &Array2<f64>,
    alpha: f64,
    y: &Image,
) -> Image {
    let m = y.m() as f64;
    let yhat = spectral::fft2(&y.data);
    let filtered = ndarray::Zip::from(&yhat)
        .and(u)
        .and(w)
        .map_collect(|yh, uv, wv| yh * uv.conj() / (uv.norm_sqr() + alpha * wv));
    let back = spectral::ifft2_unnorm(&filtered);
    Image {
        data: back.mapv(|v| v.re * m),
    }
}

enum StepKind {
    Spectral,
    Structured,
    Gradient { inv_l: f64 },
}

fn reg_for(kind: RegKind, u: &SpectrumGrid, m: usize) -> Result<RegWeights> {
    match kind {
        RegKind::HFunction => h_weights(u),
        RegKind::Lambda => Ok(lambda_weights(m)),
    }
}

fn run_core(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
    step: StepKind,
    observer: &mut dyn FnMut(usize, &FrameCoeffs),
) -> Result<(Image, SolverState)> {
    let m = g.m();
    if z0.m != m {
        return Err(Error::Dimension(format!(
            "start coefficients sized {} for an m={m} problem",
            z0.m
        )));
    }
    let op = BlurOperator::new(psf.clone(), cfg.bc, m)?;
    let u = spectral::psf_eigenvalues(psf, m)?;
    let w = reg_for(cfg.reg_kind, &u, m)?;
    cfg.validate(w.c1)?;
    let tau = cfg.tau(w.c1);
    let threshold = tau * cfg.delta;

    let mut z = z0.clone();
    let mut x = soft_threshold(&z, cfg.mu);
    let mut f = synthesis(&x);
    let mut r = {
        let kf = op.apply(&f)?;
        Image {
            data: &g.data - &kf.data,
        }
    };
    let mut alpha_history = Vec::new();
    let mut residual_history = Vec::new();
    let mut warm_alpha = 1.0;
    let mut n = 0usize;
    observer(0, &z);

    let status = loop {
        let r_norm = r.norm();
        residual_history.push(r_norm);
        if !r_norm.is_finite() {
            return Err(Error::Numerical(format!(
                "residual diverged at iteration {n}"
            )));
        }
        if cfg.delta > 0.0 && r_norm <= threshold {
            break Termination::Converged;
        }
        if n >= cfg.max_iter {
            break Termination::MaxIter;
        }

        let h = match &step {
            StepKind::Gradient { inv_l } => {
                let mut grad = analysis(&op.apply_adjoint(&r)?)?;
                for sb in grad.subbands.iter_mut() {
                    sb.mapv_inplace(|v| v * inv_l);
                }
                grad
            }
            spectral_or_structured => {
                // nonstationary ratio: q_n = max{q, 2ρ + (1+ρ)/τ_n}
                let qn = if cfg.delta > 0.0 {
                    cfg.q
                        .max(2.0 * cfg.rho + (1.0 + cfg.rho) * cfg.delta / r_norm)
                } else {
                    cfg.q
                };
                let t = if cfg.c1_scaling { qn / w.c1 } else { qn };
                let rhat = spectral::fft2(&r.data);
                let problem = AlphaProblem {
                    u: &u,
                    w: &w,
                    rhat: &rhat,
                    target_ratio: t,
                    alpha0: warm_alpha,
                    caps: AlphaCaps::default(),
                };
                let alpha = match solve_alpha(&problem) {
                    Ok(a) => a,
                    Err(Error::AlphaUnattainable { .. }) | Err(Error::Numerical(_)) => {
                        break Termination::AlphaFailure;
                    }
                    Err(e) => return Err(e),
                };
                warm_alpha = alpha;
                alpha_history.push(alpha);
                let h_img = match spectral_or_structured {
                    StepKind::Spectral => {
                        let md = m as f64;
                        let filtered = ndarray::Zip::from(&rhat).and(&u).and(&w.w).map_collect(
                            |rh, uv, wv| rh * uv.conj() / (uv.norm_sqr() + alpha * wv),
                        );
                        Image {
                            data: spectral::ifft2_unnorm(&filtered).mapv(|v| v.re * md),
                        }
                    }
                    StepKind::Structured => {
                        let v: SpectrumGrid = ndarray::Zip::from(&u).and(&w.w).map_collect(
                            |uv, wv| uv.conj() / Complex64::from(uv.norm_sqr() + alpha * wv),
                        );
                        let mask = spectral::spectrum_to_mask(&v)?;
                        let p = BlurOperator::new(mask, cfg.bc, m)?;
                        p.apply(&r)?
                    }
                    StepKind::Gradient { .. } => unreachable!(),
                };
                analysis(&h_img)?
            }
        };

        let scale = if cfg.alg2_update_scaled {
            *alpha_history.last().unwrap_or(&1.0)
        } else {
            1.0
        };
        z.add_scaled(&h, scale);
        x = soft_threshold(&z, cfg.mu);
        f = synthesis(&x);
        let kf = op.apply(&f)?;
        r = Image {
            data: &g.data - &kf.data,
        };
        n += 1;
        observer(n, &z);
    };

    let state = SolverState {
        n,
        z,
        x,
        f: f.clone(),
        r,
        alpha_history,
        residual_history,
        status,
    };
    Ok((f, state))
}

/// Preconditioned thresholded iteration with the spectral filter step.
pub fn run_pista(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
) -> Result<(Image, SolverState)> {
    run_core(g, psf, cfg, z0, StepKind::Spectral, &mut |_, _| {})
}

/// [`run_pista`] with a per-iteration callback receiving (n, zⁿ).
pub fn run_pista_observed(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
    observer: &mut dyn FnMut(usize, &FrameCoeffs),
) -> Result<(Image, SolverState)> {
    run_core(g, psf, cfg, z0, StepKind::Spectral, observer)
}

/// Structure-preserving variant: the filter is condensed into a spatial mask
/// and applied under the configured boundary condition.
pub fn run_struct_pista(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
) -> Result<(Image, SolverState)> {
    run_core(g, psf, cfg, z0, StepKind::Structured, &mut |_, _| {})
}

pub fn run_struct_pista_observed(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
    observer: &mut dyn FnMut(usize, &FrameCoeffs),
) -> Result<(Image, SolverState)> {
    run_core(g, psf, cfg, z0, StepKind::Structured, observer)
}

/// Plain thresholded Landweber iteration, step 1/L with L = max |u|².
pub fn run_ista(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
) -> Result<(Image, SolverState)> {
    let u = spectral::psf_eigenvalues(psf, g.m())?;
    let l = u.iter().map(|v| v.norm_sqr()).fold(0.0f64, f64::max);
    if l <= 0.0 {
        return Err(Error::Degenerate("zero blur spectrum".into()));
    }
    run_core(g, psf, cfg, z0, StepKind::Gradient { inv_l: 1.0 / l }, &mut |_, _| {})
}

/// The μ=0, Laplacian-weighted preconditioned iteration.
pub fn run_aitgp(
    g: &Image,
    psf: &Psf,
    cfg: &SolverConfig,
    z0: &FrameCoeffs,
) -> Result<(Image, SolverState)> {
    let mut cfg = cfg.clone();
    cfg.mu = 0.0;
    cfg.reg_kind = RegKind::Lambda;
    cfg.structured = false;
    run_pista(g, psf, &cfg, z0)
}
