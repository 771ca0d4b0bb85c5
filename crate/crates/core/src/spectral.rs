//! Discrete Fourier machinery: eigenvalue grids of the circulant blur
//! surrogate, spectral filtering, and mask extraction for the structured
//! preconditioner.
//!
//! Two FFT conventions coexist deliberately:
//! * **unnormalized** — forward transform has no scaling, inverse carries
//!   `1/m²` (the classical circulant-diagonalization pair, used for operator
//!   eigenvalues and filtering);
//! * **unitary** — forward and inverse each scaled by `1/m`, so Parseval holds
//!   exactly (used for norm computations in the parameter solver).

use crate::error::{Error, Result};
use crate::image::{Image, Psf};
use crate::regop::{RegKind, RegWeights};
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// m x m complex grid: operator eigenvalues, filter values, residual spectra.
pub type SpectrumGrid = Array2<Complex64>;

/// Process-wide FFT plan cache, keyed by length. Internally synchronized so
/// callers may transform concurrently.
fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    type Cache = Mutex<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft_forward(len),
                planner.plan_fft_inverse(len),
            )
        })
        .clone()
}

fn transform_rows(a: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for mut row in a.rows_mut() {
        let slice = row.as_slice_mut().expect("rows of standard layout array");
        fft.process_with_scratch(slice, &mut scratch);
    }
}

/// In-place-style 2D transform: rows, then columns (via transpose).
fn fft2_c(mut a: Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
    let rows = a.nrows();
    let cols = a.ncols();
    let (fwd_r, inv_r) = plans(cols);
    transform_rows(&mut a, if inverse { &inv_r } else { &fwd_r });
    let mut t = a.reversed_axes().as_standard_layout().into_owned();
    let (fwd_c, inv_c) = plans(rows);
    transform_rows(&mut t, if inverse { &inv_c } else { &fwd_c });
    t.reversed_axes().as_standard_layout().into_owned()
}

/// Unnormalized forward 2D DFT of a real grid.
pub fn fft2_unnorm(a: &Array2<f64>) -> SpectrumGrid {
    fft2_c(a.mapv(|v| Complex64::new(v, 0.0)), false)
}

/// Unnormalized forward 2D DFT of a complex grid.
pub fn fft2_unnorm_c(a: &SpectrumGrid) -> SpectrumGrid {
    fft2_c(a.clone(), false)
}

/// Inverse 2D DFT with the `1/(rows*cols)` factor (partner of [`fft2_unnorm`]).
pub fn ifft2_unnorm(a: &SpectrumGrid) -> SpectrumGrid {
    let n = (a.nrows() * a.ncols()) as f64;
    let mut out = fft2_c(a.clone(), true);
    out.mapv_inplace(|v| v / n);
    out
}

/// Unitary-convention 2D DFT: `||fft2(x)|| == ||x||` (Parseval).
pub fn fft2(a: &Array2<f64>) -> SpectrumGrid {
    let scale = 1.0 / (a.nrows() as f64 * a.ncols() as f64).sqrt();
    let mut out = fft2_unnorm(a);
    out.mapv_inplace(|v| v * scale);
    out
}

/// Eigenvalues of the m x m circulant convolution generated by `psf`.
///
/// The mask is embedded with its center at index (0,0) by circular shift and
/// transformed with the unnormalized forward DFT, so that for any image `f`
/// the circulant product is `ifft2_unnorm(u ⊙ fft2_unnorm(f))`.
pub fn psf_eigenvalues(psf: &Psf, m: usize) -> Result<SpectrumGrid> {
    let k = psf.k();
    if k > m {
        return Err(Error::Dimension(format!(
            "PSF size {k} exceeds grid size {m}"
        )));
    }
    let (cr, cc) = psf.center;
    let mut e = Array2::<f64>::zeros((m, m));
    for a in 0..k {
        for b in 0..k {
            e[((a + m - cr) % m, (b + m - cc) % m)] += psf.mask[(a, b)];
        }
    }
    Ok(fft2_unnorm(&e))
}

/// Circulant matrix-vector product via the convolution theorem.
pub fn circ_apply(u: &SpectrumGrid, img: &Image) -> Image {
    let spec = fft2_unnorm(&img.data);
    let filtered = &spec * u;
    let out = ifft2_unnorm(&filtered);
    Image {
        data: out.mapv(|v| v.re),
    }
}

/// Extracts the spatial mask whose circulant eigenvalues are `v`.
///
/// Inverse-unnormalized DFT, real part (the imaginary residue must be tiny:
/// `v` comes from a real kernel's filter), then a circular shift placing
/// index (0,0) at the grid center so the result is a PSF usable under any
/// boundary condition.
pub fn spectrum_to_mask(v: &SpectrumGrid) -> Result<Psf> {
    let m = v.nrows();
    let x = ifft2_unnorm(v);
    let max_mod = x.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let max_im = x.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
    if max_im > 1e-8 * max_mod.max(1.0) {
        return Err(Error::Numerical(format!(
            "mask spectrum is not conjugate-symmetric: imaginary residue {max_im:.3e}"
        )));
    }
    let s = m / 2;
    let mut mask = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            mask[((i + s) % m, (j + s) % m)] = x[(i, j)].re;
        }
    }
    Psf::new(mask, (s, s))
}

/// Squared modulus of the periodic 5-point Laplacian symbol,
/// `(4 − 2cos(2πi/m) − 2cos(2πj/m))²`, vanishing only at (0,0).
pub fn laplacian_symbol(m: usize) -> RegWeights {
    assert!(m >= 2, "laplacian symbol needs m >= 2");
    let mut w = Array2::<f64>::zeros((m, m));
    let tau = 2.0 * std::f64::consts::PI / m as f64;
    for i in 0..m {
        for j in 0..m {
            let s = 4.0 - 2.0 * (tau * i as f64).cos() - 2.0 * (tau * j as f64).cos();
            w[(i, j)] = s * s;
        }
    }
    RegWeights {
        w,
        c1: 0.0,
        c2: 64.0,
        kind: RegKind::Lambda,
    }
}
