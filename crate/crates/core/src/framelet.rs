//! Linear B-spline tight-frame analysis/synthesis with Neumann-adjusted
//! boundary rows, single decomposition level.
//!
//! The three 1D filter matrices are banded: low-pass ¼[1,2,1] and the two
//! high-pass masks (√2/4)[-1,0,1] and ¼[-1,2,-1], with first/last rows
//! folded at the boundary so that `WᵀW = I` holds exactly. The nine 2D
//! subbands are the tensor products `W_i · img · W_jᵀ`.

use crate::boundary::BlurOperator;
use crate::error::{Error, Result};
use crate::image::Image;
use ndarray::Array2;

/// One level of tight-frame coefficients: nine m x m subbands ordered
/// row-major by (row filter, column filter).
#[derive(Debug, Clone)]
pub struct FrameCoeffs {
    pub m: usize,
    pub subbands: [Array2<f64>; 9],
}

impl FrameCoeffs {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            subbands: std::array::from_fn(|_| Array2::zeros((m, m))),
        }
    }

    pub fn norm(&self) -> f64 {
        self.subbands
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.subbands.iter_mut().zip(other.subbands.iter()) {
            a.zip_mut_with(b, |x, y| *x += scale * y);
        }
    }

    pub fn diff_norm(&self, other: &Self) -> f64 {
        self.subbands
            .iter()
            .zip(other.subbands.iter())
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// (first row, interior stencil, last row) of the 1D filter matrix.
fn stencil(band: usize) -> ([f64; 2], [f64; 3], [f64; 2]) {
    let s = std::f64::consts::SQRT_2 / 4.0;
    match band {
        0 => ([0.75, 0.25], [0.25, 0.5, 0.25], [0.25, 0.75]),
        1 => ([-s, s], [-s, 0.0, s], [-s, s]),
        2 => ([0.25, -0.25], [-0.25, 0.5, -0.25], [-0.25, 0.25]),
        _ => unreachable!(),
    }
}

/// `W_band · a`
fn band_mul(band: usize, a: &Array2<f64>) -> Array2<f64> {
    let (first, inner, last) = stencil(band);
    let m = a.nrows();
    let n = a.ncols();
    let mut out = Array2::zeros((m, n));
    for j in 0..n {
        out[(0, j)] = first[0] * a[(0, j)] + first[1] * a[(1, j)];
        out[(m - 1, j)] = last[0] * a[(m - 2, j)] + last[1] * a[(m - 1, j)];
    }
    for r in 1..m - 1 {
        for j in 0..n {
            out[(r, j)] =
                inner[0] * a[(r - 1, j)] + inner[1] * a[(r, j)] + inner[2] * a[(r + 1, j)];
        }
    }
    out
}

/// `W_bandᵀ · a` (scatter form of [`band_mul`])
fn band_mul_t(band: usize, a: &Array2<f64>) -> Array2<f64> {
    let (first, inner, last) = stencil(band);
    let m = a.nrows();
    let n = a.ncols();
    let mut out = Array2::zeros((m, n));
    for j in 0..n {
        out[(0, j)] += first[0] * a[(0, j)];
        out[(1, j)] += first[1] * a[(0, j)];
        out[(m - 2, j)] += last[0] * a[(m - 1, j)];
        out[(m - 1, j)] += last[1] * a[(m - 1, j)];
    }
    for r in 1..m - 1 {
        for j in 0..n {
            out[(r - 1, j)] += inner[0] * a[(r, j)];
            out[(r, j)] += inner[1] * a[(r, j)];
            out[(r + 1, j)] += inner[2] * a[(r, j)];
        }
    }
    out
}

/// Frame decomposition `x = W f`.
pub fn analysis(img: &Image) -> Result<FrameCoeffs> {
    let m = img.m();
    if m < 2 {
        return Err(Error::Dimension("frame transform needs m >= 2".into()));
    }
    let mut coeffs = FrameCoeffs::zeros(m);
    for i in 0..3 {
        let yi = band_mul(i, &img.data);
        let yi_t = yi.t().to_owned();
        for j in 0..3 {
            coeffs.subbands[3 * i + j] = band_mul(j, &yi_t).t().to_owned();
        }
    }
    Ok(coeffs)
}

/// Frame reconstruction `f = W* x`; exact inverse of [`analysis`] on its range.
pub fn synthesis(coeffs: &FrameCoeffs) -> Image {
    let m = coeffs.m;
    let mut acc = Array2::<f64>::zeros((m, m));
    for i in 0..3 {
        for j in 0..3 {
            let t1 = band_mul_t(i, &coeffs.subbands[3 * i + j]);
            let t2 = band_mul_t(j, &t1.t().to_owned()).t().to_owned();
            acc += &t2;
        }
    }
    Image { data: acc }
}

/// Upper bound on the ∞→2 norm of `K W*`: the Euclidean norm of the rows'
/// absolute sums. Computed exactly (matrix-free, one adjoint per pixel) for
/// m ≤ 32; above that a crude `‖mask‖₁ · m` estimate is reported instead.
pub fn frame_norm_bound(op: &BlurOperator) -> Result<f64> {
    if op.m > 32 {
        let mask_l1: f64 = op.psf.mask.iter().map(|v| v.abs()).sum();
        return Ok(mask_l1 * op.m as f64);
    }
    let mut acc = 0.0;
    for p in 0..op.m * op.m {
        let mut e = Image::zeros(op.m);
        e.data[(p / op.m, p % op.m)] = 1.0;
        let row = analysis(&op.apply_adjoint(&e)?)?;
        let l1: f64 = row
            .subbands
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v.abs())
            .sum();
        acc += l1 * l1;
    }
    Ok(acc.sqrt())
}
