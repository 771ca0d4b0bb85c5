//! Frequency-domain regularization weights used inside the Tikhonov filter
//! `(CC* + α W)⁻¹`.
//!
//! Two families are supported: a high-pass polynomial of the blur spectrum
//! itself, and the squared symbol of the discrete Laplacian. Both vanish
//! where the blur passes energy and grow where it attenuates, so the filter
//! damps exactly the frequencies the blur destroys.

use crate::error::{Error, Result};
use crate::spectral::{laplacian_symbol, SpectrumGrid};
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    /// Weights `(1 - |u|²/s_max)⁴ + ε` derived from the blur spectrum.
    HFunction,
    /// Squared Laplacian symbol, independent of the blur.
    Lambda,
}

/// Nonnegative per-frequency weights with their attained bounds.
///
/// `c1` and `c2` are the minimum and maximum of `w` guaranteed by the
/// construction; solvers use `c1` for the scaled step-size variants.
#[derive(Debug, Clone)]
pub struct RegWeights {
    pub w: Array2<f64>,
    pub c1: f64,
    pub c2: f64,
    pub kind: RegKind,
}

const H_EPS: f64 = 1e-15;

/// Blur-adapted weights: `w = (1 - |u|²/s_max)⁴ + ε` with `s_max = max |u|²`.
///
/// The ε floor keeps the weights strictly positive so the scaled solver
/// variants have a nonzero lower bound to divide by.
pub fn h_weights(u: &SpectrumGrid) -> Result<RegWeights> {
    let s_max = u.iter().map(|v| v.norm_sqr()).fold(0.0f64, f64::max);
    if s_max <= 0.0 {
        return Err(Error::Degenerate(
            "blur spectrum is identically zero".into(),
        ));
    }
    let w = u.mapv(|v| (1.0 - v.norm_sqr() / s_max).powi(4) + H_EPS);
    Ok(RegWeights {
        w,
        c1: H_EPS,
        c2: 1.0 + H_EPS,
        kind: RegKind::HFunction,
    })
}

/// Laplacian-symbol weights on the m x m frequency grid.
pub fn lambda_weights(m: usize) -> RegWeights {
    laplacian_symbol(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Psf;
    use crate::spectral::psf_eigenvalues;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use num_complex::Complex64;

    #[test]
    fn delta_blur_gives_floor_everywhere() {
        let u = psf_eigenvalues(&Psf::delta(), 4).unwrap();
        let rw = h_weights(&u).unwrap();
        for v in rw.w.iter() {
            assert_abs_diff_eq!(*v, 1e-15, epsilon = 1e-30);
        }
    }

    #[test]
    fn peak_frequency_hits_floor_and_null_hits_cap() {
        let mut u = Array2::from_elem((2, 2), Complex64::new(0.0, 0.0));
        u[(0, 0)] = Complex64::new(2.0, 0.0);
        u[(1, 1)] = Complex64::new(0.0, 1.0); // |u|² = 1 -> (1 - 1/4)⁴
        let rw = h_weights(&u).unwrap();
        assert_abs_diff_eq!(rw.w[(0, 0)], 1e-15, epsilon = 1e-30);
        assert_abs_diff_eq!(rw.w[(0, 1)], 1.0 + 1e-15, epsilon = 1e-16);
        assert_abs_diff_eq!(rw.w[(1, 1)], 0.75f64.powi(4) + 1e-15, epsilon = 1e-16);
        assert_eq!(rw.kind, RegKind::HFunction);
        assert_eq!(rw.c1, 1e-15);
        assert_eq!(rw.c2, 1.0 + 1e-15);
    }

    #[test]
    fn half_power_frequency_value() {
        let mut u = Array2::from_elem((2, 2), Complex64::new(0.0, 0.0));
        u[(0, 0)] = Complex64::new(1.0, 0.0);
        u[(0, 1)] = Complex64::new(0.5f64.sqrt(), 0.0); // |u|² = s_max / 2
        let rw = h_weights(&u).unwrap();
        assert_abs_diff_eq!(rw.w[(0, 1)], 0.0625 + 1e-15, epsilon = 1e-16);
    }

    #[test]
    fn zero_spectrum_rejected() {
        let u = Array2::from_elem((3, 3), Complex64::new(0.0, 0.0));
        assert!(h_weights(&u).is_err());
    }

    #[test]
    fn lambda_kernel_and_bounds() {
        let rw = lambda_weights(8);
        assert_eq!(rw.kind, RegKind::Lambda);
        assert_eq!(rw.c1, 0.0);
        assert_eq!(rw.c2, 64.0);
        assert_abs_diff_eq!(rw.w[(0, 0)], 0.0, epsilon = 1e-30);
        for (idx, v) in rw.w.indexed_iter() {
            if idx != (0, 0) {
                assert!(*v > 0.0);
            }
            assert!(*v <= 64.0 + 1e-12);
        }
        // symbol is even in each frequency index
        for i in 0..8usize {
            for j in 0..8usize {
                let v = rw.w[(i, j)];
                assert_abs_diff_eq!(v, rw.w[((8 - i) % 8, j)], epsilon = 1e-12);
                assert_abs_diff_eq!(v, rw.w[(i, (8 - j) % 8)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lambda_small_grids() {
        let rw = lambda_weights(2);
        // symbol 4 - 2cos(pi i) - 2cos(pi j): values 0, 16, 16, 64 squared from (4±2±2)²
        assert_abs_diff_eq!(rw.w[(0, 0)], 0.0, epsilon = 1e-30);
        assert_abs_diff_eq!(rw.w[(0, 1)], 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rw.w[(1, 0)], 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rw.w[(1, 1)], 64.0, epsilon = 1e-12);
        let rw4 = lambda_weights(4);
        assert_abs_diff_eq!(rw4.w[(1, 0)], 4.0, epsilon = 1e-12); // (4 - 2·0 - 2·1)²
        assert_abs_diff_eq!(rw4.w[(2, 2)], 64.0, epsilon = 1e-12);
    }
}
