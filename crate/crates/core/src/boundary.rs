//! Matrix-free application of the structured blur operator and its exact
//! adjoint under four boundary conditions, plus a dense-assembly oracle for
//! small sizes.
//!
//! The operator is the composition `Crop ∘ FullConv ∘ Pad`: the image is
//! extended by the PSF margins according to the boundary rule, convolved with
//! the kernel through an enlarged cyclic FFT convolution (cyclic size
//! `m + k − 1` suffices for the cropped region), and cropped back. The adjoint
//! is the reverse composition with each factor transposed: zero-embedding,
//! correlation, and a scatter of every ghost sample's coefficients back onto
//! its source pixels.

use crate::error::{Error, Result};
use crate::image::{Image, Psf};
use crate::spectral::{self, SpectrumGrid};
use ndarray::Array2;
use num_complex::Complex64;

/// Assumed image extension outside the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Zero,
    Periodic,
    Reflective,
    AntiReflective,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(Self::Zero),
            "periodic" => Ok(Self::Periodic),
            "reflective" => Ok(Self::Reflective),
            "antireflective" | "anti-reflective" => Ok(Self::AntiReflective),
            other => Err(Error::Config(format!("unknown boundary condition {other:?}"))),
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Zero => "zero",
            Self::Periodic => "periodic",
            Self::Reflective => "reflective",
            Self::AntiReflective => "antireflective",
        };
        f.write_str(s)
    }
}

/// Source pixels and coefficients for one 1D ghost sample.
///
/// `p` indexes the extended axis (negative above/left of the first sample,
/// `>= m` past the last). In-range indices map to themselves.
fn ghost_sources(bc: BoundaryCondition, m: usize, p: isize) -> Vec<(usize, f64)> {
    let mi = m as isize;
    if p >= 0 && p < mi {
        return vec![(p as usize, 1.0)];
    }
    if p < 0 {
        let j = (-p) as usize;
        match bc {
            BoundaryCondition::Zero => vec![],
            BoundaryCondition::Periodic => vec![(m - j, 1.0)],
            BoundaryCondition::Reflective => vec![(j - 1, 1.0)],
            BoundaryCondition::AntiReflective => vec![(0, 2.0), (j, -1.0)],
        }
    } else {
        let j = (p - (mi - 1)) as usize;
        match bc {
            BoundaryCondition::Zero => vec![],
            BoundaryCondition::Periodic => vec![(j - 1, 1.0)],
            BoundaryCondition::Reflective => vec![(m - j, 1.0)],
            BoundaryCondition::AntiReflective => vec![(m - 1, 2.0), (m - 1 - j, -1.0)],
        }
    }
}

fn check_margins(bc: BoundaryCondition, m: usize, margins: &[usize]) -> Result<()> {
    let limit = match bc {
        BoundaryCondition::Zero => usize::MAX,
        BoundaryCondition::Periodic => m,
        BoundaryCondition::Reflective | BoundaryCondition::AntiReflective => m - 1,
    };
    if margins.iter().any(|&v| v > limit) {
        return Err(Error::Dimension(format!(
            "pad margins {margins:?} too large for {bc} boundary at m={m}"
        )));
    }
    Ok(())
}

/// Extends an image by the boundary rule, separably (rows, then columns).
pub fn pad(
    img: &Image,
    bc: BoundaryCondition,
    top: usize,
    bottom: usize,
    left: usize,
    right: usize,
) -> Result<Array2<f64>> {
    let m = img.m();
    check_margins(bc, m, &[top, bottom, left, right])?;
    let mut rows = Array2::<f64>::zeros((m + top + bottom, m));
    for p in -(top as isize)..(m + bottom) as isize {
        let dst = (p + top as isize) as usize;
        for (src, c) in ghost_sources(bc, m, p) {
            for j in 0..m {
                rows[(dst, j)] += c * img.data[(src, j)];
            }
        }
    }
    let mut out = Array2::<f64>::zeros((m + top + bottom, m + left + right));
    for p in -(left as isize)..(m + right) as isize {
        let dst = (p + left as isize) as usize;
        for (src, c) in ghost_sources(bc, m, p) {
            for i in 0..rows.nrows() {
                out[(i, dst)] += c * rows[(i, src)];
            }
        }
    }
    Ok(out)
}

/// Transpose of [`pad`]: scatters extended samples back onto their sources.
fn pad_transpose(
    y: &Array2<f64>,
    bc: BoundaryCondition,
    top: usize,
    bottom: usize,
    left: usize,
    right: usize,
    m: usize,
) -> Array2<f64> {
    let mut rows = Array2::<f64>::zeros((m, y.ncols()));
    for p in -(top as isize)..(m + bottom) as isize {
        let src_row = (p + top as isize) as usize;
        for (dst, c) in ghost_sources(bc, m, p) {
            for j in 0..y.ncols() {
                rows[(dst, j)] += c * y[(src_row, j)];
            }
        }
    }
    let mut out = Array2::<f64>::zeros((m, m));
    for p in -(left as isize)..(m + right) as isize {
        let src_col = (p + left as isize) as usize;
        for (dst, c) in ghost_sources(bc, m, p) {
            for i in 0..m {
                out[(i, dst)] += c * rows[(i, src_col)];
            }
        }
    }
    out
}

/// The blur operator `K` for one PSF, boundary condition, and image size.
///
/// The kernel's cyclic spectrum at the enlarged size is cached at
/// construction, so repeated applications cost two FFTs each.
#[derive(Debug, Clone)]
pub struct BlurOperator {
    pub psf: Psf,
    pub bc: BoundaryCondition,
    pub m: usize,
    /// Cyclic convolution size, m + k - 1.
    big: usize,
    kernel_fft: SpectrumGrid,
}

impl BlurOperator {
    pub fn new(psf: Psf, bc: BoundaryCondition, m: usize) -> Result<Self> {
        let k = psf.k();
        if k > m {
            return Err(Error::Dimension(format!(
                "PSF size {k} exceeds image size {m}"
            )));
        }
        let big = m + k - 1;
        let mut emb = Array2::<f64>::zeros((big, big));
        for a in 0..k {
            for b in 0..k {
                emb[(a, b)] = psf.mask[(a, b)];
            }
        }
        let kernel_fft = spectral::fft2_unnorm(&emb);
        Ok(Self {
            psf,
            bc,
            m,
            big,
            kernel_fft,
        })
    }

    fn margins(&self) -> (usize, usize, usize, usize) {
        let k = self.psf.k();
        let (cr, cc) = self.psf.center;
        (k - 1 - cr, cr, k - 1 - cc, cc)
    }

    /// Matrix-free product `K f`.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        if img.m() != self.m {
            return Err(Error::Dimension(format!(
                "operator built for m={}, image has m={}",
                self.m,
                img.m()
            )));
        }
        let k = self.psf.k();
        let (t, b, l, r) = self.margins();
        let padded = pad(img, self.bc, t, b, l, r)?; // exactly big x big
        let spec = spectral::fft2_unnorm(&padded);
        let conv = spectral::ifft2_unnorm(&(&spec * &self.kernel_fft));
        let mut out = Array2::<f64>::zeros((self.m, self.m));
        for i in 0..self.m {
            for j in 0..self.m {
                out[(i, j)] = conv[(i + k - 1, j + k - 1)].re;
            }
        }
        Ok(Image { data: out })
    }

    /// Matrix-free product `K^T y`, the exact transpose of [`Self::apply`].
    pub fn apply_adjoint(&self, img: &Image) -> Result<Image> {
        if img.m() != self.m {
            return Err(Error::Dimension(format!(
                "operator built for m={}, image has m={}",
                self.m,
                img.m()
            )));
        }
        let k = self.psf.k();
        let (t, b, l, r) = self.margins();
        // Crop^T: zero-embed at the conv output offset (k-1, k-1).
        let mut emb = Array2::<Complex64>::zeros((self.big, self.big));
        for i in 0..self.m {
            for j in 0..self.m {
                emb[(i + k - 1, j + k - 1)] = Complex64::new(img.data[(i, j)], 0.0);
            }
        }
        // FullConv^T: cyclic correlation with the kernel.
        let spec = spectral::fft2_unnorm_c(&emb);
        let corr = spectral::ifft2_unnorm(
            &ndarray::Zip::from(&spec)
                .and(&self.kernel_fft)
                .map_collect(|s, kf| s * kf.conj()),
        );
        let y = corr.mapv(|v| v.re);
        // Pad^T: scatter ghost contributions.
        Ok(Image {
            data: pad_transpose(&y, self.bc, t, b, l, r, self.m),
        })
    }

    /// Explicit m² x m² matrix, column p = apply(e_p). Oracle use only.
    pub fn dense_assemble(&self) -> Result<Array2<f64>> {
        if self.m > 64 {
            return Err(Error::Dimension(format!(
                "dense assembly capped at m=64, got {}",
                self.m
            )));
        }
        let n = self.m * self.m;
        let mut a = Array2::<f64>::zeros((n, n));
        for p in 0..n {
            let mut e = Image::zeros(self.m);
            e.data[(p / self.m, p % self.m)] = 1.0;
            let col = self.apply(&e)?;
            for (q, v) in col.data.iter().enumerate() {
                a[(q, p)] = *v;
            }
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{circ_apply, psf_eigenvalues};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn row_image(row: &[f64]) -> Image {
        let m = row.len();
        let mut data = Array2::zeros((m, m));
        for i in 0..m {
            for (j, v) in row.iter().enumerate() {
                data[(i, j)] = *v;
            }
        }
        Image::new(data).unwrap()
    }

    fn test_psf() -> Psf {
        let mut mask = Array2::zeros((3, 3));
        for (i, v) in mask.iter_mut().enumerate() {
            *v = (i + 1) as f64 / 45.0;
        }
        Psf::new(mask, (1, 1)).unwrap()
    }

    fn pseudo_image(m: usize, salt: u64) -> Image {
        let mut data = Array2::zeros((m, m));
        let mut s = salt.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        for v in data.iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        }
        Image::new(data).unwrap()
    }

    #[test]
    fn reflective_pad_mirrors_whole_samples() {
        let img = row_image(&[1.0, 2.0, 3.0]);
        let p = pad(&img, BoundaryCondition::Reflective, 0, 0, 2, 2).unwrap();
        let expect = [2.0, 1.0, 1.0, 2.0, 3.0, 3.0, 2.0];
        for (j, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(p[(0, j)], *e, epsilon = 1e-15);
        }
    }

    #[test]
    fn antireflective_pad_extends_linearly() {
        let img = row_image(&[1.0, 2.0, 3.0]);
        let p = pad(&img, BoundaryCondition::AntiReflective, 0, 0, 1, 1).unwrap();
        let expect = [0.0, 1.0, 2.0, 3.0, 4.0];
        for (j, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(p[(0, j)], *e, epsilon = 1e-15);
        }
    }

    #[test]
    fn periodic_pad_wraps() {
        let img = row_image(&[1.0, 2.0, 3.0]);
        let p = pad(&img, BoundaryCondition::Periodic, 0, 0, 2, 1).unwrap();
        let expect = [2.0, 3.0, 1.0, 2.0, 3.0, 1.0];
        for (j, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(p[(0, j)], *e, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_preserved_by_nonzero_pads() {
        let img = Image::new(Array2::from_elem((4, 4), 0.7)).unwrap();
        for bc in [
            BoundaryCondition::Periodic,
            BoundaryCondition::Reflective,
            BoundaryCondition::AntiReflective,
        ] {
            let p = pad(&img, bc, 2, 1, 1, 2).unwrap();
            for v in p.iter() {
                assert_abs_diff_eq!(*v, 0.7, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn oversized_margin_rejected() {
        let img = Image::zeros(3);
        assert!(pad(&img, BoundaryCondition::AntiReflective, 3, 0, 0, 0).is_err());
        assert!(pad(&img, BoundaryCondition::Zero, 10, 10, 10, 10).is_ok());
    }

    #[test]
    fn delta_psf_is_identity_under_every_bc() {
        let img = pseudo_image(6, 3);
        for bc in [
            BoundaryCondition::Zero,
            BoundaryCondition::Periodic,
            BoundaryCondition::Reflective,
            BoundaryCondition::AntiReflective,
        ] {
            let op = BlurOperator::new(Psf::delta(), bc, 6).unwrap();
            let out = op.apply(&img).unwrap();
            for (a, b) in out.data.iter().zip(img.data.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn unit_mass_psf_preserves_constants() {
        let img = Image::new(Array2::from_elem((6, 6), 1.0)).unwrap();
        for bc in [
            BoundaryCondition::Periodic,
            BoundaryCondition::Reflective,
            BoundaryCondition::AntiReflective,
        ] {
            let op = BlurOperator::new(test_psf(), bc, 6).unwrap();
            let out = op.apply(&img).unwrap();
            for v in out.data.iter() {
                assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
            }
        }
        let op = BlurOperator::new(test_psf(), BoundaryCondition::Zero, 6).unwrap();
        let out = op.apply(&img).unwrap();
        assert_abs_diff_eq!(out.data[(2, 2)], 1.0, epsilon = 1e-12);
        assert!(out.data[(0, 0)] < 1.0);
    }

    #[test]
    fn periodic_apply_matches_circulant() {
        let m = 8;
        let img = pseudo_image(m, 7);
        for center in [(1, 1), (0, 2), (2, 0)] {
            let psf = Psf::new(test_psf().mask, center).unwrap();
            let op = BlurOperator::new(psf.clone(), BoundaryCondition::Periodic, m).unwrap();
            let u = psf_eigenvalues(&psf, m).unwrap();
            let a = op.apply(&img).unwrap();
            let b = circ_apply(&u, &img);
            for (x, y) in a.data.iter().zip(b.data.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let m = 5;
        let g = pseudo_image(m, 11);
        for bc in [
            BoundaryCondition::Zero,
            BoundaryCondition::Periodic,
            BoundaryCondition::Reflective,
            BoundaryCondition::AntiReflective,
        ] {
            let op = BlurOperator::new(test_psf(), bc, m).unwrap();
            let dense = op.dense_assemble().unwrap();
            let adj = op.apply_adjoint(&g).unwrap();
            for q in 0..m * m {
                let mut oracle = 0.0;
                for p in 0..m * m {
                    oracle += dense[(p, q)] * g.data[(p / m, p % m)];
                }
                assert_abs_diff_eq!(adj.data[(q / m, q % m)], oracle, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_bc_symmetric_psf_is_self_adjoint() {
        let m = 6;
        let mut mask = Array2::zeros((3, 3));
        for a in 0..3usize {
            for b in 0..3usize {
                mask[(a, b)] = 1.0 / (1.0 + (a.abs_diff(1) + b.abs_diff(1)) as f64);
            }
        }
        let psf = Psf::new(mask, (1, 1)).unwrap();
        let op = BlurOperator::new(psf, BoundaryCondition::Zero, m).unwrap();
        let img = pseudo_image(m, 5);
        let a = op.apply(&img).unwrap();
        let b = op.apply_adjoint(&img).unwrap();
        for (x, y) in a.data.iter().zip(b.data.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn periodic_dense_is_bccb() {
        let m = 4;
        let op = BlurOperator::new(test_psf(), BoundaryCondition::Periodic, m).unwrap();
        let a = op.dense_assemble().unwrap();
        // every row is the 2D circular shift of row 0
        for p in 0..m * m {
            let (bi, ii) = (p / m, p % m);
            for q in 0..m * m {
                let (bj, ij) = (q / m, q % m);
                let src = (((m + bj - bi) % m) * m) + ((m + ij - ii) % m);
                assert_abs_diff_eq!(a[(p, q)], a[(0, src)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_dense_is_bttb() {
        let m = 4;
        let op = BlurOperator::new(test_psf(), BoundaryCondition::Zero, m).unwrap();
        let a = op.dense_assemble().unwrap();
        // entries depend only on (block difference, intra-block difference)
        for p in 0..m * m {
            for q in 0..m * m {
                let (bi, ii) = (p / m, p % m);
                let (bj, ij) = (q / m, q % m);
                if bi + 1 < m && bj + 1 < m && ii + 1 < m && ij + 1 < m {
                    let p2 = (bi + 1) * m + ii + 1;
                    let q2 = (bj + 1) * m + ij + 1;
                    assert_abs_diff_eq!(a[(p, q)], a[(p2, q2)], epsilon = 1e-12);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn adjoint_pairing(seed_f in 0u64..1000, seed_g in 1000u64..2000, bc_idx in 0usize..4) {
            let bc = [
                BoundaryCondition::Zero,
                BoundaryCondition::Periodic,
                BoundaryCondition::Reflective,
                BoundaryCondition::AntiReflective,
            ][bc_idx];
            let m = 6;
            let f = pseudo_image(m, seed_f);
            let g = pseudo_image(m, seed_g);
            let op = BlurOperator::new(test_psf(), bc, m).unwrap();
            let kf = op.apply(&f).unwrap();
            let ktg = op.apply_adjoint(&g).unwrap();
            let lhs: f64 = kf.data.iter().zip(g.data.iter()).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.data.iter().zip(ktg.data.iter()).map(|(a, b)| a * b).sum();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }
}
