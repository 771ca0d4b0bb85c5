//! Restoration quality metrics: relative error, peak signal-to-noise ratio,
//! and mean local structural similarity.

use crate::error::{Error, Result};
use crate::image::Image;
use ndarray::Array2;

#[derive(Debug, Clone, Copy)]
pub struct MetricReport {
    pub rre: f64,
    /// dB; +∞ for an exact reconstruction.
    pub psnr: f64,
    pub ssim: f64,
}

fn check_dims(f: &Image, f_true: &Image) -> Result<()> {
    if f.m() != f_true.m() {
        return Err(Error::Dimension(format!(
            "metric operands differ: {} vs {}",
            f.m(),
            f_true.m()
        )));
    }
    Ok(())
}

/// `‖f − f_true‖₂ / ‖f_true‖₂`
pub fn rre(f: &Image, f_true: &Image) -> Result<f64> {
    check_dims(f, f_true)?;
    let denom = f_true.norm();
    if denom <= 0.0 {
        return Err(Error::Degenerate("zero reference image in RRE".into()));
    }
    let diff = (&f.data - &f_true.data).iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(diff / denom)
}

/// `20·log₁₀(m·M / ‖f − f_true‖)` with M the reference maximum.
pub fn psnr(f: &Image, f_true: &Image) -> Result<f64> {
    check_dims(f, f_true)?;
    let err = (&f.data - &f_true.data).iter().map(|v| v * v).sum::<f64>().sqrt();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let max = f_true.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(20.0 * ((f.m() as f64) * max / err).log10())
}

fn gaussian_window() -> Array2<f64> {
    let sigma = 1.5f64;
    let mut w = Array2::zeros((11, 11));
    for i in 0..11usize {
        for j in 0..11usize {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            w[(i, j)] = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = w.iter().sum();
    w.mapv(|v| v / total)
}

/// Mean local SSIM: 11×11 Gaussian window (σ=1.5), stabilizers (0.01)² and
/// (0.03)² for unit dynamic range, averaged over the fully-covered region.
pub fn ssim(f: &Image, f_true: &Image) -> Result<f64> {
    check_dims(f, f_true)?;
    let m = f.m();
    if m < 11 {
        return Err(Error::Dimension(format!(
            "SSIM needs m >= 11, got {m}"
        )));
    }
    let w = gaussian_window();
    let c1 = 0.01f64 * 0.01;
    let c2 = 0.03f64 * 0.03;
    let n = m - 10;
    let mut total = 0.0;
    for i0 in 0..n {
        for j0 in 0..n {
            let (mut mx, mut my, mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for a in 0..11 {
                for b in 0..11 {
                    let wv = w[(a, b)];
                    let x = f.data[(i0 + a, j0 + b)];
                    let y = f_true.data[(i0 + a, j0 + b)];
                    mx += wv * x;
                    my += wv * y;
                    mxx += wv * x * x;
                    myy += wv * y * y;
                    mxy += wv * x * y;
                }
            }
            let (vx, vy, cov) = (mxx - mx * mx, myy - my * my, mxy - mx * my);
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(total / (n * n) as f64)
}

pub fn report(f: &Image, f_true: &Image) -> Result<MetricReport> {
    Ok(MetricReport {
        rre: rre(f, f_true)?,
        psnr: psnr(f, f_true)?,
        ssim: ssim(f, f_true)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pseudo_image(m: usize, salt: u64) -> Image {
        let mut data = Array2::zeros((m, m));
        let mut s = salt.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        for v in data.iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = (s >> 11) as f64 / (1u64 << 53) as f64;
        }
        Image::new(data).unwrap()
    }

    #[test]
    fn rre_anchors() {
        let t = Image::new(ndarray::array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(rre(&t, &t).unwrap(), 0.0, epsilon = 1e-30);
        let zero = Image::zeros(2);
        assert_abs_diff_eq!(rre(&zero, &t).unwrap(), 1.0, epsilon = 1e-15);
        let half = Image::new(ndarray::array![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(
            rre(&half, &t).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert!(rre(&t, &zero).is_err());
    }

    #[test]
    fn psnr_anchors_and_log_law() {
        let t = Image::new(ndarray::array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(psnr(&t, &t).unwrap().is_infinite());
        // error norm exactly 1 with M=1, m=2
        let f = Image::new(ndarray::array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(psnr(&f, &t).unwrap(), 20.0 * 2.0f64.log10(), epsilon = 1e-12);
        // doubling the error costs 20·log10(2) dB
        let t8 = pseudo_image(8, 5);
        let mut e1 = t8.clone();
        e1.data[(3, 3)] += 0.05;
        let mut e2 = t8.clone();
        e2.data[(3, 3)] += 0.10;
        assert_abs_diff_eq!(
            psnr(&e1, &t8).unwrap() - psnr(&e2, &t8).unwrap(),
            20.0 * 2.0f64.log10(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn psnr_rre_identity() {
        let t = pseudo_image(12, 19);
        let f = pseudo_image(12, 20);
        let max = t.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lhs = psnr(&f, &t).unwrap();
        let rhs = 20.0 * (12.0 * max).log10() - 20.0 * (rre(&f, &t).unwrap() * t.norm()).log10();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn ssim_identity_and_luminance_penalty() {
        let t = pseudo_image(16, 77);
        assert_abs_diff_eq!(ssim(&t, &t).unwrap(), 1.0, epsilon = 1e-15);
        let gray = Image::new(Array2::from_elem((16, 16), 0.4)).unwrap();
        let shifted = Image::new(Array2::from_elem((16, 16), 0.9)).unwrap();
        assert!(ssim(&shifted, &gray).unwrap() < 1.0);
        assert!(ssim(&Image::zeros(8), &Image::zeros(8)).is_err());
    }

    #[test]
    fn ssim_matches_two_pass_reference() {
        // reference computes centered moments directly instead of the
        // E[x²]−μ² shortcut
        let f = pseudo_image(16, 100);
        let t = pseudo_image(16, 101);
        let w = gaussian_window();
        let (c1, c2) = (0.0001, 0.0009);
        let n = 16 - 10;
        let mut total = 0.0;
        for i0 in 0..n {
            for j0 in 0..n {
                let (mut mx, mut my) = (0.0, 0.0);
                for a in 0..11 {
                    for b in 0..11 {
                        mx += w[(a, b)] * f.data[(i0 + a, j0 + b)];
                        my += w[(a, b)] * t.data[(i0 + a, j0 + b)];
                    }
                }
                let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
                for a in 0..11 {
                    for b in 0..11 {
                        let dx = f.data[(i0 + a, j0 + b)] - mx;
                        let dy = t.data[(i0 + a, j0 + b)] - my;
                        vx += w[(a, b)] * dx * dx;
                        vy += w[(a, b)] * dy * dy;
                        cov += w[(a, b)] * dx * dy;
                    }
                }
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        let reference = total / (n * n) as f64;
        assert_abs_diff_eq!(ssim(&f, &t).unwrap(), reference, epsilon = 1e-10);
    }

    #[test]
    fn ssim_symmetric_for_swapped_arguments() {
        let f = pseudo_image(14, 1);
        let t = pseudo_image(14, 2);
        assert_abs_diff_eq!(
            ssim(&f, &t).unwrap(),
            ssim(&t, &f).unwrap(),
            epsilon = 1e-12
        );
    }
}
