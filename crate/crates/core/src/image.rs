//! Image and PSF data types, PGM file I/O, seeded noise generation.

use crate::error::{Error, Result};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::{Read, Write};
use std::path::Path;

/// Square grayscale image, intensities nominally in [0,1] (row-major, origin top-left).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub data: Array2<f64>,
}

impl Image {
    /// Wraps a square grid. Non-square input is a dimension error.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension(format!(
                "image must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("image contains non-finite values".into()));
        }
        Ok(Self { data })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            data: Array2::zeros((m, m)),
        }
    }

    /// Side length in pixels.
    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    /// Euclidean norm over all pixels.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Convolution kernel with an explicit center index.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    pub mask: Array2<f64>,
    /// (row, col) of the kernel origin within the mask.
    pub center: (usize, usize),
}

impl Psf {
    pub fn new(mask: Array2<f64>, center: (usize, usize)) -> Result<Self> {
        if mask.nrows() != mask.ncols() {
            return Err(Error::Dimension(format!(
                "PSF must be square, got {}x{}",
                mask.nrows(),
                mask.ncols()
            )));
        }
        let k = mask.nrows();
        if center.0 >= k || center.1 >= k {
            return Err(Error::Dimension(format!(
                "PSF center {:?} outside {}x{} mask",
                center, k, k
            )));
        }
        if mask.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("PSF contains non-finite values".into()));
        }
        if mask.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Degenerate("PSF mass must be positive".into()));
        }
        Ok(Self { mask, center })
    }

    /// Unit impulse: identity kernel.
    pub fn delta() -> Self {
        let mut mask = Array2::zeros((1, 1));
        mask[(0, 0)] = 1.0;
        Self {
            mask,
            center: (0, 0),
        }
    }

    pub fn k(&self) -> usize {
        self.mask.nrows()
    }
}

/// Additive white Gaussian noise scaled to an exact norm target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Noise level as a percentage of ||g||_2.
    pub percent: f64,
    pub seed: u64,
}

/// Adds seeded Gaussian noise with exactly known norm.
///
/// Draws an i.i.d. standard-normal grid `w`, rescales it so the perturbation
/// has norm `(percent/100) * ||g||`, and returns the noisy image together with
/// that exact noise level delta.
pub fn add_noise(g: &Image, spec: &NoiseSpec) -> (Image, f64) {
    assert!(spec.percent >= 0.0, "noise percent must be nonnegative");
    let m = g.m();
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut w = Array2::<f64>::zeros((m, m));
    for v in w.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    let wnorm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = spec.percent / 100.0 * g.norm();
    let scale = if wnorm > 0.0 { delta / wnorm } else { 0.0 };
    let noisy = Image {
        data: &g.data + &w.mapv(|v| v * scale),
    };
    (noisy, delta)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads an 8/16-bit P2 (ASCII) or P5 (binary) PGM file, scaling to [0,1].
pub fn read_pgm(path: &Path) -> Result<Image> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0usize;
    // Header tokens may be separated by whitespace and '#' comments.
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Format("unexpected end of PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(Error::Format(format!("not a PGM file (magic {magic:?})")));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad PGM width".into()))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad PGM height".into()))?;
    let maxval: u32 = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad PGM maxval".into()))?;
    if width != height {
        return Err(Error::Dimension(format!(
            "PGM must be square, got {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }

    let n = width * height;
    let mut data = Array2::<f64>::zeros((height, width));
    if magic == "P2" {
        let text = String::from_utf8_lossy(&bytes[pos..]);
        let mut vals = text.split_ascii_whitespace();
        for v in data.iter_mut() {
            let tok = vals
                .next()
                .ok_or_else(|| Error::Format("P2 pixel data truncated".into()))?;
            let raw: u32 = tok
                .parse()
                .map_err(|_| Error::Format(format!("bad P2 pixel {tok:?}")))?;
            *v = raw as f64 / maxval as f64;
        }
    } else {
        // Exactly one whitespace byte separates the header from binary data.
        pos += 1;
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        if bytes.len() < pos + n * bytes_per {
            return Err(Error::Format("P5 pixel data truncated".into()));
        }
        for (idx, v) in data.iter_mut().enumerate() {
            let raw = if bytes_per == 1 {
                bytes[pos + idx] as u32
            } else {
                // 16-bit PGM is big-endian
                ((bytes[pos + 2 * idx] as u32) << 8) | bytes[pos + 2 * idx + 1] as u32
            };
            *v = raw as f64 / maxval as f64;
        }
    }
    Image::new(data)
}

/// Writes an image as binary P5 PGM, clamped to [0,1] and quantized to 8 bits.
pub fn write_pgm(img: &Image, path: &Path) -> Result<()> {
    let m = img.m();
    let mut out = Vec::with_capacity(m * m + 32);
    out.extend_from_slice(format!("P5\n{m} {m}\n255\n").as_bytes());
    for v in img.data.iter() {
        let byte = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        out.push(byte);
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| io_err(path, e))
}
