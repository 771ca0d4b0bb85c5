//! Matrix-free image deblurring with structure-preserving preconditioners.
//!
//! The crate restores images blurred by a known point spread function under
//! realistic boundary conditions. A periodic surrogate of the blur gives a
//! cheap spectral Tikhonov filter; the preconditioned thresholded iterations
//! in [`pista`] drive the data residual to the noise level (discrepancy
//! principle) while soft-thresholding tight-frame coefficients for edge
//! preservation. The structured variants condense the filter into a spatial
//! kernel that is re-applied under the true boundary condition, which removes
//! the ringing a purely spectral filter produces at the image borders.
//!
//! Module map:
//! - [`image`]: image/PSF containers, PGM I/O, seeded noise
//! - [`spectral`]: FFT conventions, eigenvalues, filter-mask extraction
//! - [`boundary`]: the blur operator under four boundary rules + exact adjoint
//! - [`framelet`]: tight-frame analysis/synthesis (linear B-spline, one level)
//! - [`regop`]: frequency-domain regularization weights
//! - [`alphasolve`]: the nonstationary filter-parameter equation
//! - [`pista`]: ISTA and the preconditioned/structured thresholded drivers
//! - [`metrics`]: RRE / PSNR / SSIM
//! - [`harness`]: simulation, method dispatch, sweeps, CSV/PGM persistence

pub mod alphasolve;
pub mod boundary;
pub mod error;
pub mod framelet;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod pista;
pub mod regop;
pub mod spectral;

pub use boundary::{BlurOperator, BoundaryCondition};
pub use error::{Error, Result};
pub use framelet::{analysis, frame_norm_bound, synthesis, FrameCoeffs};
pub use image::{add_noise, read_pgm, write_pgm, Image, NoiseSpec, Psf};
pub use pista::{
    run_aitgp, run_ista, run_pista, run_struct_pista, soft_threshold, SolverConfig, SolverState,
    Termination,
};
