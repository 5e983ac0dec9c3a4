//! Certified Lipschitz bounds for feed-forward convolutional network graphs.
//!
//! The crate models networks as layered graphs of circular convolution filters,
//! optional per-layer low-pass feature taps, and merge operations (sums, p-norms,
//! products). For every layer it computes three spectral energy bounds — the
//! combined, hidden-path, and feature-path bounds — and feeds them to a small
//! linear program whose optimum certifies a global Lipschitz constant for the
//! whole feature map. Around that core sit:
//!
//! * [`forward`]: reference evaluation of the network on sampled signals,
//!   together with empirical Lipschitz ratios used to sanity-check the bounds,
//! * [`local`]: exact linearization at a sample for piecewise-linear networks,
//!   largest-singular-value estimation, and minimal-perturbation search along
//!   chosen directions,
//! * [`stochastic`]: circularly stationary Gaussian inputs, Monte-Carlo checks
//!   of the second-moment contraction property, stationarity diagnostics, and
//!   norm-concentration profiles,
//! * [`discriminant`]: two-class separation scores in feature space with either
//!   nuclear-norm or certified-bound denominators.
//!
//! Numerical kernels are generic over the floating-point type through
//! [`Scalar`]; the crate-root aliases fix `f64` as the default precision.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use std::fmt::Display;

pub mod bounds;
pub mod discriminant;
pub mod fft;
pub mod forward;
pub mod fuzz;
pub mod local;
pub mod netspec;
pub mod power;
pub mod profile;
pub mod signal;
pub mod spectral;
pub mod stochastic;
pub mod toy;
pub mod util;

pub use netspec::NetworkSpec;
pub use signal::Signal;
pub use spectral::BesselTriple;

/// Floating-point scalar the numerical core is generic over.
///
/// Implemented for `f32` and `f64`. The bound collects what the kernels need:
/// IEEE float arithmetic, conversion from literal constants, FFT support, and
/// standard-normal sampling.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + rustfft::FftNum + Display + Default
{
    /// Draws a standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` constant (tolerances, closed-form coefficients).
    ///
    /// Panics only if the constant is not representable, which cannot happen
    /// for the finite literals used in this crate.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant must be representable")
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

/// Default scalar precision for parsing, the CLI, and the test suites.
pub type Real = f64;
/// Network specification at default precision.
pub type Net = NetworkSpec<Real>;
/// Sampled signal at default precision.
pub type Sig = Signal<Real>;
/// Complex spectrum element at default precision.
pub type Cplx = Complex<Real>;

/// Errors produced by parsing, validation, and the numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed specification input (JSON structure, sidecar framing, …).
    #[error("invalid specification: {0}")]
    Spec(String),
    /// Structurally well-formed input that violates a model invariant.
    #[error("validation failed: {0}")]
    Validation(String),
    /// A numerical routine could not produce a trustworthy result.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// The requested operation is not defined for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience result alias for this crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Spec(_) => "spec",
            Error::Validation(_) => "validation",
            Error::Numeric(_) => "numeric",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
