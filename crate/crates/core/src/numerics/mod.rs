//! Floating-point kernels shared by the bound engine and the corollaries:
//! adaptive quadrature, bracketed monotone inversion, image probing and
//! endpoint-divergence detection.

mod grid;
pub mod hermite;
mod invert;
mod probe;
mod quad;

use thiserror::Error;

pub use grid::{Grid, GridError};
pub use invert::{bisect_bracket, invert_monotone, INVERSION_REL_WIDTH};
pub use probe::{diverges_at_zero, probe_image_sup, ImageProbe, PROBE_DOUBLINGS};
pub use quad::{cumulative, integrate, integrate_pair, Integral, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("integrand is not finite at s = {x}")]
    NonFinite { x: f64 },
    #[error("integral diverges at the endpoint {a}")]
    Divergent { a: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("target {y} lies outside the image (probed supremum {sup})")]
    OutsideImage { y: f64, sup: f64 },
    #[error("target {y} lies below F(x_lo) = {floor}")]
    BelowRange { y: f64, floor: f64 },
    #[error("bracket expansion exhausted while inverting for {y}")]
    BracketExhausted { y: f64 },
}
