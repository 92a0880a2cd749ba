//! Quadrature, numeric Laplace inversion and small fitting utilities.

pub mod fit;
pub mod quad;
pub mod talbot;

pub use quad::{integrate, integrate_with_breaks, QuadResult, QuadValue};
pub use talbot::{talbot_invert, talbot_invert_complex, TALBOT_NODES};
