//! Fixed-Talbot numeric inversion of Laplace transforms (Abate & Valkó).

use num_complex::Complex64;
use std::f64::consts::PI;

/// Default number of contour nodes.
pub const TALBOT_NODES: usize = 32;

/// Inverts `f̃` at time `t > 0` along the deformed Talbot contour
/// `s(θ) = rθ(cot θ + i)`, `r = 2M/(5t)`.
///
/// The transform must be analytic to the right of the contour; all poles
/// and branch cuts on the closed left half-plane are fine.
pub fn talbot_invert<F>(f: F, t: f64, nodes: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(t > 0.0, "Talbot inversion needs t > 0");
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    r / m * sum
}

/// As [`talbot_invert`] for transforms of complex-valued functions; both
/// halves of the contour are evaluated.
pub fn talbot_invert_complex<F>(f: F, t: f64, nodes: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(t > 0.0, "Talbot inversion needs t > 0");
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = 0.5 * f(Complex64::new(r, 0.0)) * (r * t).exp();
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let upper = (s * t).exp() * f(s) * Complex64::new(1.0, sigma);
        let lower = (s.conj() * t).exp() * f(s.conj()) * Complex64::new(1.0, -sigma);
        sum += 0.5 * (upper + lower);
    }
    sum * (r / m)
}
