//! Least-squares helpers for exponent extraction.

use nalgebra::{DMatrix, DVector};

/// Ordinary least squares line `y = intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).1
}

/// Least-squares polynomial coefficients (constant term first).
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    assert!(x.len() > degree, "not enough points for the requested degree");
    // Centre and scale for conditioning, then map back.
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let scale = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| ((x[i] - mean) / scale).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let coef = a.svd(true, true).solve(&b, 1e-14).expect("SVD solve with U and V");
    // Expand p((x − mean)/scale) into powers of x.
    let mut out = vec![0.0; degree + 1];
    let mut binom = vec![vec![0.0; degree + 1]; degree + 1];
    for n in 0..=degree {
        binom[n][0] = 1.0;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0.0 };
        }
    }
    for (j, c) in coef.iter().enumerate() {
        let cj = c / scale.powi(j as i32);
        for k in 0..=j {
            out[k] += cj * binom[j][k] * (-mean).powi((j - k) as i32);
        }
    }
    out
}

pub fn polyval(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Leading power law `y ≈ c·x^p` of a series sampled on an increasing grid.
///
/// The local log-slope `s = d ln y / d ln x` is regressed on `y` and
/// extrapolated to `y → 0`; the prefactor is `y/x^p` extrapolated the same
/// way. Unlike a plain log-log regression this removes the bias from the
/// subleading terms of series such as `E_α(−x)` whose corrections are of
/// relative size `x^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Plain log-log regression slope, for reference.
    pub naive_exponent: f64,
}

pub fn leading_power_law(x: &[f64], y: &[f64]) -> PowerLawFit {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 5, "need at least five samples");
    assert!(y.iter().all(|v| *v > 0.0), "power-law fit needs positive samples");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mut slope = vec![0.0; n];
    for i in 0..n {
        slope[i] = if i == 0 {
            (ly[1] - ly[0]) / (lx[1] - lx[0])
        } else if i == n - 1 {
            (ly[n - 1] - ly[n - 2]) / (lx[n - 1] - lx[n - 2])
        } else {
            // Non-uniform three-point central difference.
            let h0 = lx[i] - lx[i - 1];
            let h1 = lx[i + 1] - lx[i];
            (h0 * h0 * ly[i + 1] - h1 * h1 * ly[i - 1] + (h1 * h1 - h0 * h0) * ly[i])
                / (h0 * h1 * (h0 + h1))
        };
    }
    let inner = 1..n - 1;
    let ys: Vec<f64> = y[inner.clone()].to_vec();
    let ss: Vec<f64> = slope[inner.clone()].to_vec();
    let exponent = polyval(&polyfit(&ys, &ss, 2), 0.0);
    let scaled: Vec<f64> = x.iter().zip(y).map(|(a, b)| b / a.powf(exponent)).collect();
    let prefactor = polyval(&polyfit(y, &scaled, 2), 0.0);
    PowerLawFit { exponent, prefactor, naive_exponent: log_log_slope(x, y) }
}
