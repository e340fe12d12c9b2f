//! Newton–Cotes quadrature on uniform grids.
//!
//! The rule is picked from the number of intervals: composite Boole when it is
//! a multiple of 4, composite Simpson when it is even, Simpson plus a trailing
//! 3/8 panel when it is odd, and the trapezoid rule for a single interval.

use crate::error::{Error, Result};

/// Quadrature weights for `n` equally spaced samples with spacing `h`.
pub fn weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Input(format!("quadrature needs at least 2 samples, got {n}")));
    }
    let intervals = n - 1;
    let mut w = vec![0.0; n];
    if intervals == 1 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
    } else if intervals % 4 == 0 {
        let panel = [7.0, 32.0, 12.0, 32.0, 7.0];
        for start in (0..intervals).step_by(4) {
            for (k, p) in panel.iter().enumerate() {
                w[start + k] += p * 2.0 * h / 45.0;
            }
        }
    } else {
        // Simpson panels, with one 3/8 panel at the end when the interval count is odd.
        let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
        for start in (0..simpson_end).step_by(2) {
            w[start] += h / 3.0;
            w[start + 1] += 4.0 * h / 3.0;
            w[start + 2] += h / 3.0;
        }
        if simpson_end < intervals {
            let s = simpson_end;
            let panel = [1.0, 3.0, 3.0, 1.0];
            for (k, p) in panel.iter().enumerate() {
                w[s + k] += p * 3.0 * h / 8.0;
            }
        }
    }
    Ok(w)
}

/// Integral over `[0, 1]` of samples taken on the uniform grid `x_i = i / (n - 1)`.
pub fn integrate_unit(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Input(format!("quadrature needs at least 2 samples, got {n}")));
    }
    let w = weights(n, 1.0 / (n - 1) as f64)?;
    Ok(w.iter().zip(values).map(|(a, b)| a * b).sum())
}

/// Uniform grid on `[0, 1]` with `n` points.
pub fn unit_grid(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n).map(|i| i as f64 * h).collect()
}
