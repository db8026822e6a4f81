//! The compactly supported polynomial window used for singularity subtraction.
//!
//! `W_δ(r) = p(r/δ)` for `r < δ` and 0 otherwise, with
//! `p(t) = 1 - 35t⁴ + 84t⁵ - 70t⁶ + 20t⁷`. `p` is C³ at `t = 1` and
//! `1 - p(t) = O(t⁴)` at the origin.

use crate::{Error, Result};

/// Monomial coefficients of `p`, lowest degree first.
pub const WINDOW_COEFFS: [f64; 8] = [1.0, 0.0, 0.0, 0.0, -35.0, 84.0, -70.0, 20.0];

/// Window radius in grid units and physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub delta: f64,
    pub h: f64,
    pub radius_points: usize,
}

impl WindowSpec {
    pub fn new(h: f64, radius_points: usize) -> Result<Self> {
        if radius_points < 2 {
            return Err(Error::Config(format!(
                "window radius must cover at least 2 points, got {radius_points}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
        }
        Ok(WindowSpec {
            delta: radius_points as f64 * h,
            h,
            radius_points,
        })
    }

    /// `W_δ(r)` without the sign check.
    #[inline]
    pub fn weight(&self, r: f64) -> f64 {
        let t = r / self.delta;
        if t >= 1.0 {
            0.0
        } else {
            window_poly(t)
        }
    }
}

/// `W_δ(r)`; negative `r` is a domain error.
pub fn window_eval(r: f64, spec: &WindowSpec) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Domain(format!("window radius must be nonnegative, got {r}")));
    }
    Ok(spec.weight(r))
}

/// The window polynomial `p(t)` (no truncation).
#[inline]
pub fn window_poly(t: f64) -> f64 {
    let t2 = t * t;
    let t4 = t2 * t2;
    1.0 + t4 * (-35.0 + t * (84.0 + t * (-70.0 + 20.0 * t)))
}

/// `k`-th derivative of `p` at `t`, from the exact coefficients.
pub fn window_poly_derivative(t: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    for n in (k..WINDOW_COEFFS.len()).rev() {
        let falling: f64 = (n - k + 1..=n).map(|x| x as f64).product();
        acc = acc * t + WINDOW_COEFFS[n] * falling;
    }
    // Horner above built Σ c_n n!/(n-k)! t^{n-k} in descending order
    acc
}

/// `∫₀¹ s^{1-α} p(s) ds`.
pub fn window_moment(alpha: f64) -> f64 {
    1.0 / (2.0 - alpha) - 35.0 / (6.0 - alpha) + 84.0 / (7.0 - alpha) - 70.0 / (8.0 - alpha)
        + 20.0 / (9.0 - alpha)
}
