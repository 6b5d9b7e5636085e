//! Finite-difference stencils and step-refinement utilities.
//!
//! These are the independent oracle for every derivative the engine also
//! computes through jets or integration: central differences, Richardson
//! extrapolation, and observed-order measurement under step halving.

/// Central first derivative, O(h^2).
pub fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central first derivative with one Richardson step, O(h^4).
pub fn central_rich<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d_h = central(&f, x, h);
    let d_h2 = central(&f, x, h / 2.0);
    (4.0 * d_h2 - d_h) / 3.0
}

/// Central second derivative, O(h^2).
pub fn central2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Mixed second derivative d^2f/(dx dy) on a four-point stencil, O(h^2).
pub fn central_mixed<F: Fn(f64, f64) -> f64>(f: F, x: f64, y: f64, h: f64) -> f64 {
    (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h)
}

/// Observed convergence order from three endpoint values at steps
/// h, h/2, h/4 (Richardson ratio test). Returns NaN when the refinement
/// has already hit roundoff.
pub fn observed_order(y_h: f64, y_h2: f64, y_h4: f64) -> f64 {
    let num = (y_h - y_h2).abs();
    let den = (y_h2 - y_h4).abs();
    if den == 0.0 || num == 0.0 {
        return f64::NAN;
    }
    (num / den).log2()
}

/// Vector variant: ratio of maximum componentwise refinement gaps.
pub fn observed_order_vec(y_h: &[f64], y_h2: &[f64], y_h4: &[f64]) -> f64 {
    let num = y_h
        .iter()
        .zip(y_h2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let den = y_h2
        .iter()
        .zip(y_h4)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if den == 0.0 || num == 0.0 {
        return f64::NAN;
    }
    (num / den).log2()
}
