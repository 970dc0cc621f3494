//! Standard Gaussian tail probabilities.

use std::f64::consts::SQRT_2;

/// Φ(z).
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// 1 − Φ(z), computed directly so right-tail p-values keep full relative
/// precision far into the tail.
pub fn upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}
