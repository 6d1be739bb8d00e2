//! Complex helpers that keep precision near the origin.

use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

pub type C64 = Complex<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `ln(1 + z)` without cancellation for small `|z|` (principal branch).
pub fn ln1p(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    // |1 + z|^2 - 1 = 2x + x^2 + y^2
    let re = 0.5 * libm::log1p(2.0 * x + x * x + y * y);
    let im = y.atan2(1.0 + x);
    C64::new(re, im)
}

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let (s, c) = (z.im.sin(), z.im.cos());
    let half = (0.5 * z.im).sin();
    let re = libm::expm1(z.re) * c - 2.0 * half * half;
    let im = z.re.exp() * s;
    C64::new(re, im)
}
