use core::f64::consts::{FRAC_1_SQRT_2, PI};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Standard normal cumulative distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gamma function on the real line (poles at non-positive integers).
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_reference_points() {
        assert_eq!(norm_cdf(0.0), 0.5);
        // Phi(1.96) from a 20-digit table
        assert_relative_eq!(norm_cdf(1.96), 0.975_002_104_851_780, epsilon = 1e-15);
        assert_relative_eq!(
            norm_cdf(-8.0),
            6.220_960_574_271_785e-16,
            max_relative = 1e-12
        );
    }

    #[test]
    fn gamma_reflection() {
        // Gamma(-0.5) = -2 sqrt(pi)
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-15);
    }
}
