#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{bail, Result};
use crate::math::special::norm_cdf;

fn check(s0: f64, k: f64, t: f64, sigma: f64) -> Result<()> {
    if !(s0 > 0.0 && k > 0.0 && t > 0.0) {
        bail!(InvalidInput, "spot, strike and maturity must be positive");
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        bail!(InvalidInput, "volatility must be nonnegative, got {sigma}");
    }
    Ok(())
}

/// Lognormal call value discounted at `rate` with dividend yield `div`.
pub fn bs_call_analytic(s0: f64, k: f64, rate: f64, div: f64, sigma: f64, t: f64) -> Result<f64> {
    check(s0, k, t, sigma)?;
    let fwd_s = s0 * (-div * t).exp();
    let disc_k = k * (-rate * t).exp();
    if sigma == 0.0 {
        return Ok((fwd_s - disc_k).max(0.0));
    }
    let w = sigma * t.sqrt();
    let d1 = ((fwd_s / disc_k).ln() + 0.5 * w * w) / w;
    Ok(fwd_s * norm_cdf(d1) - disc_k * norm_cdf(d1 - w))
}

pub fn bs_put_analytic(s0: f64, k: f64, rate: f64, div: f64, sigma: f64, t: f64) -> Result<f64> {
    check(s0, k, t, sigma)?;
    let fwd_s = s0 * (-div * t).exp();
    let disc_k = k * (-rate * t).exp();
    if sigma == 0.0 {
        return Ok((disc_k - fwd_s).max(0.0));
    }
    let w = sigma * t.sqrt();
    let d1 = ((fwd_s / disc_k).ln() + 0.5 * w * w) / w;
    Ok(disc_k * norm_cdf(w - d1) - fwd_s * norm_cdf(-d1))
}
