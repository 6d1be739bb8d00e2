use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::OptionKind;
use crate::error::{bail, Result};
use crate::levy::RiskNeutralSetup;
use crate::math::complex::{C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosConfig {
    pub n_terms: usize,
    /// Truncation half-width in units of `sqrt(c₂ + sqrt(c₄))`.
    pub width: f64,
}

impl Default for CosConfig {
    fn default() -> Self {
        Self {
            n_terms: 1024,
            width: 10.0,
        }
    }
}

impl CosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_terms < 16 {
            bail!(Config, "n_terms must be at least 16, got {}", self.n_terms);
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            bail!(Config, "truncation width must be positive, got {}", self.width);
        }
        Ok(())
    }
}

/// Truncation interval `[a, b]` for `ln S(T)` from the cumulants of the law.
pub fn cos_truncation(setup: &RiskNeutralSetup, width: f64) -> (f64, f64) {
    let c = setup.cumulants();
    let spread = (c.c2.max(0.0) + c.c4.max(0.0).sqrt()).sqrt();
    (c.c1 - width * spread, c.c1 + width * spread)
}

/// COS prices for several strikes sharing one maturity; the characteristic
/// function is evaluated once per series term.
pub fn cos_prices(setup: &RiskNeutralSetup, kind: OptionKind, strikes: &[f64], cfg: &CosConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (a, b) = cos_truncation(setup, cfg.width);
    if !(a.is_finite() && b.is_finite() && b > a) {
        bail!(Consistency, "degenerate truncation range [{a}, {b}]");
    }
    for &k in strikes {
        if !(k > 0.0) {
            bail!(InvalidInput, "strike must be positive, got {k}");
        }
        let lk = k.ln();
        if lk <= a || lk >= b {
            bail!(
                Range,
                "strike {k} outside the truncated support [{:.6}, {:.6}]",
                a.exp(),
                b.exp()
            );
        }
    }
    let width = b - a;
    let x0 = setup.leg.spot.ln();
    let weights: Vec<(f64, f64)> = (0..cfg.n_terms)
        .map(|n| {
            let omega = n as f64 * PI / width;
            let u = C64::new(omega, 0.0);
            let w = (I * u * (x0 - a) + setup.increment_exponent(u)).exp();
            let half = if n == 0 { 0.5 } else { 1.0 };
            (omega, w.re * half)
        })
        .collect();
    let scale = 2.0 / width * setup.discount();
    let (ea, eb) = (a.exp(), b.exp());
    Ok(strikes
        .iter()
        .map(|&k| {
            let lk = k.ln();
            let theta = PI * (lk - a) / width;
            let (s1, c1) = theta.sin_cos();
            // cos/sin of ω(ln K − a) = nθ by rotation, re-anchored periodically
            let (mut cn, mut sn) = (1.0, 0.0);
            let mut sum = 0.0;
            for (n, &(omega, w)) in weights.iter().enumerate() {
                if n % 64 == 0 && n > 0 {
                    (sn, cn) = (n as f64 * theta).sin_cos();
                }
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let denom = 1.0 + omega * omega;
                let v = match kind {
                    // ∫ over [ln K, b] of (e^y − K) cos(ω(y − a)) dy
                    OptionKind::Call => {
                        let chi = (sign * eb - cn * k - omega * sn * k) / denom;
                        let psi = if n == 0 { b - lk } else { -sn / omega };
                        chi - k * psi
                    }
                    // ∫ over [a, ln K] of (K − e^y) cos(ω(y − a)) dy
                    OptionKind::Put => {
                        let chi = (cn * k - ea + omega * sn * k) / denom;
                        let psi = if n == 0 { lk - a } else { sn / omega };
                        k * psi - chi
                    }
                };
                sum += w * v;
                (cn, sn) = (cn * c1 - sn * s1, sn * c1 + cn * s1);
            }
            sum * scale
        })
        .collect())
}

/// COS price for a single European call or put.
pub fn cos_price(setup: &RiskNeutralSetup, kind: OptionKind, strike: f64, cfg: &CosConfig) -> Result<f64> {
    Ok(cos_prices(setup, kind, &[strike], cfg)?[0])
}
