use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::levy::RiskNeutralSetup;
use crate::math::complex::{C64, I};

/// Forward discrete Fourier transform, `X_k = Σ_j x_j exp(-2πi jk/N)`, in place.
///
/// The core crate has no FFT of its own; callers plug one in.
pub trait FftBackend {
    fn forward(&self, data: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftConfig {
    /// Damping exponent applied to the call price in log-strike.
    pub alpha: f64,
    pub n_points: usize,
    /// Spacing of the frequency grid.
    pub eta: f64,
}

impl Default for FftConfig {
    fn default() -> Self {
        Self {
            alpha: 1.25,
            n_points: 4096,
            eta: 0.25,
        }
    }
}

impl FftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            bail!(Config, "damping alpha must be positive, got {}", self.alpha);
        }
        if self.n_points < 64 || !self.n_points.is_power_of_two() {
            bail!(Config, "n_points must be a power of two >= 64, got {}", self.n_points);
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            bail!(Config, "eta must be positive, got {}", self.eta);
        }
        Ok(())
    }

    /// Log-strike spacing `2π / (N η)`.
    pub fn log_strike_spacing(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.eta)
    }
}

/// Call prices on an ascending log-strike grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub log_strikes: Vec<f64>,
    pub prices: Vec<f64>,
    pub discount: f64,
}

impl PriceGrid {
    pub fn strikes(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_strikes.iter().map(|k| k.exp())
    }

    /// Price at `strike`, linear in log-strike between nodes.
    pub fn interpolate(&self, strike: f64) -> Result<f64> {
        let k = strike.ln();
        let n = self.log_strikes.len();
        if n < 2 || !(k >= self.log_strikes[0] && k <= self.log_strikes[n - 1]) {
            bail!(Range, "strike {strike} outside the computed grid");
        }
        let i = self.log_strikes.partition_point(|x| *x <= k).clamp(1, n - 1);
        let (k0, k1) = (self.log_strikes[i - 1], self.log_strikes[i]);
        let w = (k - k0) / (k1 - k0);
        Ok(self.prices[i - 1] * (1.0 - w) + self.prices[i] * w)
    }
}

/// Tolerance, per unit spot, below which negative FFT outputs are set to zero.
const CLAMP_TOL: f64 = 1e-8;

/// Carr–Madan call prices for log-strikes covering `[strike_lo, strike_hi]`.
///
/// The grid is centred on `ln S₀`; nodes outside the window are dropped
/// except for one on each side so that interpolation covers the window.
pub fn carr_madan_prices<B: FftBackend>(
    setup: &RiskNeutralSetup,
    cfg: &FftConfig,
    strike_lo: f64,
    strike_hi: f64,
    fft: &B,
) -> Result<PriceGrid> {
    cfg.validate()?;
    if !(strike_lo > 0.0 && strike_hi >= strike_lo) {
        bail!(InvalidInput, "strike window [{strike_lo}, {strike_hi}] is invalid");
    }
    let alpha = cfg.alpha;
    if !setup.in_strip(C64::new(0.0, -(alpha + 1.0))) {
        bail!(
            MomentExplosion,
            "damping alpha = {alpha} needs E[S(T)^{}] which is infinite",
            alpha + 1.0
        );
    }
    let n = cfg.n_points;
    let eta = cfg.eta;
    let lambda = cfg.log_strike_spacing();
    let x0 = setup.leg.spot.ln();
    let k0 = x0 - 0.5 * n as f64 * lambda;
    let disc = setup.discount();

    let mut buf: Vec<C64> = (0..n)
        .map(|j| {
            let v = j as f64 * eta;
            let shifted = C64::new(v, -(alpha + 1.0));
            // φ(v - (α+1)i) e^{-i v k0}, phases combined before exponentiating
            let log_cf = I * shifted * x0 + setup.increment_exponent(shifted) - I * v * k0;
            let denom = C64::new(alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v);
            let simpson = if j == 0 {
                1.0 / 3.0
            } else if j % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            };
            log_cf.exp() * disc / denom * (eta * simpson)
        })
        .collect();
    fft.forward(&mut buf);

    let (klo, khi) = (strike_lo.ln(), strike_hi.ln());
    let first = (((klo - k0) / lambda).floor() as isize - 1).max(0) as usize;
    let last = ((((khi - k0) / lambda).ceil() as isize) + 1).min(n as isize - 1) as usize;
    if k0 + first as f64 * lambda > klo || k0 + last as f64 * lambda < khi {
        bail!(Range, "strike window exceeds the log-strike grid; raise n_points or lower eta");
    }

    let tol = CLAMP_TOL * setup.leg.spot;
    let mut log_strikes = Vec::with_capacity(last - first + 1);
    let mut prices = Vec::with_capacity(last - first + 1);
    for (u, x) in buf.iter().enumerate().take(last + 1).skip(first) {
        let k = k0 + u as f64 * lambda;
        let c = (-alpha * k).exp() / PI * x.re;
        let c = if c < 0.0 {
            if c < -tol {
                bail!(
                    Consistency,
                    "FFT call price {c:e} at log-strike {k} is negative beyond tolerance"
                );
            }
            0.0
        } else {
            c
        };
        log_strikes.push(k);
        prices.push(c);
    }
    Ok(PriceGrid {
        log_strikes,
        prices,
        discount: disc,
    })
}
