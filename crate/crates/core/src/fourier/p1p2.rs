use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::levy::RiskNeutralSetup;
use crate::math::complex::{C64, I};
use crate::math::quad::{integrate, QuadSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1P2Settings {
    /// Integrand envelope below which the tail is dropped.
    pub cutoff: f64,
    /// First trial truncation point.
    pub initial_upper: f64,
    /// Truncation points beyond this fail.
    pub max_upper: f64,
    /// Absolute change in P₁, P₂ under which doubling the range is deemed stable.
    pub stability_tol: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for P1P2Settings {
    fn default() -> Self {
        Self {
            cutoff: 1e-10,
            initial_upper: 25.0,
            max_upper: 1e6,
            stability_tol: 1e-10,
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityPrice {
    /// Exercise probability under the share measure.
    pub p1: f64,
    /// Exercise probability under the pricing measure.
    pub p2: f64,
    pub call: f64,
}

/// Call price `S₀e^{-δT} P₁ - K e^{-r̄T} P₂` from the two inversion integrals.
///
/// `P₁` uses the characteristic function tilted by the share measure,
/// `φ(u - i) / φ(-i)`.
pub fn p1_p2_price(setup: &RiskNeutralSetup, strike: f64, settings: &P1P2Settings) -> Result<ProbabilityPrice> {
    if !(strike > 0.0 && strike.is_finite()) {
        bail!(InvalidInput, "strike must be positive, got {strike}");
    }
    if !setup.in_strip(C64::new(0.0, -1.0)) {
        bail!(MomentExplosion, "E[S(T)] is infinite for this driver and loading");
    }
    let m = setup.leg.spot.ln() - strike.ln();
    let tilt = setup.increment_exponent(C64::new(0.0, -1.0));
    // log of e^{-iu ln K} φ(u) and of e^{-iu ln K} φ(u - i) / φ(-i)
    let log_p2 = |u: f64| {
        let z = C64::new(u, 0.0);
        I * z * m + setup.increment_exponent(z)
    };
    let log_p1 = |u: f64| {
        let z = C64::new(u, -1.0);
        I * C64::new(u, 0.0) * m + setup.increment_exponent(z) - tilt
    };
    let p2 = probability(log_p2, settings)?;
    let p1 = probability(log_p1, settings)?;
    let forward_pv = setup.leg.spot * (-setup.leg.div_yield * setup.maturity).exp();
    let call = forward_pv * p1 - strike * setup.discount() * p2;
    Ok(ProbabilityPrice { p1, p2, call })
}

fn probability<F: Fn(f64) -> C64>(log_integrand: F, settings: &P1P2Settings) -> Result<f64> {
    let envelope = |u: f64| log_integrand(u).re.exp() / u;
    let mut upper = settings.initial_upper;
    while envelope(upper) > settings.cutoff {
        upper *= 2.0;
        if upper > settings.max_upper {
            bail!(
                QuadratureFailure,
                "integrand still above {:e} at u = {}",
                settings.cutoff,
                settings.max_upper
            );
        }
    }
    let quad = QuadSettings {
        abs_tol: settings.abs_tol,
        rel_tol: settings.rel_tol,
        max_intervals: settings.max_intervals,
    };
    let f = |u: f64| (log_integrand(u).exp() / (I * u)).re;
    let mut value = integrate(f, 0.0, upper, &quad)?.value;
    loop {
        let extra = integrate(f, upper, 2.0 * upper, &quad)?.value;
        upper *= 2.0;
        value += extra;
        if extra.abs() < settings.stability_tol {
            break;
        }
        if upper > settings.max_upper {
            bail!(QuadratureFailure, "tail integral did not settle below u = {}", settings.max_upper);
        }
    }
    Ok(0.5 + value / PI)
}
