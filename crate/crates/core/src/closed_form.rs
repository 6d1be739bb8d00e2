//! Closed-form value of a call on the basket `ηS + (1−η)Z` when both legs
//! are driven by one Brownian motion and discounted at the shadow rate.
//!
//! With `y*` the root of `F₁(y) + F₂(y) = K`,
//!
//! ```text
//! F₁ = ηS·exp(m + w²/2 + w·y)
//! F₂ = (1−η)Z·exp(m + w·w̃ − w̃²/2 + w̃·y)
//! C  = ηS·Φ(d) + (1−η)Z·Φ(d − (w − w̃)) − K·e^{−m}·Φ(d − w),   d = −y*
//! ```

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::math::special::norm_cdf;

/// Point inputs: spots, weight, strike, accumulated discount exponent `m`
/// and the volatility-time scales `w` (for `S`) and `w_t` (for `Z`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormInputs {
    pub s: f64,
    pub z: f64,
    pub eta: f64,
    pub strike: f64,
    pub m: f64,
    pub w: f64,
    pub w_t: f64,
}

impl ClosedFormInputs {
    pub fn validate(&self) -> Result<()> {
        let all = [self.s, self.z, self.eta, self.strike, self.m, self.w, self.w_t];
        if all.iter().any(|x| !x.is_finite()) {
            bail!(NonFinite, "closed-form inputs must be finite: {self:?}");
        }
        if !(self.s > 0.0 && self.z > 0.0 && self.strike > 0.0) {
            bail!(InvalidInput, "S, Z and K must be positive: {self:?}");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            bail!(InvalidInput, "η must lie in (0, 1], got {}", self.eta);
        }
        if self.w < 0.0 || self.w_t < 0.0 {
            bail!(InvalidInput, "w and w̃ must be nonnegative: {self:?}");
        }
        Ok(())
    }

    fn log_terms(&self, y: f64) -> [(f64, f64); 2] {
        let e1 = self.m + 0.5 * self.w * self.w + self.w * y;
        let e2 = self.m + self.w * self.w_t - 0.5 * self.w_t * self.w_t + self.w_t * y;
        let second = if self.eta < 1.0 {
            ((1.0 - self.eta) * self.z).ln() + e2
        } else {
            f64::NEG_INFINITY
        };
        [((self.eta * self.s).ln() + e1, self.w), (second, self.w_t)]
    }

    /// `(F₁(y), F₂(y))`.
    pub fn terms(&self, y: f64) -> (f64, f64) {
        let [(a, _), (b, _)] = self.log_terms(y);
        (a.exp(), b.exp())
    }

    /// `F₁(y) + F₂(y) − K`.
    pub fn root_residual(&self, y: f64) -> f64 {
        let (f1, f2) = self.terms(y);
        f1 + f2 - self.strike
    }
}

// ln(F₁+F₂) − ln K and its derivative in y
fn log_gap(inp: &ClosedFormInputs, y: f64) -> (f64, f64) {
    let [(a, wa), (b, wb)] = inp.log_terms(y);
    let top = a.max(b);
    let (ea, eb) = ((a - top).exp(), (b - top).exp());
    let sum = ea + eb;
    (top + sum.ln() - inp.strike.ln(), (wa * ea + wb * eb) / sum)
}

/// Root `y*` of `F₁ + F₂ = K`: bracket expansion, then Newton safeguarded
/// by bisection on `ln(F₁+F₂) − ln K`, which is increasing and convex in `y`.
pub fn solve_y_star(inp: &ClosedFormInputs) -> Result<f64> {
    inp.validate()?;
    // terms flat in y set the limit of the left side as y → −∞
    let (f1, f2) = inp.terms(0.0);
    let flat1 = inp.w == 0.0;
    let flat2 = inp.eta == 1.0 || inp.w_t == 0.0;
    let floor = if flat1 { f1 } else { 0.0 } + if flat2 { f2 } else { 0.0 };
    if (flat1 && flat2) || floor >= inp.strike {
        bail!(NoRoot, "F₁ + F₂ stays above K or is flat in y: {inp:?}");
    }

    let mut y = if inp.eta == 1.0 {
        ((inp.strike / inp.s).ln() - inp.m - 0.5 * inp.w * inp.w) / inp.w
    } else {
        0.0
    };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut step = 1.0;
    let (g, _) = log_gap(inp, y);
    if g == 0.0 {
        return Ok(y);
    }
    if g < 0.0 {
        lo = y;
    } else {
        hi = y;
    }
    while !(lo.is_finite() && hi.is_finite()) {
        let probe = if lo.is_finite() { lo + step } else { hi - step };
        let (g, _) = log_gap(inp, probe);
        if g.is_nan() {
            bail!(NonFinite, "root function is NaN at y = {probe}");
        }
        if g < 0.0 {
            lo = probe;
        } else {
            hi = probe;
        }
        step *= 2.0;
        if step > 1e12 {
            bail!(NoRoot, "could not bracket y*: {inp:?}");
        }
    }

    y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, dg) = log_gap(inp, y);
        if g == 0.0 {
            return Ok(y);
        }
        if g < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - g / dg;
        let next = if newton > lo && newton < hi && dg > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - y).abs() <= 1e-15 * y.abs().max(1.0) || hi - lo <= 1e-15 * y.abs().max(1.0) {
            return Ok(next);
        }
        y = next;
    }
    Ok(y)
}

/// `C = ηSΦ(d) + (1−η)ZΦ(d − Δw) − Ke^{−m}Φ(d − w)` with `d = −y*`.
pub fn closed_form_price(inp: &ClosedFormInputs) -> Result<f64> {
    let d = -solve_y_star(inp)?;
    let dw = inp.w - inp.w_t;
    let mut c = inp.eta * inp.s * norm_cdf(d) - inp.strike * (-inp.m).exp() * norm_cdf(d - inp.w);
    if inp.eta < 1.0 {
        c += (1.0 - inp.eta) * inp.z * norm_cdf(d - dw);
    }
    Ok(c.max(0.0))
}

/// Constant shadow rate and leg volatilities up to maturity `maturity`:
/// `m = r(T−t)`, `w = σ_S√(T−t)`, `w̃ = σ_Z√(T−t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantCoefficients {
    pub rate: f64,
    pub sigma_s: f64,
    pub sigma_z: f64,
    pub maturity: f64,
}

/// Option terms and evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasketCall {
    pub eta: f64,
    pub strike: f64,
}

impl ConstantCoefficients {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.sigma_s > 0.0 && self.sigma_z > 0.0 && self.maturity > 0.0) {
            bail!(InvalidInput, "need finite rate and positive volatilities and maturity: {self:?}");
        }
        Ok(())
    }

    pub fn inputs(&self, opt: &BasketCall, t: f64, s: f64, z: f64) -> Result<ClosedFormInputs> {
        self.validate()?;
        let tau = self.maturity - t;
        if !(tau > 0.0) {
            bail!(InvalidInput, "t = {t} is not before maturity {}", self.maturity);
        }
        Ok(ClosedFormInputs {
            s,
            z,
            eta: opt.eta,
            strike: opt.strike,
            m: self.rate * tau,
            w: self.sigma_s * tau.sqrt(),
            w_t: self.sigma_z * tau.sqrt(),
        })
    }

    pub fn price(&self, opt: &BasketCall, t: f64, s: f64, z: f64) -> Result<f64> {
        closed_form_price(&self.inputs(opt, t, s, z)?)
    }
}

/// Partial derivatives of `y*` with respect to `t`, `S` and `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YStarDerivatives {
    pub y: f64,
    pub y_t: f64,
    pub y_s: f64,
    pub y_z: f64,
}

/// Implicit differentiation of `F₁ + F₂ = K`: `y*_x = −∂ₓ(F₁+F₂) / ∂_y(F₁+F₂)`.
pub fn y_star_derivatives(cc: &ConstantCoefficients, opt: &BasketCall, t: f64, s: f64, z: f64) -> Result<YStarDerivatives> {
    let inp = cc.inputs(opt, t, s, z)?;
    let y = solve_y_star(&inp)?;
    let (f1, f2) = inp.terms(y);
    let tau = cc.maturity - t;
    let (w, wt) = (inp.w, inp.w_t);
    let (dm, dw, dwt) = (-cc.rate, -w / (2.0 * tau), -wt / (2.0 * tau));
    let df_dy = w * f1 + wt * f2;
    let df_dt = f1 * (dm + w * dw + dw * y) + f2 * (dm + dw * wt + w * dwt - wt * dwt + dwt * y);
    Ok(YStarDerivatives {
        y,
        y_t: -df_dt / df_dy,
        y_s: -(f1 / s) / df_dy,
        y_z: -(f2 / z) / df_dy,
    })
}

/// Finite-difference steps: relative in `S` and `Z`, absolute (years) in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub rel: f64,
    pub dt: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self { rel: 1e-4, dt: 1e-5 }
    }
}

impl FdSteps {
    /// Steps scaled together from a relative spot step `h`, keeping the
    /// default ratio between the time and spot steps.
    pub fn scaled(h: f64) -> Self {
        Self { rel: h, dt: 0.1 * h }
    }
}

/// Left side of the pricing equation
///
/// ```text
/// C_t + r(S C_S + Z C_Z) + ½[σ_S² S² C_SS + 2σ_Sσ_Z SZ C_SZ + σ_Z² Z² C_ZZ] − rC
/// ```
///
/// from central differences of the closed form, divided by the basket
/// value `ηS + (1−η)Z`.
pub fn pde_residual(cc: &ConstantCoefficients, opt: &BasketCall, t: f64, s: f64, z: f64, h: &FdSteps) -> Result<f64> {
    if !(h.rel > 0.0 && h.rel < 0.5 && h.dt > 0.0) {
        bail!(InvalidInput, "finite-difference steps must be positive and small: {h:?}");
    }
    if t + h.dt >= cc.maturity {
        bail!(InvalidInput, "t = {t} + {} reaches maturity {}", h.dt, cc.maturity);
    }
    let price = |t: f64, s: f64, z: f64| cc.price(opt, t, s, z);
    let (hs, hz) = (h.rel * s, h.rel * z);
    let c = price(t, s, z)?;
    let c_t = (price(t + h.dt, s, z)? - price(t - h.dt, s, z)?) / (2.0 * h.dt);
    let (csp, csm) = (price(t, s + hs, z)?, price(t, s - hs, z)?);
    let (czp, czm) = (price(t, s, z + hz)?, price(t, s, z - hz)?);
    let c_s = (csp - csm) / (2.0 * hs);
    let c_z = (czp - czm) / (2.0 * hz);
    let c_ss = (csp - 2.0 * c + csm) / (hs * hs);
    let c_zz = (czp - 2.0 * c + czm) / (hz * hz);
    let c_sz = (price(t, s + hs, z + hz)? - price(t, s + hs, z - hz)? - price(t, s - hs, z + hz)?
        + price(t, s - hs, z - hz)?)
        / (4.0 * hs * hz);
    let (a, b) = (cc.sigma_s, cc.sigma_z);
    let diffusion = 0.5 * (a * a * s * s * c_ss + 2.0 * a * b * s * z * c_sz + b * b * z * z * c_zz);
    let lhs = c_t + cc.rate * (s * c_s + z * c_z) + diffusion - cc.rate * c;
    let scale = opt.eta * s + (1.0 - opt.eta) * z;
    Ok((lhs / scale).abs())
}

/// Residuals at `h0, h0/2, h0/4, …` and the observed orders between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2(r(h)/r(h/2))` for consecutive pairs.
    pub orders: Vec<f64>,
}

pub fn residual_study(
    cc: &ConstantCoefficients,
    opt: &BasketCall,
    t: f64,
    s: f64,
    z: f64,
    h0: f64,
    halvings: usize,
) -> Result<ResidualStudy> {
    let steps: Vec<f64> = (0..=halvings).map(|i| h0 / (1u64 << i) as f64).collect();
    let residuals = steps
        .iter()
        .map(|&h| pde_residual(cc, opt, t, s, z, &FdSteps::scaled(h)))
        .collect::<Result<Vec<_>>>()?;
    let orders = residuals.windows(2).map(|r| (r[0] / r[1]).log2()).collect();
    Ok(ResidualStudy {
        steps,
        residuals,
        orders,
    })
}

/// Residual at step `h` with its `h/2` companion used as a scaling check.
///
/// Fails with `StepTooSmall` when halving the step does not at least halve
/// the residual (round-off dominates) and with `StepTooLarge` when the residual
/// exceeds `tol` while still shrinking with the step.
pub fn checked_pde_residual(
    cc: &ConstantCoefficients,
    opt: &BasketCall,
    t: f64,
    s: f64,
    z: f64,
    h: f64,
    tol: f64,
) -> Result<f64> {
    let r = pde_residual(cc, opt, t, s, z, &FdSteps::scaled(h))?;
    if r <= tol {
        return Ok(r);
    }
    let half = pde_residual(cc, opt, t, s, z, &FdSteps::scaled(0.5 * h))?;
    // truncation error alone would shrink it fourfold
    if half > 0.5 * r {
        bail!(StepTooSmall, "residual {r:.3e} at h = {h:e} does not shrink when h is halved ({half:.3e})");
    }
    bail!(StepTooLarge, "residual {r:.3e} at h = {h:e} exceeds {tol:e}; halving gives {half:.3e}");
}
