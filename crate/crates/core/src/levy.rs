//! Lévy drivers, their characteristic exponents, and the risk-neutral
//! characteristic functions of the log-price they induce.
//!
//! Every exponent is the per-unit-time cumulant `Ψ(u) = ln E[exp(iu L(1))]`,
//! with the small-jump truncation absorbed into the drift. Complex powers and
//! logarithms use the principal branch: inside the analyticity strip the
//! tempering keeps every base in the open right half-plane, so the branch is
//! unambiguous.

use alloc::string::String;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::math::complex::{expm1, ln1p, C64, I};
use crate::math::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgmyParams {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    pub sigma: f64,
    pub nu: f64,
    pub theta: f64,
}

/// The jump (or diffusion) driver shared by both assets.
///
/// Serialises as `{"model": "NIG", "alpha": .., "beta": .., "delta": .., "mu": ..}`
/// and likewise for `"BS"`, `"CGMY"` (`C`, `G`, `M`, `Y`) and `"VG"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum LevyModel {
    #[serde(rename = "BS")]
    Bs { sigma: f64 },
    #[serde(rename = "NIG")]
    Nig(NigParams),
    #[serde(rename = "CGMY")]
    Cgmy(CgmyParams),
    #[serde(rename = "VG")]
    Vg(VgParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Bs,
    Nig,
    Cgmy,
    Vg,
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bs" => Ok(Self::Bs),
            "nig" => Ok(Self::Nig),
            "cgmy" => Ok(Self::Cgmy),
            "vg" => Ok(Self::Vg),
            other => bail!(InvalidInput, "unknown model kind {other:?}"),
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::Bs => "BS",
            Self::Nig => "NIG",
            Self::Cgmy => "CGMY",
            Self::Vg => "VG",
        })
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        bail!(InvalidModel, "{name} must be finite, got {x}");
    }
    Ok(())
}

impl NigParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("mu", self.mu),
        ] {
            finite(n, v)?;
        }
        if self.alpha <= 0.0 || self.delta <= 0.0 {
            bail!(InvalidModel, "NIG needs alpha > 0 and delta > 0");
        }
        if self.beta.abs() >= self.alpha {
            bail!(InvalidModel, "NIG needs |beta| < alpha");
        }
        Ok(())
    }

    /// Analytic mean of L(1).
    pub fn mean(&self) -> f64 {
        self.mu + self.delta * self.beta / (self.alpha * self.alpha - self.beta * self.beta).sqrt()
    }

    /// Analytic variance of L(1).
    pub fn variance(&self) -> f64 {
        let g2 = self.alpha * self.alpha - self.beta * self.beta;
        self.delta * self.alpha * self.alpha / g2.powf(1.5)
    }

    fn exponent(&self, u: C64) -> C64 {
        let g = (self.alpha * self.alpha - self.beta * self.beta).sqrt();
        let b = C64::new(self.beta, 0.0) + I * u;
        let root = (C64::new(self.alpha * self.alpha, 0.0) - b * b).sqrt();
        // sqrt(A) - sqrt(B) = (A - B) / (sqrt(A) + sqrt(B)); A - B = iu(2β + iu)
        let iu = I * u;
        iu * self.mu + iu * (iu + 2.0 * self.beta) * self.delta / (root + g)
    }
}

impl CgmyParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("C", self.c), ("G", self.g), ("M", self.m), ("Y", self.y)] {
            finite(n, v)?;
        }
        if self.c <= 0.0 {
            bail!(InvalidModel, "CGMY needs C > 0");
        }
        if self.g < 0.0 || self.m < 0.0 {
            bail!(InvalidModel, "CGMY needs G >= 0 and M >= 0");
        }
        if self.y >= 2.0 {
            bail!(InvalidModel, "CGMY needs Y < 2");
        }
        if self.y == 0.0 {
            bail!(
                InvalidModel,
                "CGMY with Y = 0 is the variance-gamma limit; use the VG model"
            );
        }
        if self.y == 1.0 {
            bail!(
                InvalidModel,
                "CGMY with Y = 1 is not supported (pole of Gamma(-Y))"
            );
        }
        if self.y < 0.0 && (self.g == 0.0 || self.m == 0.0) {
            bail!(InvalidModel, "CGMY with Y < 0 needs G > 0 and M > 0");
        }
        Ok(())
    }

    /// CGMY parameters matching a VG law in the `Y -> 0` limit.
    pub fn from_vg(vg: &VgParams, y: f64) -> Self {
        let root =
            (0.25 * vg.theta * vg.theta * vg.nu * vg.nu + 0.5 * vg.sigma * vg.sigma * vg.nu).sqrt();
        let half = 0.5 * vg.theta * vg.nu;
        Self {
            c: 1.0 / vg.nu,
            g: 1.0 / (root - half),
            m: 1.0 / (root + half),
            y,
        }
    }

    // (T - iu)^Y - T^Y for tempering T and signed frequency
    fn tempered_power_difference(&self, tempering: f64, iu: C64) -> C64 {
        if tempering == 0.0 {
            return iu.powf(self.y);
        }
        let base = ln1p(iu / tempering) * self.y;
        expm1(base) * tempering.powf(self.y)
    }

    fn exponent(&self, u: C64) -> C64 {
        let iu = I * u;
        let bracket = self.tempered_power_difference(self.m, -iu)
            + self.tempered_power_difference(self.g, iu);
        bracket * (self.c * gamma(-self.y))
    }
}

impl VgParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("sigma", self.sigma),
            ("nu", self.nu),
            ("theta", self.theta),
        ] {
            finite(n, v)?;
        }
        if self.sigma <= 0.0 || self.nu <= 0.0 {
            bail!(InvalidModel, "VG needs sigma > 0 and nu > 0");
        }
        Ok(())
    }

    fn exponent(&self, u: C64) -> C64 {
        let z = -I * u * (self.theta * self.nu) + u * u * (0.5 * self.sigma * self.sigma * self.nu);
        -ln1p(z) / self.nu
    }
}

impl LevyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Bs { .. } => ModelKind::Bs,
            Self::Nig(_) => ModelKind::Nig,
            Self::Cgmy(_) => ModelKind::Cgmy,
            Self::Vg(_) => ModelKind::Vg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bs { sigma } => {
                finite("sigma", *sigma)?;
                if *sigma < 0.0 {
                    bail!(InvalidModel, "BS needs sigma >= 0");
                }
                Ok(())
            }
            Self::Nig(p) => p.validate(),
            Self::Cgmy(p) => p.validate(),
            Self::Vg(p) => p.validate(),
        }
    }

    /// Open interval of `Im(u)` on which `Ψ(u)` is analytic. The real line is
    /// always admissible.
    pub fn im_strip(&self) -> (f64, f64) {
        match self {
            Self::Bs { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Nig(p) => (p.beta - p.alpha, p.beta + p.alpha),
            Self::Cgmy(p) => (-p.m, p.g),
            Self::Vg(p) => {
                let a = 0.5 * p.sigma * p.sigma * p.nu;
                let b = p.theta * p.nu;
                let disc = (b * b + 4.0 * a).sqrt();
                ((b - disc) / (2.0 * a), (b + disc) / (2.0 * a))
            }
        }
    }

    pub fn in_strip(&self, u: C64) -> bool {
        if u.im == 0.0 {
            return u.re.is_finite();
        }
        let (lo, hi) = self.im_strip();
        u.im > lo && u.im < hi && u.re.is_finite()
    }

    /// `Ψ(u)` with parameter and strip checks.
    pub fn char_exponent(&self, u: C64) -> Result<C64> {
        self.validate()?;
        if !self.in_strip(u) {
            let (lo, hi) = self.im_strip();
            bail!(
                Domain,
                "Im(u) = {} outside ({lo}, {hi}) for {}",
                u.im,
                self.kind()
            );
        }
        Ok(self.exponent_unchecked(u))
    }

    /// `Ψ(u)` for a model already known to be valid and `u` already known to
    /// lie in the strip.
    pub fn exponent_unchecked(&self, u: C64) -> C64 {
        if u == C64::new(0.0, 0.0) {
            return u;
        }
        match self {
            Self::Bs { sigma } => -u * u * (0.5 * sigma * sigma),
            Self::Nig(p) => p.exponent(u),
            Self::Cgmy(p) => p.exponent(u),
            Self::Vg(p) => p.exponent(u),
        }
    }

    /// `Λ = Ψ(-iκ)`, the compensator of `exp(κ L)`.
    pub fn compensator(&self, kappa: f64) -> Result<f64> {
        self.validate()?;
        if !kappa.is_finite() {
            bail!(InvalidInput, "kappa must be finite");
        }
        if kappa == 0.0 {
            return Ok(0.0);
        }
        let u = C64::new(0.0, -kappa);
        if !self.in_strip(u) {
            bail!(
                MomentExplosion,
                "E[exp({kappa} L(1))] is infinite for {}",
                self.kind()
            );
        }
        Ok(self.exponent_unchecked(u).re)
    }
}

/// `Ψ(u)` for `model`.
pub fn char_exponent(model: &LevyModel, u: C64) -> Result<C64> {
    model.char_exponent(u)
}

/// `|Ψ_CGMY(u) - Ψ_VG(u)|` for real `u`.
pub fn vg_limit_check(cgmy: &CgmyParams, vg: &VgParams, u: f64) -> Result<f64> {
    let a = LevyModel::Cgmy(*cgmy).char_exponent(C64::new(u, 0.0))?;
    let b = LevyModel::Vg(*vg).char_exponent(C64::new(u, 0.0))?;
    Ok((a - b).norm())
}

/// Compensator `Λ = Ψ(-iκ)`.
pub fn jump_compensator(model: &LevyModel, kappa: f64) -> Result<f64> {
    model.compensator(kappa)
}

/// Market data for one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketLeg {
    pub label: String,
    pub spot: f64,
    /// Continuous dividend yield per year.
    pub div_yield: f64,
    /// Diffusion volatility per sqrt(year).
    pub sigma: f64,
    /// Loading of the common jump driver.
    pub kappa: f64,
}

impl MarketLeg {
    pub fn new(
        label: impl Into<String>,
        spot: f64,
        div_yield: f64,
        sigma: f64,
        kappa: f64,
    ) -> Result<Self> {
        let leg = Self {
            label: label.into(),
            spot,
            div_yield,
            sigma,
            kappa,
        };
        leg.validate()?;
        Ok(leg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot.is_finite() && self.spot > 0.0) {
            bail!(InvalidInput, "spot must be positive, got {}", self.spot);
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            bail!(
                InvalidInput,
                "sigma must be nonnegative, got {}",
                self.sigma
            );
        }
        if !(self.div_yield.is_finite() && self.kappa.is_finite()) {
            bail!(InvalidInput, "dividend yield and kappa must be finite");
        }
        Ok(())
    }
}

/// Risk-neutral law of `ln S(T)` for one leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskNeutralSetup {
    pub model: LevyModel,
    pub leg: MarketLeg,
    pub shadow_rate: f64,
    pub maturity: f64,
    compensator: f64,
}

impl RiskNeutralSetup {
    pub fn new(model: LevyModel, leg: MarketLeg, shadow_rate: f64, maturity: f64) -> Result<Self> {
        model.validate()?;
        leg.validate()?;
        if !(maturity.is_finite() && maturity > 0.0) {
            bail!(InvalidInput, "maturity must be positive, got {maturity}");
        }
        if !shadow_rate.is_finite() {
            bail!(InvalidInput, "shadow rate must be finite");
        }
        let compensator = model.compensator(leg.kappa)?;
        Ok(Self {
            model,
            leg,
            shadow_rate,
            maturity,
            compensator,
        })
    }

    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    /// `e^{-r̄T}`.
    pub fn discount(&self) -> f64 {
        (-self.shadow_rate * self.maturity).exp()
    }

    /// `S₀ e^{(r̄-δ)T}`.
    pub fn forward(&self) -> f64 {
        self.leg.spot * ((self.shadow_rate - self.leg.div_yield) * self.maturity).exp()
    }

    /// Per-year drift of `ln S` under the risk-neutral measure.
    pub fn log_drift(&self) -> f64 {
        self.shadow_rate
            - self.leg.div_yield
            - 0.5 * self.leg.sigma * self.leg.sigma
            - self.compensator
    }

    pub fn in_strip(&self, u: C64) -> bool {
        self.model.in_strip(u * self.leg.kappa)
    }

    /// Exponent of the characteristic function of `ln S(T) - ln S(0)`.
    pub fn increment_exponent(&self, u: C64) -> C64 {
        let t = self.maturity;
        let s2 = self.leg.sigma * self.leg.sigma;
        I * u * (self.log_drift() * t) - u * u * (0.5 * s2 * t)
            + self.model.exponent_unchecked(u * self.leg.kappa) * t
    }

    /// `E^Q[exp(iu ln S(T))]`.
    pub fn cf(&self, u: C64) -> Result<C64> {
        if !self.in_strip(u) {
            bail!(Domain, "u = {u} leaves the strip of the scaled driver");
        }
        Ok((I * u * self.leg.spot.ln() + self.increment_exponent(u)).exp())
    }
}

/// `φ(u) = E^Q[exp(iu ln S(T))]`.
pub fn rn_log_price_cf(setup: &RiskNeutralSetup, u: C64) -> Result<C64> {
    setup.cf(u)
}

/// Joint characteristic function of `(ln S(T), ln Z(T))` for two legs driven by
/// the same Lévy process and Brownian motions with correlation `rho`.
pub fn joint_cf(
    s: &RiskNeutralSetup,
    z: &RiskNeutralSetup,
    rho: f64,
    u1: C64,
    u2: C64,
) -> Result<C64> {
    if s.model != z.model || s.shadow_rate != z.shadow_rate || s.maturity != z.maturity {
        bail!(
            InvalidInput,
            "legs must share driver, shadow rate and maturity"
        );
    }
    if !(rho.abs() <= 1.0) {
        bail!(InvalidInput, "correlation must lie in [-1, 1], got {rho}");
    }
    let combined = u1 * s.leg.kappa + u2 * z.leg.kappa;
    if !s.model.in_strip(combined) {
        bail!(Domain, "combined frequency {combined} leaves the strip");
    }
    let t = s.maturity;
    let (ss, sz) = (s.leg.sigma, z.leg.sigma);
    let drift = I * (u1 * s.log_drift() + u2 * z.log_drift());
    let quad = (u1 * u1 * (ss * ss) + u1 * u2 * (2.0 * rho * ss * sz) + u2 * u2 * (sz * sz)) * 0.5;
    let jump = s.model.exponent_unchecked(combined);
    let level = I * (u1 * s.leg.spot.ln() + u2 * z.leg.spot.ln());
    Ok((level + (drift - quad + jump) * t).exp())
}

/// Cumulants of a law from its log-characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
}

/// Default step for first and second cumulants.
pub const CUMULANT_STEP: f64 = 1e-4;
/// Step for the fourth cumulant; a fourth difference at `1e-4` drowns in round-off.
pub const FOURTH_CUMULANT_STEP: f64 = 1e-2;

/// Cumulants from central differences of `exponent` along the real axis.
pub fn fd_cumulants<F: Fn(f64) -> C64>(exponent: F, h: f64, h4: f64) -> Cumulants {
    let e0 = exponent(0.0);
    let (ep, em) = (exponent(h), exponent(-h));
    let c1 = ((ep - em) / (2.0 * h)).im;
    let c2 = -((ep - e0 * 2.0 + em) / (h * h)).re;
    let (fp1, fm1, fp2, fm2) = (
        exponent(h4),
        exponent(-h4),
        exponent(2.0 * h4),
        exponent(-2.0 * h4),
    );
    let c4 = ((fp2 - fp1 * 4.0 + e0 * 6.0 - fm1 * 4.0 + fm2) / h4.powi(4)).re;
    Cumulants { c1, c2, c4 }
}

impl LevyModel {
    /// Cumulants of `L(1)` by finite differences of `Ψ`.
    pub fn cumulants(&self) -> Cumulants {
        fd_cumulants(
            |u| self.exponent_unchecked(C64::new(u, 0.0)),
            CUMULANT_STEP,
            FOURTH_CUMULANT_STEP,
        )
    }
}

impl RiskNeutralSetup {
    /// Cumulants of `ln S(T)`.
    pub fn cumulants(&self) -> Cumulants {
        let x0 = self.leg.spot.ln();
        let mut c = fd_cumulants(
            |u| self.increment_exponent(C64::new(u, 0.0)),
            CUMULANT_STEP,
            FOURTH_CUMULANT_STEP,
        );
        c.c1 += x0;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn table_nig() -> LevyModel {
        LevyModel::Nig(NigParams {
            alpha: 8.214,
            beta: -1.235,
            delta: 0.184,
            mu: 0.0,
        })
    }

    pub(crate) fn table_cgmy() -> CgmyParams {
        CgmyParams {
            c: 1.128,
            g: 12.347,
            m: 14.562,
            y: 0.312,
        }
    }

    #[test]
    fn exponent_vanishes_at_origin() {
        let models = [
            LevyModel::Bs { sigma: 0.1579 },
            table_nig(),
            LevyModel::Cgmy(table_cgmy()),
            LevyModel::Vg(VgParams {
                sigma: 0.2,
                nu: 0.3,
                theta: -0.1,
            }),
        ];
        for m in models {
            assert_eq!(
                m.char_exponent(C64::new(0.0, 0.0)).unwrap(),
                C64::new(0.0, 0.0)
            );
        }
    }

    #[test]
    fn symmetric_nig_is_real() {
        let p = NigParams {
            alpha: 3.0,
            beta: 0.0,
            delta: 0.5,
            mu: 0.0,
        };
        for u in [0.3, 1.0, 7.5] {
            let v = LevyModel::Nig(p).char_exponent(C64::new(u, 0.0)).unwrap();
            assert_eq!(v.im, 0.0);
            assert_relative_eq!(
                v.re,
                0.5 * (3.0 - (9.0 + u * u as f64).sqrt()),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn cgmy_rejects_poles() {
        let mut p = table_cgmy();
        p.y = 0.0;
        let err = LevyModel::Cgmy(p).validate().unwrap_err();
        assert!(alloc::format!("{err}").contains("VG"));
        p.y = 1.0;
        assert!(LevyModel::Cgmy(p).validate().is_err());
    }

    #[test]
    fn compensator_boundaries() {
        let m = LevyModel::Cgmy(table_cgmy());
        assert_eq!(m.compensator(0.0).unwrap(), 0.0);
        assert!(matches!(
            m.compensator(14.562),
            Err(Error::MomentExplosion(_))
        ));
        assert!(matches!(
            m.compensator(-12.347),
            Err(Error::MomentExplosion(_))
        ));
        let nig = table_nig();
        assert!(matches!(
            nig.compensator(9.45),
            Err(Error::MomentExplosion(_))
        ));
        let vg = LevyModel::Vg(VgParams {
            sigma: 0.2,
            nu: 0.5,
            theta: -0.1,
        });
        // 1 - θνκ - σ²νκ²/2 is 0.16 at κ = 12 and -0.04 at κ = 13
        assert!(vg.compensator(12.0).is_ok());
        assert!(vg.compensator(13.0).is_err());
    }

    #[test]
    fn strip_violation_is_domain_error() {
        let m = table_nig();
        assert!(matches!(
            m.char_exponent(C64::new(1.0, -10.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn nig_cumulants_match_moments() {
        if let LevyModel::Nig(p) = table_nig() {
            let c = table_nig().cumulants();
            assert_relative_eq!(c.c1, p.mean(), max_relative = 1e-6);
            assert_relative_eq!(c.c2, p.variance(), max_relative = 1e-6);
        }
    }

    #[test]
    fn model_json_schema() {
        let s = serde_json::to_string(&LevyModel::Cgmy(table_cgmy())).unwrap();
        assert_eq!(
            s,
            r#"{"model":"CGMY","C":1.128,"G":12.347,"M":14.562,"Y":0.312}"#
        );
        let back: LevyModel =
            serde_json::from_str(r#"{"model":"NIG","alpha":8.214,"beta":-1.235,"delta":0.184}"#)
                .unwrap();
        assert_eq!(back, table_nig());
        let bs: LevyModel = serde_json::from_str(r#"{"model":"BS","sigma":0.1579}"#).unwrap();
        assert_eq!(bs, LevyModel::Bs { sigma: 0.1579 });
    }
}
