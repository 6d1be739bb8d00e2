//! Fitting jump-driver parameters to an option chain while iterating the
//! shadow rate to a fixed point.
//!
//! Each outer step fits `Θ` by minimising the price RMSE at the current
//! rate `r̄ₖ`, forms the risk-neutral drifts of both legs and updates
//! `r̄ₖ₊₁ = (μ_S σ_Z − μ_Z σ_S) / (σ_Z − σ_S)` until the step is below `ε`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::fourier::{cos_prices, CosConfig, OptionKind};
use crate::levy::{jump_compensator, CgmyParams, LevyModel, MarketLeg, ModelKind, NigParams, RiskNeutralSetup, VgParams};
use crate::math::optimize::{nelder_mead, NelderMeadSettings};
use crate::math::stats::{log_returns, sample_std, TRADING_DAYS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    pub maturity: f64,
    pub kind: OptionKind,
    pub mid: f64,
    /// Weight in the objective; quotes failing static bounds get 0.
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl OptionQuote {
    pub fn new(strike: f64, maturity: f64, kind: OptionKind, mid: f64) -> Self {
        Self {
            strike,
            maturity,
            kind,
            mid,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionChain {
    #[serde(default)]
    pub as_of: Option<String>,
    pub spot: f64,
    pub quotes: Vec<OptionQuote>,
}

impl OptionChain {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            bail!(InvalidInput, "spot must be positive, got {}", self.spot);
        }
        if self.quotes.is_empty() {
            bail!(InvalidInput, "option chain has no quotes");
        }
        for (i, q) in self.quotes.iter().enumerate() {
            if !(q.strike > 0.0 && q.maturity > 0.0 && q.mid >= 0.0 && q.weight >= 0.0)
                || !(q.strike.is_finite() && q.maturity.is_finite() && q.mid.is_finite() && q.weight.is_finite())
            {
                bail!(InvalidInput, "quote {i} is malformed: {q:?}");
            }
        }
        if !self.quotes.iter().any(|q| q.weight > 0.0) {
            bail!(InvalidInput, "every quote has zero weight");
        }
        Ok(())
    }

    pub fn mean_mid(&self) -> f64 {
        let (sw, s) = self
            .quotes
            .iter()
            .fold((0.0, 0.0), |(sw, s), q| (sw + q.weight, s + q.weight * q.mid));
        s / sw
    }
}

/// Annualised volatility from daily log returns, sample divisor.
pub fn historical_vol(log_returns: &[f64]) -> Result<f64> {
    if log_returns.len() < 2 {
        bail!(InsufficientData, "need at least 2 returns, got {}", log_returns.len());
    }
    Ok(sample_std(log_returns) * TRADING_DAYS.sqrt())
}

/// `r̄ − δ + ½σ² + Λ(κ)`.
pub fn risk_neutral_drift(r_bar: f64, leg: &MarketLeg, model: &LevyModel) -> Result<f64> {
    let lam = if leg.kappa == 0.0 {
        0.0
    } else {
        jump_compensator(model, leg.kappa)?
    };
    Ok(r_bar - leg.div_yield + 0.5 * leg.sigma * leg.sigma + lam)
}

/// `(μ_S σ_Z − μ_Z σ_S) / (σ_Z − σ_S)`.
pub fn update_shadow_rate(mu_s: f64, mu_z: f64, sigma_s: f64, sigma_z: f64) -> Result<f64> {
    let gap = sigma_z - sigma_s;
    if gap == 0.0 || gap.abs() < 1e-12 * sigma_s.abs().max(sigma_z.abs()) {
        bail!(DegenerateSpec, "σ_S = σ_Z = {sigma_s}: the shadow-rate update is singular");
    }
    Ok((mu_s * sigma_z - mu_z * sigma_s) / gap)
}

/// How model prices are produced for the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    pub cos: CosConfig,
    /// Price with the leg's own Brownian part in addition to the jump
    /// driver. Off by default: the driver alone generates the smile.
    pub include_leg_diffusion: bool,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            cos: CosConfig::default(),
            include_leg_diffusion: false,
        }
    }
}

fn pricing_leg(leg: &MarketLeg, cfg: &PricingConfig) -> MarketLeg {
    MarketLeg {
        sigma: if cfg.include_leg_diffusion { leg.sigma } else { 0.0 },
        ..leg.clone()
    }
}

/// Model prices for every quote, one COS batch per (maturity, kind).
pub fn model_prices(
    theta: &LevyModel,
    r_bar: f64,
    leg: &MarketLeg,
    chain: &OptionChain,
    cfg: &PricingConfig,
) -> Result<Vec<f64>> {
    let leg = pricing_leg(leg, cfg);
    let mut out = vec![0.0; chain.quotes.len()];
    let mut done = vec![false; chain.quotes.len()];
    for i in 0..chain.quotes.len() {
        if done[i] {
            continue;
        }
        let (t, kind) = (chain.quotes[i].maturity, chain.quotes[i].kind);
        let members: Vec<usize> = (i..chain.quotes.len())
            .filter(|&j| chain.quotes[j].maturity == t && chain.quotes[j].kind == kind)
            .collect();
        let strikes: Vec<f64> = members.iter().map(|&j| chain.quotes[j].strike).collect();
        let setup = RiskNeutralSetup::new(theta.clone(), leg.clone(), r_bar, t)?;
        let prices = cos_prices(&setup, kind, &strikes, &cfg.cos)?;
        for (&j, p) in members.iter().zip(prices) {
            out[j] = p;
            done[j] = true;
        }
    }
    Ok(out)
}

/// Weighted root-mean-square price error; pricing failures give `+∞`.
pub fn rmse_objective(theta: &LevyModel, r_bar: f64, leg: &MarketLeg, chain: &OptionChain, cfg: &PricingConfig) -> f64 {
    match model_prices(theta, r_bar, leg, chain, cfg) {
        Ok(prices) => weighted_rmse(&prices, chain),
        Err(_) => f64::INFINITY,
    }
}

fn weighted_rmse(prices: &[f64], chain: &OptionChain) -> f64 {
    let (sw, se) = prices.iter().zip(&chain.quotes).fold((0.0, 0.0), |(sw, se), (p, q)| {
        let e = p - q.mid;
        (sw + q.weight, se + q.weight * e * e)
    });
    let v = (se / sw).sqrt();
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseNormalizer {
    /// RMSE divided by the weighted mean market mid.
    #[default]
    MeanMid,
    /// Root mean square of per-quote relative errors.
    PerQuote,
}

/// Relative RMSE of `theta` on `chain`.
pub fn relative_rmse(
    theta: &LevyModel,
    r_bar: f64,
    leg: &MarketLeg,
    chain: &OptionChain,
    cfg: &PricingConfig,
    normalizer: RmseNormalizer,
) -> Result<f64> {
    let prices = model_prices(theta, r_bar, leg, chain, cfg)?;
    Ok(relative_from_prices(&prices, chain, normalizer))
}

fn relative_from_prices(prices: &[f64], chain: &OptionChain, normalizer: RmseNormalizer) -> f64 {
    match normalizer {
        RmseNormalizer::MeanMid => weighted_rmse(prices, chain) / chain.mean_mid(),
        RmseNormalizer::PerQuote => {
            let (sw, se) = prices.iter().zip(&chain.quotes).fold((0.0, 0.0), |(sw, se), (p, q)| {
                if q.mid > 0.0 {
                    let e = (p - q.mid) / q.mid;
                    (sw + q.weight, se + q.weight * e * e)
                } else {
                    (sw, se)
                }
            });
            (se / sw).sqrt()
        }
    }
}

/// Unconstrained coordinates for each family.
///
/// BS `[ln σ]`; NIG `[ln α, atanh(β/α), ln δ]` with `μ = 0`;
/// CGMY `[ln C, ln G, ln M, logit(Y/2)]`; VG `[ln σ, ln ν, θ]`.
pub fn to_unconstrained(model: &LevyModel) -> Vec<f64> {
    match model {
        LevyModel::Bs { sigma } => vec![sigma.ln()],
        LevyModel::Nig(p) => vec![p.alpha.ln(), (p.beta / p.alpha).atanh(), p.delta.ln()],
        LevyModel::Cgmy(p) => {
            let h = p.y / 2.0;
            vec![p.c.ln(), p.g.ln(), p.m.ln(), (h / (1.0 - h)).ln()]
        }
        LevyModel::Vg(p) => vec![p.sigma.ln(), p.nu.ln(), p.theta],
    }
}

pub fn from_unconstrained(kind: ModelKind, x: &[f64]) -> LevyModel {
    match kind {
        ModelKind::Bs => LevyModel::Bs { sigma: x[0].exp() },
        ModelKind::Nig => {
            let alpha = x[0].exp();
            LevyModel::Nig(NigParams {
                alpha,
                beta: alpha * x[1].tanh(),
                delta: x[2].exp(),
                mu: 0.0,
            })
        }
        ModelKind::Cgmy => LevyModel::Cgmy(CgmyParams {
            c: x[0].exp(),
            g: x[1].exp(),
            m: x[2].exp(),
            y: 2.0 / (1.0 + (-x[3]).exp()),
        }),
        ModelKind::Vg => LevyModel::Vg(VgParams {
            sigma: x[0].exp(),
            nu: x[1].exp(),
            theta: x[2],
        }),
    }
}

/// Starting point used by the first multi-start candidate.
pub fn default_guess(kind: ModelKind) -> LevyModel {
    match kind {
        ModelKind::Bs => LevyModel::Bs { sigma: 0.2 },
        ModelKind::Nig => LevyModel::Nig(NigParams {
            alpha: 10.0,
            beta: -2.0,
            delta: 0.2,
            mu: 0.0,
        }),
        ModelKind::Cgmy => LevyModel::Cgmy(CgmyParams {
            c: 1.0,
            g: 10.0,
            m: 10.0,
            y: 0.5,
        }),
        ModelKind::Vg => LevyModel::Vg(VgParams {
            sigma: 0.2,
            nu: 0.2,
            theta: -0.1,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    /// Stopping tolerance on `|r̄ₖ₊₁ − r̄ₖ|`.
    pub epsilon: f64,
    pub max_outer: usize,
    /// Multi-start count for the first inner fit; later fits warm-start
    /// from the previous optimum.
    pub n_starts: usize,
    pub seed: u64,
    /// Spread of random starts around the default guess, in unconstrained units.
    pub start_spread: f64,
    pub optimizer: NmSettings,
    pub pricing: PricingConfig,
    pub normalizer: RmseNormalizer,
    /// Jump intensity `λ` for adding `λ(κ_Z − κ_S)/(σ_Z − σ_S)` to the update.
    pub jump_wedge: Option<f64>,
    /// CGMY only: fit `(C, G, M)` with `Y` held at this value, then release `Y`.
    pub cgmy_two_step: Option<f64>,
    pub rate_update: RateUpdate,
}

/// How the next rate is chosen from the update `u(r̄ₖ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateUpdate {
    /// `r̄ₖ₊₁ = u(r̄ₖ)`.
    #[default]
    Direct,
    /// Secant iteration on `u(r̄) − r̄ = 0`, each move capped at `max_step`.
    /// Converges where the direct map is repelling.
    Secant { max_step: f64 },
}

/// Serializable mirror of the optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmSettings {
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NmSettings {
    fn default() -> Self {
        let d = NelderMeadSettings::default();
        Self {
            max_evals: d.max_evals,
            f_tol: d.f_tol,
            x_tol: d.x_tol,
            initial_step: d.initial_step,
        }
    }
}

impl From<NmSettings> for NelderMeadSettings {
    fn from(s: NmSettings) -> Self {
        Self {
            max_evals: s.max_evals,
            f_tol: s.f_tol,
            x_tol: s.x_tol,
            initial_step: s.initial_step,
        }
    }
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_outer: 50,
            n_starts: 5,
            seed: 0,
            start_spread: 0.5,
            optimizer: NmSettings::default(),
            pricing: PricingConfig::default(),
            normalizer: RmseNormalizer::MeanMid,
            jump_wedge: None,
            cgmy_two_step: None,
            rate_update: RateUpdate::Direct,
        }
    }
}

impl CalibrationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.max_outer == 0 || self.n_starts == 0 {
            bail!(Config, "need ε > 0, max_outer ≥ 1 and n_starts ≥ 1: {self:?}");
        }
        if let RateUpdate::Secant { max_step } = self.rate_update {
            if !(max_step > 0.0) {
                bail!(Config, "secant step cap must be positive, got {max_step}");
            }
        }
        self.pricing.cos.validate()
    }
}

/// Price histories of the two legs, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairHistory {
    pub s: Vec<f64>,
    pub z: Vec<f64>,
}

/// Dividend yields and jump loadings of the two legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegTerms {
    pub div_s: f64,
    pub div_z: f64,
    pub kappa_s: f64,
    pub kappa_z: f64,
}

impl Default for LegTerms {
    fn default() -> Self {
        Self {
            div_s: 0.0,
            div_z: 0.0,
            kappa_s: 1.0,
            kappa_z: 1.0,
        }
    }
}

/// Both legs with volatilities estimated from `history`.
pub fn legs_from_history(spot: f64, history: &PairHistory, terms: &LegTerms) -> Result<(MarketLeg, MarketLeg)> {
    if history.s.len() != history.z.len() {
        bail!(
            MisalignedSeries,
            "pair history lengths differ: {} vs {}",
            history.s.len(),
            history.z.len()
        );
    }
    if history.s.iter().chain(&history.z).any(|p| !(*p > 0.0 && p.is_finite())) {
        bail!(InvalidInput, "pair history must hold positive finite prices");
    }
    let sigma_s = historical_vol(&log_returns(&history.s))?;
    let sigma_z = historical_vol(&log_returns(&history.z))?;
    let z_spot = *history.z.last().unwrap();
    Ok((
        MarketLeg::new("S", spot, terms.div_s, sigma_s, terms.kappa_s)?,
        MarketLeg::new("Z", z_spot, terms.div_z, sigma_z, terms.kappa_z)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub r_bar: f64,
    pub rmse: f64,
    pub theta: LevyModel,
    pub mu_s: f64,
    pub mu_z: f64,
    pub r_bar_next: f64,
    /// Best objective after each optimizer iteration of this inner fit.
    pub inner_best: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: ModelKind,
    pub theta_star: LevyModel,
    /// Rate at which `theta_star` was fitted.
    pub r_bar_star: f64,
    pub rmse: f64,
    pub relative_rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_step: f64,
    pub sigma_s: f64,
    pub sigma_z: f64,
    pub trace: Vec<TraceEntry>,
}

struct InnerFit {
    theta: LevyModel,
    rmse: f64,
    best_trace: Vec<f64>,
}

fn minimise(
    kind: ModelKind,
    x0: &[f64],
    objective: &dyn Fn(&LevyModel) -> f64,
    nm: &NelderMeadSettings,
    fixed_tail: Option<f64>,
) -> InnerFit {
    let full = |x: &[f64]| -> Vec<f64> {
        let mut v = x.to_vec();
        if let Some(t) = fixed_tail {
            v.push(t);
        }
        v
    };
    let res = nelder_mead(
        |x| {
            let m = from_unconstrained(kind, &full(x));
            if m.validate().is_err() {
                return f64::INFINITY;
            }
            objective(&m)
        },
        x0,
        nm,
    );
    InnerFit {
        theta: from_unconstrained(kind, &full(&res.x)),
        rmse: res.fx,
        best_trace: res.best_trace,
    }
}

fn fit_from(
    kind: ModelKind,
    x0: Vec<f64>,
    objective: &dyn Fn(&LevyModel) -> f64,
    settings: &CalibrationSettings,
) -> InnerFit {
    let nm: NelderMeadSettings = settings.optimizer.into();
    match (kind, settings.cgmy_two_step) {
        (ModelKind::Cgmy, Some(y)) => {
            let h = y / 2.0;
            let tail = (h / (1.0 - h)).ln();
            let first = minimise(kind, &x0[..3], objective, &nm, Some(tail));
            let mut x1 = to_unconstrained(&first.theta);
            x1[3] = tail;
            let mut second = minimise(kind, &x1, objective, &nm, None);
            let mut trace = first.best_trace;
            trace.append(&mut second.best_trace);
            if first.rmse < second.rmse {
                InnerFit {
                    theta: first.theta,
                    rmse: first.rmse,
                    best_trace: trace,
                }
            } else {
                second.best_trace = trace;
                second
            }
        }
        _ => minimise(kind, &x0, objective, &nm, None),
    }
}

fn inner_fit(
    kind: ModelKind,
    starts: &[Vec<f64>],
    objective: &dyn Fn(&LevyModel) -> f64,
    settings: &CalibrationSettings,
) -> Result<InnerFit> {
    let mut best: Option<InnerFit> = None;
    let mut trace: Vec<f64> = Vec::new();
    for x0 in starts {
        let fit = fit_from(kind, x0.clone(), objective, settings);
        // best-so-far across starts stays nonincreasing
        let floor = best.as_ref().map_or(f64::INFINITY, |b| b.rmse);
        trace.extend(fit.best_trace.iter().map(|v| v.min(floor)));
        if fit.rmse < floor {
            best = Some(fit);
        }
    }
    match best {
        Some(mut b) if b.rmse.is_finite() => {
            b.best_trace = trace;
            Ok(b)
        }
        _ => bail!(Consistency, "no start produced a finite objective for {kind}"),
    }
}

fn random_starts(kind: ModelKind, settings: &CalibrationSettings) -> Vec<Vec<f64>> {
    let base = to_unconstrained(&default_guess(kind));
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut starts = vec![base.clone()];
    for _ in 1..settings.n_starts {
        starts.push(
            base.iter()
                .map(|b| b + settings.start_spread * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
        );
    }
    starts
}

/// Shadow-rate fixed-point calibration.
///
/// A run that hits `max_outer` is returned with `converged = false`.
pub fn calibrate(
    chain: &OptionChain,
    leg_s: &MarketLeg,
    leg_z: &MarketLeg,
    kind: ModelKind,
    r_seed: f64,
    settings: &CalibrationSettings,
) -> Result<CalibrationResult> {
    chain.validate()?;
    leg_s.validate()?;
    leg_z.validate()?;
    settings.validate()?;
    if !r_seed.is_finite() {
        bail!(InvalidInput, "seed rate must be finite");
    }
    if (leg_s.spot - chain.spot).abs() > 1e-12 * chain.spot {
        bail!(InvalidInput, "S leg spot {} differs from chain spot {}", leg_s.spot, chain.spot);
    }
    let gap = leg_z.sigma - leg_s.sigma;
    if gap.abs() < 1e-12 {
        bail!(DegenerateSpec, "σ_S = σ_Z: the shadow-rate update is singular");
    }

    let mut r_bar = r_seed;
    let fresh = random_starts(kind, settings);
    let mut starts = fresh.clone();
    let mut trace = Vec::new();
    // (fit, rate it was fitted at, step it proposed)
    let mut last: Option<(InnerFit, f64, f64)> = None;
    let mut previous: Option<(f64, f64)> = None;
    loop {
        let objective = |m: &LevyModel| rmse_objective(m, r_bar, leg_s, chain, &settings.pricing);
        let attempt = inner_fit(kind, &starts, &objective, settings)
            .or_else(|e| if last.is_some() { inner_fit(kind, &fresh, &objective, settings) } else { Err(e) });
        let mut fit = match attempt {
            Ok(f) => f,
            // no candidate prices at the proposed rate: stop with the last good fit
            Err(_) if last.is_some() => break,
            Err(e) => return Err(e),
        };
        let mu_s = risk_neutral_drift(r_bar, leg_s, &fit.theta)?;
        let mu_z = risk_neutral_drift(r_bar, leg_z, &fit.theta)?;
        let mut next = update_shadow_rate(mu_s, mu_z, leg_s.sigma, leg_z.sigma)?;
        if let Some(lambda) = settings.jump_wedge {
            next += lambda * (leg_z.kappa - leg_s.kappa) / gap;
        }
        if !next.is_finite() {
            bail!(NonFinite, "shadow-rate update produced {next}");
        }
        let step = next - r_bar;
        trace.push(TraceEntry {
            r_bar,
            rmse: fit.rmse,
            theta: fit.theta.clone(),
            mu_s,
            mu_z,
            r_bar_next: next,
            inner_best: core::mem::take(&mut fit.best_trace),
        });
        starts = vec![to_unconstrained(&fit.theta)];
        last = Some((fit, r_bar, step));
        if step.abs() < settings.epsilon || trace.len() >= settings.max_outer {
            break;
        }
        let proposal = match settings.rate_update {
            RateUpdate::Direct => next,
            RateUpdate::Secant { max_step } => {
                let mv = match previous {
                    Some((r0, h0)) if step != h0 => -step * (r_bar - r0) / (step - h0),
                    _ => step,
                };
                r_bar + mv.clamp(-max_step, max_step)
            }
        };
        previous = Some((r_bar, step));
        r_bar = proposal;
    }

    let (fit, r_bar, step) = last.expect("first iteration either fits or returns");
    let prices = model_prices(&fit.theta, r_bar, leg_s, chain, &settings.pricing)?;
    Ok(CalibrationResult {
        model: kind,
        theta_star: fit.theta,
        r_bar_star: r_bar,
        rmse: weighted_rmse(&prices, chain),
        relative_rmse: relative_from_prices(&prices, chain, settings.normalizer),
        iterations: trace.len(),
        converged: step.abs() < settings.epsilon,
        final_step: step,
        sigma_s: leg_s.sigma,
        sigma_z: leg_z.sigma,
        trace,
    })
}
