//! Endogenous shadow riskless rate implied by two risky assets.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::math::stats::{mean, sample_std, TRADING_DAYS};

/// Physical-measure description of the two legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoAssetSpec {
    pub mu_s: f64,
    pub mu_z: f64,
    pub sigma_s: f64,
    pub sigma_z: f64,
    pub kappa_s: f64,
    pub kappa_z: f64,
    /// Large-jump intensity proxy per year.
    pub lambda: f64,
    /// Diffusion correlation; the rate formula itself does not use it.
    pub rho: f64,
}

impl TwoAssetSpec {
    /// Exchanges the roles of `S` and `Z`.
    pub fn swap(&self) -> Self {
        Self {
            mu_s: self.mu_z,
            mu_z: self.mu_s,
            sigma_s: self.sigma_z,
            sigma_z: self.sigma_s,
            kappa_s: self.kappa_z,
            kappa_z: self.kappa_s,
            ..*self
        }
    }
}

/// Shadow rate split into its diffusion part and the jump-risk wedge.
/// `r_bar == diffusion + jump_wedge` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowDecomposition {
    pub r_bar: f64,
    pub diffusion: f64,
    pub jump_wedge: f64,
}

/// Smallest `|σ_Z - σ_S|` accepted by default.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-8;

pub fn shadow_rate(spec: &TwoAssetSpec) -> Result<ShadowDecomposition> {
    shadow_rate_with_floor(spec, DEFAULT_SIGMA_FLOOR)
}

pub fn shadow_rate_with_floor(spec: &TwoAssetSpec, floor: f64) -> Result<ShadowDecomposition> {
    if spec.lambda < 0.0 {
        bail!(
            InvalidInput,
            "jump intensity must be nonnegative, got {}",
            spec.lambda
        );
    }
    if !(spec.rho.abs() <= 1.0) {
        bail!(
            InvalidInput,
            "correlation must lie in [-1, 1], got {}",
            spec.rho
        );
    }
    let gap = spec.sigma_z - spec.sigma_s;
    if !(gap.abs() >= floor) {
        bail!(
            DegenerateSpec,
            "|sigma_Z - sigma_S| = {:e} below floor {floor:e}",
            gap.abs()
        );
    }
    let diffusion = (spec.mu_s * spec.sigma_z - spec.mu_z * spec.sigma_s) / gap;
    let jump_wedge = spec.lambda * (spec.kappa_z - spec.kappa_s) / gap;
    Ok(ShadowDecomposition {
        r_bar: diffusion + jump_wedge,
        diffusion,
        jump_wedge,
    })
}

/// Settings for the rolling estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    /// Number of daily log-returns per window.
    pub window: usize,
    /// A return is a jump when `|r| > threshold * daily σ` on either leg;
    /// `None` disables jump detection.
    pub jump_threshold: Option<f64>,
    pub sigma_floor: f64,
    /// Diffusion correlation recorded on each window's spec.
    pub rho: f64,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window: 60,
            jump_threshold: Some(3.0),
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointFlag {
    Ok,
    Degenerate,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowRatePoint<D> {
    pub date: D,
    /// Annualised rolling estimates that produced the point.
    pub window_stats: TwoAssetSpec,
    /// `None` when the window was degenerate.
    pub decomposition: Option<ShadowDecomposition>,
    pub flag: PointFlag,
}

/// Annualised rolling estimates over one window of paired log-returns.
pub fn window_estimates(rs: &[f64], rz: &[f64], config: &RollingConfig) -> TwoAssetSpec {
    let ann = TRADING_DAYS.sqrt();
    let (sd_s, sd_z) = (sample_std(rs), sample_std(rz));
    let (mut jumps, mut sum_s, mut sum_z) = (0usize, 0.0, 0.0);
    if let Some(k) = config.jump_threshold {
        for (a, b) in rs.iter().zip(rz) {
            if a.abs() > k * sd_s || b.abs() > k * sd_z {
                jumps += 1;
                sum_s += a;
                sum_z += b;
            }
        }
    }
    let (kappa_s, kappa_z) = if jumps > 0 {
        (sum_s / jumps as f64, sum_z / jumps as f64)
    } else {
        (0.0, 0.0)
    };
    TwoAssetSpec {
        mu_s: mean(rs) * TRADING_DAYS,
        mu_z: mean(rz) * TRADING_DAYS,
        sigma_s: sd_s * ann,
        sigma_z: sd_z * ann,
        kappa_s,
        kappa_z,
        lambda: jumps as f64 * TRADING_DAYS / rs.len() as f64,
        rho: config.rho,
    }
}

/// One shadow-rate point per date after the first `window` returns.
pub fn rolling_shadow_series<D: Clone>(
    dates: &[D],
    prices_s: &[f64],
    prices_z: &[f64],
    config: &RollingConfig,
) -> Result<Vec<ShadowRatePoint<D>>> {
    if dates.len() != prices_s.len() || dates.len() != prices_z.len() {
        bail!(
            MisalignedSeries,
            "{} dates, {} S prices, {} Z prices",
            dates.len(),
            prices_s.len(),
            prices_z.len()
        );
    }
    if config.window < 2 {
        bail!(Config, "window must be at least 2 returns");
    }
    if dates.len() < config.window + 1 {
        bail!(
            InsufficientData,
            "{} observations for a {}-day window",
            dates.len(),
            config.window
        );
    }
    if let Some(p) = prices_s
        .iter()
        .chain(prices_z)
        .find(|p| !(p.is_finite() && **p > 0.0))
    {
        bail!(InvalidInput, "prices must be positive, got {p}");
    }
    let rs = crate::math::stats::log_returns(prices_s);
    let rz = crate::math::stats::log_returns(prices_z);
    let w = config.window;
    Ok((w..dates.len())
        .map(|end| {
            let stats = window_estimates(&rs[end - w..end], &rz[end - w..end], config);
            let decomposition = shadow_rate_with_floor(&stats, config.sigma_floor).ok();
            ShadowRatePoint {
                date: dates[end].clone(),
                window_stats: stats,
                flag: if decomposition.is_some() {
                    PointFlag::Ok
                } else {
                    PointFlag::Degenerate
                },
                decomposition,
            }
        })
        .collect())
}

/// `r̄ - r_B` on the dates present in both series (degenerate points skipped).
pub fn benchmark_gap<D: Ord + Clone>(
    series: &[ShadowRatePoint<D>],
    benchmark: &[(D, f64)],
) -> Result<Vec<(D, f64)>> {
    let bench: BTreeMap<&D, f64> = benchmark.iter().map(|(d, y)| (d, *y)).collect();
    let gaps: Vec<(D, f64)> = series
        .iter()
        .filter_map(|p| {
            let r = p.decomposition?.r_bar;
            bench.get(&p.date).map(|y| (p.date.clone(), r - y))
        })
        .collect();
    if gaps.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(gaps)
}
