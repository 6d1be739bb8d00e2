//! Two-asset jump-binomial lattice with no traded bond.
//!
//! Each step moves `S` by `U` or `D` and `Z` by `Ũ` or `D̃` together. The
//! risk-neutral up-probability is the one that makes the two assets grow
//! at a common one-period rate, which plays the role of the riskless rate.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};

/// Default bound on the depth of a non-recombining tree.
pub const DEFAULT_MAX_BUSHY_DEPTH: usize = 25;

const DEGENERATE_TOL: f64 = 1e-14;

/// Fractional up/down moves of both assets over one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMoves {
    pub u: f64,
    pub d: f64,
    pub u_t: f64,
    pub d_t: f64,
}

impl StepMoves {
    pub fn new(u: f64, d: f64, u_t: f64, d_t: f64) -> Result<Self> {
        let m = Self { u, d, u_t, d_t };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.u, self.d, self.u_t, self.d_t];
        if all.iter().any(|x| !x.is_finite()) {
            bail!(InvalidInput, "step moves must be finite: {self:?}");
        }
        if !(self.u > self.d) {
            bail!(InvalidInput, "need U > D, got U = {}, D = {}", self.u, self.d);
        }
        if !(self.u_t > self.d_t) {
            bail!(InvalidInput, "need Ũ > D̃, got Ũ = {}, D̃ = {}", self.u_t, self.d_t);
        }
        if !(1.0 + self.d > 0.0 && 1.0 + self.d_t > 0.0) {
            bail!(InvalidInput, "down moves must keep prices positive: {self:?}");
        }
        Ok(())
    }

    /// `(D̃ − D) − (Ũ − U)`, the denominator of the up-probability.
    pub fn denominator(&self) -> f64 {
        (self.d_t - self.d) - (self.u_t - self.u)
    }

    /// One-period gross growth shared by both assets under `q`, `R / denominator`.
    pub fn growth(&self) -> Result<f64> {
        let den = self.denominator();
        if den.abs() < DEGENERATE_TOL {
            bail!(DegenerateStep, "(D̃−D) − (Ũ−U) vanishes for {self:?}");
        }
        Ok(shadow_growth_factor(self) / den)
    }

    /// Moves matched to two geometric Brownian legs driven by one Brownian
    /// motion with volatilities `sigma_s` and `sigma_z`.
    ///
    /// Both legs share a log-drift chosen so that the one-period growth is
    /// exactly `e^{rate·dt}`; the up-probability does not depend on it.
    pub fn diffusion(sigma_s: f64, sigma_z: f64, rate: f64, dt: f64) -> Result<Self> {
        if !(sigma_s > 0.0 && sigma_z > 0.0 && dt > 0.0 && rate.is_finite()) {
            bail!(
                InvalidInput,
                "diffusion moves need positive volatilities and step, got σ = {sigma_s}, σ̃ = {sigma_z}, dt = {dt}"
            );
        }
        if (sigma_s - sigma_z).abs() < 1e-12 * sigma_s.max(sigma_z) {
            bail!(DegenerateStep, "identical leg volatilities give R = 0 at every step");
        }
        let a = sigma_s * dt.sqrt();
        let b = sigma_z * dt.sqrt();
        let g0 = (a - b).sinh() / (a.sinh() - b.sinh());
        let c = rate * dt - g0.ln();
        Self::new((c + a).exp_m1(), (c - a).exp_m1(), (c + b).exp_m1(), (c - b).exp_m1())
    }
}

/// `R = (1+U)(1+D̃) − (1+Ũ)(1+D)`.
pub fn shadow_growth_factor(m: &StepMoves) -> f64 {
    (1.0 + m.u) * (1.0 + m.d_t) - (1.0 + m.u_t) * (1.0 + m.d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpProbability {
    pub q: f64,
    /// `q` lies strictly inside (0, 1).
    pub no_arbitrage: bool,
}

/// `q = (D̃ − D) / ((D̃ − D) − (Ũ − U))`.
pub fn risk_neutral_prob(m: &StepMoves) -> Result<UpProbability> {
    m.validate()?;
    let den = m.denominator();
    if den.abs() < DEGENERATE_TOL {
        bail!(DegenerateStep, "(D̃−D) − (Ũ−U) vanishes for {m:?}");
    }
    let q = (m.d_t - m.d) / den;
    Ok(UpProbability {
        q,
        no_arbitrage: q > 0.0 && q < 1.0,
    })
}

/// Errors of the one-step martingale checks under `q`, all relative:
/// `E_q[S']/(G S) − 1`, `E_q[Z']/(G Z) − 1`, and the drift of `Z/S` under
/// the measure that uses `S` as numeraire.
pub fn step_martingale_errors(m: &StepMoves) -> Result<[f64; 3]> {
    let q = risk_neutral_prob(m)?.q;
    let g = m.growth()?;
    let es = (q * (1.0 + m.u) + (1.0 - q) * (1.0 + m.d)) / g;
    let ez = (q * (1.0 + m.u_t) + (1.0 - q) * (1.0 + m.d_t)) / g;
    let q_s = q * (1.0 + m.u) / g;
    let ratio = q_s * (1.0 + m.u_t) / (1.0 + m.u) + (1.0 - q_s) * (1.0 + m.d_t) / (1.0 + m.d);
    Ok([es - 1.0, ez - 1.0, ratio - 1.0])
}

/// What the backward induction divides by at each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discounting {
    /// The common one-period growth `R / ((D̃−D) − (Ũ−U))`.
    #[default]
    Growth,
    /// `R` itself.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MoveSchedule {
    Constant(StepMoves),
    PerStep(Vec<StepMoves>),
}

impl MoveSchedule {
    fn at(&self, step: usize) -> &StepMoves {
        match self {
            MoveSchedule::Constant(m) => m,
            MoveSchedule::PerStep(v) => &v[step],
        }
    }
}

/// Terminal payoffs on the pair `(S, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "payoff", rename_all = "lowercase")]
pub enum Payoff {
    /// `(ηS + (1−η)Z − K)⁺`
    Call { eta: f64, strike: f64 },
    /// `(K − ηS − (1−η)Z)⁺`
    Put { eta: f64, strike: f64 },
    /// `(S − Z)⁺`
    Exchange,
}

impl Payoff {
    pub fn eval(&self, s: f64, z: f64) -> f64 {
        match *self {
            Payoff::Call { eta, strike } => (eta * s + (1.0 - eta) * z - strike).max(0.0),
            Payoff::Put { eta, strike } => (strike - eta * s - (1.0 - eta) * z).max(0.0),
            Payoff::Exchange => (s - z).max(0.0),
        }
    }
}

pub struct LatticeSpec<H> {
    pub n_steps: usize,
    pub moves: MoveSchedule,
    pub s0: f64,
    pub z0: f64,
    pub payoff: H,
}

impl<H: Fn(f64, f64) -> f64> LatticeSpec<H> {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            bail!(InvalidInput, "lattice needs at least one step");
        }
        if !(self.s0 > 0.0 && self.z0 > 0.0) {
            bail!(InvalidInput, "initial prices must be positive, got S = {}, Z = {}", self.s0, self.z0);
        }
        match &self.moves {
            MoveSchedule::Constant(m) => m.validate(),
            MoveSchedule::PerStep(v) => {
                if v.len() != self.n_steps {
                    bail!(
                        InvalidInput,
                        "{} per-step moves given for {} steps",
                        v.len(),
                        self.n_steps
                    );
                }
                v.iter().try_for_each(StepMoves::validate)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    pub discounting: Discounting,
    pub max_bushy_depth: usize,
    pub record_nodes: bool,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self {
            discounting: Discounting::Growth,
            max_bushy_depth: DEFAULT_MAX_BUSHY_DEPTH,
            record_nodes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub raw_growth: f64,
    pub growth: f64,
    pub q: f64,
    pub no_arbitrage: bool,
}

/// Non-fatal: `q` fell outside (0, 1) at `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageWarning {
    pub step: usize,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    pub step: usize,
    pub node: usize,
    pub s: f64,
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeResult {
    pub price: f64,
    pub steps: Vec<StepReport>,
    pub warnings: Vec<ArbitrageWarning>,
    /// Every node of the tree when requested, ordered by step then node.
    pub nodes: Option<Vec<NodeValue>>,
}

fn step_reports(moves: &MoveSchedule, n: usize, discounting: Discounting) -> Result<Vec<StepReport>> {
    let count = match moves {
        MoveSchedule::Constant(_) => 1,
        MoveSchedule::PerStep(_) => n,
    };
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let m = moves.at(k);
        let raw = shadow_growth_factor(m);
        if raw.abs() < DEGENERATE_TOL {
            return Err(Error::ZeroGrowthFactor(k));
        }
        let p = risk_neutral_prob(m)?;
        let growth = match discounting {
            Discounting::Growth => raw / m.denominator(),
            Discounting::Raw => raw,
        };
        out.push(StepReport {
            step: k,
            raw_growth: raw,
            growth,
            q: p.q,
            no_arbitrage: p.no_arbitrage,
        });
    }
    Ok(out)
}

/// Backward induction `C_k = [q C_up + (1−q) C_down] / G_k`.
///
/// Constant moves give a recombining tree; per-step moves give a full
/// binary tree limited to `opts.max_bushy_depth` steps.
pub fn price_on_lattice<H: Fn(f64, f64) -> f64>(spec: &LatticeSpec<H>, opts: &LatticeOptions) -> Result<LatticeResult> {
    spec.validate()?;
    let n = spec.n_steps;
    let mut reports = step_reports(&spec.moves, n, opts.discounting)?;

    let (price, nodes) = match &spec.moves {
        MoveSchedule::Constant(m) => recombining(spec, m, &reports[0], opts.record_nodes),
        MoveSchedule::PerStep(moves) => {
            if n > opts.max_bushy_depth {
                bail!(
                    Config,
                    "per-step moves need a non-recombining tree; {n} steps exceed the depth cap {}",
                    opts.max_bushy_depth
                );
            }
            bushy(spec, moves, &reports, opts.record_nodes)
        }
    };
    if let MoveSchedule::Constant(_) = spec.moves {
        let r = reports[0];
        reports = (0..n).map(|step| StepReport { step, ..r }).collect();
    }
    let warnings = reports
        .iter()
        .filter(|r| !r.no_arbitrage)
        .map(|r| ArbitrageWarning { step: r.step, q: r.q })
        .collect();
    if !price.is_finite() {
        bail!(NonFinite, "lattice value is not finite");
    }
    Ok(LatticeResult {
        price,
        steps: reports,
        warnings,
        nodes,
    })
}

fn recombining<H: Fn(f64, f64) -> f64>(
    spec: &LatticeSpec<H>,
    m: &StepMoves,
    report: &StepReport,
    record: bool,
) -> (f64, Option<Vec<NodeValue>>) {
    let n = spec.n_steps;
    let (lu, ld) = ((m.u).ln_1p(), (m.d).ln_1p());
    let (lut, ldt) = ((m.u_t).ln_1p(), (m.d_t).ln_1p());
    let (ls0, lz0) = (spec.s0.ln(), spec.z0.ln());
    let node_prices = |k: usize, j: usize| {
        let (up, down) = (j as f64, (k - j) as f64);
        ((ls0 + up * lu + down * ld).exp(), (lz0 + up * lut + down * ldt).exp())
    };
    let mut levels: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = (0..=n)
        .map(|j| {
            let (s, z) = node_prices(n, j);
            (spec.payoff)(s, z)
        })
        .collect();
    let (q, g) = (report.q, report.growth);
    for k in (0..n).rev() {
        if record {
            levels.push(values.clone());
        }
        for j in 0..=k {
            values[j] = (q * values[j + 1] + (1.0 - q) * values[j]) / g;
        }
        values.truncate(k + 1);
    }
    let price = values[0];
    let nodes = record.then(|| {
        levels.push(values);
        let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for (k, level) in levels.iter().rev().enumerate() {
            for (j, &value) in level.iter().enumerate() {
                let (s, z) = node_prices(k, j);
                out.push(NodeValue {
                    step: k,
                    node: j,
                    s,
                    z,
                    value,
                });
            }
        }
        out
    });
    (price, nodes)
}

// Node `i` at step `k` has children `2i` (down) and `2i + 1` (up).
fn bushy<H: Fn(f64, f64) -> f64>(
    spec: &LatticeSpec<H>,
    moves: &[StepMoves],
    reports: &[StepReport],
    record: bool,
) -> (f64, Option<Vec<NodeValue>>) {
    let n = spec.n_steps;
    let mut prices: Vec<Vec<(f64, f64)>> = vec![vec![(spec.s0, spec.z0)]];
    for m in moves {
        let prev = prices.last().unwrap();
        let next = prev
            .iter()
            .flat_map(|&(s, z)| [(s * (1.0 + m.d), z * (1.0 + m.d_t)), (s * (1.0 + m.u), z * (1.0 + m.u_t))])
            .collect();
        prices.push(next);
    }
    let mut values: Vec<f64> = prices[n].iter().map(|&(s, z)| (spec.payoff)(s, z)).collect();
    let mut levels: Vec<Vec<f64>> = Vec::new();
    for k in (0..n).rev() {
        if record {
            levels.push(values.clone());
        }
        let (q, g) = (reports[k].q, reports[k].growth);
        values = values.chunks_exact(2).map(|c| (q * c[1] + (1.0 - q) * c[0]) / g).collect();
    }
    let price = values[0];
    let nodes = record.then(|| {
        levels.push(values);
        levels
            .iter()
            .rev()
            .enumerate()
            .flat_map(|(k, level)| {
                let prices = &prices[k];
                level.iter().enumerate().map(move |(i, &value)| NodeValue {
                    step: k,
                    node: i,
                    s: prices[i].0,
                    z: prices[i].1,
                    value,
                })
            })
            .collect()
    });
    (price, nodes)
}
