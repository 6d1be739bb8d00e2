//! Monte Carlo simulation of the two-asset market with a shared jump driver.
//!
//! NIG increments are drawn as Brownian motion subordinated by an inverse
//! Gaussian clock, VG increments by a gamma clock. Both are exact per step,
//! as is the diffusion, so `n_steps = 1` is enough for European payoffs.
//!
//! Paths are split into fixed blocks of [`BLOCK`]; block `b` draws from
//! ChaCha8 stream `b` of the seed. Results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shadow_core::levy::{LevyModel, MarketLeg};
use shadow_core::{Error, Result};

/// Paths per random stream.
pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// NIG or VG.
    pub model: LevyModel,
    pub leg_s: MarketLeg,
    pub leg_z: MarketLeg,
    pub rate: f64,
    pub maturity: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Correlation of the two diffusions.
    #[serde(default = "unit_rho")]
    pub rho: f64,
    /// Pair each path with its mirror (all normals negated); `n_paths` must be even.
    #[serde(default)]
    pub antithetic: bool,
}

fn unit_rho() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy)]
enum Clock {
    Nig { ig: InverseGaussian<f64>, mu_dt: f64, beta: f64 },
    Vg { gamma: Gamma<f64>, theta: f64, sigma: f64 },
}

impl Clock {
    /// One driver increment and its antithetic partner (normal negated).
    fn increment(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let (tau, base, scale) = match *self {
            Clock::Nig { ig, mu_dt, beta } => {
                let tau = ig.sample(rng);
                (tau, mu_dt + beta * tau, tau.sqrt())
            }
            Clock::Vg { gamma, theta, sigma } => {
                let tau = gamma.sample(rng);
                (tau, theta * tau, sigma * tau.sqrt())
            }
        };
        debug_assert!(tau >= 0.0);
        let n: f64 = rng.sample(StandardNormal);
        (base + scale * n, base - scale * n)
    }
}

struct Prepared {
    clock: Clock,
    drift_s: f64,
    drift_z: f64,
    vol_s: f64,
    vol_z: f64,
    rho_perp: f64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::InvalidInput(format!(
                "need n_paths >= 1 and n_steps >= 1, got {} and {}",
                self.n_paths, self.n_steps
            )));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::InvalidInput("antithetic sampling needs an even n_paths".into()));
        }
        if !matches!(self.model, LevyModel::Nig(_) | LevyModel::Vg(_)) {
            return Err(Error::InvalidModel(format!(
                "Monte Carlo supports NIG and VG drivers, got {}",
                self.model.kind()
            )));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::InvalidInput(format!("maturity must be positive, got {}", self.maturity)));
        }
        if !self.rate.is_finite() {
            return Err(Error::InvalidInput("rate must be finite".into()));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidInput(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        self.model.validate()?;
        self.leg_s.validate()?;
        self.leg_z.validate()
    }

    fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let dt = self.maturity / self.n_steps as f64;
        let bad = |e: rand_distr::GammaError| Error::InvalidModel(e.to_string());
        let clock = match self.model {
            LevyModel::Nig(p) => {
                let gamma = (p.alpha * p.alpha - p.beta * p.beta).sqrt();
                let ig = InverseGaussian::new(p.delta * dt / gamma, (p.delta * dt).powi(2))
                    .map_err(|e| Error::InvalidModel(e.to_string()))?;
                Clock::Nig {
                    ig,
                    mu_dt: p.mu * dt,
                    beta: p.beta,
                }
            }
            LevyModel::Vg(p) => Clock::Vg {
                gamma: Gamma::new(dt / p.nu, p.nu).map_err(bad)?,
                theta: p.theta,
                sigma: p.sigma,
            },
            _ => unreachable!("checked by validate"),
        };
        let drift = |leg: &MarketLeg| -> Result<f64> {
            let lam = self.model.compensator(leg.kappa)?;
            Ok((self.rate - leg.div_yield - 0.5 * leg.sigma * leg.sigma - lam) * dt)
        };
        Ok(Prepared {
            clock,
            drift_s: drift(&self.leg_s)?,
            drift_z: drift(&self.leg_z)?,
            vol_s: self.leg_s.sigma * dt.sqrt(),
            vol_z: self.leg_z.sigma * dt.sqrt(),
            rho_perp: (1.0 - self.rho * self.rho).max(0.0).sqrt(),
        })
    }

    fn block_rng(&self, block: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block as u64);
        rng
    }
}

/// Simulates the `count` paths of `block`, passing each terminal pair to `sink` in path order.
fn run_block(spec: &SimSpec, p: &Prepared, block: usize, count: usize, mut sink: impl FnMut(f64, f64)) {
    let mut rng = spec.block_rng(block);
    let (ks, kz) = (spec.leg_s.kappa, spec.leg_z.kappa);
    let (ls0, lz0) = (spec.leg_s.spot.ln(), spec.leg_z.spot.ln());
    if spec.antithetic {
        for _ in 0..count / 2 {
            let (mut a, mut b) = ((ls0, lz0), (ls0, lz0));
            for _ in 0..spec.n_steps {
                let (x, x_anti) = p.clock.increment(&mut rng);
                let w1: f64 = rng.sample(StandardNormal);
                let w2: f64 = rng.sample(StandardNormal);
                let wz = spec.rho * w1 + p.rho_perp * w2;
                a.0 += p.drift_s + p.vol_s * w1 + ks * x;
                a.1 += p.drift_z + p.vol_z * wz + kz * x;
                b.0 += p.drift_s - p.vol_s * w1 + ks * x_anti;
                b.1 += p.drift_z - p.vol_z * wz + kz * x_anti;
            }
            sink(a.0.exp(), a.1.exp());
            sink(b.0.exp(), b.1.exp());
        }
    } else {
        for _ in 0..count {
            let (mut ls, mut lz) = (ls0, lz0);
            for _ in 0..spec.n_steps {
                let (x, _) = p.clock.increment(&mut rng);
                let w1: f64 = rng.sample(StandardNormal);
                let w2: f64 = rng.sample(StandardNormal);
                ls += p.drift_s + p.vol_s * w1 + ks * x;
                lz += p.drift_z + p.vol_z * (spec.rho * w1 + p.rho_perp * w2) + kz * x;
            }
            sink(ls.exp(), lz.exp());
        }
    }
}

fn blocks(n_paths: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let n_blocks = n_paths.div_ceil(BLOCK);
    (0..n_blocks)
        .into_par_iter()
        .map(move |b| (b, BLOCK.min(n_paths - b * BLOCK)))
}

/// Terminal values `(S_T, Z_T)` per path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalSamples {
    pub s: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn simulate_terminal(spec: &SimSpec) -> Result<TerminalSamples> {
    let p = spec.prepare()?;
    let parts: Vec<Vec<(f64, f64)>> = blocks(spec.n_paths)
        .map(|(b, count)| {
            let mut out = Vec::with_capacity(count);
            run_block(spec, &p, b, count, |s, z| out.push((s, z)));
            out
        })
        .collect();
    let (s, z) = parts.into_iter().flatten().unzip();
    Ok(TerminalSamples { s, z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// `e^{-r̄T} mean(H(S_T, Z_T))` with its standard error. Antithetic pairs
/// are averaged before the error is estimated.
pub fn mc_price<H>(spec: &SimSpec, payoff: H) -> Result<McEstimate>
where
    H: Fn(f64, f64) -> f64 + Sync,
{
    let p = spec.prepare()?;
    let per_block: Vec<Moments> = blocks(spec.n_paths)
        .map(|(b, count)| {
            let mut m = Moments::default();
            let mut pending: Option<f64> = None;
            run_block(spec, &p, b, count, |s, z| {
                let h = payoff(s, z);
                if spec.antithetic {
                    match pending.take() {
                        Some(first) => m.push(0.5 * (first + h)),
                        None => pending = Some(h),
                    }
                } else {
                    m.push(h);
                }
            });
            m
        })
        .collect();
    let total = per_block.into_iter().fold(Moments::default(), Moments::merge);
    let disc = (-spec.rate * spec.maturity).exp();
    let var = if total.n > 1.0 { total.m2 / (total.n - 1.0) } else { 0.0 };
    let price = disc * total.mean;
    if !price.is_finite() {
        return Err(Error::NonFinite("Monte Carlo payoff mean is not finite".into()));
    }
    Ok(McEstimate {
        price,
        std_error: disc * (var / total.n).sqrt(),
        n_paths: spec.n_paths,
    })
}
