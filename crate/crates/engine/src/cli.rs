//! `shadow` command line.
//!
//! Exit codes: 0 success, 1 domain or input error (a JSON object with
//! `error` and `message` on stderr), 2 usage error, 3 calibration stopped
//! without meeting its tolerance (the result file is still written).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use shadow_core::calibration::{
    calibrate, legs_from_history, CalibrationSettings, LegTerms, PairHistory, RateUpdate, RmseNormalizer,
};
use shadow_core::closed_form::{solve_y_star, BasketCall, ConstantCoefficients, FdSteps};
use shadow_core::fourier::{
    carr_madan_prices, cos_prices, p1_p2_price, CosConfig, FftConfig, OptionKind, P1P2Settings,
};
use shadow_core::lattice::{
    price_on_lattice, Discounting, LatticeOptions, LatticeSpec, MoveSchedule, Payoff, StepMoves,
};
use shadow_core::levy::{LevyModel, MarketLeg, ModelKind, RiskNeutralSetup};
use shadow_core::shadow::{benchmark_gap, rolling_shadow_series, RollingConfig, DEFAULT_SIGMA_FLOOR};

use crate::data_io::{self, BoundTerms, ResidualRow};
use crate::error::{EngineError, Result};
use crate::fft::RustFft;
use crate::mc::{mc_price, simulate_terminal, SimSpec};

#[derive(Debug, Parser)]
#[command(
    name = "shadow",
    version,
    about = "Option pricing and calibration with an endogenous shadow riskless rate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price European calls or puts on one asset.
    Price(PriceArgs),
    /// Fit a jump model and the shadow rate to an option chain.
    Calibrate(CalibrateArgs),
    /// Rolling shadow-rate series from a paired price history.
    ShadowRate(ShadowRateArgs),
    /// Two-asset jump-binomial lattice.
    Tree(TreeArgs),
    /// Simulate terminal prices of both assets.
    Simulate(SimulateArgs),
    /// Check the basket closed form against its pricing equation on a grid.
    VerifyPde(VerifyPdeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Bs,
    Nig,
    Cgmy,
    Vg,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Bs => ModelKind::Bs,
            ModelArg::Nig => ModelKind::Nig,
            ModelArg::Cgmy => ModelKind::Cgmy,
            ModelArg::Vg => ModelKind::Vg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Fft,
    Cos,
    P1p2,
    Mc,
    Tree,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Call,
    Put,
}

impl From<KindArg> for OptionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Call => OptionKind::Call,
            KindArg::Put => OptionKind::Put,
        }
    }
}

#[derive(Debug, Args)]
struct ModelSource {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// JSON parameters, e.g. {"model": "NIG", "alpha": 8.2, "beta": -1.2, "delta": 0.18}.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Volatility for `--model bs` when no parameter file is given.
    #[arg(long)]
    sigma: Option<f64>,
}

impl ModelSource {
    fn load(&self) -> Result<LevyModel> {
        let kind = ModelKind::from(self.model);
        let model = match (&self.params, self.sigma, kind) {
            (Some(p), _, _) => data_io::read_json::<LevyModel>(p)?,
            (None, Some(sigma), ModelKind::Bs) => LevyModel::Bs { sigma },
            _ => return Err(invalid(format!("--model {kind} needs --params"))),
        };
        if model.kind() != kind {
            return Err(invalid(format!(
                "--model {kind} but the parameter file holds a {} model",
                model.kind()
            )));
        }
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Args)]
struct PriceArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long)]
    spot: f64,
    /// One or more strikes, comma separated or repeated.
    #[arg(long, required = true, value_delimiter = ',')]
    strike: Vec<f64>,
    #[arg(long)]
    maturity: f64,
    /// Shadow rate r̄.
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 0.0)]
    div: f64,
    /// Diffusion volatility of the asset on top of the jump driver.
    #[arg(long, default_value_t = 0.0)]
    leg_sigma: f64,
    /// Loading on the jump driver.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Call)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Cos)]
    method: MethodArg,
    #[arg(long, default_value_t = CosConfig::default().n_terms)]
    n_terms: usize,
    /// COS truncation half-width in cumulant units.
    #[arg(long, default_value_t = CosConfig::default().width)]
    cos_width: f64,
    #[arg(long, default_value_t = FftConfig::default().n_points)]
    fft_points: usize,
    #[arg(long, default_value_t = FftConfig::default().eta)]
    fft_eta: f64,
    #[arg(long, default_value_t = FftConfig::default().alpha)]
    fft_alpha: f64,
    /// Carr–Madan grid output, `log_strike,strike,price`.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    antithetic: bool,
    #[arg(long, default_value_t = 1000)]
    tree_steps: usize,
    /// Volatility of the second lattice asset; defaults to half the first.
    #[arg(long)]
    tree_sigma_z: Option<f64>,
    #[arg(long, default_value = "price.json")]
    out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct PricedStrike {
    strike: f64,
    price: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    std_error: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PriceOutput {
    model: LevyModel,
    method: MethodArg,
    kind: OptionKind,
    spot: f64,
    maturity: f64,
    rate: f64,
    prices: Vec<PricedStrike>,
}

fn invalid(msg: String) -> EngineError {
    shadow_core::Error::InvalidInput(msg).into()
}

fn run_price(a: &PriceArgs) -> Result<()> {
    let model = a.source.load()?;
    let kind = OptionKind::from(a.kind);
    let leg = MarketLeg::new("S", a.spot, a.div, a.leg_sigma, a.kappa)?;
    let setup = RiskNeutralSetup::new(model, leg.clone(), a.rate, a.maturity)?;
    // put from call by parity
    let to_kind = |k: f64, call: f64| match kind {
        OptionKind::Call => call,
        OptionKind::Put => call - setup.forward() * setup.discount() + k * setup.discount(),
    };
    let plain = |prices: Vec<f64>| -> Vec<PricedStrike> {
        a.strike
            .iter()
            .zip(prices)
            .map(|(&strike, price)| PricedStrike {
                strike,
                price,
                std_error: None,
            })
            .collect()
    };
    let prices = match a.method {
        MethodArg::Cos => {
            let cfg = CosConfig {
                n_terms: a.n_terms,
                width: a.cos_width,
            };
            plain(cos_prices(&setup, kind, &a.strike, &cfg)?)
        }
        MethodArg::Fft => {
            let cfg = FftConfig {
                alpha: a.fft_alpha,
                n_points: a.fft_points,
                eta: a.fft_eta,
            };
            let lo = a.strike.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = a.strike.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let grid = carr_madan_prices(&setup, &cfg, lo, hi, &RustFft::new())?;
            if let Some(p) = &a.grid_out {
                data_io::write_price_grid_csv(p, &grid)?;
            }
            plain(
                a.strike
                    .iter()
                    .map(|&k| Ok(to_kind(k, grid.interpolate(k)?)))
                    .collect::<shadow_core::Result<_>>()?,
            )
        }
        MethodArg::P1p2 => plain(
            a.strike
                .iter()
                .map(|&k| Ok(to_kind(k, p1_p2_price(&setup, k, &P1P2Settings::default())?.call)))
                .collect::<shadow_core::Result<_>>()?,
        ),
        MethodArg::Mc => {
            let spec = SimSpec {
                model,
                leg_s: leg.clone(),
                leg_z: MarketLeg { label: "Z".into(), ..leg },
                rate: a.rate,
                maturity: a.maturity,
                n_paths: a.paths,
                n_steps: a.steps,
                seed: a.seed,
                rho: 1.0,
                antithetic: a.antithetic,
            };
            a.strike
                .iter()
                .map(|&k| {
                    let est = mc_price(&spec, |s, _| match kind {
                        OptionKind::Call => (s - k).max(0.0),
                        OptionKind::Put => (k - s).max(0.0),
                    })?;
                    Ok(PricedStrike {
                        strike: k,
                        price: est.price,
                        std_error: Some(est.std_error),
                    })
                })
                .collect::<Result<_>>()?
        }
        MethodArg::Tree => {
            let LevyModel::Bs { sigma } = model else {
                return Err(invalid("the lattice prices diffusion moves only; use --model bs".into()));
            };
            if a.div != 0.0 {
                return Err(invalid("the lattice has no dividend yield; use --div 0".into()));
            }
            let sigma_s = (a.leg_sigma.powi(2) + (a.kappa * sigma).powi(2)).sqrt();
            let sigma_z = a.tree_sigma_z.unwrap_or(0.5 * sigma_s);
            let moves = StepMoves::diffusion(sigma_s, sigma_z, a.rate, a.maturity / a.tree_steps as f64)?;
            plain(
                a.strike
                    .iter()
                    .map(|&strike| {
                        let payoff = match kind {
                            OptionKind::Call => Payoff::Call { eta: 1.0, strike },
                            OptionKind::Put => Payoff::Put { eta: 1.0, strike },
                        };
                        let spec = LatticeSpec {
                            n_steps: a.tree_steps,
                            moves: MoveSchedule::Constant(moves),
                            s0: a.spot,
                            z0: a.spot,
                            payoff: |s: f64, z: f64| payoff.eval(s, z),
                        };
                        Ok(price_on_lattice(&spec, &LatticeOptions::default())?.price)
                    })
                    .collect::<shadow_core::Result<_>>()?,
            )
        }
    };
    for p in &prices {
        match p.std_error {
            Some(se) => println!("{}\t{}\t{}", p.strike, p.price, se),
            None => println!("{}\t{}", p.strike, p.price),
        }
    }
    data_io::write_json(
        &a.out,
        &PriceOutput {
            model,
            method: a.method,
            kind,
            spot: a.spot,
            maturity: a.maturity,
            rate: a.rate,
            prices,
        },
    )
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizerArg {
    MeanMid,
    PerQuote,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Quotes, `strike,maturity_years,kind,mid`.
    #[arg(long)]
    chain: PathBuf,
    /// Paired closes, `date,price_s,price_z`.
    #[arg(long)]
    pair: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Starting shadow rate.
    #[arg(long, default_value_t = 0.02)]
    seed_rate: f64,
    /// Spot of the optioned asset; defaults to the last `price_s`.
    #[arg(long)]
    spot: Option<f64>,
    #[arg(long)]
    as_of: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    div_s: f64,
    #[arg(long, default_value_t = 0.0)]
    div_z: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa_s: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa_z: f64,
    #[arg(long, default_value_t = CalibrationSettings::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = CalibrationSettings::default().max_outer)]
    max_outer: usize,
    #[arg(long, default_value_t = CalibrationSettings::default().n_starts)]
    n_starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the capped secant rate update instead of the direct one.
    #[arg(long)]
    secant_step: Option<f64>,
    /// Jump intensity for the jump term of the rate update.
    #[arg(long)]
    jump_wedge: Option<f64>,
    /// CGMY only: fit with Y held here first, then release it.
    #[arg(long)]
    cgmy_two_step: Option<f64>,
    #[arg(long, default_value_t = CosConfig::default().n_terms)]
    n_terms: usize,
    #[arg(long, value_enum, default_value_t = NormalizerArg::MeanMid)]
    normalizer: NormalizerArg,
    #[arg(long, default_value = "calibration.json")]
    out: PathBuf,
    /// Ingestion reports for the chain and the history.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct IngestReports<'a> {
    chain: &'a data_io::IngestReport,
    pair: &'a data_io::IngestReport,
}

fn run_calibrate(a: &CalibrateArgs) -> Result<()> {
    let (pair, pair_report) = data_io::load_pair_history(&a.pair)?;
    let spot = match (a.spot, pair.s.last()) {
        (Some(s), _) => s,
        (None, Some(&s)) => s,
        (None, None) => return Err(shadow_core::Error::InsufficientData("empty pair history".into()).into()),
    };
    let (chain, chain_report) = data_io::load_option_chain(
        &a.chain,
        spot,
        a.as_of.clone(),
        BoundTerms {
            rate: a.seed_rate,
            div_yield: a.div_s,
        },
    )?;
    if let Some(p) = &a.report_out {
        data_io::write_json(
            p,
            &IngestReports {
                chain: &chain_report,
                pair: &pair_report,
            },
        )?;
    }
    for v in chain_report.violations.iter().chain(&pair_report.violations) {
        eprintln!("warning: line {}: {}: {}", v.row, v.rule, v.detail);
    }
    let history = PairHistory {
        s: pair.s,
        z: pair.z,
    };
    let terms = LegTerms {
        div_s: a.div_s,
        div_z: a.div_z,
        kappa_s: a.kappa_s,
        kappa_z: a.kappa_z,
    };
    let (leg_s, leg_z) = legs_from_history(spot, &history, &terms)?;
    let mut settings = CalibrationSettings {
        epsilon: a.epsilon,
        max_outer: a.max_outer,
        n_starts: a.n_starts,
        seed: a.seed,
        jump_wedge: a.jump_wedge,
        cgmy_two_step: a.cgmy_two_step,
        normalizer: match a.normalizer {
            NormalizerArg::MeanMid => RmseNormalizer::MeanMid,
            NormalizerArg::PerQuote => RmseNormalizer::PerQuote,
        },
        ..Default::default()
    };
    settings.pricing.cos.n_terms = a.n_terms;
    if let Some(max_step) = a.secant_step {
        settings.rate_update = RateUpdate::Secant { max_step };
    }
    let result = calibrate(&chain, &leg_s, &leg_z, a.model.into(), a.seed_rate, &settings)?;
    data_io::write_json(&a.out, &result)?;
    println!("model\t{}", result.model);
    println!("r_bar\t{}", result.r_bar_star);
    println!("rmse\t{}", result.rmse);
    println!("relative_rmse\t{}", result.relative_rmse);
    println!("iterations\t{}", result.iterations);
    println!("converged\t{}", result.converged);
    if !result.converged {
        return Err(EngineError::NonConvergence {
            iterations: result.iterations,
            last_step: result.final_step,
        });
    }
    Ok(())
}

#[derive(Debug, Args)]
struct ShadowRateArgs {
    #[arg(long)]
    pair: PathBuf,
    /// Returns per rolling window.
    #[arg(long, default_value_t = RollingConfig::default().window)]
    window: usize,
    /// Jump threshold in daily standard deviations.
    #[arg(long, default_value_t = 3.0)]
    jump_threshold: f64,
    /// Treat every return as diffusive.
    #[arg(long)]
    no_jumps: bool,
    #[arg(long, default_value_t = DEFAULT_SIGMA_FLOOR)]
    sigma_floor: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Benchmark yields, `date,yield`.
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long, default_value = "shadow_rate.csv")]
    out: PathBuf,
    /// `date,gap` against the benchmark.
    #[arg(long, default_value = "shadow_gap.csv")]
    gap_out: PathBuf,
}

fn run_shadow_rate(a: &ShadowRateArgs) -> Result<()> {
    let (pair, report) = data_io::load_pair_history(&a.pair)?;
    for v in &report.violations {
        eprintln!("warning: line {}: {}: {}", v.row, v.rule, v.detail);
    }
    let cfg = RollingConfig {
        window: a.window,
        jump_threshold: (!a.no_jumps).then_some(a.jump_threshold),
        sigma_floor: a.sigma_floor,
        rho: a.rho,
    };
    let series = rolling_shadow_series(&pair.dates, &pair.s, &pair.z, &cfg)?;
    data_io::write_shadow_series_csv(&a.out, &series)?;
    let ok = series.iter().filter(|p| p.decomposition.is_some()).count();
    println!("points\t{}", series.len());
    println!("degenerate\t{}", series.len() - ok);
    if let Some(last) = series.iter().rev().find_map(|p| p.decomposition.map(|d| (p.date, d))) {
        println!("last\t{}\t{}", last.0, last.1.r_bar);
    }
    if let Some(b) = &a.benchmark {
        let (bench, report) = data_io::load_benchmark(b)?;
        for v in &report.violations {
            eprintln!("warning: line {}: {}: {}", v.row, v.rule, v.detail);
        }
        let gaps = benchmark_gap(&series, &bench)?;
        let mean = gaps.iter().map(|g| g.1).sum::<f64>() / gaps.len() as f64;
        println!("mean_gap\t{mean}");
        data_io::write_gap_csv(&a.gap_out, &gaps)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PayoffArg {
    Call,
    Put,
    Exchange,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DiscountingArg {
    Growth,
    Raw,
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[arg(long)]
    s0: f64,
    #[arg(long)]
    z0: f64,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    maturity: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Diffusion volatilities used to build the moves when `--moves` is absent.
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long)]
    sigma_z: Option<f64>,
    /// JSON moves: one object `{"u","d","u_t","d_t"}` for every step, or a list with one per step.
    #[arg(long)]
    moves: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PayoffArg::Call)]
    payoff: PayoffArg,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long, value_enum, default_value_t = DiscountingArg::Growth)]
    discounting: DiscountingArg,
    #[arg(long, default_value_t = LatticeOptions::default().max_bushy_depth)]
    max_bushy_depth: usize,
    /// Node table, `step,node,s,z,value`.
    #[arg(long)]
    nodes_out: Option<PathBuf>,
    #[arg(long, default_value = "tree.json")]
    out: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MovesFile {
    Constant(StepMoves),
    PerStep(Vec<StepMoves>),
}

fn run_tree(a: &TreeArgs) -> Result<()> {
    let (moves, n_steps) = match (&a.moves, a.sigma_s, a.sigma_z) {
        (Some(p), _, _) => match data_io::read_json::<MovesFile>(p)? {
            MovesFile::Constant(m) => (MoveSchedule::Constant(m), a.steps),
            MovesFile::PerStep(v) => {
                let n = v.len();
                (MoveSchedule::PerStep(v), n)
            }
        },
        (None, Some(s), Some(z)) => (
            MoveSchedule::Constant(StepMoves::diffusion(s, z, a.rate, a.maturity / a.steps as f64)?),
            a.steps,
        ),
        _ => return Err(invalid("give --moves or both --sigma-s and --sigma-z".into())),
    };
    let payoff = match (a.payoff, a.strike) {
        (PayoffArg::Exchange, _) => Payoff::Exchange,
        (PayoffArg::Call, Some(strike)) => Payoff::Call { eta: a.eta, strike },
        (PayoffArg::Put, Some(strike)) => Payoff::Put { eta: a.eta, strike },
        _ => return Err(invalid("--strike is required for call and put payoffs".into())),
    };
    let spec = LatticeSpec {
        n_steps,
        moves,
        s0: a.s0,
        z0: a.z0,
        payoff: |s: f64, z: f64| payoff.eval(s, z),
    };
    let opts = LatticeOptions {
        discounting: match a.discounting {
            DiscountingArg::Growth => Discounting::Growth,
            DiscountingArg::Raw => Discounting::Raw,
        },
        max_bushy_depth: a.max_bushy_depth,
        record_nodes: a.nodes_out.is_some(),
    };
    let mut result = price_on_lattice(&spec, &opts)?;
    if let (Some(p), Some(nodes)) = (&a.nodes_out, result.nodes.take()) {
        data_io::write_nodes_csv(p, &nodes)?;
    }
    for w in &result.warnings {
        eprintln!("warning: step {}: q = {} outside (0, 1)", w.step, w.q);
    }
    println!("price\t{}", result.price);
    println!("arbitrage_warnings\t{}", result.warnings.len());
    data_io::write_json(&a.out, &result)
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long)]
    s0: f64,
    #[arg(long)]
    z0: f64,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    maturity: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_s: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_z: f64,
    #[arg(long, default_value_t = 0.0)]
    div_s: f64,
    #[arg(long, default_value_t = 0.0)]
    div_z: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa_s: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa_z: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    antithetic: bool,
    /// Samples, `s_t,z_t`.
    #[arg(long, default_value = "samples.csv")]
    out: PathBuf,
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let spec = SimSpec {
        model: a.source.load()?,
        leg_s: MarketLeg::new("S", a.s0, a.div_s, a.sigma_s, a.kappa_s)?,
        leg_z: MarketLeg::new("Z", a.z0, a.div_z, a.sigma_z, a.kappa_z)?,
        rate: a.rate,
        maturity: a.maturity,
        n_paths: a.paths,
        n_steps: a.steps,
        seed: a.seed,
        rho: a.rho,
        antithetic: a.antithetic,
    };
    let samples = simulate_terminal(&spec)?;
    data_io::write_samples_csv(&a.out, &samples.s, &samples.z)?;
    let n = samples.s.len() as f64;
    let grow = |leg: &MarketLeg| leg.spot * ((a.rate - leg.div_yield) * a.maturity).exp();
    println!("mean_s_t\t{}\tforward\t{}", samples.s.iter().sum::<f64>() / n, grow(&spec.leg_s));
    println!("mean_z_t\t{}\tforward\t{}", samples.z.iter().sum::<f64>() / n, grow(&spec.leg_z));
    Ok(())
}

#[derive(Debug, Args)]
struct VerifyPdeArgs {
    #[arg(long, default_value_t = 0.02)]
    rate: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma_s: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma_z: f64,
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 100.0)]
    strike: f64,
    #[arg(long, value_delimiter = ',', default_value = "80,90,100,110,120")]
    s: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "70,85,100,115,130")]
    z: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.4,0.7")]
    t: Vec<f64>,
    /// Relative spot step; the time step is a tenth of it, in years.
    #[arg(long, default_value_t = FdSteps::default().rel)]
    h: f64,
    #[arg(long, default_value = "pde_residuals.csv")]
    out: PathBuf,
}

fn run_verify_pde(a: &VerifyPdeArgs) -> Result<()> {
    let cc = ConstantCoefficients {
        rate: a.rate,
        sigma_s: a.sigma_s,
        sigma_z: a.sigma_z,
        maturity: a.maturity,
    };
    let opt = BasketCall {
        eta: a.eta,
        strike: a.strike,
    };
    let mut rows = Vec::with_capacity(a.s.len() * a.z.len() * a.t.len());
    for &t in &a.t {
        for &s in &a.s {
            for &z in &a.z {
                let inp = cc.inputs(&opt, t, s, z)?;
                let y = solve_y_star(&inp)?;
                let residual = shadow_core::closed_form::pde_residual(&cc, &opt, t, s, z, &FdSteps::scaled(a.h))?;
                rows.push(ResidualRow {
                    s,
                    z,
                    t,
                    y_star: y,
                    root_residual: inp.root_residual(y).abs(),
                    residual,
                });
            }
        }
    }
    data_io::write_residual_table_csv(&a.out, &rows)?;
    let max = |f: fn(&ResidualRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    println!("points\t{}", rows.len());
    println!("max_residual\t{}", max(|r| r.residual));
    println!("max_root_residual\t{}", max(|r| r.root_residual));
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Price(a) => run_price(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::ShadowRate(a) => run_shadow_rate(a),
        Command::Tree(a) => run_tree(a),
        Command::Simulate(a) => run_simulate(a),
        Command::VerifyPde(a) => run_verify_pde(a),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{msg}");
            match e {
                EngineError::NonConvergence { .. } => 3,
                _ => 1,
            }
        }
    }
}
