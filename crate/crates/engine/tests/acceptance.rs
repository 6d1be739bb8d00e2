//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p shadow-engine --test acceptance`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shadow_core::calibration::*;
use shadow_core::closed_form::{
    pde_residual, residual_study, solve_y_star, BasketCall, ConstantCoefficients, FdSteps,
};
use shadow_core::fourier::*;
use shadow_core::lattice::*;
use shadow_core::levy::*;
use shadow_core::math::complex::C64;
use shadow_core::shadow::{shadow_rate, TwoAssetSpec};
use shadow_engine::fft::RustFft;
use shadow_engine::mc::{mc_price, SimSpec};

const S0: f64 = 100.0;
const RATE: f64 = 0.02;
const T: f64 = 0.4375;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ms(d: Duration) -> String {
    format!("{:.1} ms", d.as_secs_f64() * 1e3)
}

fn leg(spot: f64) -> MarketLeg {
    MarketLeg::new("S", spot, 0.0, 0.0, 1.0).unwrap()
}

fn setup(model: LevyModel) -> RiskNeutralSetup {
    RiskNeutralSetup::new(model, leg(S0), RATE, T).unwrap()
}

fn table_nig() -> LevyModel {
    LevyModel::Nig(NigParams {
        alpha: 8.214,
        beta: -1.235,
        delta: 0.184,
        mu: 0.0,
    })
}

fn table_cgmy() -> LevyModel {
    LevyModel::Cgmy(CgmyParams {
        c: 1.128,
        g: 12.347,
        m: 14.562,
        y: 0.312,
    })
}

fn strikes() -> Vec<f64> {
    (0..=40).map(|i| 80.0 + i as f64).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fft_calls(s: &RiskNeutralSetup, ks: &[f64]) -> Vec<f64> {
    let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().cloned().fold(0.0, f64::max);
    let grid = carr_madan_prices(s, &FftConfig::default(), lo, hi, &RustFft::new()).unwrap();
    ks.iter().map(|&k| grid.interpolate(k).unwrap()).collect()
}

fn bs_oracle() -> Outcome {
    let s = setup(LevyModel::Bs { sigma: 0.1579 });
    let ks = strikes();
    let exact: Vec<f64> = ks.iter().map(|&k| bs_call_analytic(S0, k, RATE, 0.0, 0.1579, T).unwrap()).collect();
    let t0 = Instant::now();
    let fft = fft_calls(&s, &ks);
    let t_fft = t0.elapsed();
    let t0 = Instant::now();
    let cos = cos_prices(&s, OptionKind::Call, &ks, &CosConfig::default()).unwrap();
    let t_cos = t0.elapsed();
    let (e_fft, e_cos) = (max_abs_diff(&fft, &exact) / S0, max_abs_diff(&cos, &exact) / S0);
    let fast = t_fft.as_secs_f64() < 1.0 && t_cos.as_secs_f64() < 1.0;
    outcome(
        e_fft <= 1e-4 && e_cos <= 1e-6 && fast,
        format!(
            "BS oracle: FFT {e_fft:.2e} <= 1e-4, COS {e_cos:.2e} <= 1e-6 per unit spot; grids in {} and {} (< 1 s)",
            ms(t_fft),
            ms(t_cos)
        ),
    )
}

fn random_model(rng: &mut ChaCha8Rng, kind: ModelKind) -> LevyModel {
    match kind {
        ModelKind::Bs => LevyModel::Bs {
            sigma: rng.random_range(0.02..0.8),
        },
        ModelKind::Nig => {
            let alpha = rng.random_range(3.0..30.0);
            LevyModel::Nig(NigParams {
                alpha,
                beta: alpha * rng.random_range(-0.6..0.6),
                delta: rng.random_range(0.05..1.0),
                mu: rng.random_range(-0.2..0.2),
            })
        }
        ModelKind::Cgmy => {
            let y = loop {
                let y: f64 = rng.random_range(0.05..1.8);
                if (y - 1.0).abs() > 1e-3 {
                    break y;
                }
            };
            LevyModel::Cgmy(CgmyParams {
                c: rng.random_range(0.1..3.0),
                g: rng.random_range(3.0..20.0),
                m: rng.random_range(3.0..20.0),
                y,
            })
        }
        ModelKind::Vg => LevyModel::Vg(VgParams {
            sigma: rng.random_range(0.05..0.4),
            nu: rng.random_range(0.05..0.6),
            theta: rng.random_range(-0.3..0.3),
        }),
    }
}

fn martingale_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for kind in [ModelKind::Bs, ModelKind::Nig, ModelKind::Cgmy, ModelKind::Vg] {
        let mut done = 0;
        while done < 100 {
            let model = random_model(&mut rng, kind);
            let l = MarketLeg::new(
                "S",
                rng.random_range(10.0..500.0),
                rng.random_range(0.0..0.06),
                rng.random_range(0.0..0.4),
                rng.random_range(0.2..1.5),
            )
            .unwrap();
            let Ok(s) = RiskNeutralSetup::new(model, l, rng.random_range(-0.02..0.1), rng.random_range(0.05..3.0))
            else {
                continue; // moment condition fails for this loading
            };
            let phi = rn_log_price_cf(&s, C64::new(0.0, -1.0)).unwrap();
            let expect = s.forward();
            worst = worst.max(((phi.re - expect) / expect).abs().max(phi.im.abs() / expect));
            done += 1;
            count += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!("martingale identity: worst relative error {worst:.2e} <= 1e-10 over {count} draws (100 per model)"),
    )
}

fn cross_method() -> Outcome {
    let ks = strikes();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, model) in [("NIG", table_nig()), ("CGMY", table_cgmy())] {
        let s = setup(model);
        let fft = fft_calls(&s, &ks);
        let cos = cos_prices(&s, OptionKind::Call, &ks, &CosConfig::default()).unwrap();
        let p12: Vec<f64> = ks
            .iter()
            .map(|&k| p1_p2_price(&s, k, &P1P2Settings::default()).unwrap().call)
            .collect();
        let worst = max_abs_diff(&fft, &cos)
            .max(max_abs_diff(&fft, &p12))
            .max(max_abs_diff(&cos, &p12))
            / S0;
        pass &= worst <= 1e-4;
        parts.push(format!("{name} {worst:.2e}"));
    }
    outcome(
        pass,
        format!("cross-method FFT/P1P2/COS: worst pairwise {} <= 1e-4 per unit spot", parts.join(", ")),
    )
}

fn vg_model() -> LevyModel {
    LevyModel::Vg(VgParams {
        sigma: 0.12,
        nu: 0.2,
        theta: -0.14,
    })
}

fn mc_consistency() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, model, seed) in [("NIG", table_nig(), 11u64), ("VG", vg_model(), 12)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t0 = Instant::now();
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            let k: f64 = rng.random_range(80.0..120.0);
            let t: f64 = rng.random_range(0.1..1.0);
            let l = leg(S0);
            let spec = SimSpec {
                model,
                leg_s: l.clone(),
                leg_z: l.clone(),
                rate: RATE,
                maturity: t,
                n_paths: 1_000_000,
                n_steps: 1,
                seed: seed * 100 + i,
                rho: 1.0,
                antithetic: false,
            };
            let est = mc_price(&spec, |s, _| (s - k).max(0.0)).unwrap();
            let s = RiskNeutralSetup::new(model, l, RATE, t).unwrap();
            let reference = cos_price(&s, OptionKind::Call, k, &CosConfig::default()).unwrap();
            worst = worst.max((est.price - reference).abs() / est.std_error);
        }
        let elapsed = t0.elapsed();
        pass &= worst < 3.0 && elapsed.as_secs_f64() < 60.0;
        parts.push(format!("{name} worst {worst:.2} SE in {:.1} s", elapsed.as_secs_f64()));
    }
    outcome(
        pass,
        format!("MC vs COS, 10 points x 1e6 paths: {} (< 3 SE, < 60 s)", parts.join("; ")),
    )
}

// Alternating daily returns ±a give an exact sample volatility.
fn history(a: f64, b: f64, n: usize) -> PairHistory {
    let (mut s, mut z) = (vec![S0], vec![80.0]);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s.push(s[i] * (sign * a).exp());
        z.push(z[i] * (sign * b).exp());
    }
    PairHistory { s, z }
}

// Z dividend yield for which the generating model and RATE are a fixed point
// of the rate update.
fn consistent_legs(model: &LevyModel) -> (MarketLeg, MarketLeg) {
    let h = history(0.0126, 0.0189, 250);
    let spot = *h.s.last().unwrap();
    let (s, mut z) = legs_from_history(spot, &h, &LegTerms::default()).unwrap();
    let lam = jump_compensator(model, 1.0).unwrap();
    let a_s = 0.5 * s.sigma * s.sigma + lam;
    z.div_yield = -(a_s * z.sigma / s.sigma - 0.5 * z.sigma * z.sigma - lam);
    (s, z)
}

fn synthetic_chain(model: &LevyModel, spot: f64) -> OptionChain {
    chain_on_leg(model, &leg(spot))
}

fn chain_on_leg(model: &LevyModel, l: &MarketLeg) -> OptionChain {
    let spot = l.spot;
    let ks: Vec<f64> = (0..21).map(|i| spot * (0.8 + 0.02 * i as f64)).collect();
    let s = RiskNeutralSetup::new(*model, l.clone(), RATE, T).unwrap();
    let mids = cos_prices(&s, OptionKind::Call, &ks, &CosConfig::default()).unwrap();
    OptionChain {
        as_of: None,
        spot,
        quotes: ks
            .into_iter()
            .zip(mids)
            .map(|(k, m)| OptionQuote::new(k, T, OptionKind::Call, m))
            .collect(),
    }
}

fn calibration_round_trip() -> Outcome {
    let model = table_cgmy();
    let (s, z) = consistent_legs(&model);
    let chain = synthetic_chain(&model, s.spot);
    let t0 = Instant::now();
    let r = calibrate(&chain, &s, &z, ModelKind::Cgmy, RATE, &CalibrationSettings::default()).unwrap();
    let elapsed = t0.elapsed();
    let pass = r.converged && r.relative_rmse < 5e-3 && r.final_step.abs() < 1e-4 && r.iterations <= 50;
    outcome(
        pass,
        format!(
            "CGMY round trip: relative RMSE {:.2e} < 5e-3, |r step| {:.2e} < 1e-4 after {} outer iterations (<= 50), r* = {:.6}, {:.1} s",
            r.relative_rmse,
            r.final_step.abs(),
            r.iterations,
            r.r_bar_star,
            elapsed.as_secs_f64()
        ),
    )
}

fn offset_seed_note() -> String {
    let model = table_cgmy();
    let (s, z) = consistent_legs(&model);
    let chain = synthetic_chain(&model, s.spot);
    let settings = CalibrationSettings {
        rate_update: RateUpdate::Secant { max_step: 0.005 },
        ..Default::default()
    };
    match calibrate(&chain, &s, &z, ModelKind::Cgmy, 0.025, &settings) {
        Ok(r) => format!(
            "seed 0.025 with secant update: converged {}, r* = {:.6}, {} iterations, relative RMSE {:.2e}",
            r.converged, r.r_bar_star, r.iterations, r.relative_rmse
        ),
        Err(e) => format!("seed 0.025 with secant update failed: {e}"),
    }
}

fn model_ordering() -> Outcome {
    // heavier negative tail: G < M
    let truth = LevyModel::Cgmy(CgmyParams {
        c: 1.0,
        g: 5.0,
        m: 15.0,
        y: 0.5,
    });
    let (ls, lz) = consistent_legs(&truth);
    let chain = chain_on_leg(&truth, &ls);
    let settings = CalibrationSettings {
        max_outer: 1,
        ..Default::default()
    };
    let mut rel = Vec::new();
    for kind in [ModelKind::Cgmy, ModelKind::Nig, ModelKind::Bs] {
        match calibrate(&chain, &ls, &lz, kind, RATE, &settings) {
            Ok(r) => rel.push(r.relative_rmse),
            Err(e) => return outcome(false, format!("skewed smile: {kind:?} fit failed: {e}")),
        }
    }
    outcome(
        rel[0] <= rel[1] && rel[1] <= rel[2],
        format!(
            "skewed smile, fits at r = {RATE}: relative RMSE CGMY {:.2e} <= NIG {:.2e} <= BS {:.2e}",
            rel[0], rel[1], rel[2]
        ),
    )
}

fn lattice() -> Outcome {
    let worked = StepMoves::new(0.1, -0.05, 0.05, -0.02).unwrap();
    let q = risk_neutral_prob(&worked).unwrap().q;
    let (sigma_s, sigma_z, s0, z0, k, n) = (0.2, 0.1, 100.0, 90.0, 100.0, 1000);
    let moves = StepMoves::diffusion(sigma_s, sigma_z, RATE, T / n as f64).unwrap();
    let spec = LatticeSpec {
        n_steps: n,
        moves: MoveSchedule::Constant(moves),
        s0,
        z0,
        payoff: |s: f64, _z: f64| (s - k).max(0.0),
    };
    let tree = price_on_lattice(&spec, &LatticeOptions::default()).unwrap().price;
    let cc = ConstantCoefficients {
        rate: RATE,
        sigma_s,
        sigma_z,
        maturity: T,
    };
    let closed = cc.price(&BasketCall { eta: 1.0, strike: k }, 0.0, s0, z0).unwrap();
    let rel = ((tree - closed) / closed).abs();
    outcome(
        (q - 0.375).abs() < 1e-15 && rel < 1e-3,
        format!("lattice: q = {q} (hand 0.375); n = 1000 price {tree:.6} vs closed form {closed:.6}, relative {rel:.2e} < 1e-3"),
    )
}

fn closed_form_checks() -> Outcome {
    let cc = ConstantCoefficients {
        rate: 0.02,
        sigma_s: 0.25,
        sigma_z: 0.15,
        maturity: 1.0,
    };
    let opt = BasketCall {
        eta: 0.5,
        strike: 100.0,
    };
    let (mut worst, mut root) = (0.0f64, 0.0f64);
    for s in [80.0, 90.0, 100.0, 110.0, 120.0] {
        for z in [80.0, 90.0, 100.0, 110.0, 120.0] {
            for t in [0.1, 0.4, 0.7] {
                worst = worst.max(pde_residual(&cc, &opt, t, s, z, &FdSteps::default()).unwrap());
                for eta in [0.05, 0.5, 1.0] {
                    let inp = cc.inputs(&BasketCall { eta, ..opt }, t, s, z).unwrap();
                    root = root.max(inp.root_residual(solve_y_star(&inp).unwrap()).abs());
                }
            }
        }
    }
    let study = residual_study(&cc, &opt, 0.4, 100.0, 90.0, 1e-2, 3).unwrap();
    let second_order = study.orders.iter().all(|o| (o - 2.0).abs() < 0.3);
    let orders: Vec<String> = study.orders.iter().map(|o| format!("{o:.3}")).collect();
    outcome(
        worst < 1e-6 && second_order && root < 1e-10,
        format!(
            "closed form: worst PDE residual {worst:.2e} < 1e-6 on 5x5x3 grid; orders over 3 halvings [{}] ~ 2; worst root residual {root:.2e} < 1e-10",
            orders.join(", ")
        ),
    )
}

fn shadow_rate_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut swap_err, mut split_err) = (0.0f64, 0.0f64);
    let mut n = 0;
    while n < 1000 {
        let spec = TwoAssetSpec {
            mu_s: rng.random_range(-0.5..0.5),
            mu_z: rng.random_range(-0.5..0.5),
            sigma_s: rng.random_range(0.01..1.5),
            sigma_z: rng.random_range(0.01..1.5),
            kappa_s: rng.random_range(-0.3..0.3),
            kappa_z: rng.random_range(-0.3..0.3),
            lambda: rng.random_range(0.0..20.0),
            rho: rng.random_range(-1.0..1.0),
        };
        if (spec.sigma_s - spec.sigma_z).abs() < 1e-3 {
            continue;
        }
        let a = shadow_rate(&spec).unwrap();
        let b = shadow_rate(&spec.swap()).unwrap();
        swap_err = swap_err.max((a.r_bar - b.r_bar).abs() / a.r_bar.abs().max(1.0));
        split_err = split_err.max((a.r_bar - (a.diffusion + a.jump_wedge)).abs());
        n += 1;
    }
    let worked = shadow_rate(&TwoAssetSpec {
        mu_s: 0.08,
        mu_z: 0.05,
        sigma_s: 0.25,
        sigma_z: 0.15,
        kappa_s: 0.5,
        kappa_z: 0.3,
        lambda: 1.0,
        rho: 1.0,
    })
    .unwrap()
    .r_bar;
    let worked_err = (worked - 2.005).abs();
    outcome(
        swap_err <= 1e-12 && split_err == 0.0 && worked_err < 1e-12,
        format!(
            "shadow rate: swap {swap_err:.1e}, split {split_err:.1e} over {n} specs; worked example {worked} (2.005, error {worked_err:.1e} < 1e-12)"
        ),
    )
}

fn vg_limit() -> Outcome {
    let vg = VgParams {
        sigma: 0.2,
        nu: 0.3,
        theta: -0.1,
    };
    let mut ratios = Vec::new();
    for u in [0.5, 1.0, 2.0] {
        let a = vg_limit_check(&CgmyParams::from_vg(&vg, 1e-2), &vg, u).unwrap();
        let b = vg_limit_check(&CgmyParams::from_vg(&vg, 5e-3), &vg, u).unwrap();
        ratios.push(a / b);
    }
    let pass = ratios.iter().all(|r| (r / 2.0 - 1.0).abs() <= 0.2);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    outcome(
        pass,
        format!("CGMY -> VG: deviation ratio Y=1e-2 vs 5e-3 at u = 0.5, 1, 2: [{}] within 2 +- 20%", shown.join(", ")),
    )
}

fn main() {
    // `cargo test` passes harness flags; a filter argument skips the run.
    if std::env::args().skip(1).any(|a| !a.starts_with('-')) {
        return;
    }
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("1", bs_oracle),
        ("2", martingale_identity),
        ("3", cross_method),
        ("4", mc_consistency),
        ("5", calibration_round_trip),
        ("6", model_ordering),
        ("7", lattice),
        ("8", closed_form_checks),
        ("9", shadow_rate_checks),
        ("10", vg_limit),
    ];
    let mut failed = 0;
    for (id, check) in checks {
        let o = check();
        println!("[{}] {id:>2} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if id == "5" {
            println!("          info: {}", offset_seed_note());
        }
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
