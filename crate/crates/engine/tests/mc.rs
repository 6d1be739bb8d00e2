use shadow_core::fourier::{cos_price, CosConfig, OptionKind};
use shadow_core::levy::*;
use shadow_core::Error;
use shadow_engine::mc::*;

const RATE: f64 = 0.02;
const T: f64 = 0.4375;

fn nig() -> LevyModel {
    LevyModel::Nig(NigParams {
        alpha: 8.214,
        beta: -1.235,
        delta: 0.184,
        mu: 0.0,
    })
}

fn vg() -> LevyModel {
    LevyModel::Vg(VgParams {
        sigma: 0.12,
        nu: 0.2,
        theta: -0.14,
    })
}

fn leg(label: &str, spot: f64, div: f64, sigma: f64, kappa: f64) -> MarketLeg {
    MarketLeg::new(label, spot, div, sigma, kappa).unwrap()
}

fn spec(model: LevyModel, n_paths: usize) -> SimSpec {
    SimSpec {
        model,
        leg_s: leg("S", 100.0, 0.01, 0.05, 1.0),
        leg_z: leg("Z", 80.0, 0.0, 0.12, 0.6),
        rate: RATE,
        maturity: T,
        n_paths,
        n_steps: 1,
        seed: 7,
        rho: 1.0,
        antithetic: false,
    }
}

#[test]
fn no_jumps_no_diffusion_is_deterministic() {
    let mut s = spec(nig(), 1000);
    s.leg_s = leg("S", 100.0, 0.0, 0.0, 0.0);
    s.leg_z = leg("Z", 100.0, 0.0, 0.0, 0.0);
    s.n_steps = 4;
    let out = simulate_terminal(&s).unwrap();
    let expect = 100.0 * (RATE * T).exp();
    assert!(out.s.iter().chain(&out.z).all(|x| ((x - expect) / expect).abs() < 1e-14));
}

#[test]
fn identical_legs_coincide_pathwise() {
    for model in [nig(), vg()] {
        let mut s = spec(model, 5000);
        s.leg_z = MarketLeg {
            label: "Z".into(),
            ..s.leg_s.clone()
        };
        let out = simulate_terminal(&s).unwrap();
        assert_eq!(out.s, out.z);
    }
}

#[test]
fn jump_parts_are_proportional() {
    for model in [nig(), vg()] {
        let mut s = spec(model, 2000);
        s.leg_s = leg("S", 100.0, 0.0, 0.0, 1.5);
        s.leg_z = leg("Z", 80.0, 0.03, 0.0, -0.5);
        s.n_steps = 3;
        let out = simulate_terminal(&s).unwrap();
        let drift = |l: &MarketLeg| (RATE - l.div_yield - model.compensator(l.kappa).unwrap()) * T;
        let (ds, dz) = (drift(&s.leg_s), drift(&s.leg_z));
        for (a, b) in out.s.iter().zip(&out.z) {
            let js = (a / 100.0).ln() - ds;
            let jz = (b / 80.0).ln() - dz;
            assert!((js * -0.5 - jz * 1.5).abs() < 1e-12, "{js} {jz}");
        }
    }
}

#[test]
fn martingale_and_discounted_asset() {
    for model in [nig(), vg()] {
        let s = spec(model, 1_000_000);
        let out = simulate_terminal(&s).unwrap();
        let n = out.s.len() as f64;
        let mean = out.s.iter().sum::<f64>() / n;
        let sd = (out.s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let fwd = 100.0 * ((RATE - 0.01) * T).exp();
        assert!((mean - fwd).abs() < 3.0 * sd / n.sqrt(), "{model:?}: {mean} vs {fwd}");

        let est = mc_price(&s, |st, _| st).unwrap();
        let target = 100.0 * (-0.01 * T).exp();
        assert!((est.price - target).abs() < 3.0 * est.std_error, "{est:?} vs {target}");
        let ez = mc_price(&s, |_, zt| zt).unwrap();
        assert!((ez.price - 80.0).abs() < 3.0 * ez.std_error, "{ez:?}");
    }
}

#[test]
fn unit_payoff_is_the_discount_factor() {
    let est = mc_price(&spec(nig(), 10_001), |_, _| 1.0).unwrap();
    assert_eq!(est.price, (-RATE * T).exp());
    assert_eq!(est.std_error, 0.0);
    assert_eq!(est.n_paths, 10_001);
}

#[test]
fn seeds_and_threads_do_not_change_samples() {
    let s = spec(vg(), 3 * BLOCK + 17);
    let a = simulate_terminal(&s).unwrap();
    let one_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = one_thread.install(|| simulate_terminal(&s).unwrap());
    assert_eq!(a, b);
    let p1 = mc_price(&s, |x, y| (x - y).max(0.0)).unwrap();
    let p2 = one_thread.install(|| mc_price(&s, |x, y| (x - y).max(0.0)).unwrap());
    assert_eq!(p1, p2);
    let c = simulate_terminal(&SimSpec { seed: 8, ..s }).unwrap();
    assert_ne!(a.s, c.s);
}

#[test]
fn standard_error_scales_with_root_n() {
    let call = |s: f64, _: f64| (s - 100.0).max(0.0);
    let small = mc_price(&spec(nig(), 100_000), call).unwrap();
    let large = mc_price(&spec(nig(), 1_000_000), call).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn calls_match_cos() {
    for model in [nig(), vg()] {
        for antithetic in [false, true] {
            let s = SimSpec {
                antithetic,
                ..spec(model, 400_000)
            };
            let setup = RiskNeutralSetup::new(model, s.leg_s.clone(), RATE, T).unwrap();
            for k in [90.0, 105.0] {
                let reference = cos_price(&setup, OptionKind::Call, k, &CosConfig::default()).unwrap();
                let est = mc_price(&s, |st, _| (st - k).max(0.0)).unwrap();
                assert!(
                    (est.price - reference).abs() < 3.0 * est.std_error,
                    "{model:?} K={k} antithetic={antithetic}: {est:?} vs {reference}"
                );
            }
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let cgmy = LevyModel::Cgmy(CgmyParams {
        c: 1.0,
        g: 5.0,
        m: 10.0,
        y: 0.5,
    });
    assert!(matches!(simulate_terminal(&spec(cgmy, 10)), Err(Error::InvalidModel(_))));
    assert!(matches!(
        simulate_terminal(&SimSpec {
            antithetic: true,
            ..spec(nig(), 11)
        }),
        Err(Error::InvalidInput(_))
    ));
    assert!(simulate_terminal(&spec(nig(), 0)).is_err());
    let mut s = spec(nig(), 10);
    s.leg_z.kappa = 10.0;
    assert!(matches!(simulate_terminal(&s), Err(Error::MomentExplosion(_))));
}
