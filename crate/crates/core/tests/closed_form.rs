use proptest::prelude::*;
use shadow_core::closed_form::*;
use shadow_core::fourier::bs_call_analytic;

const CC: ConstantCoefficients = ConstantCoefficients {
    rate: 0.02,
    sigma_s: 0.25,
    sigma_z: 0.15,
    maturity: 1.0,
};

const COMMON: ConstantCoefficients = ConstantCoefficients {
    rate: 0.03,
    sigma_s: 0.2,
    sigma_z: 0.2,
    maturity: 1.0,
};

fn grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for s in [80.0, 90.0, 100.0, 110.0, 120.0] {
        for z in [80.0, 90.0, 100.0, 110.0, 120.0] {
            for t in [0.1, 0.4, 0.7] {
                out.push((t, s, z));
            }
        }
    }
    out
}

#[test]
fn residual_small_on_grid() {
    for cc in [CC, COMMON] {
        for eta in [1.0, 0.5] {
            let opt = BasketCall { eta, strike: 100.0 };
            let worst = grid()
                .into_iter()
                .map(|(t, s, z)| pde_residual(&cc, &opt, t, s, z, &FdSteps::default()).unwrap())
                .fold(0.0, f64::max);
            println!("sigma_z={} eta={eta}: worst residual {worst:.3e}", cc.sigma_z);
            assert!(worst < 1e-6, "{worst}");
        }
    }
}

#[test]
fn residual_decays_quadratically() {
    let opt = BasketCall { eta: 0.5, strike: 100.0 };
    for (t, s, z) in [(0.4, 100.0, 90.0), (0.1, 120.0, 80.0), (0.7, 80.0, 110.0)] {
        let study = residual_study(&CC, &opt, t, s, z, 1e-2, 3).unwrap();
        println!("{study:?}");
        for o in &study.orders {
            assert!((o - 2.0).abs() < 0.3, "{study:?}");
        }
    }
}

#[test]
fn short_dated_at_the_money() {
    let opt = BasketCall { eta: 0.5, strike: 95.0 };
    let r = pde_residual(&CC, &opt, CC.maturity - 0.01, 100.0, 90.0, &FdSteps::default()).unwrap();
    assert!(r < 1e-5, "{r}");
}

#[test]
fn scaling_diagnostics() {
    let opt = BasketCall { eta: 0.5, strike: 100.0 };
    assert!(checked_pde_residual(&CC, &opt, 0.4, 100.0, 90.0, 1e-4, 1e-6).is_ok());
    let e = checked_pde_residual(&CC, &opt, 0.4, 100.0, 90.0, 5e-2, 1e-6).unwrap_err();
    assert!(matches!(e, shadow_core::Error::StepTooLarge(_)), "{e}");
    let e = checked_pde_residual(&CC, &opt, 0.4, 100.0, 90.0, 1e-8, 1e-12).unwrap_err();
    assert!(matches!(e, shadow_core::Error::StepTooSmall(_)), "{e}");
}

#[test]
fn root_residuals_on_grid() {
    for eta in [0.05, 0.5, 0.95, 1.0] {
        for (t, s, z) in grid() {
            let inp = CC.inputs(&BasketCall { eta, strike: 100.0 }, t, s, z).unwrap();
            let y = solve_y_star(&inp).unwrap();
            assert!(inp.root_residual(y).abs() < 1e-10);
        }
    }
}

#[test]
fn implicit_derivatives_match_differences() {
    let opt = BasketCall { eta: 0.4, strike: 100.0 };
    let y = |t: f64, s: f64, z: f64| solve_y_star(&CC.inputs(&opt, t, s, z).unwrap()).unwrap();
    for (t, s, z) in grid() {
        let d = y_star_derivatives(&CC, &opt, t, s, z).unwrap();
        let (hs, hz, ht) = (1e-5 * s, 1e-5 * z, 1e-6);
        let fd_s = (y(t, s + hs, z) - y(t, s - hs, z)) / (2.0 * hs);
        let fd_z = (y(t, s, z + hz) - y(t, s, z - hz)) / (2.0 * hz);
        let fd_t = (y(t + ht, s, z) - y(t - ht, s, z)) / (2.0 * ht);
        for (a, b) in [(d.y_s, fd_s), (d.y_z, fd_z), (d.y_t, fd_t)] {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} {b} at {t} {s} {z}");
        }
    }
}

#[test]
fn black_scholes_reduction() {
    for (t, s, z) in grid() {
        let c = CC.price(&BasketCall { eta: 1.0, strike: 105.0 }, t, s, z).unwrap();
        let bs = bs_call_analytic(s, 105.0, CC.rate, 0.0, CC.sigma_s, CC.maturity - t).unwrap();
        assert!((c - bs).abs() < 1e-10, "{c} {bs}");
    }
}

#[test]
fn strike_limits() {
    let opt = |k| BasketCall { eta: 0.3, strike: k };
    let low = CC.price(&opt(1e-8), 0.2, 100.0, 90.0).unwrap();
    assert!((low - (0.3 * 100.0 + 0.7 * 90.0)).abs() < 1e-6);
    let high = CC.price(&opt(1e6), 0.2, 100.0, 90.0).unwrap();
    assert!(high < 1e-12);
}

proptest! {
    #[test]
    fn price_bounds(eta in 0.01f64..=1.0, k in 20.0f64..300.0, s in 20.0f64..300.0, z in 20.0f64..300.0,
                    t in 0.0f64..0.95, sz in 0.05f64..0.6) {
        let cc = ConstantCoefficients { sigma_z: sz, ..CC };
        let inp = cc.inputs(&BasketCall { eta, strike: k }, t, s, z).unwrap();
        let y = solve_y_star(&inp).unwrap();
        prop_assert!(inp.root_residual(y).abs() < 1e-10 * k.max(1.0));
        let c = closed_form_price(&inp).unwrap();
        let basket = eta * s + (1.0 - eta) * z;
        prop_assert!(c >= 0.0 && c <= basket + 1e-10);
        prop_assert!(c >= basket - k * (-inp.m).exp() - 1e-9);
    }
}
