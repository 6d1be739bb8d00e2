use proptest::prelude::*;
use shadow_core::shadow::*;

fn any_spec() -> impl Strategy<Value = TwoAssetSpec> {
    (
        -0.5f64..0.5,
        -0.5f64..0.5,
        0.01f64..1.5,
        0.01f64..1.5,
        -0.3f64..0.3,
        -0.3f64..0.3,
        0.0f64..20.0,
        -1.0f64..=1.0,
    )
        .prop_filter("distinct vols", |t| (t.2 - t.3).abs() > 1e-3)
        .prop_map(|(mu_s, mu_z, sigma_s, sigma_z, kappa_s, kappa_z, lambda, rho)| TwoAssetSpec {
            mu_s,
            mu_z,
            sigma_s,
            sigma_z,
            kappa_s,
            kappa_z,
            lambda,
            rho,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn swap_invariant_and_exact_split(spec in any_spec()) {
        let a = shadow_rate(&spec).unwrap();
        let b = shadow_rate(&spec.swap()).unwrap();
        prop_assert!((a.r_bar - b.r_bar).abs() <= 1e-12 * a.r_bar.abs().max(1.0));
        prop_assert_eq!(a.r_bar, a.diffusion + a.jump_wedge);
        prop_assert_eq!(b.r_bar, b.diffusion + b.jump_wedge);
    }
}

#[test]
fn rolling_series_recovers_common_drift() {
    // S and Z load on one Brownian path with vols 0.2 and 0.35 and share
    // the log-drift 0.04 per year; without jumps r̄ equals that drift.
    let n = 300;
    let dt: f64 = 1.0 / 252.0;
    let shocks: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let (mut s, mut z) = (vec![100.0f64], vec![50.0f64]);
    for (i, e) in shocks.iter().enumerate() {
        s.push(s[i] * (0.04 * dt + 0.2 * dt.sqrt() * e).exp());
        z.push(z[i] * (0.04 * dt + 0.35 * dt.sqrt() * e).exp());
    }
    let dates: Vec<usize> = (0..=n).collect();
    let cfg = RollingConfig {
        jump_threshold: None,
        ..Default::default()
    };
    let series = rolling_shadow_series(&dates, &s, &z, &cfg).unwrap();
    assert_eq!(series.len(), n + 1 - cfg.window);
    for p in &series {
        let d = p.decomposition.unwrap();
        assert!((d.r_bar - 0.04).abs() < 1e-9, "{}", d.r_bar);
        assert_eq!(d.jump_wedge, 0.0);
    }
}

#[test]
fn identical_legs_are_flagged_degenerate() {
    let s: Vec<f64> = (0..80).map(|i| 100.0 * (0.01 * (i as f64).sin()).exp()).collect();
    let dates: Vec<usize> = (0..80).collect();
    let series = rolling_shadow_series(&dates, &s, &s, &RollingConfig::default()).unwrap();
    assert!(series.iter().all(|p| p.flag == PointFlag::Degenerate && p.decomposition.is_none()));
}
