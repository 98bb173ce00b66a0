use std::path::PathBuf;

use lmm_interp::curve::{build_initial_curve, CurveScenario};
use lmm_interp::interpolation::Method;
use lmm_interp::scenario::{impvol_strip, CurveSource, MethodChoice, ScenarioConfig};
use lmm_interp::simulation::{simulate_paths, Discretization, MCConfig};
use lmm_interp::tenor::TenorStructure;
use lmm_interp::vol::VolatilitySpec;
use proptest::prelude::*;

fn custom_config() -> impl Strategy<Value = ScenarioConfig> {
    let vol = prop_oneof![
        Just(VolatilitySpec::lambda1()),
        Just(VolatilitySpec::lambda2()),
        (0.01f64..1.0).prop_map(|level| VolatilitySpec::Flat { level }),
        (0.01f64..1.0, 0.0f64..2.0, 0.01f64..1.0, 0.0f64..2.0)
            .prop_map(|(a1, b1, a2, b2)| VolatilitySpec::TwoFactorExponential { a1, b1, a2, b2 }),
    ];
    let method = prop_oneof![
        Just(MethodChoice::Method1),
        Just(MethodChoice::Method2),
        Just(MethodChoice::Baseline),
        Just(MethodChoice::All),
    ];
    (
        (1u32..=3, vol, 4usize..=40, method),
        (
            proptest::option::of(0.05f64..0.95),
            proptest::option::of(0.05f64..0.95),
        ),
        (
            2usize..10_000_000,
            1usize..12,
            any::<u64>(),
            any::<bool>(),
            any::<bool>(),
        ),
        (0.0f64..0.4, 0.5f64..0.99, 1usize..20),
    )
        .prop_map(
            |(
                (curve, vol, periods, method),
                (fm, ttm),
                (paths, steps, seed, anti, pc),
                (a, b, pts),
            )| {
                let t_star = 0.25 * periods as f64;
                ScenarioConfig {
                    figure: None,
                    curve: CurveSource::Scenario(CurveScenario::from_id(curve).unwrap()),
                    vol,
                    t_star,
                    delta: 0.25,
                    method,
                    fixed_maturity: fm.map(|x| x * t_star),
                    fixed_ttm: ttm.map(|x| x * t_star),
                    n_paths: if anti { paths & !1 } else { paths },
                    steps_per_period: steps,
                    seed,
                    antithetic: anti,
                    scheme: if pc {
                        Discretization::PredictorCorrector
                    } else {
                        Discretization::LogEuler
                    },
                    libor_window: (a * t_star, b * t_star),
                    impvol_period_start: 0.25,
                    impvol_points: pts,
                    output_dir: PathBuf::from(format!("runs/{seed}")),
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn config_parse_serialize_is_identity(cfg in custom_config()) {
        let text = cfg.serialize().unwrap();
        let back = ScenarioConfig::parse(&text).unwrap();
        // floats pass through 12 significant digits once, then are stable
        let again = ScenarioConfig::parse(&back.serialize().unwrap()).unwrap();
        prop_assert_eq!(&again, &back);
        prop_assert_eq!(back.serialize().unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulated_libors_stay_positive(seed in any::<u64>(), level in 0.2f64..1.5, pc in any::<bool>()) {
        let tenor = TenorStructure::with_horizon(0.25, 3.0).unwrap();
        let curve = build_initial_curve(CurveScenario::Steep, &tenor).unwrap();
        let vol = VolatilitySpec::Flat { level };
        let mut mc = MCConfig::new(64, seed);
        mc.scheme = if pc { Discretization::PredictorCorrector } else { Discretization::LogEuler };
        let horizon = tenor.date(tenor.n() - 1);
        let obs: Vec<f64> = (1..tenor.n()).map(|i| tenor.date(i) - 0.1).collect();
        let ok = simulate_paths(&curve, &tenor, &vol, &mc, horizon, &obs, |_, snaps| {
            Ok(snaps.iter().all(|s| s.libors().iter().all(|&l| l > 0.0 && l.is_finite())))
        })
        .unwrap();
        prop_assert!(ok.into_iter().all(|x| x));
    }
}

#[test]
fn endpoint_mc_vols_match_the_approximation() {
    let mut cfg = ScenarioConfig::figure(6).unwrap();
    cfg.n_paths = 50_000;
    cfg.seed = 5;
    cfg.impvol_points = 3;
    for m in [Method::DaycountFractions, Method::ShortBondVolatility] {
        let rows = impvol_strip(&cfg, m, 2.0).unwrap();
        for r in [rows[0], rows[rows.len() - 1]] {
            assert!(
                r.approx_implied >= r.mc_lo && r.approx_implied <= r.mc_hi,
                "{m:?} at {}: approx {} outside [{}, {}]",
                r.start,
                r.approx_implied,
                r.mc_lo,
                r.mc_hi
            );
        }
    }
}
