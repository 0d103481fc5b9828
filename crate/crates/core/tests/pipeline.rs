use rvp_core::config::RunConfig;
use rvp_core::error::Error;
use rvp_core::localization::{localization_suite, resolvable_band, LocalizationSpec, ROUGH_BOUND_CONSTANT};
use rvp_core::pusher::GridConfig;
use rvp_core::scenario::{sample_initial_ensemble, Scenario, ScenarioKind};
use rvp_core::verify::dt_sweep;

#[test]
fn blob_obeys_frozen_envelope_constant() {
    let (ens, _) = sample_initial_ensemble(&Scenario::preset(ScenarioKind::RadialGaussian), 20_000, 1.0, 3).unwrap();
    let loc = LocalizationSpec { grid: GridConfig { n: 128, half_width: 4.0 }, ..Default::default() };
    let s = localization_suite(&ens, &loc, 20.0).unwrap();
    assert_eq!(s.frozen_constant, ROUGH_BOUND_CONSTANT);
    assert!(s.all_pass, "fitted {}", s.fitted_constant);
    assert!(s.fitted_constant <= ROUGH_BOUND_CONSTANT);
    assert!(s.fitted_off_axis_constant <= ROUGH_BOUND_CONSTANT);
    assert!(s.k_max - s.k_min + 1 >= 4, "band [{}, {}]", s.k_min, s.k_max);
    assert!(s.slopes.iter().any(|e| e.measured.is_some()));
    assert!(s.bin_reconstruction_error <= 1e-10);
    assert!(s.band_reconstruction_error <= 1e-6);
}

#[test]
fn shells_outside_the_band_are_rejected() {
    let (ens, _) = sample_initial_ensemble(&Scenario::preset(ScenarioKind::CylindricalTorus), 500, 1.0, 2).unwrap();
    let grid = GridConfig { n: 32, half_width: 4.0 };
    let loc = LocalizationSpec { grid, k_max: Some(8), ..Default::default() };
    let (lo, hi) = resolvable_band(&loc.spec().unwrap());
    match localization_suite(&ens, &loc, 20.0) {
        Err(Error::Resolution { k, k_min, k_max }) => assert_eq!((k, k_min, k_max), (8, lo, hi)),
        other => panic!("{:?}", other.map(|s| s.k_max)),
    }
}

#[test]
fn dt_halving_shows_second_order() {
    let cfg = RunConfig::minimal(ScenarioKind::RadialGaussian, 2000, 0.02, 1.0);
    let rows = dt_sweep(&cfg, 3).unwrap();
    for r in &rows[1..] {
        let order = r.observed_order.unwrap();
        assert!((1.7..=2.3).contains(&order), "dt {}: order {order}", r.dt);
    }
}
