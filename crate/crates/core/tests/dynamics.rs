//! Trajectory-level checks: linear-regime growth rates against the
//! dispersion relation, saturation behaviour and blow-up reporting.

use cumulus::model;
use cumulus::sim::{self, SimConfig};
use cumulus::spectral::{ClampPolicy, DealiasRule, GridSpec, SpectralTransform};
use cumulus::stability;
use cumulus::{presets, Dims, Error};

fn cfg_1d() -> SimConfig<f64> {
    let (params, diff) = presets::pattern_1d();
    SimConfig {
        params,
        diff,
        grid: GridSpec::new(Dims::One, 256, 50.0).unwrap(),
        h: 0.02,
        t_end: 2000.0,
        snapshot_times: vec![20.0, 200.0, 2000.0],
        noise_amplitude: 0.01,
        seed: 42,
        dealias: DealiasRule::None,
        clamp: ClampPolicy::Clamp,
        summary_every: 2.0,
    }
}

/// Mode amplitudes measured between t = 10 and t = 20 (after the fast local
/// transient has decayed) grow at the dispersion-relation rate to well
/// within 15%, and analytically stable modes do not grow.
#[test]
fn linear_growth_rates_match_dispersion_relation() {
    let mut cfg = cfg_1d();
    cfg.noise_amplitude = 1e-6; // stay deep in the linear regime
    cfg.t_end = 20.0;
    cfg.snapshot_times = vec![10.0, 20.0];
    cfg.summary_every = 10.0;
    let res = sim::run(&cfg).unwrap();
    let transform = SpectralTransform::new(&cfg.grid);
    let spec10 = transform.forward(&res.snapshots[0].fields).unwrap();
    let spec20 = transform.forward(&res.snapshots[1].fields).unwrap();

    let eq = res.equilibrium;
    let jac = model::jacobian(&cfg.params, &eq.state).unwrap();
    let unit = (2.0 * std::f64::consts::PI / 50.0_f64).powi(2);

    for n in 1..=8usize {
        let sigma = stability::mode_growth_rate(&jac, &cfg.diff, unit * (n * n) as f64);
        let a10 = spec10.qr[n].norm();
        let a20 = spec20.qr[n].norm();
        let measured = (a20 / a10).ln() / 10.0;
        if sigma > 0.0 {
            assert!(
                (measured - sigma).abs() <= 0.15 * sigma.abs(),
                "mode {n}: measured {measured} vs sigma {sigma}"
            );
        } else {
            assert!(a20 <= a10, "stable mode {n} grew: {a10} -> {a20}");
            assert!(
                (measured - sigma).abs() <= 0.15 * sigma.abs(),
                "mode {n}: measured {measured} vs sigma {sigma}"
            );
        }
    }
}

/// The saturated 1D pattern is anti-phase between the species and trips the
/// pattern detector.
#[test]
fn saturated_pattern_is_anti_phase() {
    let cfg = cfg_1d();
    let res = sim::run(&cfg).unwrap();
    let last = res.snapshots.last().unwrap();
    assert!(sim::pattern_detector(last, cfg.noise_amplitude));
    let corr = sim::field_correlation(&last.fields.qc, &last.fields.qr);
    assert!(corr < 0.0, "correlation {corr} not negative");
}

/// Beyond the cubic-root threshold a single admissible equilibrium still
/// exists and the run stays homogeneous.
#[test]
fn beyond_b1_stays_homogeneous() {
    let mut cfg = cfg_1d();
    cfg.params.b = 1.2; // above B1 ~ 1.105
    cfg.t_end = 50.0;
    cfg.snapshot_times = vec![50.0];
    let eq = model::nontrivial_equilibrium(&cfg.params).unwrap();
    assert!(eq.admissible);
    let res = sim::run(&cfg).unwrap();
    assert!(!sim::pattern_detector(
        res.snapshots.last().unwrap(),
        cfg.noise_amplitude
    ));
}

/// An over-long step makes the explicit part of the scheme unstable once the
/// pattern saturates; the run reports the blow-up time and keeps partial
/// outputs.
#[test]
fn blow_up_is_reported_with_partial_outputs() {
    let mut cfg = cfg_1d();
    cfg.h = 0.2;
    cfg.t_end = 600.0;
    cfg.snapshot_times = vec![100.0];
    cfg.summary_every = 10.0;
    let outcome = sim::run_with_partials(&cfg);
    match outcome.error {
        Some(Error::BlowUp { time, .. }) => {
            assert!(time > 0.0 && time <= 600.0);
            assert_eq!(outcome.result.metadata.blow_up.map(|(t, _)| t), Some(time));
            assert!(!outcome.result.series.is_empty(), "no partial series kept");
        }
        other => panic!("expected blow-up, got {other:?}"),
    }
}
