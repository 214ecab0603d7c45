mod common;

use common::{dual_path_oracle, log_uniform, single_path_oracle};
use trimer_core::cpt::{
    channel_ratio, dark_state_dual, dark_state_for, dark_state_single, dual_resonance_detuning,
    resonance_detuning, CouplingRatio, Path,
};
use trimer_core::model::{
    vector_field, Channel, Controls, DetuningMode, ModelParams, PulseSchedule, Species,
};
use trimer_core::Error;

const TOL: f64 = 1e-12;

#[test]
fn single_path_matches_root_find() {
    for (path, homonuclear) in [(Path::Aa, true), (Path::Ab, false)] {
        for eta in log_uniform(1000, 1e-3, 1e3, 7) {
            let sol = dark_state_single(CouplingRatio::Finite(eta), path).unwrap();
            let o = single_path_oracle(eta, homonuclear);
            assert!((sol.n_g - o.n_g).abs() < TOL, "{path:?} eta={eta}");
            assert!((sol.n_b - o.n_b).abs() < TOL, "{path:?} eta={eta}");
            assert!((sol.n_a - o.n_a).abs() < TOL, "{path:?} eta={eta}");
            assert_eq!(sol.n_d, 0.0);
        }
    }
}

#[test]
fn dual_path_matches_root_find() {
    let e1 = log_uniform(1000, 1e-3, 1e3, 11);
    let e2 = log_uniform(1000, 1e-3, 1e3, 13);
    for (&eta1, &eta2) in e1.iter().zip(&e2) {
        let sol = dark_state_dual(eta1.into(), eta2.into()).unwrap();
        let o = dual_path_oracle(eta1, eta2);
        assert!((sol.n_g - o.n_g).abs() < TOL, "eta=({eta1}, {eta2})");
        assert!((sol.n_b - o.n_b).abs() < TOL, "eta=({eta1}, {eta2})");
        assert!((sol.n_a - o.n_a).abs() < TOL, "eta=({eta1}, {eta2})");
    }
}

#[test]
fn worked_values() {
    let aa = dark_state_single(1.0.into(), Path::Aa).unwrap();
    assert!((aa.n_g - 4.0 / 15.0).abs() < 1e-15);
    let ab = dark_state_single(1.0.into(), Path::Ab).unwrap();
    assert!((ab.n_g - 1.0 / 6.0).abs() < 1e-15);
    let dual = dark_state_dual(1.0.into(), 1.0.into()).unwrap();
    assert!((dual.n_g - 0.2).abs() < 1e-15);
    assert!((dual.n_a - 0.2).abs() < 1e-15 && (dual.n_b - 0.2).abs() < 1e-15);
}

#[test]
fn limits_and_errors() {
    let big = dark_state_single(1e6.into(), Path::Aa).unwrap();
    assert!((big.n_g - 1.0 / 3.0).abs() < 1e-9);
    let inf = dark_state_single(CouplingRatio::Infinite, Path::Ab).unwrap();
    assert_eq!(inf.n_g, 1.0 / 3.0);
    let zero = dark_state_single(0.0.into(), Path::Aa).unwrap();
    assert_eq!(zero.n_g, 0.0);
    assert!((zero.n_a - 2.0 / 3.0).abs() < 1e-15);
    assert!(matches!(
        dark_state_dual(0.0.into(), 1.0.into()),
        Err(Error::DegenerateChannel(_))
    ));
    assert!(dark_state_single(f64::NAN.into(), Path::Aa).is_err());
    assert!(matches!(
        channel_ratio(1.0, -2.0),
        Err(Error::NoCptSolution(_))
    ));
    assert_eq!(channel_ratio(2.0, 4.0).unwrap(), 2.0);
}

#[test]
fn amplitudes_reproduce_populations() {
    for eta in log_uniform(50, 1e-2, 1e2, 3) {
        for sol in [
            dark_state_single(eta.into(), Path::Aa).unwrap(),
            dark_state_single(eta.into(), Path::Ab).unwrap(),
            dark_state_dual(eta.into(), (0.5 * eta).into()).unwrap(),
        ] {
            let p = sol.amplitudes.populations();
            assert!((p[Species::AtomA.index()] - sol.n_a).abs() < 1e-15);
            assert!((p[Species::AtomB.index()] - sol.n_b).abs() < 1e-15);
            assert!((p[Species::Trimer.index()] - sol.n_g).abs() < 1e-15);
            assert!((sol.amplitudes.conserved_atom_number() - 1.0).abs() < 1e-14);
        }
    }
}

/// In a relative equilibrium every nonzero field rotates at
/// `a·ω_A + b·ω_B` and dimers stay at zero.
fn assert_relative_equilibrium(params: &ModelParams, omega1: f64, omega2: f64) {
    let sol = dark_state_for(params, omega1, omega2).unwrap();
    let controls = Controls {
        omega1,
        omega2,
        detuning: resonance_detuning(params, &sol),
    };
    let s = sol.amplitudes;
    let f = vector_field(&s, params, &controls);
    assert!(f[Species::DimerAA].norm() < 1e-13);
    assert!(f[Species::DimerAB].norm() < 1e-13);
    let rate = |sp: Species| f[sp] / s[sp];
    let (w_a, w_b) = (rate(Species::AtomA), rate(Species::AtomB));
    assert!(w_a.re.abs() < 1e-13 && w_b.re.abs() < 1e-13);
    let w_g = rate(Species::Trimer);
    assert!(
        (w_g - (2.0 * w_a + w_b)).norm() < 1e-12,
        "{w_g} vs {}",
        2.0 * w_a + w_b
    );
}

#[test]
fn resonance_detuning_gives_stationary_dark_state() {
    for channel in [Channel::AaOnly, Channel::AbOnly, Channel::Dual] {
        for delta in [-3.0, 0.0, 3.0] {
            let params = ModelParams::paper_defaults(channel, delta);
            for omega in [0.3, 1.0, 20.0] {
                assert_relative_equilibrium(&params, omega, 0.5 * omega);
            }
        }
    }
}

#[test]
fn dual_fit_is_exact() {
    let params = ModelParams {
        omega2: PulseSchedule::Constant(3.0),
        detuning: DetuningMode::CptTracking,
        ..ModelParams::paper_defaults(Channel::Dual, -3.0)
    };
    let sol = dark_state_dual(0.2.into(), 0.7.into()).unwrap();
    let fit = dual_resonance_detuning(&params, &sol);
    assert!(fit.residual_norm < 1e-14);
    assert_eq!(resonance_detuning(&params, &sol), fit.detuning);
}

#[test]
fn yield_increases_with_eta() {
    let mut grid: Vec<f64> = log_uniform(200, 1e-3, 1e6, 5);
    grid.sort_by(f64::total_cmp);
    for path in [Path::Aa, Path::Ab] {
        let ng: Vec<f64> = grid
            .iter()
            .map(|&e| dark_state_single(e.into(), path).unwrap().n_g)
            .collect();
        assert!(ng.windows(2).all(|w| w[1] >= w[0]));
        assert!(ng.iter().all(|&n| (0.0..=1.0 / 3.0).contains(&n)));
    }
}
