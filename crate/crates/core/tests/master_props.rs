use num_complex::Complex64 as C64;
use proptest::prelude::*;
use pulsebath::master::{
    apply_ideal_pulse, apply_rotation, corr_f, corr_numeric, corr_numeric_partner, propagate_driven,
    propagate_free, rho_excited_in, spectrum_numeric, EmitterDensityMatrix,
};
use pulsebath::{make_cp, make_pdd, EmitterParams, FrequencyGrid};

fn state() -> impl Strategy<Value = EmitterDensityMatrix> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(p, r, phase)| {
        let bound = (p * (1.0 - p)).sqrt();
        EmitterDensityMatrix {
            rho_ee: p,
            rho_gg: 1.0 - p,
            rho_eg: C64::from_polar(r * bound, phase),
        }
    })
}

fn valid(rho: &EmitterDensityMatrix) -> bool {
    (rho.trace() - 1.0).abs() < 1e-10 && rho.is_positive(1e-10)
}

proptest! {
    #[test]
    fn operations_keep_states_physical(
        rho in state(),
        dt in 0.0..3.0f64,
        delta in -8.0..8.0f64,
        angle in -7.0..7.0f64,
        drive in 0.0..80.0f64,
    ) {
        let em = EmitterParams::new(delta, 2.0).unwrap();
        prop_assert!(valid(&propagate_free(&rho, dt, &em).unwrap()));
        prop_assert!(valid(&apply_ideal_pulse(&rho)));
        prop_assert!(valid(&apply_rotation(&rho, angle)));
        prop_assert!(valid(&propagate_driven(&rho, dt.clamp(1e-3, 0.3), &em, drive, true).unwrap()));
    }

    #[test]
    fn regression_factorizes(t in 0.0..3.0f64, theta in 0.0..2.0f64, delta in -5.0..5.0f64, tau in 0.05..0.5f64) {
        let seq = make_pdd(tau, 200).unwrap();
        let em = EmitterParams::new(delta, 2.0).unwrap();
        let numeric = corr_numeric(t, theta, &seq, &em).unwrap();
        let closed = rho_excited_in(t, &seq, 2.0).unwrap() * corr_f(t, theta, &seq, &em).unwrap();
        prop_assert!((numeric - closed).norm() < 1e-8, "{} vs {}", numeric, closed);
        prop_assert!(corr_f(t, theta, &seq, &em).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn partner_is_conjugate(t in 0.0..2.0f64, theta in 0.0..2.0f64, delta in -5.0..5.0f64) {
        let seq = make_cp(0.2, 20).unwrap().with_rotation(3.0).unwrap();
        let em = EmitterParams::new(delta, 2.0).unwrap();
        let a = corr_numeric(t, theta, &seq, &em).unwrap();
        let b = corr_numeric_partner(t, theta, &seq, &em).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-10);
    }
}

#[test]
fn factorization_on_lattice() {
    let seq = make_pdd(0.15, 100).unwrap();
    let em = EmitterParams::new(2.5, 2.0).unwrap();
    for i in 0..10 {
        for j in 0..5 {
            let (t, theta) = (0.137 * i as f64, 0.211 * j as f64);
            let numeric = corr_numeric(t, theta, &seq, &em).unwrap();
            let closed = rho_excited_in(t, &seq, 2.0).unwrap() * corr_f(t, theta, &seq, &em).unwrap();
            assert!((numeric - closed).norm() < 1e-8);
        }
    }
}

#[test]
fn pinning_for_small_tau_delta() {
    let grid = FrequencyGrid::uniform(-10.0, 10.0, 201).unwrap();
    for (tau, delta) in [(0.2_f64, 3.0), (0.1, 6.0), (0.3, 2.0)] {
        let n = (1.6 / tau).round() as usize;
        let s = spectrum_numeric(&grid, (n + 1) as f64 * tau, &make_pdd(tau, n).unwrap(), &EmitterParams::new(delta, 2.0).unwrap()).unwrap();
        assert!(s.argmax().abs() <= grid.min_step() + 1e-12, "tau {tau} delta {delta}: {}", s.argmax());
        let peak = s.max();
        assert!(s.intensity.iter().all(|&v| v >= -1e-8 * peak));
    }
}

#[test]
fn cp_matches_pdd_near_center() {
    let grid = FrequencyGrid::uniform(-2.0, 2.0, 81).unwrap();
    let em = EmitterParams::new(3.0, 2.0).unwrap();
    let a = spectrum_numeric(&grid, 1.6, &make_pdd(0.2, 8).unwrap(), &em).unwrap().unit_central_peak();
    let b = spectrum_numeric(&grid, 1.6, &make_cp(0.2, 8).unwrap(), &em).unwrap().unit_central_peak();
    for (x, y) in a.intensity.iter().zip(&b.intensity) {
        assert!((x - y).abs() <= 0.10);
    }
}
