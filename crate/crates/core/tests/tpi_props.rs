use proptest::prelude::*;
use pulsebath::tpi::{g2_single, g34, g34_numeric, g34_stationary, g34_time_averaged, TPIPair};
use pulsebath::{decompose_interval, make_pdd};

proptest! {
    #[test]
    fn coincidence_is_bounded_and_symmetric(
        t in 0.0..4.0f64,
        theta in 0.0..2.0f64,
        d1 in -4.0..4.0f64,
        d2 in -4.0..4.0f64,
        tau in 0.05..0.4f64,
    ) {
        let seq = make_pdd(tau, 200).unwrap();
        let pair = TPIPair::new(d1, d2, 2.0).unwrap();
        let v = g34(t, theta, &seq, &pair).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "g34 = {}", v);
        let w = g34(t, theta, &seq, &pair.swapped()).unwrap();
        prop_assert!((v - w).abs() < 1e-12);
        prop_assert_eq!(pair.delta21, d2 - d1);
    }

    #[test]
    fn averaged_curve_is_bounded(theta in 0.0..10.0f64, tau in 0.01..1.0f64) {
        let v = g34_time_averaged(theta, tau);
        prop_assert!((0.0..=0.5).contains(&v));
    }
}

#[test]
fn numeric_approaches_stationary() {
    let seq = make_pdd(0.1, 120).unwrap();
    let pair = TPIPair::new(0.0, 1.0, 2.0).unwrap();
    for (t, theta) in [(5.02, 0.15), (5.05, 0.23), (5.08, 0.44), (4.96, 0.31)] {
        let d = decompose_interval(t, theta, &seq).unwrap();
        let s = g34_stationary(&d, 0.1, &pair);
        let n = g34_numeric(t, theta, &seq, &pair).unwrap();
        if d.m % 2 == 1 {
            assert!((n / s - 1.0).abs() <= 0.02);
        }
    }
}

#[test]
fn g2_parity_steps_at_pulse_separations() {
    let seq = make_pdd(0.05, 100).unwrap();
    for k in 1..6 {
        let theta = k as f64 * 0.05;
        let e = (-2.0 * theta).exp();
        let below = g2_single(theta - 1e-9, &seq, 2.0).unwrap();
        let above = g2_single(theta + 1e-9, &seq, 2.0).unwrap();
        let (even, odd) = (0.25 * (1.0 - e), 0.25 * (1.0 + e));
        let (left, right) = if k % 2 == 1 { (even, odd) } else { (odd, even) };
        assert!((below - left).abs() < 1e-8 && (above - right).abs() < 1e-8, "k = {k}");
    }
}
