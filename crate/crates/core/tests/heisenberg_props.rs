use num_complex::Complex64 as C64;
use proptest::prelude::*;
use pulsebath::heisenberg::{gamma0, kernel_p, kernel_q, spectrum_heisenberg, SpectrumRequest};
use pulsebath::quadrature::LegendreRule;
use pulsebath::{discretize_bath, EmitterParams};

fn request(delta: f64, tau: f64, n: usize) -> SpectrumRequest {
    let bath = discretize_bath(61, 15.0, 2.0).unwrap();
    SpectrumRequest::new(EmitterParams::new(delta, 2.0).unwrap(), bath, tau, n).unwrap()
}

fn integral(f: impl Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    LegendreRule::new(16).composite(a, b, 64).iter().map(|&(x, w)| w * f(x)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectrum_is_non_negative(delta in -6.0..6.0f64, tau in 0.05..0.5f64, half in 0usize..6) {
        let s = spectrum_heisenberg(&request(delta, tau, 2 * half)).unwrap();
        let peak = s.max();
        prop_assert!(s.intensity.iter().all(|&v| v >= -1e-9 * peak.max(1.0)));
    }

    #[test]
    fn detuning_reflects_spectrum(delta in 0.0..6.0f64, tau in 0.05..0.5f64, half in 0usize..5) {
        let a = spectrum_heisenberg(&request(delta, tau, 2 * half)).unwrap();
        let b = spectrum_heisenberg(&request(-delta, tau, 2 * half)).unwrap();
        let n = a.intensity.len();
        for i in 0..n {
            prop_assert!((a.intensity[i] - b.intensity[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn more_pulses_emit_more(delta in -5.0..5.0f64, tau in 0.05..0.4f64, half in 1usize..5) {
        let a = spectrum_heisenberg(&request(delta, tau, 2 * half)).unwrap().total();
        let b = spectrum_heisenberg(&request(delta, tau, 4 * half)).unwrap().total();
        prop_assert!(b > a);
    }

    #[test]
    fn decay_exponent_is_dissipative(delta in -10.0..10.0f64, tau in 0.0..3.0f64) {
        let bath = discretize_bath(61, 15.0, 2.0).unwrap();
        prop_assert!(gamma0(delta, tau, &bath).re >= 0.0);
    }
}

#[test]
fn kernels_match_quadrature_on_sample() {
    let mut count = 0;
    for &w in &[-7.0, -1.0, 0.3, 4.0, 9.5] {
        for &(d, tau) in &[(0.0, 0.2), (3.0, 0.4), (-2.0, 0.05), (w, 0.3)] {
            let i = C64::i();
            let q = integral(|s| (i * (w - d) * s).exp(), 0.0, tau) * (i * d * tau).exp();
            let p = integral(|s| (i * (w - d) * s).exp(), tau, 2.0 * tau) * (i * 2.0 * d * tau).exp();
            assert!((kernel_q(w, d, tau) - q).norm() < 1e-10, "q at {w} {d} {tau}");
            assert!((kernel_p(w, d, tau) - p).norm() < 1e-10, "p at {w} {d} {tau}");
            count += 1;
        }
    }
    assert_eq!(count, 20);
}

#[test]
fn odd_pulse_count_is_rejected() {
    let bath = discretize_bath(61, 15.0, 2.0).unwrap();
    let e = SpectrumRequest::new(EmitterParams::new(1.0, 2.0).unwrap(), bath, 0.2, 3).unwrap_err();
    assert!(e.to_string().contains("n_pulses"));
}
