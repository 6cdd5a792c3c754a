use proptest::prelude::*;
use pulsebath::oracle::{basis_dimension, simulate, ExactState, ExactSystem, FockBasis, DEFAULT_CAP};
use pulsebath::{discretize_bath, make_pdd, EmitterParams, PulseSequence};

fn system(l: usize, n_max: usize, delta: f64) -> ExactSystem {
    let bath = discretize_bath(l, 6.0, 2.0).unwrap();
    ExactSystem::new(FockBasis::build(l, n_max, DEFAULT_CAP).unwrap(), &EmitterParams::new(delta, 2.0).unwrap(), &bath).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn basis_respects_excitation_cap(l in 1usize..7, n_max in 1usize..5) {
        let b = FockBasis::build(l, n_max, DEFAULT_CAP).unwrap();
        prop_assert_eq!(b.dimension() as u128, basis_dimension(l, n_max));
        for i in 0..b.dimension() {
            let (e, occ) = b.state(i);
            prop_assert!(usize::from(e) + occ.iter().sum::<u32>() as usize <= n_max);
        }
    }

    #[test]
    fn evolution_is_unitary(l in 2usize..8, delta in -4.0..4.0f64, dt in 0.01..2.0f64, angle in -7.0..7.0f64) {
        let sys = system(l, 3, delta);
        let mut st = ExactState::initial(sys.basis());
        sys.propagate(&mut st, dt, 0.0).unwrap();
        let before = sys.excitation_number(&st);
        sys.propagate(&mut st, dt, 0.0).unwrap();
        prop_assert!((sys.excitation_number(&st) - before).abs() < 1e-10);
        let norm = st.norm_sqr();
        sys.apply_rotation(&mut st, angle);
        prop_assert!((st.norm_sqr() + st.leakage - norm).abs() < 1e-14);
        sys.propagate(&mut st, dt, 25.0).unwrap();
        prop_assert!((st.norm_sqr() + st.leakage - 1.0).abs() < 1e-9);
    }
}

#[test]
fn full_run_keeps_norm_without_leakage() {
    let bath = discretize_bath(9, 6.0, 2.0).unwrap();
    let seq = make_pdd(0.3, 4).unwrap();
    let run = simulate(&EmitterParams::new(2.0, 2.0).unwrap(), &bath, &seq, 1.5, None, DEFAULT_CAP).unwrap();
    assert_eq!(run.max_excitations, 5);
    assert!((run.norm - 1.0).abs() < 1e-9);
    assert!(run.leakage < 1e-12);
}

/// Single-excitation amplitudes by RK4 on `i dc/dt = H c`.
fn single_excitation_reference(freqs: &[f64], g: f64, delta: f64, t: f64) -> f64 {
    use num_complex::Complex64 as C64;
    let rhs = |c: &[C64]| -> Vec<C64> {
        let mi = C64::new(0.0, -1.0);
        let mut out = Vec::with_capacity(c.len());
        let bath: C64 = c[1..].iter().sum();
        out.push(mi * (0.5 * delta * c[0] + g * bath));
        out.extend(c[1..].iter().zip(freqs).map(|(ck, w)| mi * ((w - 0.5 * delta) * ck + g * c[0])));
        out
    };
    let steps = 20_000;
    let h = t / steps as f64;
    let mut c = vec![C64::new(0.0, 0.0); freqs.len() + 1];
    c[0] = C64::new(1.0, 0.0);
    let axpy = |c: &[C64], k: &[C64], s: f64| -> Vec<C64> { c.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = rhs(&c);
        let k2 = rhs(&axpy(&c, &k1, 0.5 * h));
        let k3 = rhs(&axpy(&c, &k2, 0.5 * h));
        let k4 = rhs(&axpy(&c, &k3, h));
        for i in 0..c.len() {
            c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    c[0].norm_sqr()
}

#[test]
fn free_decay_matches_single_excitation_reference() {
    let bath = discretize_bath(151, 20.0, 2.0).unwrap();
    for (delta, t) in [(0.0, 0.2), (0.0, 0.9), (3.0, 0.5), (-2.0, 1.5)] {
        let em = EmitterParams::new(delta, 2.0).unwrap();
        let run = simulate(&em, &bath, &PulseSequence::none(), t, Some(1), DEFAULT_CAP).unwrap();
        let expect = single_excitation_reference(&bath.mode_frequencies, bath.coupling, delta, t);
        assert!((run.excited_population - expect).abs() < 1e-8, "t={t}: {} vs {expect}", run.excited_population);
        // broad band: close to exponential decay
        assert!((run.excited_population / (-2.0 * t).exp() - 1.0).abs() < 0.06);
    }
}

#[test]
fn truncation_is_sufficient() {
    let bath = discretize_bath(21, 10.0, 2.0).unwrap();
    let em = EmitterParams::new(3.0, 2.0).unwrap();
    let seq = make_pdd(0.5, 2).unwrap();
    let a = simulate(&em, &bath, &seq, 2.0, Some(3), DEFAULT_CAP).unwrap().spectrum;
    let b = simulate(&em, &bath, &seq, 2.0, Some(4), DEFAULT_CAP).unwrap().spectrum;
    let change = a.intensity.iter().zip(&b.intensity).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(change < 0.01 * b.max());
}

#[test]
fn ideal_pulse_leaks_only_beyond_cap() {
    let sys = system(3, 1, 0.0);
    let mut st = ExactState::initial(sys.basis());
    sys.propagate(&mut st, 0.4, 0.0).unwrap();
    let photon = 1.0 - sys.excited_population(&st);
    sys.apply_rotation(&mut st, std::f64::consts::PI);
    assert!((st.leakage - photon).abs() < 1e-12);
}
