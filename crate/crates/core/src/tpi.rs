//! Two-photon interference between photons of two pulse-controlled emitters.

use num_complex::Complex64 as C64;

use crate::error::{finite, non_negative, positive, Error, Result};
use crate::master::{corr_f, corr_numeric, excited_after_reset, rho_excited_in, Evolution};
use crate::model::{EmitterParams, PulseIntervalDecomposition, PulseSequence, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TPIPair {
    pub delta1: f64,
    pub delta2: f64,
    pub delta21: f64,
    pub gamma: f64,
}

impl TPIPair {
    pub fn new(delta1: f64, delta2: f64, gamma: f64) -> Result<Self> {
        let delta1 = finite("delta", delta1)?;
        let delta2 = finite("delta2", delta2)?;
        Ok(Self {
            delta1,
            delta2,
            delta21: delta2 - delta1,
            gamma: positive("gamma", gamma)?,
        })
    }

    pub fn swapped(&self) -> Self {
        Self {
            delta1: self.delta2,
            delta2: self.delta1,
            delta21: -self.delta21,
            gamma: self.gamma,
        }
    }

    fn emitters(&self) -> (EmitterParams, EmitterParams) {
        (
            EmitterParams {
                delta: self.delta1,
                gamma: self.gamma,
            },
            EmitterParams {
                delta: self.delta2,
                gamma: self.gamma,
            },
        )
    }
}

/// How the single-emitter correlators are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlator {
    /// Closed forms for ideal PDD, regression otherwise.
    Auto,
    /// Always quantum regression.
    Numeric,
}

fn phi(t: f64, theta: f64, seq: &PulseSequence, em: &EmitterParams, how: Correlator) -> Result<C64> {
    if how == Correlator::Auto && seq.is_ideal_pdd() {
        Ok(rho_excited_in(t, seq, em.gamma)? * corr_f(t, theta, seq, em)?)
    } else {
        corr_numeric(t, theta, seq, em)
    }
}

/// Coincidence term `G34` and its normalization `N34`.
pub fn g34_parts(t: f64, theta: f64, seq: &PulseSequence, pair: &TPIPair, how: Correlator) -> Result<(f64, f64)> {
    non_negative("theta", theta)?;
    let (e1, e2) = pair.emitters();
    let a1 = phi(t, 0.0, seq, &e1, how)?.re;
    let a2 = phi(t, 0.0, seq, &e2, how)?.re;
    let b1 = phi(t + theta, 0.0, seq, &e1, how)?.re;
    let b2 = phi(t + theta, 0.0, seq, &e2, how)?.re;
    let c1 = phi(t, theta, seq, &e1, how)?;
    let c2 = phi(t, theta, seq, &e2, how)?;
    let g = 0.25 * (b1 * a2 + a1 * b2 - 2.0 * (c1.conj() * c2).re);
    let n = 0.25 * (a1 + a2) * (b1 + b2);
    Ok((g, n))
}

pub fn g34(t: f64, theta: f64, seq: &PulseSequence, pair: &TPIPair) -> Result<f64> {
    let (g, n) = g34_parts(t, theta, seq, pair, Correlator::Auto)?;
    Ok(g / n)
}

pub fn g34_numeric(t: f64, theta: f64, seq: &PulseSequence, pair: &TPIPair) -> Result<f64> {
    let (g, n) = g34_parts(t, theta, seq, pair, Correlator::Numeric)?;
    Ok(g / n)
}

/// Stationary closed form assuming `rho_e = 1/2` and `|f| = 1`.
pub fn g34_stationary(decomp: &PulseIntervalDecomposition, tau: f64, pair: &TPIPair) -> f64 {
    if decomp.m % 2 == 1 {
        0.5
    } else {
        0.5 * (1.0 - (pair.delta21 * (decomp.tau1 + decomp.tau2 - tau)).cos())
    }
}

/// Split `theta = n tau + rest` with `rest` in `[0, tau)`.
fn lattice_split(theta: f64, tau: f64) -> (u64, f64) {
    let mut n = (theta / tau).floor();
    if (n + 1.0) * tau - theta <= TIME_EPS * theta.max(1.0) {
        n += 1.0;
    }
    (n.max(0.0) as u64, (theta - n * tau).max(0.0))
}

/// Leading-order average over `t` at small `tau`.
pub fn g34_time_averaged(theta: f64, tau: f64) -> f64 {
    let (n, rest) = lattice_split(theta, tau);
    if n % 2 == 0 {
        rest / (2.0 * tau)
    } else {
        0.5 * (1.0 - rest / tau)
    }
}

/// Average of `g34` over `t` in `[t_start, t_start + 2 tau)` by the midpoint rule.
pub fn g34_time_average_numeric(theta: f64, t_start: f64, seq: &PulseSequence, pair: &TPIPair, samples: usize) -> Result<f64> {
    let tau = seq
        .pdd_tau()
        .ok_or_else(|| Error::UnsupportedSequence("time averages need a PDD period".into()))?;
    let h = 2.0 * tau / samples as f64;
    let mut sum = 0.0;
    for i in 0..samples {
        sum += g34_numeric(t_start + (i as f64 + 0.5) * h, theta, seq, pair)?;
    }
    Ok(sum / samples as f64)
}

/// Without control: `sin^2(delta21 theta / 2)`.
pub fn g34_no_pulses(theta: f64, pair: &TPIPair) -> f64 {
    (0.5 * pair.delta21 * theta).sin().powi(2)
}

/// Leading-order single-emitter correlator after the stationary regime sets in.
pub fn g2_single(theta: f64, seq: &PulseSequence, gamma: f64) -> Result<f64> {
    let tau = seq
        .pdd_tau()
        .ok_or_else(|| Error::UnsupportedSequence("parity by delay needs a PDD period".into()))?;
    let theta = non_negative("theta", theta)?;
    let (n, _) = lattice_split(theta, tau);
    let e = (-gamma * theta).exp();
    Ok(if n % 2 == 0 { 0.25 * (1.0 - e) } else { 0.25 * (1.0 + e) })
}

/// `<sigma+(t) sigma+(t+theta) sigma-(t+theta) sigma-(t)>` by regression.
pub fn g2_numeric(t: f64, theta: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<f64> {
    let rho_e = Evolution::new(seq, *emitter).density_at(t)?.rho_ee;
    Ok(rho_e * excited_after_reset(t, theta, seq, emitter)?)
}

/// Parity of the pulse count in `(t, t + theta]`, counted from the actual timings.
pub fn separation_is_odd(t: f64, theta: f64, seq: &PulseSequence) -> bool {
    (seq.pulses_before(t + theta) - seq.pulses_before(t)) % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{decompose_interval, make_pdd};

    #[test]
    fn stationary_examples() {
        let pair = TPIPair::new(0.0, 2.0, 2.0).unwrap();
        let seq = make_pdd(0.2, 100).unwrap();
        let d = decompose_interval(0.5, 0.2, &seq).unwrap();
        assert_eq!(d.m, 1);
        assert_eq!(g34_stationary(&d, 0.2, &pair), 0.5);
        let d = PulseIntervalDecomposition {
            m: 2,
            tau1: 0.15,
            tau2: 0.05,
            big_m: 3,
        };
        assert!(g34_stationary(&d, 0.2, &pair).abs() < 1e-15);
        let d = PulseIntervalDecomposition { tau2: 0.15, ..d };
        assert!((g34_stationary(&d, 0.2, &pair) - 0.5 * (1.0 - 0.2f64.cos())).abs() < 1e-15);
        assert!((g34_stationary(&d, 0.2, &pair) - 0.00997).abs() < 1e-5);
    }

    #[test]
    fn averaged_examples() {
        assert_eq!(g34_time_averaged(0.8, 0.2), 0.0);
        assert!((g34_time_averaged(0.6, 0.2) - 0.5).abs() < 1e-12);
        let n = 100_000;
        let mean: f64 = (0..n).map(|i| g34_time_averaged((i as f64 + 0.5) * 0.4 / n as f64, 0.2)).sum::<f64>() / n as f64;
        assert!((mean - 0.25).abs() < 1e-6);
    }

    #[test]
    fn no_pulse_examples() {
        let pair = TPIPair::new(1.0, 2.0, 2.0).unwrap();
        assert_eq!(g34_no_pulses(0.0, &pair), 0.0);
        assert!((g34_no_pulses(std::f64::consts::PI, &pair) - 1.0).abs() < 1e-15);
        // forty full periods of 2 pi / delta21
        let n = 40_000;
        let h = 80.0 * std::f64::consts::PI / n as f64;
        let mean: f64 = (0..n).map(|i| g34_no_pulses((i as f64 + 0.5) * h, &pair)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn g2_examples() {
        let seq = make_pdd(0.2, 10).unwrap();
        assert_eq!(g2_single(0.0, &seq, 2.0).unwrap(), 0.0);
        assert!((g2_single(1e3, &seq, 2.0).unwrap() - 0.25).abs() < 1e-15);
        let v = g2_single(0.2 + 1e-9, &seq, 2.0).unwrap();
        assert!((v - 0.25 * (1.0 + (-0.4f64).exp())).abs() < 1e-8);
        let v = g2_single(0.2 - 1e-9, &seq, 2.0).unwrap();
        assert!((v - 0.25 * (1.0 - (-0.4f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn identical_emitters_on_same_interval() {
        let pair = TPIPair::new(1.5, 1.5, 2.0).unwrap();
        let seq = make_pdd(0.2, 40).unwrap();
        assert!(g34(3.05, 0.1, &seq, &pair).unwrap().abs() < 1e-14);
        assert!(g34(3.05, 0.0, &seq, &pair).unwrap().abs() < 1e-14);
        assert!(g34(0.3, 0.7, &PulseSequence::none(), &pair).unwrap().abs() < 1e-14);
    }

    #[test]
    fn odd_separation_is_half() {
        let pair = TPIPair::new(0.0, 1.0, 2.0).unwrap();
        let seq = make_pdd(0.1, 100).unwrap();
        let v = g34(5.03, 0.1, &seq, &pair).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!(separation_is_odd(5.03, 0.1, &seq));
    }
}
