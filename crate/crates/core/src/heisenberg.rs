//! Markovian Heisenberg-picture route to the photon-number spectrum under
//! ideal periodic pi pulses.
//!
//! The emission is split into `M_p + 1` windows: `M_p` full inter-pulse
//! windows of length `tau` and a final window of length `delta_post`. Each
//! window contributes a mode amplitude proportional to the lowering operator
//! at its start, and the spectrum is the quadratic form of these amplitudes
//! with the emitter correlations between window starts. Correlations between
//! windows separated by an odd number of pulses vanish, which removes three of
//! the seven photon-number terms.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, non_negative, positive, Error, Result};
use crate::model::{EmitterParams, EngineTag, PhotonBathSpec, Spectrum};
use crate::parallel;
use crate::quadrature::LegendreRule;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Below this `|omega - delta| * t` the term `sin y - y` is summed as a series.
const SERIES_SWITCH: f64 = 0.1;

const PSI_RTOL: f64 = 1e-8;
const PSI_MAX_PANELS: usize = 1 << 14;

/// `(e^{i a t} - 1) / (i a)`, written without cancellation.
fn phase_integral(a: f64, t: f64) -> C64 {
    if a == 0.0 {
        return C64::new(t, 0.0);
    }
    let half = (0.5 * a * t).sin();
    C64::new((a * t).sin() / a, 2.0 * half * half / a)
}

/// `[e^{2i w tau} - e^{i(w+delta)tau}] / (i(w - delta))`.
pub fn kernel_p(omega_k: f64, delta: f64, tau: f64) -> C64 {
    (I * 2.0 * delta * tau).exp() * phase_integral(omega_k - delta, tau) * (I * (omega_k - delta) * tau).exp()
}

/// `[e^{i w tau} - e^{i delta tau}] / (i(w - delta))`.
pub fn kernel_q(omega_k: f64, delta: f64, tau: f64) -> C64 {
    (I * delta * tau).exp() * phase_integral(omega_k - delta, tau)
}

/// Accumulated memory exponent `G(s) = sum_k g^2 [s/(i x) + (1 - e^{-i x s})/x^2]`
/// with `x = w_k - delta`. Its real part is non-negative.
pub fn memory_exponent(delta: f64, s: f64, bath: &PhotonBathSpec) -> C64 {
    let g2 = bath.coupling * bath.coupling;
    let sum: C64 = bath
        .mode_frequencies
        .iter()
        .map(|&w| {
            let y = (w - delta) * s;
            if y == 0.0 {
                return C64::new(0.5 * s * s, 0.0);
            }
            let half = (0.5 * y).sin() / y;
            let odd = if y.abs() < SERIES_SWITCH {
                let y2 = y * y;
                -y / 6.0 * (1.0 - y2 / 20.0 * (1.0 - y2 / 42.0 * (1.0 - y2 / 72.0)))
            } else {
                (y.sin() - y) / (y * y)
            };
            s * s * C64::new(2.0 * half * half, odd)
        })
        .sum();
    g2 * sum
}

/// Decay exponent accumulated over one free window of length `tau`.
pub fn gamma0(delta: f64, tau: f64, bath: &PhotonBathSpec) -> C64 {
    memory_exponent(delta, tau, bath)
}

/// Instantaneous rate `dG/ds`; its real part tends to `Gamma/2`.
pub fn beta0(delta: f64, s: f64, bath: &PhotonBathSpec) -> C64 {
    let g2 = bath.coupling * bath.coupling;
    let sum: C64 = bath
        .mode_frequencies
        .iter()
        .map(|&w| {
            let x = w - delta;
            if x == 0.0 {
                return C64::new(s, 0.0);
            }
            let half = (0.5 * x * s).sin();
            C64::new((x * s).sin() / x, -2.0 * half * half / x)
        })
        .sum();
    g2 * sum
}

/// Free-window amplitude integral for every bath mode:
/// `Psi_k(s) = int_0^s exp(-i delta t - G(t)) e^{i w_k t} dt`.
pub fn psi_all(elapsed: f64, delta: f64, bath: &PhotonBathSpec) -> Result<Vec<C64>> {
    let elapsed = non_negative("elapsed", elapsed)?;
    let modes = &bath.mode_frequencies;
    if elapsed == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); modes.len()]);
    }
    let rule = LegendreRule::new(8);
    let span = modes
        .iter()
        .map(|w| (w - delta).abs())
        .fold(0.0_f64, f64::max);
    let mut panels = ((span * elapsed / 2.0).ceil() as usize).clamp(1, PSI_MAX_PANELS);
    let mut previous = psi_on_panels(&rule, elapsed, delta, bath, panels);
    loop {
        panels *= 2;
        if panels > PSI_MAX_PANELS {
            return Err(Error::NumericFailure(format!(
                "free-window integral did not converge within {PSI_MAX_PANELS} panels (elapsed={elapsed}, delta={delta})"
            )));
        }
        let current = psi_on_panels(&rule, elapsed, delta, bath, panels);
        let scale = current.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(1e-300);
        let change = current
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        if change <= PSI_RTOL * scale {
            return Ok(current);
        }
        previous = current;
    }
}

fn psi_on_panels(rule: &LegendreRule, elapsed: f64, delta: f64, bath: &PhotonBathSpec, panels: usize) -> Vec<C64> {
    let nodes = rule.composite(0.0, elapsed, panels);
    let envelope = parallel::map_range(nodes.len(), |n| {
        let (s, w) = nodes[n];
        w * (-I * delta * s - memory_exponent(delta, s, bath)).exp()
    });
    parallel::map_range(bath.n_modes, |k| {
        let omega = bath.mode_frequencies[k];
        nodes
            .iter()
            .zip(&envelope)
            .map(|(&(s, _), &e)| e * (I * omega * s).exp())
            .sum()
    })
}

/// Single-mode version of [`psi_all`]; the memory exponent still sums over the whole bath.
pub fn psi(omega_k: f64, elapsed: f64, delta: f64, bath: &PhotonBathSpec) -> Result<C64> {
    let elapsed = non_negative("elapsed", elapsed)?;
    if elapsed == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let rule = LegendreRule::new(8);
    let eval = |panels: usize| -> C64 {
        rule.composite(0.0, elapsed, panels)
            .iter()
            .map(|&(s, w)| w * (I * (omega_k - delta) * s - memory_exponent(delta, s, bath)).exp())
            .sum()
    };
    let mut panels = (((omega_k - delta).abs() * elapsed / 2.0).ceil() as usize).clamp(1, PSI_MAX_PANELS);
    let mut previous = eval(panels);
    loop {
        panels *= 2;
        if panels > PSI_MAX_PANELS {
            return Err(Error::NumericFailure(format!(
                "free-window integral did not converge for omega={omega_k}"
            )));
        }
        let current = eval(panels);
        if (current - previous).norm() <= PSI_RTOL * current.norm().max(1e-300) {
            return Ok(current);
        }
        previous = current;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRequest {
    pub emitter: EmitterParams,
    pub bath: PhotonBathSpec,
    pub tau: f64,
    /// Even number of pulses.
    pub n_pulses: usize,
    /// Time elapsed after the last pulse, in `[0, tau]`.
    pub post_pulse_offset: f64,
}

impl SpectrumRequest {
    pub fn new(emitter: EmitterParams, bath: PhotonBathSpec, tau: f64, n_pulses: usize) -> Result<Self> {
        let req = Self {
            emitter,
            bath,
            tau,
            n_pulses,
            post_pulse_offset: tau,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        self.post_pulse_offset = offset;
        self.validate()?;
        Ok(self)
    }

    pub fn observation_time(&self) -> f64 {
        self.n_pulses as f64 * self.tau + self.post_pulse_offset
    }

    fn validate(&self) -> Result<()> {
        positive("tau", self.tau)?;
        if !self.n_pulses.is_multiple_of(2) {
            return Err(invalid("n_pulses", format!("must be even, got {}", self.n_pulses)));
        }
        let d = non_negative("post_pulse_offset", self.post_pulse_offset)?;
        if d > self.tau * (1.0 + 1e-12) {
            return Err(invalid("post_pulse_offset", format!("must not exceed tau={}, got {d}", self.tau)));
        }
        Ok(())
    }
}

/// Per-window quantities shared by every mode.
#[derive(Debug, Clone)]
pub struct SpectralKernels {
    pub p: Vec<C64>,
    pub q: Vec<C64>,
    pub gamma0: C64,
    /// Free-window integral over the final window.
    pub psi: Vec<C64>,
    delta: f64,
    tau: f64,
}

impl SpectralKernels {
    pub fn new(req: &SpectrumRequest) -> Result<Self> {
        req.validate()?;
        let delta = req.emitter.delta;
        let modes = &req.bath.mode_frequencies;
        Ok(Self {
            p: modes.iter().map(|&w| kernel_p(w, delta, req.tau)).collect(),
            q: modes.iter().map(|&w| kernel_q(w, delta, req.tau)).collect(),
            gamma0: gamma0(delta, req.tau, &req.bath),
            psi: psi_all(req.post_pulse_offset, delta, &req.bath)?,
            delta,
            tau: req.tau,
        })
    }

    pub fn beta0(&self, s: f64, bath: &PhotonBathSpec) -> C64 {
        beta0(self.delta, s, bath)
    }

    /// Rate at elapsed time `s` after the last pulse.
    pub fn beta_mp(&self, s: f64, bath: &PhotonBathSpec) -> C64 {
        beta0(self.delta, s, bath)
    }

    /// Lowering-operator propagation factor over one full window.
    fn window_factor(&self) -> C64 {
        (-I * self.delta * self.tau - self.gamma0).exp()
    }
}

/// Photon-number contributions for one mode. Terms 2, 5 and 6 pair windows of
/// opposite parity and are identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ModeTerms {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n5: f64,
    pub n6: f64,
    pub n7: f64,
}

impl ModeTerms {
    pub fn total(&self) -> f64 {
        self.n1 + self.n2 + self.n3 + self.n4 + self.n5 + self.n6 + self.n7
    }
}

/// Excited population at the start of each window (index `0..=n_pulses`).
pub fn window_start_populations(n_pulses: usize, gamma0: C64) -> Vec<f64> {
    let survival = (-2.0 * gamma0.re).exp();
    let mut pops = Vec::with_capacity(n_pulses + 1);
    let mut rho = 1.0;
    for _ in 0..=n_pulses {
        pops.push(rho);
        rho = 1.0 - rho * survival;
    }
    pops
}

pub fn mode_terms(req: &SpectrumRequest, kernels: &SpectralKernels, k: usize) -> ModeTerms {
    let m = req.n_pulses;
    let tau = req.tau;
    let omega = req.bath.mode_frequencies[k];
    let g2 = req.bath.coupling * req.bath.coupling;
    let decay = kernels.gamma0.re;
    let pops = window_start_populations(m, kernels.gamma0);
    let e = kernels.window_factor();

    // amplitude of each window referenced to the lowering operator at its start
    let even_amp = |j: usize| kernels.q[k] * e * (I * omega * j as f64 * tau).exp();
    let odd_amp = |l: usize| kernels.p[k] * e * (I * omega * 2.0 * l as f64 * tau).exp();
    let corr = |i: usize, j: usize| pops[i.min(j)] * (-(i.abs_diff(j) as f64) * decay).exp();

    let pairs = |amp: &dyn Fn(usize) -> C64, idx: &[usize], labels: &dyn Fn(usize) -> usize| -> f64 {
        let mut sum = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            let ai = amp(i);
            sum += ai.norm_sqr() * corr(labels(i), labels(i));
            for &j in &idx[..a] {
                sum += 2.0 * (ai.conj() * amp(j)).re * corr(labels(i), labels(j));
            }
        }
        sum
    };

    let evens: Vec<usize> = (0..m).step_by(2).collect();
    let odds: Vec<usize> = (0..m / 2).collect();
    let n7 = g2 * pairs(&|j| even_amp(j), &evens, &|j| j);
    let n4 = g2 * pairs(&|l| odd_amp(l), &odds, &|l| 2 * l + 1);

    let last = kernels.psi[k] * (I * omega * m as f64 * tau).exp();
    let n1 = g2 * last.norm_sqr() * pops[m];
    let n3 = g2
        * 2.0
        * evens
            .iter()
            .map(|&j| (last.conj() * even_amp(j)).re * corr(m, j))
            .sum::<f64>();

    ModeTerms {
        n1,
        n3,
        n4,
        n7,
        ..ModeTerms::default()
    }
}

pub fn spectrum_terms(req: &SpectrumRequest) -> Result<Vec<ModeTerms>> {
    let kernels = SpectralKernels::new(req)?;
    Ok(parallel::map_range(req.bath.n_modes, |k| mode_terms(req, &kernels, k)))
}

pub fn spectrum_heisenberg(req: &SpectrumRequest) -> Result<Spectrum> {
    let terms = spectrum_terms(req)?;
    Spectrum::new(
        req.bath.grid(),
        terms.iter().map(ModeTerms::total).collect(),
        req.observation_time(),
        EngineTag::Heisenberg,
    )
}

/// Spectrum without pulses after emitting for time `t` from the excited state.
pub fn free_spectrum(emitter: &EmitterParams, bath: &PhotonBathSpec, t: f64) -> Result<Spectrum> {
    let t = positive("t", t)?;
    let g2 = bath.coupling * bath.coupling;
    let psi = psi_all(t, emitter.delta, bath)?;
    Spectrum::new(
        bath.grid(),
        psi.iter().map(|z| g2 * z.norm_sqr()).collect(),
        t,
        EngineTag::Heisenberg,
    )
}

/// Leading corrections from the finite mode spacing and the finite band edge.
pub fn discretization_error_bound(bath: &PhotonBathSpec, delta: f64, t: f64) -> Result<f64> {
    let t = positive("t", t)?;
    let margin = bath.half_bandwidth - delta.abs();
    if margin <= 0.0 {
        return Err(invalid("D", format!("half bandwidth must exceed |delta|={}", delta.abs())));
    }
    let g2 = bath.coupling * bath.coupling;
    Ok(g2 * bath.spacing() / margin + g2 / (margin * t))
}
