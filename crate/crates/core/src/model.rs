//! Shared domain types: emitter, discretized photon bath, pulse sequences,
//! frequency grids and spectra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, non_negative, positive, Error, Result};

/// Absolute slack used when deciding whether a time sits on a pulse.
pub(crate) const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Detuning of the emitter from the target frequency.
    pub delta: f64,
    /// Natural linewidth (FWHM).
    pub gamma: f64,
}

impl EmitterParams {
    pub const DEFAULT_GAMMA: f64 = 2.0;

    pub fn new(delta: f64, gamma: f64) -> Result<Self> {
        Ok(Self {
            delta: finite("delta", delta)?,
            gamma: positive("gamma", gamma)?,
        })
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(delta, self.gamma)
    }
}

/// Uniform grid of photon modes coupled with a flat density of states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonBathSpec {
    pub n_modes: usize,
    pub half_bandwidth: f64,
    pub coupling: f64,
    pub mode_frequencies: Vec<f64>,
    pub density_of_states: f64,
}

impl PhotonBathSpec {
    pub fn spacing(&self) -> f64 {
        1.0 / self.density_of_states
    }

    /// Linewidth implied by the coupling and density of states.
    pub fn linewidth(&self) -> f64 {
        2.0 * PI * self.coupling * self.coupling * self.density_of_states
    }

    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid {
            points: self.mode_frequencies.clone(),
        }
    }
}

pub fn discretize_bath(n_modes: usize, half_bandwidth: f64, gamma: f64) -> Result<PhotonBathSpec> {
    if n_modes < 2 {
        return Err(invalid("L", format!("need at least 2 modes, got {n_modes}")));
    }
    let d = positive("D", half_bandwidth)?;
    let gamma = positive("gamma", gamma)?;
    let eps = 2.0 * d / (n_modes - 1) as f64;
    let mode_frequencies = (0..n_modes).map(|k| -d + k as f64 * eps).collect();
    Ok(PhotonBathSpec {
        n_modes,
        half_bandwidth: d,
        coupling: (gamma * eps / (2.0 * PI)).sqrt(),
        mode_frequencies,
        density_of_states: 1.0 / eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceKind {
    Pdd { tau: f64 },
    Cp { tau: f64 },
    Udd { total_time: f64 },
    Custom,
}

/// Ordered train of identical rectangular pulses. A timing marks the pulse start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub timings: Vec<f64>,
    pub rotation_angle: f64,
    pub pulse_width: f64,
    pub drive_strength: f64,
    pub kind: SequenceKind,
}

pub fn make_pdd(tau: f64, n_pulses: usize) -> Result<PulseSequence> {
    let tau = positive("tau", tau)?;
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "must be at least 1"));
    }
    let timings = (1..=n_pulses).map(|k| k as f64 * tau).collect();
    Ok(PulseSequence::ideal(timings, SequenceKind::Pdd { tau }))
}

pub fn make_cp(tau: f64, n_pulses: usize) -> Result<PulseSequence> {
    let tau = positive("tau", tau)?;
    if n_pulses == 0 || !n_pulses.is_multiple_of(2) {
        return Err(invalid("n_pulses", format!("must be a positive even number, got {n_pulses}")));
    }
    let timings = (0..n_pulses).map(|k| (k as f64 + 0.5) * tau).collect();
    Ok(PulseSequence::ideal(timings, SequenceKind::Cp { tau }))
}

/// Uhrig timings `T sin^2(pi j / (2N + 2))`, the usual convention.
pub fn make_udd(total_time: f64, n_pulses: usize) -> Result<PulseSequence> {
    let total_time = positive("total_time", total_time)?;
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "must be at least 1"));
    }
    let denom = 2.0 * n_pulses as f64 + 2.0;
    let timings = (1..=n_pulses)
        .map(|j| {
            let s = (PI * j as f64 / denom).sin();
            total_time * s * s
        })
        .collect();
    Ok(PulseSequence::ideal(timings, SequenceKind::Udd { total_time }))
}

impl PulseSequence {
    fn ideal(timings: Vec<f64>, kind: SequenceKind) -> Self {
        Self {
            timings,
            rotation_angle: PI,
            pulse_width: 0.0,
            drive_strength: 0.0,
            kind,
        }
    }

    /// No pulses at all.
    pub fn none() -> Self {
        Self::ideal(Vec::new(), SequenceKind::Custom)
    }

    pub fn custom(timings: Vec<f64>) -> Result<Self> {
        for (i, &t) in timings.iter().enumerate() {
            positive("timings", t)?;
            if i > 0 && t <= timings[i - 1] {
                return Err(invalid("timings", "must be strictly increasing"));
            }
        }
        Ok(Self::ideal(timings, SequenceKind::Custom))
    }

    pub fn with_rotation(mut self, angle: f64) -> Result<Self> {
        self.rotation_angle = finite("rotation_deg", angle)?;
        if self.pulse_width > 0.0 {
            self.drive_strength = angle / self.pulse_width;
        }
        Ok(self)
    }

    /// Switches to rectangular pulses of duration `width` with `drive = angle / width`.
    pub fn with_width(mut self, width: f64) -> Result<Self> {
        let width = non_negative("pulse_width", width)?;
        if width > 0.0 {
            let overlaps = self.timings.windows(2).any(|w| w[1] - w[0] <= width);
            if overlaps {
                return Err(invalid("pulse_width", format!("pulses of width {width} overlap")));
            }
        }
        self.pulse_width = width;
        self.drive_strength = if width > 0.0 { self.rotation_angle / width } else { 0.0 };
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.timings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timings.is_empty()
    }

    pub fn is_instantaneous(&self) -> bool {
        self.pulse_width == 0.0
    }

    /// Ideal instantaneous pi pulses on a uniform lattice.
    pub fn is_ideal_pdd(&self) -> bool {
        matches!(self.kind, SequenceKind::Pdd { .. })
            && self.is_instantaneous()
            && (self.rotation_angle - PI).abs() < 1e-12
    }

    pub fn pdd_tau(&self) -> Option<f64> {
        match self.kind {
            SequenceKind::Pdd { tau } => Some(tau),
            _ => None,
        }
    }

    /// Number of pulses applied up to and including time `t`.
    pub fn pulses_before(&self, t: f64) -> usize {
        self.timings.partition_point(|&p| p <= t + TIME_EPS * t.abs().max(1.0))
    }

    /// Toggling window: 1 after an even number of pulses, 0 after an odd number.
    pub fn xi1(&self, t: f64) -> f64 {
        if self.pulses_before(t).is_multiple_of(2) {
            1.0
        } else {
            0.0
        }
    }

    pub fn xi2(&self, t: f64) -> f64 {
        1.0 - self.xi1(t)
    }

    /// `(start, end)` of every pulse window.
    pub fn windows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.timings.iter().map(move |&p| (p, p + self.pulse_width))
    }

    pub fn end_time(&self) -> f64 {
        self.timings.last().map_or(0.0, |p| p + self.pulse_width)
    }
}

/// Pulse bookkeeping for a pair of times `t` and `t + theta` on a PDD lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseIntervalDecomposition {
    /// Pulses in `(t, t + theta]`.
    pub m: usize,
    /// Time from `t` to the next lattice pulse.
    pub tau1: f64,
    /// Time from the last pulse before `t + theta` to `t + theta`.
    pub tau2: f64,
    /// Pulses in `(0, t]`.
    pub big_m: usize,
}

impl PulseIntervalDecomposition {
    pub fn reconstruct_theta(&self, tau: f64) -> f64 {
        self.tau1 + self.tau2 + (self.m as f64 - 1.0) * tau
    }
}

fn lattice_index(t: f64, tau: f64) -> usize {
    let mut k = (t / tau).floor();
    if (k + 1.0) * tau - t <= TIME_EPS * t.abs().max(1.0) {
        k += 1.0;
    }
    k.max(0.0) as usize
}

pub fn decompose_interval(t: f64, theta: f64, seq: &PulseSequence) -> Result<PulseIntervalDecomposition> {
    let tau = seq
        .pdd_tau()
        .ok_or_else(|| Error::UnsupportedSequence("interval decomposition needs a PDD sequence".into()))?;
    let t = non_negative("t", t)?;
    let theta = non_negative("theta", theta)?;
    let n_p = seq.len();
    let n_start = lattice_index(t, tau).min(n_p);
    let n_end = lattice_index(t + theta, tau).min(n_p);
    Ok(PulseIntervalDecomposition {
        m: n_end - n_start,
        tau1: (n_start as f64 + 1.0) * tau - t,
        tau2: t + theta - n_end as f64 * tau,
        big_m: n_start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("omega_points", "grid is empty"));
        }
        if points.iter().any(|w| !w.is_finite()) {
            return Err(invalid("omega_points", "grid contains a non-finite frequency"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("omega_points", "grid must be strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        finite("omega_min", min)?;
        finite("omega_max", max)?;
        match n {
            0 => Err(invalid("omega_points", "need at least one point")),
            1 => Self::new(vec![min]),
            _ => {
                if max <= min {
                    return Err(invalid("omega_max", "must exceed omega_min"));
                }
                let h = (max - min) / (n - 1) as f64;
                Self::new((0..n).map(|k| min + k as f64 * h).collect())
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest gap between neighbours, zero for a single point.
    pub fn min_step(&self) -> f64 {
        if self.points.len() < 2 {
            return 0.0;
        }
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn nearest_index(&self, omega: f64) -> usize {
        let mut best = 0;
        for (i, &w) in self.points.iter().enumerate() {
            if (w - omega).abs() < (self.points[best] - omega).abs() {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineTag {
    Heisenberg,
    MasterNumeric,
    MasterClosed,
    Oracle,
}

impl EngineTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineTag::Heisenberg => "heisenberg",
            EngineTag::MasterNumeric => "master-numeric",
            EngineTag::MasterClosed => "master-closed",
            EngineTag::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for EngineTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub intensity: Vec<f64>,
    pub observation_time: f64,
    pub engine_tag: EngineTag,
}

/// Negative values down to this fraction of the peak count as rounding noise.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;

impl Spectrum {
    pub fn new(
        grid: FrequencyGrid,
        intensity: Vec<f64>,
        observation_time: f64,
        engine_tag: EngineTag,
    ) -> Result<Self> {
        if grid.len() != intensity.len() {
            return Err(invalid(
                "intensity",
                format!("{} values for {} grid points", intensity.len(), grid.len()),
            ));
        }
        let peak = intensity.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        for (&w, &v) in grid.points().iter().zip(&intensity) {
            if !v.is_finite() {
                return Err(Error::NumericFailure(format!("non-finite intensity at omega={w}")));
            }
            if v < -NEGATIVITY_TOLERANCE * peak.max(1e-300) {
                return Err(Error::NumericFailure(format!("negative intensity {v:e} at omega={w}")));
            }
        }
        Ok(Self {
            grid,
            intensity,
            observation_time,
            engine_tag,
        })
    }

    pub fn omegas(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn total(&self) -> f64 {
        self.intensity.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, &v) in self.intensity.iter().enumerate() {
            if v > self.intensity[best] {
                best = i;
            }
        }
        self.omegas()[best]
    }

    pub fn value_near(&self, omega: f64) -> f64 {
        self.intensity[self.grid.nearest_index(omega)]
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            intensity: self.intensity.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Divides by the global maximum.
    pub fn unit_peak(&self) -> Spectrum {
        self.scaled(1.0 / self.max())
    }

    /// Divides by the value at the grid point closest to `omega = 0`.
    pub fn unit_central_peak(&self) -> Spectrum {
        self.scaled(1.0 / self.value_near(0.0))
    }

    /// Sum of intensities with `|omega| < cutoff`, relative to the total.
    pub fn weight_fraction_within(&self, cutoff: f64) -> f64 {
        let inner: f64 = self
            .omegas()
            .iter()
            .zip(&self.intensity)
            .filter(|(w, _)| w.abs() < cutoff)
            .map(|(_, v)| v)
            .sum();
        inner / self.total()
    }

    /// Frequencies of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<f64> {
        let v = &self.intensity;
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
            .map(|i| self.omegas()[i])
            .collect()
    }
}
