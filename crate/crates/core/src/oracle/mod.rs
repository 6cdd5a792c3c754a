//! Exact wavefunction propagation of the emitter and a discretized bath in a
//! truncated total-excitation basis.

pub mod basis;
pub mod chebyshev;

use num_complex::Complex64 as C64;

use crate::error::{invalid, positive, Error, Result};
use crate::model::{EmitterParams, EngineTag, PhotonBathSpec, PulseSequence, Spectrum, TIME_EPS};
use crate::parallel;

pub use basis::{basis_dimension, FockBasis, DEFAULT_CAP};
use chebyshev::HermitianAction;

/// Chebyshev coefficient cutoff per step.
pub const STEP_TOLERANCE: f64 = 1e-13;
/// Largest accepted drift of `norm^2 + leakage` away from one.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactState {
    pub amplitudes: Vec<C64>,
    pub time: f64,
    /// Probability pushed out of the truncated basis by ideal pulses.
    pub leakage: f64,
}

impl ExactState {
    /// Excited emitter, photon vacuum.
    pub fn initial(basis: &FockBasis) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dimension()];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self {
            amplitudes,
            time: 0.0,
            leakage: 0.0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Sparse RWA Hamiltonian on a [`FockBasis`], with an optional resonant drive.
#[derive(Debug, Clone)]
pub struct ExactSystem {
    basis: FockBasis,
    coupling: f64,
    diagonal: Vec<f64>,
    /// For excited row `i`, the ground states reached by emitting into mode `k`, at `i * L + k`.
    emit: Vec<u32>,
    /// `n_k + 1` for the matching `emit` entry.
    emit_occ: Vec<u8>,
    /// Ground rows: excited states reached by absorbing one photon.
    absorb_ptr: Vec<u32>,
    absorb_idx: Vec<u32>,
    absorb_occ: Vec<u8>,
    /// Same photons, other emitter state; `u32::MAX` when outside the basis.
    partner: Vec<u32>,
    /// Gershgorin bounds without drive.
    bounds: (f64, f64),
}

const NO_PARTNER: u32 = u32::MAX;

impl ExactSystem {
    pub fn new(basis: FockBasis, emitter: &EmitterParams, bath: &PhotonBathSpec) -> Result<Self> {
        if bath.n_modes != basis.n_modes() {
            return Err(invalid("L", "bath and basis disagree on the number of modes"));
        }
        if basis.dimension() >= NO_PARTNER as usize {
            return Err(Error::CapacityExceeded {
                dimension: basis.dimension() as u128,
                cap: NO_PARTNER as usize - 1,
            });
        }
        let l = basis.n_modes();
        let dim = basis.dimension();
        let n_exc = basis.n_excited();
        let omegas = &bath.mode_frequencies;
        let mut diagonal = vec![0.0; dim];
        let mut partner = vec![NO_PARTNER; dim];
        let mut emit = vec![0u32; n_exc * l];
        let mut emit_occ = vec![0u8; n_exc * l];
        let mut absorb_count = vec![0u32; dim - n_exc + 1];
        let mut modes = Vec::with_capacity(basis.max_excitations() + 1);
        for i in 0..dim {
            let (excited, n, rank) = basis.locate(i);
            let photons = basis.sector_photons(excited, n, rank);
            let energy: f64 = photons.iter().map(|&k| omegas[k as usize]).sum();
            diagonal[i] = energy + if excited { 0.5 } else { -0.5 } * emitter.delta;
            if n <= basis.max_photons(!excited) {
                partner[i] = (basis.sector_offset(!excited, n) + rank) as u32;
            }
            if !excited {
                continue;
            }
            for k in 0..l as u16 {
                modes.clear();
                modes.extend_from_slice(photons);
                let at = modes.partition_point(|&m| m <= k);
                modes.insert(at, k);
                let occ = modes.iter().filter(|&&m| m == k).count();
                let j = basis
                    .index(false, &modes)
                    .ok_or_else(|| Error::NumericFailure("emission left the basis".into()))?;
                emit[i * l + k as usize] = j as u32;
                emit_occ[i * l + k as usize] = occ as u8;
                absorb_count[j - n_exc + 1] += 1;
            }
        }
        for r in 1..absorb_count.len() {
            absorb_count[r] += absorb_count[r - 1];
        }
        let absorb_ptr = absorb_count;
        let mut fill = absorb_ptr.clone();
        let mut absorb_idx = vec![0u32; emit.len()];
        let mut absorb_occ = vec![0u8; emit.len()];
        for i in 0..n_exc {
            for k in 0..l {
                let j = emit[i * l + k] as usize - n_exc;
                let slot = fill[j] as usize;
                absorb_idx[slot] = i as u32;
                absorb_occ[slot] = emit_occ[i * l + k];
                fill[j] += 1;
            }
        }
        let coupling = bath.coupling;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..dim {
            let radius: f64 = if i < n_exc {
                emit_occ[i * l..(i + 1) * l].iter().map(|&o| (o as f64).sqrt()).sum()
            } else {
                let j = i - n_exc;
                absorb_occ[absorb_ptr[j] as usize..absorb_ptr[j + 1] as usize]
                    .iter()
                    .map(|&o| (o as f64).sqrt())
                    .sum()
            };
            lo = lo.min(diagonal[i] - coupling * radius);
            hi = hi.max(diagonal[i] + coupling * radius);
        }
        Ok(Self {
            basis,
            coupling,
            diagonal,
            emit,
            emit_occ,
            absorb_ptr,
            absorb_idx,
            absorb_occ,
            partner,
            bounds: (lo, hi),
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// Free (`drive = 0`) or driven evolution over `dt`.
    pub fn propagate(&self, state: &mut ExactState, dt: f64, drive: f64) -> Result<()> {
        let dt = positive("dt", dt)?;
        let before = state.norm_sqr();
        let op = Driven { sys: self, drive };
        chebyshev::propagate(&op, &mut state.amplitudes, dt, STEP_TOLERANCE)?;
        let after = state.norm_sqr();
        if !after.is_finite() || (after - before).abs() > NORM_TOLERANCE {
            return Err(Error::NumericFailure(format!(
                "norm drifted from {before} to {after} over dt = {dt}"
            )));
        }
        state.time += dt;
        Ok(())
    }

    /// `exp(-i angle/2 sigma_x)` on the emitter; ground states without an
    /// excited partner lose their flipped component to `leakage`.
    pub fn apply_rotation(&self, state: &mut ExactState, angle: f64) {
        let (c, s) = ((0.5 * angle).cos(), (0.5 * angle).sin());
        let mis = C64::new(0.0, -s);
        let n_exc = self.basis.n_excited();
        let (exc, gnd) = state.amplitudes.split_at_mut(n_exc);
        let mut lost = 0.0;
        for (i, a) in exc.iter_mut().enumerate() {
            let j = self.partner[i] as usize - n_exc;
            let (ae, ag) = (*a, gnd[j]);
            *a = c * ae + mis * ag;
            gnd[j] = mis * ae + c * ag;
        }
        for (j, a) in gnd.iter_mut().enumerate() {
            if self.partner[n_exc + j] == NO_PARTNER {
                lost += (s * a.norm()).powi(2);
                *a *= c;
            }
        }
        state.leakage += lost;
    }

    /// Instantaneous rotation (`width = 0`) or resonant driving for `width`.
    pub fn apply_pulse(&self, state: &mut ExactState, angle: f64, width: f64, drive: f64) -> Result<()> {
        if width == 0.0 {
            self.apply_rotation(state, angle);
            Ok(())
        } else {
            self.propagate(state, width, drive)
        }
    }

    /// Photon number per mode.
    pub fn photon_numbers(&self, state: &ExactState) -> Vec<f64> {
        let l = self.basis.n_modes();
        let chunks: Vec<Vec<f64>> = parallel::map_range(self.basis.max_excitations() + 1, |n| {
            let mut acc = vec![0.0; l];
            for excited in [true, false] {
                if n > self.basis.max_photons(excited) {
                    continue;
                }
                let off = self.basis.sector_offset(excited, n);
                for r in 0..self.basis.sector_len(n) {
                    let p = state.amplitudes[off + r].norm_sqr();
                    if p == 0.0 {
                        continue;
                    }
                    for &k in self.basis.sector_photons(excited, n, r) {
                        acc[k as usize] += p;
                    }
                }
            }
            acc
        });
        let mut out = vec![0.0; l];
        for c in chunks {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v;
            }
        }
        out
    }

    pub fn excited_population(&self, state: &ExactState) -> f64 {
        state.amplitudes[..self.basis.n_excited()].iter().map(|a| a.norm_sqr()).sum()
    }

    /// Expectation of the emitter excitation plus total photon number.
    pub fn excitation_number(&self, state: &ExactState) -> f64 {
        self.excited_population(state) + self.photon_numbers(state).iter().sum::<f64>()
    }

    pub fn measure_spectrum(&self, state: &ExactState, bath: &PhotonBathSpec) -> Result<Spectrum> {
        Spectrum::new(bath.grid(), self.photon_numbers(state), state.time, EngineTag::Oracle)
    }
}

/// Hamiltonian view with a fixed drive amplitude.
struct Driven<'a> {
    sys: &'a ExactSystem,
    drive: f64,
}

impl HermitianAction for Driven<'_> {
    fn dim(&self) -> usize {
        self.sys.dimension()
    }

    fn bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.sys.bounds;
        let pad = 0.5 * self.drive.abs();
        (lo - pad, hi + pad)
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let s = self.sys;
        let l = s.basis.n_modes();
        let n_exc = s.basis.n_excited();
        let up = C64::new(0.0, s.coupling);
        let half_drive = 0.5 * self.drive;
        parallel::fill(y, |i| {
            let mut acc = s.diagonal[i] * x[i];
            if i < n_exc {
                let row = i * l..(i + 1) * l;
                for (&j, &o) in s.emit[row.clone()].iter().zip(&s.emit_occ[row]) {
                    acc += up * (o as f64).sqrt() * x[j as usize];
                }
            } else {
                let j = i - n_exc;
                let row = s.absorb_ptr[j] as usize..s.absorb_ptr[j + 1] as usize;
                for (&e, &o) in s.absorb_idx[row.clone()].iter().zip(&s.absorb_occ[row]) {
                    acc -= up * (o as f64).sqrt() * x[e as usize];
                }
            }
            if half_drive != 0.0 && s.partner[i] != NO_PARTNER {
                acc += half_drive * x[s.partner[i] as usize];
            }
            acc
        });
    }
}

/// Truncation level that is exact for instantaneous pulses.
pub fn default_max_excitations(seq: &PulseSequence) -> usize {
    seq.len() + 1
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub spectrum: Spectrum,
    pub excited_population: f64,
    pub norm: f64,
    pub leakage: f64,
    pub dimension: usize,
    pub max_excitations: usize,
}

/// Evolve `|e, vac>` through `seq` up to `t_final` and read out the photon spectrum.
pub fn simulate(
    emitter: &EmitterParams,
    bath: &PhotonBathSpec,
    seq: &PulseSequence,
    t_final: f64,
    max_excitations: Option<usize>,
    cap: usize,
) -> Result<OracleRun> {
    let t_final = positive("t_final", t_final)?;
    let n_max = max_excitations.unwrap_or_else(|| default_max_excitations(seq));
    let basis = FockBasis::build(bath.n_modes, n_max, cap)?;
    let sys = ExactSystem::new(basis, emitter, bath)?;
    let mut state = ExactState::initial(sys.basis());
    run_to(&sys, &mut state, seq, t_final)?;
    Ok(OracleRun {
        spectrum: sys.measure_spectrum(&state, bath)?,
        excited_population: sys.excited_population(&state),
        norm: state.norm_sqr().sqrt(),
        leakage: state.leakage,
        dimension: sys.dimension(),
        max_excitations: n_max,
    })
}

/// Advance `state` to `t_final`; pulses starting at or before `t_final` are applied.
pub fn run_to(sys: &ExactSystem, state: &mut ExactState, seq: &PulseSequence, t_final: f64) -> Result<()> {
    let advance = |state: &mut ExactState, to: f64, drive: f64| -> Result<()> {
        let dt = to - state.time;
        if dt > TIME_EPS * to.abs().max(1.0) {
            sys.propagate(state, dt, drive)?;
        }
        state.time = state.time.max(to);
        Ok(())
    };
    for &p in &seq.timings {
        if p > t_final + TIME_EPS {
            break;
        }
        advance(state, p, 0.0)?;
        if seq.is_instantaneous() {
            sys.apply_rotation(state, seq.rotation_angle);
        } else {
            advance(state, (p + seq.pulse_width).min(t_final), seq.drive_strength)?;
        }
    }
    advance(state, t_final, 0.0)?;
    let total = state.norm_sqr() + state.leakage;
    if (total - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NumericFailure(format!("probability {total} not conserved")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{discretize_bath, make_pdd};
    use std::f64::consts::PI;

    fn single_mode(omega: f64, coupling: f64) -> PhotonBathSpec {
        PhotonBathSpec {
            n_modes: 1,
            half_bandwidth: 1.0,
            coupling,
            mode_frequencies: vec![omega],
            density_of_states: 1.0,
        }
    }

    #[test]
    fn decoupled_phase() {
        let bath = single_mode(0.0, 0.0);
        let em = EmitterParams::new(1.3, 2.0).unwrap();
        let sys = ExactSystem::new(FockBasis::build(1, 1, DEFAULT_CAP).unwrap(), &em, &bath).unwrap();
        let mut st = ExactState::initial(sys.basis());
        sys.propagate(&mut st, 2.0, 0.0).unwrap();
        let expect = C64::new(0.0, -1.3).exp();
        assert!((st.amplitudes[0] - expect).norm() < 1e-12);
        assert!((sys.excited_population(&st) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        let g = 0.7;
        let bath = single_mode(0.0, g);
        let em = EmitterParams::new(0.0, 2.0).unwrap();
        let sys = ExactSystem::new(FockBasis::build(1, 1, DEFAULT_CAP).unwrap(), &em, &bath).unwrap();
        for &t in &[0.3, 1.1, 2.9] {
            let mut st = ExactState::initial(sys.basis());
            sys.propagate(&mut st, t, 0.0).unwrap();
            // 2x2 block with off-diagonal magnitude g: P_e = cos^2(g t)
            assert!((sys.excited_population(&st) - (g * t).cos().powi(2)).abs() < 1e-11);
            assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_pulses() {
        let bath = discretize_bath(5, 4.0, 2.0).unwrap();
        let em = EmitterParams::new(1.0, 2.0).unwrap();
        let sys = ExactSystem::new(FockBasis::build(5, 3, DEFAULT_CAP).unwrap(), &em, &bath).unwrap();
        let mut st = ExactState::initial(sys.basis());
        sys.apply_rotation(&mut st, PI);
        assert!(sys.excited_population(&st).abs() < 1e-15);
        assert!((st.norm_sqr() - 1.0).abs() < 1e-14);
        sys.apply_rotation(&mut st, PI);
        assert!((st.amplitudes[0].norm() - 1.0).abs() < 1e-14);
        let mut st = ExactState::initial(sys.basis());
        sys.apply_rotation(&mut st, 175f64.to_radians());
        let pg = 1.0 - sys.excited_population(&st);
        assert!((pg - 87.5f64.to_radians().sin().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn excitation_number_conserved_between_pulses() {
        let bath = discretize_bath(7, 5.0, 2.0).unwrap();
        let em = EmitterParams::new(2.0, 2.0).unwrap();
        let seq = make_pdd(0.3, 2).unwrap();
        let sys = ExactSystem::new(FockBasis::build(7, 3, DEFAULT_CAP).unwrap(), &em, &bath).unwrap();
        let mut st = ExactState::initial(sys.basis());
        run_to(&sys, &mut st, &seq, 0.65).unwrap();
        let before = sys.excitation_number(&st);
        sys.propagate(&mut st, 0.4, 0.0).unwrap();
        assert!((sys.excitation_number(&st) - before).abs() < 1e-10);
        assert!(st.leakage < 1e-15);
    }

    #[test]
    fn vacuum_spectrum_is_zero() {
        let bath = discretize_bath(4, 3.0, 2.0).unwrap();
        let em = EmitterParams::new(0.0, 2.0).unwrap();
        let sys = ExactSystem::new(FockBasis::build(4, 1, DEFAULT_CAP).unwrap(), &em, &bath).unwrap();
        let st = ExactState::initial(sys.basis());
        assert!(sys.photon_numbers(&st).iter().all(|&v| v == 0.0));
    }
}
