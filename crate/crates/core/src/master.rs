//! Reduced density-matrix route: piecewise evolution between pulses, pulse
//! conjugation, quantum-regression correlators and the detector spectrum.

use num_complex::Complex64 as C64;

use crate::error::{invalid, non_negative, positive, Error, Result};
use crate::model::{
    decompose_interval, EmitterParams, EngineTag, FrequencyGrid, PulseSequence, Spectrum, TIME_EPS,
};
use crate::parallel;
use crate::quadrature::LegendreRule;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Emitter density matrix in the `(e, g)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterDensityMatrix {
    pub rho_ee: f64,
    pub rho_gg: f64,
    pub rho_eg: C64,
}

impl EmitterDensityMatrix {
    pub fn excited() -> Self {
        Self {
            rho_ee: 1.0,
            rho_gg: 0.0,
            rho_eg: ZERO,
        }
    }

    pub fn rho_ge(&self) -> C64 {
        self.rho_eg.conj()
    }

    pub fn trace(&self) -> f64 {
        self.rho_ee + self.rho_gg
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.rho_ee >= -tol && self.rho_gg >= -tol && self.rho_eg.norm_sqr() <= self.rho_ee * self.rho_gg + tol
    }

    pub fn operator(&self) -> Op2 {
        Op2 {
            ee: C64::new(self.rho_ee, 0.0),
            eg: self.rho_eg,
            ge: self.rho_eg.conj(),
            gg: C64::new(self.rho_gg, 0.0),
        }
    }

    fn from_operator(op: &Op2) -> Self {
        Self {
            rho_ee: op.ee.re,
            rho_gg: op.gg.re,
            rho_eg: 0.5 * (op.eg + op.ge.conj()),
        }
    }
}

/// General 2x2 operator in the `(e, g)` basis, used for regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Op2 {
    pub ee: C64,
    pub eg: C64,
    pub ge: C64,
    pub gg: C64,
}

impl Op2 {
    fn rows(&self) -> [[C64; 2]; 2] {
        [[self.ee, self.eg], [self.ge, self.gg]]
    }

    fn from_rows(m: [[C64; 2]; 2]) -> Self {
        Self {
            ee: m[0][0],
            eg: m[0][1],
            ge: m[1][0],
            gg: m[1][1],
        }
    }

    fn axpy(&self, a: f64, other: &Op2) -> Op2 {
        Op2 {
            ee: self.ee + a * other.ee,
            eg: self.eg + a * other.eg,
            ge: self.ge + a * other.ge,
            gg: self.gg + a * other.gg,
        }
    }

    /// Exact free evolution for time `dt`.
    pub fn free(&self, dt: f64, em: &EmitterParams) -> Op2 {
        let decay = (-em.gamma * dt).exp();
        let coh = (-0.5 * em.gamma * dt).exp();
        let phase = (-I * em.delta * dt).exp();
        Op2 {
            ee: self.ee * decay,
            gg: self.gg + self.ee * (1.0 - decay),
            eg: self.eg * coh * phase,
            ge: self.ge * coh * phase.conj(),
        }
    }

    /// `U X U^dagger` for `U = exp(-i angle/2 sigma_x)`.
    pub fn rotate(&self, angle: f64) -> Op2 {
        let (s, c) = (0.5 * angle).sin_cos();
        let u = [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]];
        let x = self.rows();
        let mut ux = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ux[i][j] = u[i][0] * x[0][j] + u[i][1] * x[1][j];
            }
        }
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ux[i][0] * u[j][0].conj() + ux[i][1] * u[j][1].conj();
            }
        }
        Op2::from_rows(out)
    }

    /// Lindblad generator with a resonant drive `(omega/2) sigma_x`.
    fn generator(&self, em: &EmitterParams, omega: f64) -> Op2 {
        let h = [[C64::new(0.5 * em.delta, 0.0), C64::new(0.5 * omega, 0.0)], [C64::new(0.5 * omega, 0.0), C64::new(-0.5 * em.delta, 0.0)]];
        let x = self.rows();
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let hx = h[i][0] * x[0][j] + h[i][1] * x[1][j];
                let xh = x[i][0] * h[0][j] + x[i][1] * h[1][j];
                out[i][j] = -I * (hx - xh);
            }
        }
        let g = em.gamma;
        out[0][0] -= g * x[0][0];
        out[0][1] -= 0.5 * g * x[0][1];
        out[1][0] -= 0.5 * g * x[1][0];
        out[1][1] += g * x[0][0];
        Op2::from_rows(out)
    }

    fn rk4_step(&self, h: f64, em: &EmitterParams, omega: f64) -> Op2 {
        let k1 = self.generator(em, omega);
        let k2 = self.axpy(0.5 * h, &k1).generator(em, omega);
        let k3 = self.axpy(0.5 * h, &k2).generator(em, omega);
        let k4 = self.axpy(h, &k3).generator(em, omega);
        self.axpy(h / 6.0, &k1)
            .axpy(h / 3.0, &k2)
            .axpy(h / 3.0, &k3)
            .axpy(h / 6.0, &k4)
    }

    /// Fixed-step RK4 under drive for time `dt` with at most `max_step` per step.
    pub fn driven(&self, dt: f64, em: &EmitterParams, omega: f64, max_step: f64) -> Result<Op2> {
        if dt == 0.0 {
            return Ok(*self);
        }
        let rate = omega.abs().max(em.delta.abs()).max(em.gamma);
        let max_step = max_step.min(0.02 / rate);
        let steps = (dt / max_step).ceil().max(1.0);
        let h = dt / steps;
        if !(h > 0.0 && h.is_finite()) || steps > 1e9 {
            return Err(Error::NumericFailure(format!("driven step underflow (dt={dt}, omega={omega})")));
        }
        let mut x = *self;
        for _ in 0..steps as u64 {
            x = x.rk4_step(h, em, omega);
        }
        Ok(x)
    }
}

pub fn propagate_free(rho: &EmitterDensityMatrix, dt: f64, emitter: &EmitterParams) -> Result<EmitterDensityMatrix> {
    let dt = non_negative("dt", dt)?;
    Ok(EmitterDensityMatrix::from_operator(&rho.operator().free(dt, emitter)))
}

pub fn apply_ideal_pulse(rho: &EmitterDensityMatrix) -> EmitterDensityMatrix {
    EmitterDensityMatrix {
        rho_ee: rho.rho_gg,
        rho_gg: rho.rho_ee,
        rho_eg: rho.rho_eg.conj(),
    }
}

/// Instantaneous rotation by `angle` about x.
pub fn apply_rotation(rho: &EmitterDensityMatrix, angle: f64) -> EmitterDensityMatrix {
    EmitterDensityMatrix::from_operator(&rho.operator().rotate(angle))
}

/// Optical Bloch evolution for `dt`, driven with Rabi frequency `omega_drive` when `on`.
pub fn propagate_driven(
    rho: &EmitterDensityMatrix,
    dt: f64,
    emitter: &EmitterParams,
    omega_drive: f64,
    on: bool,
) -> Result<EmitterDensityMatrix> {
    let dt = positive("dt", dt)?;
    if !on {
        return propagate_free(rho, dt, emitter);
    }
    let op = rho.operator().driven(dt, emitter, omega_drive, dt / 200.0)?;
    Ok(EmitterDensityMatrix::from_operator(&op))
}

/// Pulse-interrupted evolution of 2x2 operators under a given sequence.
#[derive(Debug, Clone)]
pub struct Evolution<'a> {
    seq: &'a PulseSequence,
    emitter: EmitterParams,
    rk_step: f64,
}

impl<'a> Evolution<'a> {
    pub fn new(seq: &'a PulseSequence, emitter: EmitterParams) -> Self {
        Self {
            seq,
            emitter,
            rk_step: seq.pulse_width / 200.0,
        }
    }

    /// Evolves `x` from time `from` to `to`. Instantaneous pulses at `p` act
    /// when `from < p <= to`; finite pulses drive on `[p, p + width)`.
    pub fn propagate(&self, x: Op2, from: f64, to: f64) -> Result<Op2> {
        let mut x = x;
        let mut now = from;
        let em = &self.emitter;
        let width = self.seq.pulse_width;
        for &p in &self.seq.timings {
            if now >= to {
                break;
            }
            if width == 0.0 {
                let tol = TIME_EPS * p.max(1.0);
                if p <= from + tol {
                    continue;
                }
                if p > to + tol {
                    break;
                }
                x = x.free(p - now, em).rotate(self.seq.rotation_angle);
                now = p;
            } else {
                let end = p + width;
                if end <= now {
                    continue;
                }
                if p >= to {
                    break;
                }
                if p > now {
                    x = x.free(p - now, em);
                    now = p;
                }
                let stop = end.min(to);
                x = x.driven(stop - now, em, self.seq.drive_strength, self.rk_step)?;
                now = stop;
            }
        }
        if to > now {
            x = x.free(to - now, em);
        }
        Ok(x)
    }

    pub fn density_at(&self, t: f64) -> Result<EmitterDensityMatrix> {
        let op = self.propagate(EmitterDensityMatrix::excited().operator(), 0.0, t)?;
        Ok(EmitterDensityMatrix::from_operator(&op))
    }
}

/// `sigma^- rho`: the operator whose regression gives `<sigma+(t+theta) sigma-(t)>`.
fn lowered(rho: &Op2) -> Op2 {
    Op2 {
        ee: ZERO,
        eg: ZERO,
        ge: rho.ee,
        gg: rho.eg,
    }
}

/// `rho sigma^+`: partner operator for `<sigma+(t) sigma-(t+theta)>`.
fn raised(rho: &Op2) -> Op2 {
    Op2 {
        ee: ZERO,
        eg: rho.ee,
        ge: ZERO,
        gg: rho.ge,
    }
}

/// Excited population under ideal PDD from the excited state, lattice unbounded.
pub fn rho_excited(t: f64, tau: f64, gamma: f64) -> f64 {
    let mut big_m = (t / tau).floor();
    if (big_m + 1.0) * tau - t <= TIME_EPS * t.max(1.0) {
        big_m += 1.0;
    }
    rho_excited_after(big_m as i64, t - big_m * tau, tau, gamma)
}

fn rho_excited_after(big_m: i64, since_pulse: f64, tau: f64, gamma: f64) -> f64 {
    let e = (-gamma * tau).exp();
    let sign = if (big_m + 1) % 2 == 0 { 1.0 } else { -1.0 };
    (1.0 - sign * (-gamma * tau * (big_m + 1) as f64).exp()) / (1.0 + e) * (-gamma * since_pulse).exp()
}

/// As [`rho_excited`] for a finite ideal PDD train.
pub fn rho_excited_in(t: f64, seq: &PulseSequence, gamma: f64) -> Result<f64> {
    let tau = pdd_tau(seq)?;
    let d = decompose_interval(t, 0.0, seq)?;
    Ok(rho_excited_after(d.big_m as i64, t - d.big_m as f64 * tau, tau, gamma))
}

fn pdd_tau(seq: &PulseSequence) -> Result<f64> {
    if !seq.is_ideal_pdd() {
        return Err(Error::UnsupportedSequence(
            "closed-form correlators need ideal instantaneous pi pulses on a PDD lattice; use corr_numeric".into(),
        ));
    }
    Ok(seq.pdd_tau().expect("PDD carries tau"))
}

/// Normalized correlator `f(t, theta)` for ideal PDD.
pub fn corr_f(t: f64, theta: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<C64> {
    let tau = pdd_tau(seq)?;
    let d = decompose_interval(t, theta, seq)?;
    let decay = (-0.5 * emitter.gamma * theta).exp();
    Ok(if d.m == 0 {
        decay * (I * emitter.delta * theta).exp()
    } else if d.m % 2 == 1 {
        ZERO
    } else {
        decay * (I * emitter.delta * (d.tau1 + d.tau2 - tau)).exp()
    })
}

/// `<sigma+(t+theta) sigma-(t)>` by quantum regression, for any sequence.
pub fn corr_numeric(t: f64, theta: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<C64> {
    let t = non_negative("t", t)?;
    let theta = non_negative("theta", theta)?;
    let evo = Evolution::new(seq, *emitter);
    let rho = evo.propagate(EmitterDensityMatrix::excited().operator(), 0.0, t)?;
    Ok(evo.propagate(lowered(&rho), t, t + theta)?.ge)
}

/// `<sigma+(t) sigma-(t+theta)>`, the conjugate partner of [`corr_numeric`].
pub fn corr_numeric_partner(t: f64, theta: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<C64> {
    let evo = Evolution::new(seq, *emitter);
    let rho = evo.propagate(EmitterDensityMatrix::excited().operator(), 0.0, t)?;
    Ok(evo.propagate(raised(&rho), t, t + theta)?.eg)
}

/// Probability of finding the emitter excited at `t + theta` given that it
/// was projected to the ground state at `t`.
pub fn excited_after_reset(t: f64, theta: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<f64> {
    let evo = Evolution::new(seq, *emitter);
    let ground = EmitterDensityMatrix {
        rho_ee: 0.0,
        rho_gg: 1.0,
        rho_eg: ZERO,
    };
    Ok(evo.propagate(ground.operator(), t, t + theta)?.ee.re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRecord {
    pub t: f64,
    pub theta: f64,
    pub phi: C64,
    pub rho_e: f64,
    pub f: C64,
}

pub fn correlation_record(t: f64, theta: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<CorrelationRecord> {
    let rho_e = Evolution::new(seq, *emitter).density_at(t)?.rho_ee;
    let phi = corr_numeric(t, theta, seq, emitter)?;
    let f = if rho_e > 0.0 { phi / rho_e } else { ZERO };
    Ok(CorrelationRecord { t, theta, phi, rho_e, f })
}

/// Cell boundaries in `[0, total]`: zero, pulse edges, `total`.
fn breakpoints(seq: &PulseSequence, total: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    for (a, b) in seq.windows() {
        for p in [a, b] {
            if p > 0.0 && p < total {
                pts.push(p);
            }
        }
    }
    pts.push(total);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS * b.abs().max(1.0));
    pts
}

struct CellPlan<'a> {
    rule: &'a LegendreRule,
    /// Largest smooth-rate scale outside pulses.
    rate: f64,
    drive_rate: f64,
    split: usize,
}

impl CellPlan<'_> {
    fn nodes(&self, a: f64, b: f64, driven: bool) -> impl Iterator<Item = (f64, f64)> + '_ {
        let rate = if driven { self.rate.max(self.drive_rate) } else { self.rate };
        let len = b - a;
        let pieces = ((len * rate / 2.0).ceil() as usize).max(1) * self.split;
        let h = len / pieces as f64;
        (0..pieces).flat_map(move |p| self.rule.mapped(a + p as f64 * h, a + (p + 1) as f64 * h))
    }

    /// Number of time nodes over all cells, without building them.
    fn node_count(&self, bps: &[f64], seq: &PulseSequence) -> f64 {
        bps.windows(2)
            .map(|w| {
                let rate = if in_pulse(seq, w[0], w[1]) { self.rate.max(self.drive_rate) } else { self.rate };
                ((w[1] - w[0]) * rate / 2.0).ceil().max(1.0) * (self.split * self.rule.order()) as f64
            })
            .sum()
    }
}

fn in_pulse(seq: &PulseSequence, a: f64, b: f64) -> bool {
    let mid = 0.5 * (a + b);
    seq.pulse_width > 0.0 && seq.windows().any(|(s, e)| mid > s && mid < e)
}

/// Weighted correlator samples `(theta, w * phi)` covering the triangle
/// `0 <= t, 0 <= theta, t + theta <= total`.
fn correlator_samples(plan: &CellPlan, bps: &[f64], seq: &PulseSequence, em: &EmitterParams) -> Result<Vec<(f64, C64)>> {
    let evo = Evolution::new(seq, *em);
    let t_nodes: Vec<(f64, f64)> = bps
        .windows(2)
        .flat_map(|w| plan.nodes(w[0], w[1], in_pulse(seq, w[0], w[1])).collect::<Vec<_>>())
        .collect();
    let total = *bps.last().expect("non-empty breakpoints");
    let per_node = parallel::try_map_range(t_nodes.len(), |a| {
        let (t, wt) = t_nodes[a];
        let rho = evo.propagate(EmitterDensityMatrix::excited().operator(), 0.0, t)?;
        let mut x = lowered(&rho);
        let mut edges = vec![t];
        edges.extend(bps.iter().copied().filter(|&b| b > t + TIME_EPS * b.max(1.0)));
        if edges.len() == 1 {
            edges.push(total);
        }
        let mut out = Vec::new();
        let mut now = t;
        for w in edges.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            for (s, ws) in plan.nodes(w[0], w[1], in_pulse(seq, w[0], w[1])) {
                x = evo.propagate(x, now, s)?;
                now = s;
                out.push((s - t, wt * ws * x.ge));
            }
        }
        Ok(out)
    })?;
    Ok(per_node.into_iter().flatten().collect())
}

fn detector_sum(samples: &[(f64, C64)], grid: &FrequencyGrid) -> Vec<f64> {
    let omegas = grid.points();
    parallel::map_range(omegas.len(), |k| {
        let w = omegas[k];
        let sum: C64 = samples.iter().map(|&(theta, v)| v * (-I * w * theta).exp()).sum();
        2.0 * sum.re
    })
}

pub const QUADRATURE_RTOL: f64 = 1e-6;

/// Upper limit on correlator samples in the refined detector sum.
const SAMPLE_BUDGET: f64 = 4e7;

/// Detector excitation `P(w, T) = 2 Re int_0^T dt int_0^{T-t} dtheta phi e^{-i w theta}`.
pub fn spectrum_numeric(grid: &FrequencyGrid, total_time: f64, seq: &PulseSequence, emitter: &EmitterParams) -> Result<Spectrum> {
    let total = positive("total_time", total_time)?;
    let bps = breakpoints(seq, total);
    let rule = LegendreRule::new(8);
    let w_max = grid.points().iter().fold(0.0_f64, |a, w| a.max(w.abs()));
    let base = CellPlan {
        rule: &rule,
        rate: w_max + emitter.delta.abs() + emitter.gamma,
        drive_rate: seq.drive_strength.abs(),
        split: 1,
    };
    let fine = CellPlan { split: 2, ..base };
    let nodes = fine.node_count(&bps, seq);
    if nodes * nodes / 2.0 > SAMPLE_BUDGET {
        return Err(Error::NumericFailure(format!(
            "detector integral needs about {:.1e} samples (limit {SAMPLE_BUDGET:.0e}); narrow the frequency window",
            nodes * nodes / 2.0
        )));
    }
    let coarse = detector_sum(&correlator_samples(&base, &bps, seq, emitter)?, grid);
    let refined = detector_sum(&correlator_samples(&fine, &bps, seq, emitter)?, grid);
    let scale = refined.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let change = coarse.iter().zip(&refined).map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
    if change > QUADRATURE_RTOL * scale {
        return Err(Error::NumericFailure(format!(
            "detector double integral changed by {:.3e} (relative) under refinement",
            change / scale
        )));
    }
    Spectrum::new(grid.clone(), refined, total, EngineTag::MasterNumeric)
}

/// Per-frequency rates of the long-time closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSpectrumParams {
    pub gamma0c: C64,
    pub gamma3: C64,
    pub gamma4: C64,
    pub k: usize,
    pub normalization: f64,
}

impl ClosedFormSpectrumParams {
    pub fn new(omega: f64, k: usize, emitter: &EmitterParams, normalization: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("K", "must be at least 1"));
        }
        let half = 0.5 * emitter.gamma;
        Ok(Self {
            gamma0c: C64::new(half, omega - emitter.delta),
            gamma3: C64::new(half, omega),
            gamma4: C64::new(-half, omega - emitter.delta),
            k,
            normalization,
        })
    }

    pub fn evaluate(&self, tau: f64, gamma: f64) -> f64 {
        let e = (-gamma * tau).exp();
        let k = self.k as f64 + e / (1.0 + e);
        let g0 = self.gamma0c;
        let g4 = self.gamma4;
        let window = ((g4 * tau).exp() - 1.0) / g4;
        let x = (-2.0 * self.gamma3 * tau).exp();
        let r = x / (1.0 - x);
        let a = ((1.0 - e) / gamma - (-g0 * tau).exp() * window) * k;
        let b = window * (1.0 - (-g0 * tau).exp()) * r * (k - r);
        2.0 * self.normalization * ((a + b) / (g0 * (1.0 + e))).re
    }
}

/// Long-time spectrum at `T = 2 K tau`, evaluated term for term.
pub fn spectrum_closed_form(grid: &FrequencyGrid, k: usize, tau: f64, emitter: &EmitterParams, normalization: f64) -> Result<Spectrum> {
    let tau = positive("tau", tau)?;
    let values = grid
        .points()
        .iter()
        .map(|&w| Ok(ClosedFormSpectrumParams::new(w, k, emitter, normalization)?.evaluate(tau, emitter.gamma)))
        .collect::<Result<Vec<f64>>>()?;
    Spectrum::new(grid.clone(), values, 2.0 * k as f64 * tau, EngineTag::MasterClosed)
}

/// `(K tau Gamma / 4) / (w^2 + (Gamma/2)^2)`.
pub fn lorentzian_limit(omega: f64, k: usize, tau: f64, gamma: f64) -> f64 {
    k as f64 * tau * gamma / 4.0 / (omega * omega + 0.25 * gamma * gamma)
}
