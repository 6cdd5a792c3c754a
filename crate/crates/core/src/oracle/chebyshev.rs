//! Chebyshev expansion of `exp(-i H dt)` acting on a vector.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// `J_0(x) ..= J_n(x)` by Miller's backward recurrence, for `x >= 0`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0;
        return out;
    }
    let top = n.max(x as usize) + 30 + (40.0 * (n.max(x as usize) + 1) as f64).sqrt() as usize;
    let top = top + top % 2;
    let mut out = vec![0.0; n + 1];
    let (mut next, mut cur) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    for k in (1..=top).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if k - 1 <= n {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Expansion coefficients `c_k` with `exp(-i a y) = sum_k c_k T_k(y)` on `[-1, 1]`.
pub fn coefficients(a: f64, tol: f64) -> Vec<C64> {
    let n = (a + 10.0 * a.cbrt() + 25.0).ceil() as usize;
    let j = bessel_j_sequence(a, n);
    let mut out = Vec::with_capacity(n + 1);
    let mut phase = C64::new(1.0, 0.0);
    for (k, &jk) in j.iter().enumerate() {
        let c = if k == 0 { C64::new(jk, 0.0) } else { 2.0 * jk * phase };
        out.push(c);
        phase *= C64::new(0.0, -1.0);
        if k as f64 > a && jk.abs() < tol {
            break;
        }
    }
    out
}

/// Spectral window and matrix action for a Hermitian operator.
pub trait HermitianAction: Sync {
    fn dim(&self) -> usize;
    /// `(lowest, highest)` eigenvalue bounds.
    fn bounds(&self) -> (f64, f64);
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// Largest `a = half-width * dt` handled by one expansion.
const MAX_ARGUMENT: f64 = 60.0;

pub fn propagate<H: HermitianAction>(op: &H, psi: &mut [C64], dt: f64, tol: f64) -> Result<()> {
    if dt == 0.0 {
        return Ok(());
    }
    let (lo, hi) = op.bounds();
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo) * (1.0 + 1e-6) + 1e-12;
    let steps = ((half * dt.abs()) / MAX_ARGUMENT).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let coef = coefficients(half * h.abs(), tol);
    if coef.len() < 2 {
        return Err(Error::NumericFailure("empty Chebyshev expansion".into()));
    }
    let n = op.dim();
    let mut t_prev = vec![C64::new(0.0, 0.0); n];
    let mut t_cur = vec![C64::new(0.0, 0.0); n];
    let mut hx = vec![C64::new(0.0, 0.0); n];
    let mut acc = vec![C64::new(0.0, 0.0); n];
    let global = (C64::new(0.0, -center * h)).exp();
    for _ in 0..steps {
        for (a, v) in acc.iter_mut().zip(psi.iter()) {
            *a = coef[0] * v;
        }
        t_prev.copy_from_slice(psi);
        op.apply(psi, &mut hx);
        for i in 0..n {
            t_cur[i] = (hx[i] - center * psi[i]) / half;
            acc[i] += coef[1] * t_cur[i];
        }
        for c in &coef[2..] {
            // T_{k+1} = 2 y T_k - T_{k-1}
            op.apply(&t_cur, &mut hx);
            for i in 0..n {
                let next = 2.0 * (hx[i] - center * t_cur[i]) / half - t_prev[i];
                t_prev[i] = t_cur[i];
                t_cur[i] = next;
                acc[i] += c * next;
            }
        }
        for (p, a) in psi.iter_mut().zip(&acc) {
            *p = global * a;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let j = bessel_j_sequence(10.0, 12);
        assert!((j[1] - 0.043_472_746_168_861_44).abs() < 1e-13);
        assert!((j[0] + 0.245_935_764_451_348_3).abs() < 1e-13);
        let j = bessel_j_sequence(50.0, 80);
        assert!((j[0] - 0.055_812_327_669_251_86).abs() < 1e-12);
    }

    struct Diagonal(Vec<f64>);

    impl HermitianAction for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn bounds(&self) -> (f64, f64) {
            (-10.0, 30.0)
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
                *yi = xi * d;
            }
        }
    }

    #[test]
    fn diagonal_phases() {
        let op = Diagonal(vec![-7.0, 0.0, 3.5, 25.0]);
        let mut psi = vec![C64::new(0.5, 0.0); 4];
        propagate(&op, &mut psi, 4.3, 1e-16).unwrap();
        for (p, d) in psi.iter().zip(&op.0) {
            let expect = 0.5 * C64::new(0.0, -d * 4.3).exp();
            assert!((p - expect).norm() < 1e-12, "{p} vs {expect}");
        }
    }
}
