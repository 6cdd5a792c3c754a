//! Comparisons between spectra.

use crate::error::{invalid, Error, Result};
use crate::model::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
}

/// Least-squares fit of `1/I` by a parabola over points above `floor * max`.
///
/// For `I = h (w/2)^2 / ((x - c)^2 + (w/2)^2)`, `1/I` is quadratic in `x`.
pub fn fit_lorentzian(s: &Spectrum, floor: f64) -> Result<LorentzianFit> {
    let peak = s.max();
    let pts: Vec<(f64, f64)> = s
        .omegas()
        .iter()
        .zip(&s.intensity)
        .filter(|(_, &v)| v >= floor * peak && v > 0.0)
        .map(|(&x, &v)| (x, v))
        .collect();
    if pts.len() < 3 {
        return Err(invalid("floor", "fewer than three points above the floor"));
    }
    // weights v^2 undo the amplification of the reciprocal
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for &(x, v) in &pts {
        let w = v * v;
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * basis[i] * basis[j];
            }
            r[i] += w * basis[i] / v;
        }
    }
    let [c0, c1, c2] = solve3(m, r).ok_or_else(|| Error::NumericFailure("singular Lorentzian fit".into()))?;
    if c2 <= 0.0 {
        return Err(Error::NumericFailure("spectrum is not peaked".into()));
    }
    let center = -c1 / (2.0 * c2);
    let minimum = c0 - c1 * c1 / (4.0 * c2);
    if minimum <= 0.0 {
        return Err(Error::NumericFailure("non-positive fitted peak".into()));
    }
    Ok(LorentzianFit {
        center,
        fwhm: 2.0 * (minimum / c2).sqrt(),
        height: 1.0 / minimum,
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let tail: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - tail) / m[i][i];
    }
    Some(x)
}

fn same_grid(a: &Spectrum, b: &Spectrum) -> Result<()> {
    if a.omegas().len() != b.omegas().len()
        || a.omegas().iter().zip(b.omegas()).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(invalid("grid", "spectra live on different grids"));
    }
    Ok(())
}

/// `||a - b||_2 / ||b||_2`.
pub fn relative_l2(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    same_grid(a, b)?;
    let diff: f64 = a.intensity.iter().zip(&b.intensity).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.intensity.iter().map(|y| y * y).sum();
    Ok((diff / norm).sqrt())
}

/// Largest `|a - b|` over grid points with `|omega| <= window`.
pub fn max_abs_difference(a: &Spectrum, b: &Spectrum, window: f64) -> Result<f64> {
    same_grid(a, b)?;
    Ok(a.omegas()
        .iter()
        .zip(a.intensity.iter().zip(&b.intensity))
        .filter(|(w, _)| w.abs() <= window)
        .map(|(_, (x, y))| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Pointwise `a - b`.
pub fn difference(a: &Spectrum, b: &Spectrum) -> Result<Vec<f64>> {
    same_grid(a, b)?;
    Ok(a.intensity.iter().zip(&b.intensity).map(|(x, y)| x - y).collect())
}

/// Local maxima whose height is at least `fraction` of the global maximum.
pub fn prominent_maxima(s: &Spectrum, fraction: f64) -> Vec<f64> {
    let level = fraction * s.max();
    s.local_maxima()
        .into_iter()
        .filter(|&w| s.value_near(w) >= level)
        .collect()
}

/// Whether every element of `a` has a partner in `b` within `tol`, and vice versa.
pub fn peaks_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let covered = |xs: &[f64], ys: &[f64]| xs.iter().all(|x| ys.iter().any(|y| (x - y).abs() <= tol));
    !a.is_empty() && covered(a, b) && covered(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EngineTag, FrequencyGrid};

    fn lorentzian(c: f64, w: f64) -> Spectrum {
        let grid = FrequencyGrid::uniform(-10.0, 10.0, 201).unwrap();
        let v = grid.points().iter().map(|x| 3.0 / (1.0 + ((x - c) / (0.5 * w)).powi(2))).collect();
        Spectrum::new(grid, v, 1.0, EngineTag::MasterClosed).unwrap()
    }

    #[test]
    fn recovers_exact_lorentzian() {
        let fit = fit_lorentzian(&lorentzian(1.37, 2.4), 0.3).unwrap();
        assert!((fit.center - 1.37).abs() < 1e-10);
        assert!((fit.fwhm - 2.4).abs() < 1e-10);
        assert!((fit.height - 3.0).abs() < 1e-10);
    }

    #[test]
    fn differences() {
        let a = lorentzian(0.0, 2.0);
        assert_eq!(relative_l2(&a, &a).unwrap(), 0.0);
        let b = a.scaled(1.1);
        assert!((relative_l2(&b, &a).unwrap() - 0.1).abs() < 1e-12);
        assert!((max_abs_difference(&b, &a, 1.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn peak_sets() {
        assert!(peaks_match(&[0.0, 5.0], &[0.2, 4.9], 0.3));
        assert!(!peaks_match(&[0.0, 5.0], &[0.2], 0.3));
        assert!(!peaks_match(&[], &[], 0.3));
        let s = lorentzian(2.0, 1.0);
        assert_eq!(prominent_maxima(&s, 0.1), vec![2.0]);
    }
}
