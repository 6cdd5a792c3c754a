//! Node/weight tables for Gauss-Legendre panels and Gaussian averages.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;

use crate::error::{invalid, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    pairs: Vec<(f64, f64)>,
}

impl LegendreRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("order is positive");
        Self {
            pairs: GaussLegendre::new(order).as_node_weight_pairs().to_vec(),
        }
    }

    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    /// Composite rule on `[a, b]` with `panels` equal panels.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let lo = a + p as f64 * h;
                self.mapped(lo, lo + h).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Nodes and weights for averages over `N(mean, std^2)`; weights sum to 1.
pub fn gaussian_nodes(mean: f64, std: f64, order: usize) -> Result<Vec<(f64, f64)>> {
    let order = NonZeroUsize::new(order).ok_or_else(|| invalid("quad_order", "must be at least 1"))?;
    if std == 0.0 {
        return Ok(vec![(mean, 1.0)]);
    }
    let rule = GaussHermite::new(order);
    let norm = std::f64::consts::PI.sqrt();
    let scale = std::f64::consts::SQRT_2 * std;
    Ok(rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mean + scale * x, w / norm))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = LegendreRule::new(8);
        let s: f64 = rule.mapped(0.0, 2.0).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = rule.composite(0.0, 1.0, 4).iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moments() {
        let nodes = gaussian_nodes(0.5, 3.0, 24).unwrap();
        let m0: f64 = nodes.iter().map(|n| n.1).sum();
        let m1: f64 = nodes.iter().map(|n| n.0 * n.1).sum();
        let m2: f64 = nodes.iter().map(|n| (n.0 - 0.5).powi(2) * n.1).sum();
        assert!((m0 - 1.0).abs() < 1e-13);
        assert!((m1 - 0.5).abs() < 1e-12);
        assert!((m2 - 9.0).abs() < 1e-11);
        assert_eq!(gaussian_nodes(1.0, 0.0, 5).unwrap(), vec![(1.0, 1.0)]);
    }
}
