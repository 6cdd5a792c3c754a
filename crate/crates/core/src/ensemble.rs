//! Averages over a static Gaussian spread of detunings.

use serde::Serialize;

use crate::error::{finite, invalid, non_negative, Error, Result};
use crate::model::Spectrum;
use crate::parallel;
use crate::quadrature::gaussian_nodes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub delta_std: f64,
    pub quadrature_order: usize,
    pub mean_offset: f64,
}

impl EnsembleSpec {
    pub const DEFAULT_ORDER: usize = 24;

    pub fn new(delta_std: f64, quadrature_order: usize) -> Result<Self> {
        if quadrature_order == 0 {
            return Err(invalid("quad_order", "must be at least 1"));
        }
        Ok(Self {
            delta_std: non_negative("delta_std", delta_std)?,
            quadrature_order,
            mean_offset: 0.0,
        })
    }

    pub fn with_mean(mut self, mean: f64) -> Result<Self> {
        self.mean_offset = finite("delta_mean", mean)?;
        Ok(self)
    }

    /// Detuning nodes and weights; the weights sum to one.
    pub fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        gaussian_nodes(self.mean_offset, self.delta_std, self.quadrature_order)
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.delta_std > 0.0 && self.quadrature_order < 3 {
            vec![format!(
                "quadrature order {} is too low to resolve a detuning spread of {}",
                self.quadrature_order, self.delta_std
            )]
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub spectrum: Spectrum,
    pub warnings: Vec<String>,
}

/// Weighted average of `engine(delta)` over the detuning distribution.
pub fn ensemble_spectrum<F>(engine: F, ens: &EnsembleSpec) -> Result<EnsembleResult>
where
    F: Fn(f64) -> Result<Spectrum> + Sync + Send,
{
    let nodes = ens.nodes()?;
    let spectra = parallel::try_map_range(nodes.len(), |i| engine(nodes[i].0))?;
    let first = &spectra[0];
    let mut acc = vec![0.0; first.intensity.len()];
    for (s, &(_, w)) in spectra.iter().zip(&nodes) {
        if s.grid != first.grid {
            return Err(Error::NumericFailure("ensemble members returned different grids".into()));
        }
        for (a, v) in acc.iter_mut().zip(&s.intensity) {
            *a += w * v;
        }
    }
    Ok(EnsembleResult {
        spectrum: Spectrum::new(first.grid.clone(), acc, first.observation_time, first.engine_tag)?,
        warnings: ens.warnings(),
    })
}

/// Weighted average of a scalar observable.
pub fn ensemble_average<F>(observable: F, ens: &EnsembleSpec) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let nodes = ens.nodes()?;
    let values = parallel::try_map_range(nodes.len(), |i| observable(nodes[i].0))?;
    Ok(values.iter().zip(&nodes).map(|(v, n)| v * n.1).sum())
}
