//! Discrete probability measures aligned with a [`StateGrid`].
//!
//! Weights are kept in full precision and renormalized after every
//! pushforward; a pre-normalization sum further than `1e-6` from 1 is
//! treated as a logic bug rather than float drift and rejected.

use crate::error::{Error, Result};
use crate::grid::StateGrid;

/// Hard error threshold distinguishing float drift from logic bugs.
pub const SUM_DRIFT_LIMIT: f64 = 1e-6;

/// Tolerance used by `project_measure` when validating externally supplied
/// cell masses.
pub const PROJECT_SUM_TOL: f64 = 1e-9;

/// Nonnegative weights summing to one, aligned index-by-index with a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from raw weights. Errors if any weight is negative
    /// or the sum deviates from 1 by more than [`SUM_DRIFT_LIMIT`]; smaller
    /// drift is renormalized away.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty weight vector".into()));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} at index {i} is negative or non-finite"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SUM_DRIFT_LIMIT {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {sum}, deviating from 1 by more than {SUM_DRIFT_LIMIT}"
            )));
        }
        let mut weights = weights;
        if sum != 1.0 {
            for w in &mut weights {
                *w /= sum;
            }
        }
        Ok(Self { weights })
    }

    /// The point mass at index `i` on a grid of `len` points.
    pub fn dirac(i: usize, len: usize) -> Self {
        assert!(i < len);
        let mut weights = vec![0.0; len];
        weights[i] = 1.0;
        Self { weights }
    }

    /// The uniform measure on `len` points.
    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// First moment `sum_i x_i mu_i` with respect to the grid points.
    pub fn mean(&self, grid: &StateGrid) -> Result<f64> {
        check_len(self, grid.len())?;
        Ok(self
            .weights
            .iter()
            .zip(grid.points())
            .map(|(w, x)| w * x)
            .sum())
    }

    /// Convex combination `(1 - t) * self + t * other`.
    pub fn mix(&self, other: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
        check_len(other, self.len())?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        DiscreteMeasure::new(weights)
    }
}

fn check_len(mu: &DiscreteMeasure, expected: usize) -> Result<()> {
    if mu.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: mu.len(),
        });
    }
    Ok(())
}

/// Reinterprets a measure on the grid index set as the atomic measure
/// `sum_i mu_i delta_{x_i}` on `[0,1]`. The weights are shared verbatim;
/// the operation marks the semantic change and is the inverse of
/// [`project_measure`] on atomic inputs.
pub fn lift_measure(mu_d: &DiscreteMeasure) -> DiscreteMeasure {
    mu_d.clone()
}

/// Builds the discrete measure whose weight at `i` is the mass of cell `i`.
/// The masses must be nonnegative and sum to 1 within [`PROJECT_SUM_TOL`].
pub fn project_measure(grid: &StateGrid, cell_masses: &[f64]) -> Result<DiscreteMeasure> {
    if cell_masses.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            found: cell_masses.len(),
        });
    }
    let mut sum = 0.0;
    for (i, &mass) in cell_masses.iter().enumerate() {
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "cell mass {mass} at index {i} is negative or non-finite"
            )));
        }
        sum += mass;
    }
    if (sum - 1.0).abs() > PROJECT_SUM_TOL {
        return Err(Error::InvalidMeasure(format!(
            "cell masses sum to {sum}, deviating from 1 by more than {PROJECT_SUM_TOL}"
        )));
    }
    DiscreteMeasure::new(cell_masses.to_vec())
}

/// Projects an atomic measure (atoms at `points` with masses `weights`)
/// onto the grid by routing each atom through the quantization map.
pub fn project_atoms(grid: &StateGrid, points: &[f64], weights: &[f64]) -> Result<DiscreteMeasure> {
    if points.len() != weights.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            found: weights.len(),
        });
    }
    let mut masses = vec![0.0; grid.len()];
    for (&p, &w) in points.iter().zip(weights) {
        let i = crate::grid::quantize(grid, p)?;
        masses[i] += w;
    }
    DiscreteMeasure::new(masses)
}
