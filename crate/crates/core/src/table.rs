//! Per-grid-point value and policy tables.

use crate::error::{Error, Result};

/// Values `V(x_i)` aligned with a grid; the iteration stores only the
/// pointwise action-minimum of the Q-function.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    values: Vec<f64>,
}

impl ValueTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {v} in table")));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn constant(len: usize, v: f64) -> Self {
        Self {
            values: vec![v; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sup-norm distance to another table of the same length.
    pub fn sup_distance(&self, other: &ValueTable) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Largest discrete Lipschitz quotient `|V_i - V_j| / |x_i - x_j|` over
    /// adjacent grid points.
    pub fn lipschitz_quotient(&self, points: &[f64]) -> f64 {
        self.values
            .windows(2)
            .zip(points.windows(2))
            .map(|(v, x)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max)
    }
}

/// Greedy actions `a_i` per grid point, each within the action interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    actions: Vec<f64>,
}

impl PolicyTable {
    pub fn new(actions: Vec<f64>, bounds: (f64, f64)) -> Result<Self> {
        let (lo, hi) = bounds;
        for &a in &actions {
            if !a.is_finite() || a < lo || a > hi {
                return Err(Error::Domain(format!(
                    "action {a} outside bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Sup-norm distance between the action tables; for deterministic
    /// policies this is the Wasserstein distance of the Dirac rows.
    pub fn sup_distance(&self, other: &PolicyTable) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .actions
            .iter()
            .zip(&other.actions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
