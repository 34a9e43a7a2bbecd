//! Uniform grids on the unit interval and the nearest-point quantization map.
//!
//! A grid with `m` cells carries points `x_i = (i + 0.5)/m` and cells
//! `[i/m, (i+1)/m)` (the last cell is closed). Every point of `[0,1]` is
//! within `mesh = 0.5/m` of its nearest grid point, so a grid built with
//! `make_grid(n)` has mesh strictly below `1/n`.

use crate::error::{Error, Result};

/// A finite ordered grid on `[0,1]` together with the cell partition it
/// induces. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    points: Vec<f64>,
    cell_bounds: Vec<(f64, f64)>,
    mesh: f64,
}

impl StateGrid {
    /// Grid points in strictly increasing order.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Half-open cells `[lo, hi)` partitioning `[0,1]`; the last cell is
    /// closed at 1.
    pub fn cell_bounds(&self) -> &[(f64, f64)] {
        &self.cell_bounds
    }

    /// Maximum distance from any `x` in `[0,1]` to its nearest grid point.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The point associated with cell `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Length of cell `i`.
    pub fn cell_len(&self, i: usize) -> f64 {
        let (lo, hi) = self.cell_bounds[i];
        hi - lo
    }
}

/// Builds the uniform grid with `n` cells: points `(i + 0.5)/n`, cells
/// `[i/n, (i+1)/n)`, mesh `0.5/n < 1/n`.
pub fn make_grid(n: usize) -> StateGrid {
    assert!(n >= 1, "make_grid requires n >= 1");
    let m = n as f64;
    let points = (0..n).map(|i| (i as f64 + 0.5) / m).collect();
    let cell_bounds = (0..n)
        .map(|i| (i as f64 / m, (i as f64 + 1.0) / m))
        .collect();
    StateGrid {
        points,
        cell_bounds,
        mesh: 0.5 / m,
    }
}

/// Index of the grid point nearest to `x`; exact ties go to the lower index
/// so the map is deterministic.
pub fn quantize(grid: &StateGrid, x: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::Domain(format!("state {x} outside [0,1]")));
    }
    let pts = &grid.points;
    // partition_point gives the first index with point > x.
    let hi = pts.partition_point(|&p| p <= x);
    if hi == 0 {
        return Ok(0);
    }
    if hi == pts.len() {
        return Ok(pts.len() - 1);
    }
    let lo = hi - 1;
    let d_lo = x - pts[lo];
    let d_hi = pts[hi] - x;
    if d_lo <= d_hi {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

/// Index of the cell containing `x` under the half-open partition. Differs
/// from [`quantize`] only on cell boundaries, which are Lebesgue-null.
pub fn cell_of(grid: &StateGrid, x: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::Domain(format!("state {x} outside [0,1]")));
    }
    let idx = grid
        .cell_bounds
        .partition_point(|&(_, hi)| hi <= x)
        .min(grid.len() - 1);
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_grid() {
        let g = make_grid(1);
        assert_eq!(g.points(), &[0.5]);
        assert_eq!(g.cell_bounds(), &[(0.0, 1.0)]);
        assert!(g.mesh() < 1.0);
    }

    #[test]
    fn two_cell_grid() {
        let g = make_grid(2);
        assert_eq!(g.points(), &[0.25, 0.75]);
        assert_eq!(g.cell_bounds(), &[(0.0, 0.5), (0.5, 1.0)]);
        assert_eq!(g.mesh(), 0.25);
        assert!(g.mesh() < 0.5);
    }

    #[test]
    fn quantize_nearest_and_ties() {
        let g = make_grid(2);
        assert_eq!(quantize(&g, 0.3).unwrap(), 0);
        // exact tie between 0.25 and 0.75 broken to the lower index
        assert_eq!(quantize(&g, 0.5).unwrap(), 0);
        assert_eq!(quantize(&g, 0.75).unwrap(), 1);
    }

    #[test]
    fn quantize_rejects_out_of_domain() {
        let g = make_grid(4);
        assert!(quantize(&g, -0.1).is_err());
        assert!(quantize(&g, 1.1).is_err());
        assert!(quantize(&g, f64::NAN).is_err());
    }

    #[test]
    fn quantize_idempotent_on_grid_points() {
        for n in [1, 2, 3, 7, 64] {
            let g = make_grid(n);
            for i in 0..n {
                assert_eq!(quantize(&g, g.point(i)).unwrap(), i);
            }
        }
    }

    #[test]
    fn mesh_bound_holds_everywhere() {
        for n in [1, 2, 5, 17, 100] {
            let g = make_grid(n);
            for k in 0..=1000 {
                let x = k as f64 / 1000.0;
                let i = quantize(&g, x).unwrap();
                let d = (x - g.point(i)).abs();
                assert!(d <= g.mesh() + 1e-15);
                assert!(d < 1.0 / n as f64);
            }
        }
    }

    #[test]
    fn cells_partition_unit_interval() {
        for n in [1, 3, 8] {
            let g = make_grid(n);
            let cb = g.cell_bounds();
            assert_eq!(cb[0].0, 0.0);
            assert_eq!(cb[n - 1].1, 1.0);
            for i in 1..n {
                assert_eq!(cb[i - 1].1, cb[i].0);
            }
            for i in 0..n {
                let p = g.point(i);
                assert!(cb[i].0 <= p && p < cb[i].1 || (i == n - 1 && p <= cb[i].1));
            }
        }
    }

    #[test]
    fn cell_of_respects_half_open_bounds() {
        let g = make_grid(2);
        assert_eq!(cell_of(&g, 0.0).unwrap(), 0);
        assert_eq!(cell_of(&g, 0.5).unwrap(), 1);
        assert_eq!(cell_of(&g, 1.0).unwrap(), 1);
    }
}
