//! Distances between discrete measures: the exact one-dimensional
//! Wasserstein-1 formula used in production, the discrete-metric and total
//! variation forms, and an exact optimal-transport solver kept as the
//! ground-truth oracle for all of them.
//!
//! On a common grid with `d(x,y) = |x-y| <= 1` the three distances nest:
//! `w1_1d <= w1_discrete_metric <= tv`.

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::measure::DiscreteMeasure;

/// A coupling between two discrete measures: nonnegative entries whose row
/// sums reproduce the source weights and column sums the target weights.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    entries: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// Verifies nonnegativity and both marginal constraints within `tol`.
    pub fn check_marginals(&self, mu: &[f64], nu: &[f64], tol: f64) -> Result<()> {
        if mu.len() != self.rows || nu.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.rows,
                found: mu.len(),
            });
        }
        for (k, &e) in self.entries.iter().enumerate() {
            if e < -tol {
                return Err(Error::InvalidMeasure(format!(
                    "negative plan entry {e} at flat index {k}"
                )));
            }
        }
        for i in 0..self.rows {
            let s: f64 = (0..self.cols).map(|j| self.entry(i, j)).sum();
            if (s - mu[i]).abs() > tol {
                return Err(Error::InvalidMeasure(format!(
                    "row {i} sums to {s}, expected {}",
                    mu[i]
                )));
            }
        }
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.entry(i, j)).sum();
            if (s - nu[j]).abs() > tol {
                return Err(Error::InvalidMeasure(format!(
                    "column {j} sums to {s}, expected {}",
                    nu[j]
                )));
            }
        }
        Ok(())
    }
}

fn check_same_len(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.len() != nu.len() {
        return Err(Error::Dimension {
            expected: mu.len(),
            found: nu.len(),
        });
    }
    Ok(())
}

/// Wasserstein-1 distance under `d(x,y) = |x-y|` via the CDF identity
/// `W1 = sum_i |F_mu(x_i) - F_nu(x_i)| (x_{i+1} - x_i)`.
pub fn w1_1d(grid: &StateGrid, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_same_len(mu, nu)?;
    if mu.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            found: mu.len(),
        });
    }
    let pts = grid.points();
    let mut acc = 0.0;
    let mut cdf_gap = 0.0;
    for i in 0..grid.len() - 1 {
        cdf_gap += mu.weights()[i] - nu.weights()[i];
        acc += cdf_gap.abs() * (pts[i + 1] - pts[i]);
    }
    Ok(acc)
}

/// Wasserstein-1 distance under the discrete metric `1_{i != j}`, which
/// equals half the l1 distance of the weight vectors.
pub fn w1_discrete_metric(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_same_len(mu, nu)?;
    Ok(0.5 * l1(mu.weights(), nu.weights()))
}

/// Total variation distance `2 sup_A |mu(A) - nu(A)|`, i.e. the l1 norm of
/// the weight difference.
pub fn tv(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_same_len(mu, nu)?;
    Ok(l1(mu.weights(), nu.weights()))
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Cost matrix `|x_i - x_j|` for measures living on the same grid.
pub fn absolute_cost_matrix(grid: &StateGrid) -> Vec<Vec<f64>> {
    let pts = grid.points();
    pts.iter()
        .map(|&x| pts.iter().map(|&y| (x - y).abs()).collect())
        .collect()
}

/// Cost matrix of the discrete metric: 0 on the diagonal, 1 elsewhere.
pub fn discrete_cost_matrix(len: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|i| (0..len).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Exact optimal-transport value and an optimal plan for an arbitrary
/// nonnegative cost matrix. Supports of at most four atoms on each side are
/// solved by exhaustive vertex enumeration; larger instances run the
/// transportation simplex. Marginal sums must agree within `1e-9`.
pub fn w1_lp_oracle(
    cost: &[Vec<f64>],
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<(f64, TransportPlan)> {
    let m = mu.len();
    let n = nu.len();
    if cost.len() != m || cost.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension {
            expected: m,
            found: cost.len(),
        });
    }
    for row in cost {
        for &c in row {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::Parameter(format!("cost entry {c} not in [0, inf)")));
            }
        }
    }
    let sa: f64 = mu.weights().iter().sum();
    let sb: f64 = nu.weights().iter().sum();
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::InvalidMeasure(format!(
            "marginal sums differ: {sa} vs {sb}"
        )));
    }
    let plan = if m <= 4 && n <= 4 {
        enumerate_vertices(cost, mu.weights(), nu.weights())
    } else {
        transportation_simplex(cost, mu.weights(), nu.weights())?
    };
    let value = plan_cost(cost, &plan, n);
    Ok((
        value,
        TransportPlan {
            entries: plan,
            rows: m,
            cols: n,
        },
    ))
}

fn plan_cost(cost: &[Vec<f64>], plan: &[f64], cols: usize) -> f64 {
    let mut acc = 0.0;
    for (k, &x) in plan.iter().enumerate() {
        if x != 0.0 {
            acc += cost[k / cols][k % cols] * x;
        }
    }
    acc
}

/// Northwest-corner fill in the given row/column orders. Returns the plan in
/// original index space; every basic feasible solution of the transportation
/// polytope arises this way for some ordering, so minimizing over all
/// orderings of a small instance is an exact solver.
fn northwest_fill(cost_rows: usize, cols: usize, sigma: &[usize], tau: &[usize], a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut plan = vec![0.0; cost_rows * cols];
    let mut rem_a: Vec<f64> = sigma.iter().map(|&i| a[i]).collect();
    let mut rem_b: Vec<f64> = tau.iter().map(|&j| b[j]).collect();
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let x = rem_a[i].min(rem_b[j]);
        plan[sigma[i] * cols + tau[j]] += x;
        rem_a[i] -= x;
        rem_b[j] -= x;
        if i == sigma.len() - 1 && j == tau.len() - 1 {
            break;
        }
        if (rem_a[i] <= rem_b[j] && i < sigma.len() - 1) || j == tau.len() - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    plan
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    heap_permute(k, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k {
        heap_permute(k - 1, cur, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

fn enumerate_vertices(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let n = b.len();
    let mut best_plan = Vec::new();
    let mut best = f64::INFINITY;
    for sigma in permutations(m) {
        for tau in permutations(n) {
            let plan = northwest_fill(m, n, &sigma, &tau, a, b);
            let c = plan_cost(cost, &plan, n);
            if c < best {
                best = c;
                best_plan = plan;
            }
        }
    }
    best_plan
}

/// Transportation simplex (MODI method) with a northwest-corner start.
fn transportation_simplex(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let n = b.len();
    let identity: Vec<usize> = (0..m.max(n)).collect();
    let mut plan = northwest_fill(m, n, &identity[..m], &identity[..n], a, b);

    // Basis cells from the NW path: exactly m + n - 1 of them.
    let mut basic = vec![false; m * n];
    {
        let (mut i, mut j) = (0usize, 0usize);
        let mut rem_a = a.to_vec();
        let mut rem_b = b.to_vec();
        loop {
            basic[i * n + j] = true;
            let x = rem_a[i].min(rem_b[j]);
            rem_a[i] -= x;
            rem_b[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (rem_a[i] <= rem_b[j] && i < m - 1) || j == n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let max_pivots = 200 * (m + n) * (m + n) + 1000;
    for _ in 0..max_pivots {
        // Duals from the basis tree: u_i + v_j = c_ij on basic cells.
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut stack = vec![(true, 0usize)];
        while let Some((is_row, k)) = stack.pop() {
            if is_row {
                for j in 0..n {
                    if basic[k * n + j] && v[j].is_nan() {
                        v[j] = cost[k][j] - u[k];
                        stack.push((false, j));
                    }
                }
            } else {
                for i in 0..m {
                    if basic[i * n + k] && u[i].is_nan() {
                        u[i] = cost[i][k] - v[k];
                        stack.push((true, i));
                    }
                }
            }
        }
        if u.iter().any(|x| x.is_nan()) || v.iter().any(|x| x.is_nan()) {
            return Err(Error::Numerical(
                "transportation basis lost connectivity".into(),
            ));
        }

        // Entering cell: most negative reduced cost, first in row-major order.
        let mut enter = None;
        let mut best = -1e-11;
        for i in 0..m {
            for j in 0..n {
                if !basic[i * n + j] {
                    let r = cost[i][j] - u[i] - v[j];
                    if r < best {
                        best = r;
                        enter = Some((i, j));
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else {
            return Ok(plan);
        };

        // Unique cycle: path from row ei to column ej through the basis tree.
        // Nodes 0..m are rows, m..m+n are columns.
        let total = m + n;
        let mut parent = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        seen[ei] = true;
        let mut queue = std::collections::VecDeque::from([ei]);
        while let Some(node) = queue.pop_front() {
            if node == m + ej {
                break;
            }
            if node < m {
                for j in 0..n {
                    if basic[node * n + j] && !seen[m + j] {
                        seen[m + j] = true;
                        parent[m + j] = node;
                        queue.push_back(m + j);
                    }
                }
            } else {
                let j = node - m;
                for i in 0..m {
                    if basic[i * n + j] && !seen[i] {
                        seen[i] = true;
                        parent[i] = node;
                        queue.push_back(i);
                    }
                }
            }
        }
        if !seen[m + ej] {
            return Err(Error::Numerical(
                "transportation basis lost connectivity".into(),
            ));
        }
        // Walk back from column ej to row ei collecting path edges; signs
        // alternate starting with minus on the edge incident to ej.
        let mut path_edges = Vec::new();
        let mut node = m + ej;
        while node != ei {
            let p = parent[node];
            let (i, j) = if node < m { (node, p - m) } else { (p, node - m) };
            path_edges.push((i, j));
            node = p;
        }
        // Entering edge is a plus; the edge sharing column ej is a minus, and
        // signs alternate along the path back to row ei.
        let mut theta = f64::INFINITY;
        let mut leave = None;
        for (k, &(i, j)) in path_edges.iter().enumerate() {
            if k % 2 == 0 {
                let x = plan[i * n + j];
                if x < theta {
                    theta = x;
                    leave = Some((i, j));
                }
            }
        }
        let (li, lj) = leave.ok_or_else(|| {
            Error::Numerical("transportation pivot found no leaving cell".into())
        })?;
        plan[ei * n + ej] += theta;
        for (k, &(i, j)) in path_edges.iter().enumerate() {
            if k % 2 == 0 {
                plan[i * n + j] -= theta;
            } else {
                plan[i * n + j] += theta;
            }
        }
        basic[ei * n + ej] = true;
        basic[li * n + lj] = false;
        plan[li * n + lj] = 0.0;
    }
    Err(Error::Numerical(
        "transportation simplex exceeded pivot budget".into(),
    ))
}
