//! The scaled mean-field-equilibrium operator: Bellman-style value update
//! with strongly convex action minimization, ergodicity pushforward of the
//! state measure, the full fixed-point iteration, policy evaluation, and
//! equilibrium residuals.
//!
//! One iterate maps `(V, mu)` to `(V', mu')` where
//! `V'(x) = min_a [gamma c(x,a,mu) + beta <V, p(.|x,a,mu)>]` with greedy
//! actions `a*(x)`, and `mu'(y) = sum_i p(y|x_i, a*(x_i), mu) mu_i`. Under
//! the certified contraction conditions the iteration converges to the
//! unique fixed point encoding the mean-field equilibrium, from any initial
//! datum and for any positive scaling `gamma`.

use crate::conditions::certify;
use crate::error::{Error, Result};
use crate::golden::golden_section_min;
use crate::grid::StateGrid;
use crate::measure::DiscreteMeasure;
use crate::metrics::{w1_1d, w1_discrete_metric};
use crate::models::{eval_cost, eval_kernel_row, ModelSpec};
use crate::table::{PolicyTable, ValueTable};
use serde::Serialize;

/// Default location tolerance of the greedy-action search.
pub const DEFAULT_ARGMIN_TOL: f64 = 1e-10;
/// Iteration cap of the golden-section search.
pub const ARGMIN_MAX_ITER: usize = 200;
/// Residual tolerances are this multiple of the stopping tolerances.
pub const RESIDUAL_TOL_FACTOR: f64 = 10.0;

/// Metric used on the measure component for stopping and residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMetric {
    /// Wasserstein-1 under `|x - y|` on the embedded grid points.
    Wasserstein1d,
    /// Wasserstein-1 under the discrete metric, i.e. half total variation.
    Discrete,
}

pub fn measure_distance(
    metric: MeasureMetric,
    grid: &StateGrid,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    match metric {
        MeasureMetric::Wasserstein1d => w1_1d(grid, mu, nu),
        MeasureMetric::Discrete => w1_discrete_metric(mu, nu),
    }
}

/// A game restricted to a finite grid: everything the iteration needs.
/// Implemented by the nominal model evaluated at grid points and by the
/// quantized model with cell-averaged cost and kernel.
pub trait GridGame {
    fn grid(&self) -> &StateGrid;
    fn beta(&self) -> f64;
    fn action_bounds(&self) -> (f64, f64);
    fn cost(&self, i: usize, a: f64, mu: &DiscreteMeasure) -> Result<f64>;
    fn kernel_row(&self, i: usize, a: f64, mu: &DiscreteMeasure) -> Result<DiscreteMeasure>;
}

/// The nominal model evaluated pointwise on a grid.
pub struct PointGame<'a> {
    pub model: &'a ModelSpec,
    pub grid: &'a StateGrid,
}

impl GridGame for PointGame<'_> {
    fn grid(&self) -> &StateGrid {
        self.grid
    }

    fn beta(&self) -> f64 {
        self.model.beta
    }

    fn action_bounds(&self) -> (f64, f64) {
        self.model.action_bounds
    }

    fn cost(&self, i: usize, a: f64, mu: &DiscreteMeasure) -> Result<f64> {
        eval_cost(self.model, self.grid, self.grid.point(i), a, mu)
    }

    fn kernel_row(&self, i: usize, a: f64, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        eval_kernel_row(self.model, self.grid, self.grid.point(i), a, mu)
    }
}

/// One iterate of the fixed-point loop together with its step sizes.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub values: ValueTable,
    pub measure: DiscreteMeasure,
    pub policy: PolicyTable,
    pub iteration: usize,
    pub sup_diff_v: f64,
    pub w1_diff_mu: f64,
}

/// Per-iteration convergence trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub sup_diff_v: f64,
    pub w1_diff_mu: f64,
}

/// Outcome of the fixed-point iteration.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumResult {
    pub values: ValueTable,
    pub measure: DiscreteMeasure,
    pub policy: PolicyTable,
    pub converged: bool,
    pub iterations: usize,
    pub bellman_residual: f64,
    pub invariance_residual: f64,
    pub gamma: f64,
    /// Set when the caller bypassed the certification gate.
    pub certification_override: bool,
    /// Iterations whose value table exceeded the Lipschitz bound of the
    /// operator domain; logged, never fatal.
    pub lipschitz_violations: usize,
}

/// Solver configuration; `Default` matches the documented defaults.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveOptions {
    pub gamma: f64,
    pub tol_v: f64,
    pub tol_mu: f64,
    pub max_iter: usize,
    pub argmin_tol: f64,
    pub measure_metric: MeasureMetric,
    pub certification_override: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            tol_v: 1e-9,
            tol_mu: 1e-9,
            max_iter: 10_000,
            argmin_tol: DEFAULT_ARGMIN_TOL,
            measure_metric: MeasureMetric::Wasserstein1d,
            certification_override: false,
        }
    }
}

/// `gamma c(x,a,mu) + beta <V, p(.|x,a,mu)>` at an arbitrary state `x`.
pub fn bellman_value(
    model: &ModelSpec,
    grid: &StateGrid,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    gamma: f64,
    x: f64,
    a: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Parameter(format!("gamma {gamma} must be positive")));
    }
    let cost = eval_cost(model, grid, x, a, mu)?;
    let row = eval_kernel_row(model, grid, x, a, mu)?;
    Ok(gamma * cost + model.beta * dot(v.values(), row.weights()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bellman_on_game<G: GridGame>(
    game: &G,
    i: usize,
    a: f64,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    gamma: f64,
) -> Result<f64> {
    let cost = game.cost(i, a, mu)?;
    let row = game.kernel_row(i, a, mu)?;
    Ok(gamma * cost + game.beta() * dot(v.values(), row.weights()))
}

/// Greedy action at state `x`: the unique minimizer of the one-step
/// objective, located by golden-section search.
pub fn argmin_action(
    model: &ModelSpec,
    grid: &StateGrid,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    gamma: f64,
    x: f64,
    argmin_tol: f64,
) -> Result<f64> {
    let (lo, hi) = model.action_bounds;
    let mut f = |a: f64| bellman_value(model, grid, v, mu, gamma, x, a);
    golden_section_min(&mut f, lo, hi, argmin_tol, ARGMIN_MAX_ITER)
}

fn argmin_on_game<G: GridGame>(
    game: &G,
    i: usize,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    gamma: f64,
    argmin_tol: f64,
) -> Result<f64> {
    let (lo, hi) = game.action_bounds();
    let mut f = |a: f64| bellman_on_game(game, i, a, v, mu, gamma);
    golden_section_min(&mut f, lo, hi, argmin_tol, ARGMIN_MAX_ITER)
}

/// Value-update half of the operator on a generic grid game: per grid point
/// the greedy action and the minimized objective value.
pub fn h1_apply_game<G: GridGame>(
    game: &G,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    gamma: f64,
    argmin_tol: f64,
) -> Result<(ValueTable, PolicyTable)> {
    let n = game.grid().len();
    let mut values = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    for i in 0..n {
        let a = argmin_on_game(game, i, v, mu, gamma, argmin_tol)?;
        values.push(bellman_on_game(game, i, a, v, mu, gamma)?);
        actions.push(a);
    }
    Ok((
        ValueTable::new(values)?,
        PolicyTable::new(actions, game.action_bounds())?,
    ))
}

/// Value-update half of the operator for the nominal model on a grid.
pub fn h1_apply(
    model: &ModelSpec,
    grid: &StateGrid,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    gamma: f64,
    argmin_tol: f64,
) -> Result<(ValueTable, PolicyTable)> {
    h1_apply_game(&PointGame { model, grid }, v, mu, gamma, argmin_tol)
}

/// Ergodicity half of the operator: one-step pushforward of `mu` under the
/// greedy policy, `mu'(y) = sum_i p(y|x_i, a_i, mu) mu_i`.
pub fn h2_apply_game<G: GridGame>(
    game: &G,
    policy: &PolicyTable,
    mu: &DiscreteMeasure,
) -> Result<DiscreteMeasure> {
    let n = game.grid().len();
    if policy.len() != n || mu.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: policy.len().min(mu.len()),
        });
    }
    let mut next = vec![0.0; n];
    for i in 0..n {
        let w = mu.weights()[i];
        if w == 0.0 {
            continue;
        }
        let row = game.kernel_row(i, policy.actions()[i], mu)?;
        for (acc, r) in next.iter_mut().zip(row.weights()) {
            *acc += w * r;
        }
    }
    DiscreteMeasure::new(next)
}

/// Ergodicity half for the nominal model on a grid.
pub fn h2_apply(
    model: &ModelSpec,
    grid: &StateGrid,
    policy: &PolicyTable,
    mu: &DiscreteMeasure,
) -> Result<DiscreteMeasure> {
    h2_apply_game(&PointGame { model, grid }, policy, mu)
}

/// Iterates the operator from `(v0, mu0)` until both step sizes drop below
/// their tolerances or the iteration budget runs out. Non-convergence is a
/// result, not an error. The optional `lip_bound` is the domain bound on
/// the discrete Lipschitz quotient of the value table; exceedances are
/// counted and the iteration continues.
pub fn mfe_iterate_game<G: GridGame>(
    game: &G,
    v0: &ValueTable,
    mu0: &DiscreteMeasure,
    opts: &SolveOptions,
    lip_bound: Option<f64>,
) -> Result<(EquilibriumResult, Vec<TraceRow>)> {
    if opts.max_iter < 1 {
        return Err(Error::Parameter("max_iter must be at least 1".into()));
    }
    if !(opts.gamma > 0.0) {
        return Err(Error::Parameter(format!(
            "gamma {} must be positive",
            opts.gamma
        )));
    }
    let grid = game.grid();
    let mut v = v0.clone();
    let mut mu = mu0.clone();
    let mut policy = PolicyTable::new(
        vec![game.action_bounds().0; grid.len()],
        game.action_bounds(),
    )?;
    let mut trace = Vec::new();
    let mut stopped = false;
    let mut iterations = 0;
    let mut lipschitz_violations = 0;
    for it in 1..=opts.max_iter {
        let (v_next, pol) = h1_apply_game(game, &v, &mu, opts.gamma, opts.argmin_tol)?;
        let mu_next = h2_apply_game(game, &pol, &mu)?;
        let sup_diff_v = v.sup_distance(&v_next)?;
        let w1_diff_mu = measure_distance(opts.measure_metric, grid, &mu, &mu_next)?;
        trace.push(TraceRow {
            iter: it,
            sup_diff_v,
            w1_diff_mu,
        });
        if let Some(bound) = lip_bound {
            if v_next.lipschitz_quotient(grid.points()) > bound + 1e-9 {
                lipschitz_violations += 1;
            }
        }
        v = v_next;
        mu = mu_next;
        policy = pol;
        iterations = it;
        if sup_diff_v < opts.tol_v && w1_diff_mu < opts.tol_mu {
            stopped = true;
            break;
        }
    }
    let (bellman_residual, invariance_residual) =
        residuals_on_game(game, &v, &mu, &policy, opts)?;
    let converged = stopped
        && bellman_residual <= RESIDUAL_TOL_FACTOR * opts.tol_v
        && invariance_residual <= RESIDUAL_TOL_FACTOR * opts.tol_mu;
    Ok((
        EquilibriumResult {
            values: v,
            measure: mu,
            policy,
            converged,
            iterations,
            bellman_residual,
            invariance_residual,
            gamma: opts.gamma,
            certification_override: opts.certification_override,
            lipschitz_violations,
        },
        trace,
    ))
}

fn residuals_on_game<G: GridGame>(
    game: &G,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    policy: &PolicyTable,
    opts: &SolveOptions,
) -> Result<(f64, f64)> {
    let (v_min, _) = h1_apply_game(game, v, mu, opts.gamma, opts.argmin_tol)?;
    let bellman = v.sup_distance(&v_min)?;
    let pushed = h2_apply_game(game, policy, mu)?;
    let invariance = measure_distance(opts.measure_metric, game.grid(), mu, &pushed)?;
    Ok((bellman, invariance))
}

/// Full fixed-point solve of the nominal model on a grid. The model must be
/// certified unless `opts.certification_override` is set.
pub fn mfe_iterate(
    model: &ModelSpec,
    grid: &StateGrid,
    v0: &ValueTable,
    mu0: &DiscreteMeasure,
    opts: &SolveOptions,
) -> Result<(EquilibriumResult, Vec<TraceRow>)> {
    if !opts.certification_override {
        let report = certify(model, None)?;
        if !report.theorem1_holds {
            return Err(Error::NotCertified(format!(
                "contraction conditions fail: k = {}, k1 = {}, k2 = {}",
                report.k, report.k1, report.k2
            )));
        }
    }
    let c = &model.constants;
    let lip_bound = if model.beta * c.k2 < 1.0 {
        Some(opts.gamma * c.l2 / (1.0 - model.beta * c.k2))
    } else {
        None
    };
    mfe_iterate_game(&PointGame { model, grid }, v0, mu0, opts, lip_bound)
}

/// Discounted cost of the stationary deterministic policy under frozen
/// `mu`, solved directly from the linear system `(I - beta P) V = gamma c`.
pub fn policy_eval(
    model: &ModelSpec,
    grid: &StateGrid,
    policy: &PolicyTable,
    mu: &DiscreteMeasure,
    gamma: f64,
) -> Result<ValueTable> {
    let game = PointGame { model, grid };
    let n = grid.len();
    if policy.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: policy.len(),
        });
    }
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let row = game.kernel_row(i, policy.actions()[i], mu)?;
        for j in 0..n {
            a[i * n + j] = if i == j { 1.0 } else { 0.0 } - model.beta * row.weights()[j];
        }
        rhs[i] = gamma * game.cost(i, policy.actions()[i], mu)?;
    }
    let v = solve_dense(&mut a, &mut rhs, n)?;
    ValueTable::new(v)
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let (pivot, max) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if max < 1e-14 {
            return Err(Error::Numerical("singular policy-evaluation system".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Ok(x)
}

/// Bellman and invariance residuals of a candidate equilibrium for the
/// nominal model on a grid.
pub fn equilibrium_residuals(
    model: &ModelSpec,
    grid: &StateGrid,
    v: &ValueTable,
    mu: &DiscreteMeasure,
    policy: &PolicyTable,
    gamma: f64,
) -> Result<(f64, f64)> {
    let opts = SolveOptions {
        gamma,
        ..SolveOptions::default()
    };
    residuals_on_game(&PointGame { model, grid }, v, mu, policy, &opts)
}
