//! Gauss-Legendre quadrature nodes and weights, computed by Newton
//! iteration on the Legendre polynomials. A rule with `n` nodes integrates
//! polynomials up to degree `2n - 1` exactly.

/// Nodes and weights on the reference interval `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights transplanted to `[lo, hi]`; weights sum to `hi - lo`.
pub fn gauss_legendre_on(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        nodes.iter().map(|t| mid + half * t).collect(),
        weights.iter().map(|w| w * half).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 3, 5, 8, 16] {
            let (_, w) = gauss_legendre_on(n, 0.25, 0.75);
            let s: f64 = w.iter().sum();
            assert!((s - 0.5).abs() < 1e-14, "n = {n}: sum {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [2usize, 4, 8] {
            let (x, w) = gauss_legendre_on(n, 0.0, 1.0);
            for deg in 0..2 * n {
                let approx: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!(
                    (approx - exact).abs() < 1e-13,
                    "n = {n}, degree {deg}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn two_point_rule_is_exact_for_cell_average_of_squares() {
        // integral of x^2 over [0, 0.5] divided by the length is 1/12
        let (x, w) = gauss_legendre_on(2, 0.0, 0.5);
        let avg: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>() / 0.5;
        assert!((avg - 1.0 / 12.0).abs() < 1e-15);
    }
}
