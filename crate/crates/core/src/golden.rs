//! Golden-section search for the minimum of a unimodal function on an
//! interval, with a cheap non-unimodality detector.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Minimizes `f` on `[lo, hi]` assuming unimodality. Returns the minimizer
/// location with `|a* - argmin| <= tol` (subject to the iteration cap).
///
/// If the interior candidate ends up strictly worse than an endpoint the
/// bracket was inconsistent with unimodality and a convexity-violation
/// error is raised.
pub fn golden_section_min(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    assert!(lo < hi, "empty bracket");
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x_best, f_best) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // Unimodality puts the interior minimum at or below both endpoints.
    let slack = 1e-12 * (1.0 + f_best.abs());
    if f_best > f_lo + slack && f_best > f_hi + slack {
        return Err(Error::ConvexityViolation(format!(
            "interior candidate {f_best} above both endpoint values {f_lo}, {f_hi}"
        )));
    }
    if f_best > f_lo.min(f_hi) + slack {
        // the bracket shrank toward the wrong valley
        return Err(Error::ConvexityViolation(format!(
            "interior candidate {f_best} above endpoint minimum {}",
            f_lo.min(f_hi)
        )));
    }
    Ok(x_best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        let mut g = |x: f64| Ok(f(x));
        golden_section_min(&mut g, lo, hi, 1e-12, 200)
    }

    #[test]
    fn quadratic_minimum() {
        let x = minimize(|x| (x - 0.3).powi(2), 0.0, 1.0).unwrap();
        assert!((x - 0.3).abs() < 1e-10);
    }

    #[test]
    fn boundary_minimum() {
        let x = minimize(|x| x, 0.0, 1.0).unwrap();
        assert!(x < 1e-10);
        let x = minimize(|x| -x, 0.0, 1.0).unwrap();
        assert!((x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn detects_bimodal_objective() {
        // two valleys, the distant one much deeper: the shrinking bracket
        // lands in the shallow valley above the better endpoint
        let f = |x: f64| {
            let left = (x - 0.05).powi(2) - 1.0;
            let right = 0.5 * (x - 0.8).powi(2);
            left.min(right)
        };
        let r = minimize(f, 0.0, 1.0);
        match r {
            Err(Error::ConvexityViolation(_)) => {}
            Ok(x) => assert!((x - 0.05).abs() < 1e-6, "found wrong valley at {x}"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn scaling_invariance_of_minimizer() {
        for s in [0.5, 2.0, 10.0] {
            let x1 = minimize(|x| (x - 0.4).powi(2) + 1.0, 0.0, 1.0).unwrap();
            let x2 = minimize(|x| s * ((x - 0.4).powi(2) + 1.0), 0.0, 1.0).unwrap();
            assert!((x1 - x2).abs() < 2e-10);
        }
    }
}
