//! Contraction constants of the equilibrium operator and their quantized
//! counterparts, and the certification decision built on them.
//!
//! The continuous-game constants are
//!
//! ```text
//! k1 = K_F K1 / (rho (1 - alpha beta))
//! k2 = (1 - (K_F/rho + 1)(K2 + K1)) / (L1 + beta L2 K1 / (1 - beta K2))
//! k  = max(alpha beta, (K_F/rho + 1)(K2 + K1))
//! ```
//!
//! and the iteration is certified to converge to the unique fixed point
//! whenever `k < 1` and `k1 < k2`. The quantized game at resolution `n`
//! carries the same constants with `(1 + 2/n)` inflation factors and
//! `(1 - beta)` in place of `(1 - alpha beta)`; they decrease to the
//! `alpha = 1` continuous values as `n` grows, so certification at some
//! finite `n` is decidable by monotone search.

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use serde::Serialize;

/// Certification record for the quantized game at one resolution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuantizedConditions {
    pub n: u64,
    pub k1n: f64,
    pub k2n: f64,
    pub kn: f64,
    pub holds: bool,
}

/// Full certification report of a model.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub k1: f64,
    pub k2: f64,
    pub k: f64,
    /// `(k1, k2)` when nonempty, the open interval of scalings for which
    /// the operator itself is a contraction.
    pub gamma_feasible_interval: Option<(f64, f64)>,
    pub theorem1_holds: bool,
    /// `k1` recomputed with `(1 - beta)` in place of `(1 - alpha beta)`:
    /// the limit of the quantized constants. Differs from `k1` only when
    /// the declared `alpha` is not 1.
    pub k1_discount_only: f64,
    /// Per-resolution quantized records, present when a resolution was
    /// requested or scanned.
    pub quantized: Vec<QuantizedConditions>,
    /// Smallest resolution at which the quantized conditions hold, when
    /// they hold in the limit and a witness at or below the scan cap exists.
    pub smallest_certified_n: Option<u64>,
}

impl ConditionReport {
    /// Midpoint of the feasible scaling interval; the solver default.
    pub fn gamma_mid(&self) -> Option<f64> {
        self.gamma_feasible_interval.map(|(a, b)| 0.5 * (a + b))
    }
}

/// Scan cap for the smallest certified resolution.
pub const DEFAULT_N_CAP: u64 = 1_000_000;

/// The continuous-game constants `(k1, k2, k)` by direct substitution.
pub fn compute_constants(model: &ModelSpec) -> Result<(f64, f64, f64)> {
    let c = &model.constants;
    let beta = model.beta;
    if beta * c.k2 >= 1.0 {
        return Err(Error::DegenerateDenominator(format!(
            "beta*K2 = {} >= 1",
            beta * c.k2
        )));
    }
    if c.alpha * beta >= 1.0 {
        return Err(Error::DegenerateDenominator(format!(
            "alpha*beta = {} >= 1",
            c.alpha * beta
        )));
    }
    let k1 = c.k_f * c.k1 / (c.rho * (1.0 - c.alpha * beta));
    let coupling = (c.k_f / c.rho + 1.0) * (c.k2 + c.k1);
    let k2 = (1.0 - coupling) / (c.l1 + beta * c.l2 * c.k1 / (1.0 - beta * c.k2));
    let k = (c.alpha * beta).max(coupling);
    Ok((k1, k2, k))
}

/// The quantized-game constants `(k1n, k2n, kn)` at resolution `n`.
pub fn compute_quantized_constants(model: &ModelSpec, n: u64) -> Result<(f64, f64, f64)> {
    if n == 0 {
        return Err(Error::Parameter("quantization resolution must be >= 1".into()));
    }
    let c = &model.constants;
    let beta = model.beta;
    let theta = 1.0 + 2.0 / n as f64;
    if beta * c.k2 * theta >= 1.0 {
        return Err(Error::DegenerateDenominator(format!(
            "beta*K2*(1 + 2/n) = {} >= 1",
            beta * c.k2 * theta
        )));
    }
    let k1n = c.k_f * c.k1 * theta / (c.rho * (1.0 - beta));
    let coupling = (c.k2 * theta + c.k1) * (theta * c.k_f / c.rho + 1.0);
    let k2n = (1.0 - coupling) / (c.l1 + beta * theta * c.l2 * c.k1 / (1.0 - beta * c.k2 * theta));
    let kn = beta.max((c.k_f / c.rho * theta + 1.0) * (c.k2 * theta + c.k1));
    Ok((k1n, k2n, kn))
}

fn quantized_record(model: &ModelSpec, n: u64) -> Result<QuantizedConditions> {
    let (k1n, k2n, kn) = compute_quantized_constants(model, n)?;
    Ok(QuantizedConditions {
        n,
        k1n,
        k2n,
        kn,
        holds: kn < 1.0 && k1n < k2n,
    })
}

/// Builds the full report. When `n` is given its record is included; the
/// smallest certified resolution is located by doubling scan plus bisection
/// whenever the limiting conditions hold.
pub fn certify(model: &ModelSpec, n: Option<u64>) -> Result<ConditionReport> {
    let (k1, k2, k) = compute_constants(model)?;
    let theorem1_holds = k < 1.0 && k1 < k2;
    let gamma_feasible_interval = if theorem1_holds { Some((k1, k2)) } else { None };
    let c = &model.constants;
    let k1_discount_only = c.k_f * c.k1 / (c.rho * (1.0 - model.beta));

    let mut quantized = Vec::new();
    if let Some(n) = n {
        quantized.push(quantized_record(model, n)?);
    }

    // The quantized conditions are monotone in n (the inflation factors
    // decrease), so certification is decided in the limit first.
    let limit_holds = {
        let coupling = (c.k_f / c.rho + 1.0) * (c.k2 + c.k1);
        let denom_ok = model.beta * c.k2 < 1.0;
        denom_ok && model.beta.max(coupling) < 1.0 && {
            let k2_lim =
                (1.0 - coupling) / (c.l1 + model.beta * c.l2 * c.k1 / (1.0 - model.beta * c.k2));
            k1_discount_only < k2_lim
        }
    };
    let smallest_certified_n = if limit_holds {
        let holds_at = |n: u64| -> bool {
            quantized_record(model, n).map(|r| r.holds).unwrap_or(false)
        };
        if holds_at(1) {
            Some(1)
        } else {
            // exponential search for an upper witness, then bisection
            let mut hi = 2u64;
            while hi <= DEFAULT_N_CAP && !holds_at(hi) {
                hi *= 2;
            }
            if hi > DEFAULT_N_CAP && !holds_at(DEFAULT_N_CAP) {
                None
            } else {
                let mut hi = hi.min(DEFAULT_N_CAP);
                let mut lo = hi / 2; // holds_at(lo) is false
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if holds_at(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            }
        }
    } else {
        None
    };
    if let Some(w) = smallest_certified_n {
        if n != Some(w) {
            quantized.push(quantized_record(model, w)?);
        }
    }

    Ok(ConditionReport {
        k1,
        k2,
        k,
        gamma_feasible_interval,
        theorem1_holds,
        k1_discount_only,
        quantized,
        smallest_certified_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DeclaredConstants, Family, ModelSpec};

    /// The worked constants: K_F = 0.5, K1 = 0.1, K2 = 0.1, L1 = 0.2,
    /// L2 = 1, rho = 1, alpha = 1, beta = 0.5.
    fn example_model() -> ModelSpec {
        let mut m = ModelSpec::builtin(Family::QuadraticDrift);
        m.beta = 0.5;
        m.constants = DeclaredConstants {
            cost_bound: 1.0,
            l1: 0.2,
            l2: 1.0,
            k1: 0.1,
            k2: 0.1,
            alpha: 1.0,
            rho: 1.0,
            k_f: 0.5,
        };
        m
    }

    #[test]
    fn hand_derived_constants() {
        let m = example_model();
        let (k1, k2, k) = compute_constants(&m).unwrap();
        assert!((k1 - 0.1).abs() < 1e-15);
        assert!((k - 0.5).abs() < 1e-15);
        // 0.7 / (0.2 + 0.5 * 0.1 / 0.95)
        assert!((k2 - 2.770833333333333).abs() < 1e-4);
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let mut m = example_model();
        m.constants.k2 = 2.5; // beta*K2 = 1.25
        assert!(matches!(
            compute_constants(&m),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn quantized_constants_at_n_two() {
        let m = example_model();
        let (k1n, _, _) = compute_quantized_constants(&m, 2).unwrap();
        // all (1 + 2/n) factors equal 2: k1,2 = 0.5 * 0.1 * 2 / 0.5
        assert!((k1n - 0.2).abs() < 1e-15);
    }

    #[test]
    fn quantized_constants_limit_to_continuous() {
        let m = example_model();
        let (k1, k2, k) = compute_constants(&m).unwrap();
        let (k1n, k2n, kn) = compute_quantized_constants(&m, 100_000_000).unwrap();
        // alpha = 1 here, so the limits agree with the continuous constants
        assert!((k1n - k1).abs() < 1e-7);
        assert!((k2n - k2).abs() < 1e-7);
        assert!((kn - k).abs() < 1e-7);
    }

    #[test]
    fn quantized_constants_are_monotone_in_n() {
        let m = example_model();
        let mut prev = compute_quantized_constants(&m, 1).unwrap();
        for n in 2..=100 {
            let cur = compute_quantized_constants(&m, n).unwrap();
            assert!(cur.0 <= prev.0 + 1e-15, "k1n not nonincreasing at n = {n}");
            assert!(cur.1 >= prev.1 - 1e-15, "k2n not nondecreasing at n = {n}");
            assert!(cur.2 <= prev.2 + 1e-15, "kn not nonincreasing at n = {n}");
            prev = cur;
        }
    }

    #[test]
    fn example_constants_certify() {
        let m = example_model();
        let report = certify(&m, None).unwrap();
        assert!(report.theorem1_holds);
        let mid = report.gamma_mid().unwrap();
        let (lo, hi) = report.gamma_feasible_interval.unwrap();
        assert!(lo < mid && mid < hi);
        assert!(report.smallest_certified_n.is_some());
    }

    #[test]
    fn decoupled_constants_certify_for_every_n() {
        let mut m = example_model();
        m.constants.k1 = 0.0;
        m.constants.k2 = 0.0;
        m.constants.l1 = 0.0;
        let report = certify(&m, Some(1)).unwrap();
        assert!(report.theorem1_holds);
        assert_eq!(report.smallest_certified_n, Some(1));
        assert!(report.quantized.iter().all(|q| q.holds));
    }

    #[test]
    fn infeasible_constants_do_not_certify() {
        let mut m = example_model();
        m.beta = 0.99;
        m.constants.k1 = 0.9;
        m.constants.k2 = 0.9;
        let report = certify(&m, None).unwrap();
        assert!(!report.theorem1_holds);
        assert!(report.k >= 1.8);
        assert!(report.gamma_feasible_interval.is_none());
        assert!(report.smallest_certified_n.is_none());
    }

    #[test]
    fn reports_are_deterministic() {
        let m = example_model();
        let a = certify(&m, Some(4)).unwrap();
        let b = certify(&m, Some(4)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn builtin_models_certify() {
        for family in [Family::QuadraticDrift, Family::ConstantKernel, Family::Decoupled] {
            let m = ModelSpec::builtin(family);
            let report = certify(&m, None).unwrap();
            assert!(report.theorem1_holds, "{family:?} fails: {report:?}");
        }
    }
}
