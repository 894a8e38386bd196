//! Symmetric fixed point on random regular graphs (clause arity `k`, qubit
//! degree `d`).

use serde::{Deserialize, Serialize};

use super::messages::{clause_occupancy, edge_term, update_q, vertex_term};
use super::CavityReport;
use crate::error::{QsatError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularFixedPoint<T> {
    pub q_i: T,
    pub q_a: T,
    pub report: CavityReport<T>,
}

fn bisect<T: Scalar>(mut lo: T, mut hi: T, f: impl Fn(T) -> T) -> T {
    let two = T::of(2.0);
    let f_lo = f(lo);
    for _ in 0..400 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// Solves `q_i = λ/(1+λ+(d-1) r(q_a))`, `q_a = λ/(1+λ+(k-1) r(q_i))` with
/// `r(x) = x/(1-x)` and evaluates the per-qubit observables
/// `F/N = β F_a + F_i − d F_α`, `β = d/k`.
pub fn regular_fixed_point<T: Scalar>(k: usize, d: usize, lambda: T) -> Result<RegularFixedPoint<T>> {
    if k < 2 || d < 1 {
        return Err(QsatError::InvalidParameter(format!("regular ensemble needs k >= 2, d >= 1 (got k={k}, d={d})")));
    }
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(QsatError::InvalidParameter(format!("fugacity must be positive and finite, got {lambda}")));
    }
    let to_qubit = |q_i: T| update_q(std::iter::repeat_n(q_i, k - 1), lambda);
    let to_clause = |q_a: T| update_q(std::iter::repeat_n(q_a, d - 1), lambda);
    let top = lambda / (T::one() + lambda);
    // x − G(x) with G = to_clause ∘ to_qubit increasing; G(0) > 0 and
    // G(top) <= top bracket the root
    let q_i = if k == d {
        // symmetric: q − g(q), g decreasing, unique root
        bisect(T::zero(), top, |q| q - to_clause(q))
    } else {
        bisect(T::zero(), top, |x| x - to_clause(to_qubit(x)))
    };
    let q_a = to_qubit(q_i);

    let kf = T::of_usize(k);
    let df = T::of_usize(d);
    let beta = df / kf;
    let f_a = vertex_term(&vec![q_i; k]);
    let f_i = vertex_term(&vec![q_a; d]);
    let f_bond = edge_term(q_a, q_i, lambda);
    let f = beta * f_a + f_i - df * f_bond;
    if !f.is_finite() {
        return Err(QsatError::NumericalDomain { term: "regular free energy".into(), value: f.to_f64_lossy() });
    }
    let n_a = clause_occupancy(&vec![q_i; k]);
    Ok(RegularFixedPoint { q_i, q_a, report: CavityReport::new(f, n_a, beta, lambda) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_equation_holds() {
        for lambda in [0.01, 1.0, 1e2, 1e4] {
            let r = regular_fixed_point::<f64>(3, 3, lambda).unwrap();
            let q = r.q_i;
            assert!((q - lambda / (1.0 + lambda + 2.0 * q / (1.0 - q))).abs() < 1e-14);
            assert!((r.q_i - r.q_a).abs() < 1e-14);
        }
    }

    #[test]
    fn small_fugacity_series() {
        let r = regular_fixed_point::<f64>(3, 3, 1e-6).unwrap();
        assert!((r.q_i - 1e-6).abs() < 1e-11);
        assert!(r.report.entropy_density.abs() < 1e-4);
    }

    #[test]
    fn occupancy_is_monotone_in_fugacity() {
        let mut prev = 0.0;
        for e in 0..40 {
            let lambda = 10f64.powf(-2.0 + 0.2 * e as f64);
            let n = regular_fixed_point::<f64>(3, 3, lambda).unwrap().report.occupancy;
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn asymmetric_fixed_point() {
        let r = regular_fixed_point::<f64>(3, 4, 50.0).unwrap();
        let back = update_q(std::iter::repeat_n(r.q_a, 3), 50.0);
        assert!((back - r.q_i).abs() < 1e-12);
        assert!((r.report.beta - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(regular_fixed_point::<f64>(3, 3, 0.0).is_err());
        assert!(regular_fixed_point::<f64>(1, 3, 1.0).is_err());
    }
}
