//! Fugacity extrapolation `S(λ) = S_∞ + a λ^{-1/2} + b λ^{-1}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QsatError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation<T> {
    pub s_inf: T,
    pub a: T,
    pub b: T,
    /// Root-mean-square residual of the fit.
    pub residual: T,
    pub condition: T,
}

const MAX_CONDITION: f64 = 1e10;

pub fn extrapolate_lambda<T: Scalar>(samples: &[(T, T)]) -> Result<Extrapolation<T>> {
    let mut lambdas: Vec<f64> = samples.iter().map(|s| s.0.to_f64_lossy()).collect();
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(QsatError::InvalidParameter("fugacities must be positive and finite".into()));
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.len() < 3 {
        return Err(QsatError::InvalidParameter(format!(
            "extrapolation needs at least 3 distinct fugacities, got {}",
            lambdas.len()
        )));
    }
    let n = samples.len();
    let a = DMatrix::from_fn(n, 3, |r, c| {
        let l = samples[r].0.to_f64_lossy();
        match c {
            0 => 1.0,
            1 => l.powf(-0.5),
            _ => 1.0 / l,
        }
    });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.1.to_f64_lossy()));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(QsatError::IllConditioned {
            condition,
            reason: format!("fugacity grid {lambdas:?} does not separate the three fit terms"),
        });
    }
    let coef = svd.solve(&y, 1e-300).map_err(|e| QsatError::IllConditioned { condition, reason: e.to_string() })?;
    let res = &a * &coef - &y;
    let rms = (res.norm_squared() / n as f64).sqrt();
    Ok(Extrapolation {
        s_inf: T::of(coef[0]),
        a: T::of(coef[1]),
        b: T::of(coef[2]),
        residual: T::of(rms),
        condition: T::of(condition),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input() {
        let s: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&l| (l, 0.7)).collect();
        let e = extrapolate_lambda(&s).unwrap();
        assert!((e.s_inf - 0.7).abs() < 1e-12);
        assert!(e.residual < 1e-12);
    }

    #[test]
    fn exact_series_is_recovered() {
        let s: Vec<(f64, f64)> =
            [1e2, 1e3, 1e4, 1e5].iter().map(|&l: &f64| (l, 0.29 + 0.94 * l.powf(-0.5) - 0.06 / l)).collect();
        let e = extrapolate_lambda(&s).unwrap();
        assert!((e.s_inf - 0.29).abs() < 1e-10);
        assert!((e.a - 0.94).abs() < 1e-8);
    }

    #[test]
    fn too_few_fugacities() {
        let s = [(10.0f64, 1.0), (10.0, 1.1), (100.0, 1.0)];
        assert!(matches!(extrapolate_lambda(&s), Err(QsatError::InvalidParameter(_))));
    }

    #[test]
    fn nearly_coincident_grid_is_ill_conditioned() {
        let s = [(1e6f64, 1.0), (1e6 * (1.0 + 1e-9), 1.0), (1e6 * (1.0 + 2e-9), 1.0)];
        assert!(matches!(extrapolate_lambda(&s), Err(QsatError::IllConditioned { .. })));
    }
}
