//! Qubit-degree distributions for ensemble-level computations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsatError, Result};
use crate::scalar::{ln_factorial, Scalar};

/// Degree law of the qubits of a (core) interaction graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DegreeLaw<T> {
    /// Every qubit has degree `d`.
    Regular(usize),
    /// Poisson(`mu`) conditioned on `d >= min_degree`.
    TruncatedPoisson { mu: T, min_degree: usize },
    /// Explicit probability mass on degrees `0..pmf.len()`.
    Empirical(Vec<T>),
}

const TAIL_EPS: f64 = 1e-17;

impl<T: Scalar> DegreeLaw<T> {
    /// Core degree law at Poisson parameter `mu` (degrees ≥ 2).
    pub fn core(mu: T) -> Self {
        DegreeLaw::TruncatedPoisson { mu, min_degree: 2 }
    }

    /// Truncated Poisson (d ≥ `min_degree`) with the requested mean degree.
    pub fn truncated_poisson_with_mean(mean: T, min_degree: usize) -> Result<Self> {
        let lo_mean = T::of_usize(min_degree);
        if !(mean > lo_mean) {
            return Err(QsatError::InvalidParameter(format!(
                "mean degree {mean} must exceed the truncation point {min_degree}"
            )));
        }
        // mean is increasing in mu; bracket then bisect
        let mut lo = T::of(1e-12);
        let mut hi = mean.max(T::one());
        let f = |mu: T| truncated_poisson_mean(mu, min_degree) - mean;
        while f(hi) < T::zero() {
            hi = hi * T::of(2.0);
        }
        for _ in 0..200 {
            let mid = (lo + hi) / T::of(2.0);
            if f(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(DegreeLaw::TruncatedPoisson { mu: (lo + hi) / T::of(2.0), min_degree })
    }

    /// Probability of degree `d`.
    pub fn pmf(&self, d: usize) -> T {
        match self {
            DegreeLaw::Regular(r) => {
                if d == *r {
                    T::one()
                } else {
                    T::zero()
                }
            }
            DegreeLaw::TruncatedPoisson { mu, min_degree } => {
                if d < *min_degree {
                    T::zero()
                } else {
                    poisson_pmf(*mu, d) / poisson_tail(*mu, *min_degree)
                }
            }
            DegreeLaw::Empirical(p) => p.get(d).copied().unwrap_or_else(T::zero),
        }
    }

    /// Largest degree carrying non-negligible mass.
    pub fn max_degree(&self) -> usize {
        match self {
            DegreeLaw::Regular(r) => *r,
            DegreeLaw::Empirical(p) => p.len().saturating_sub(1),
            DegreeLaw::TruncatedPoisson { mu, min_degree } => {
                let mu = mu.to_f64_lossy();
                let mut d = (*min_degree).max(mu.ceil() as usize);
                while poisson_pmf(mu, d) > TAIL_EPS {
                    d += 1;
                }
                d
            }
        }
    }

    /// `E[f(d)]` over the law.
    pub fn expect<F: Fn(usize) -> T>(&self, f: F) -> T {
        (0..=self.max_degree())
            .map(|d| {
                let p = self.pmf(d);
                if p > T::zero() {
                    p * f(d)
                } else {
                    T::zero()
                }
            })
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn mean(&self) -> T {
        self.expect(T::of_usize)
    }

    /// Total mass; 1 for a valid law.
    pub fn total_mass(&self) -> T {
        self.expect(|_| T::one())
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - T::one()).abs() < T::of(1e-9)
    }

    /// Inverse-CDF sampler for degrees and for excess degrees (size-biased
    /// degree minus one, the number of other bonds seen along a random edge).
    pub fn sampler(&self) -> DegreeSampler {
        let max = self.max_degree();
        let pmf: Vec<f64> = (0..=max).map(|d| self.pmf(d).to_f64_lossy()).collect();
        let biased: Vec<f64> = pmf.iter().enumerate().map(|(d, p)| d as f64 * p).collect();
        DegreeSampler { degree: Cdf::new(&pmf), excess: Cdf::new(&biased) }
    }
}

pub fn poisson_pmf<T: Scalar>(mu: T, d: usize) -> T {
    if mu <= T::zero() {
        return if d == 0 { T::one() } else { T::zero() };
    }
    (T::of_usize(d) * mu.ln() - mu - ln_factorial::<T>(d)).exp()
}

/// `P(X >= m)` for `X ~ Poisson(mu)`.
pub fn poisson_tail<T: Scalar>(mu: T, m: usize) -> T {
    let head = (0..m).map(|d| poisson_pmf(mu, d)).fold(T::zero(), |a, b| a + b);
    T::one() - head
}

/// Mean of Poisson(`mu`) conditioned on `d >= min_degree`.
pub fn truncated_poisson_mean<T: Scalar>(mu: T, min_degree: usize) -> T {
    if min_degree == 0 {
        return mu;
    }
    mu * poisson_tail(mu, min_degree - 1) / poisson_tail(mu, min_degree)
}

#[derive(Clone, Debug)]
struct Cdf {
    cum: Vec<f64>,
}

impl Cdf {
    fn new(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cum = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Self { cum }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cum.partition_point(|&c| c <= u);
        i.min(self.cum.len() - 1)
    }
}

#[derive(Clone, Debug)]
pub struct DegreeSampler {
    degree: Cdf,
    excess: Cdf,
}

impl DegreeSampler {
    pub fn degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.degree.sample(rng)
    }

    pub fn excess<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.excess.sample(rng).saturating_sub(1)
    }
}
