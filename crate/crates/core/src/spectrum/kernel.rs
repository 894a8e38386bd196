//! Counting zero-energy states.

use serde::{Deserialize, Serialize};

use super::lanczos::{lowest_eigenpair, LanczosOptions};
use super::{dense_spectrum, norm, HamiltonianHandle};
use crate::error::Result;
use crate::rng::RngSpec;

#[derive(Clone, Debug)]
pub struct KernelOptions {
    pub eps: f64,
    /// Largest N diagonalized densely.
    pub dense_threshold: usize,
    /// Cap on vectors found by deflation (larger N).
    pub max_dim: usize,
    pub lanczos: LanczosOptions,
    pub rng: RngSpec,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            dense_threshold: 12,
            max_dim: 64,
            lanczos: LanczosOptions::default(),
            rng: RngSpec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    Dense,
    Deflation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDimension {
    pub count: usize,
    /// Some eigenvalue sits within two decades of `eps`, so the count depends
    /// on the threshold.
    pub ambiguous: bool,
    /// Deflation stopped at `max_dim`; `count` is then a lower bound.
    pub saturated: bool,
    pub method: KernelMethod,
}

fn near_threshold(e: f64, eps: f64) -> bool {
    e > eps * 1e-2 && e < eps * 1e2
}

/// Number of eigenvalues below `eps`.
pub fn kernel_dimension(h: &HamiltonianHandle, opts: &KernelOptions) -> Result<KernelDimension> {
    if h.n_qubits() <= opts.dense_threshold {
        let ev = dense_spectrum(h);
        let count = ev.iter().filter(|&&e| e < opts.eps).count();
        let ambiguous = ev.iter().any(|&e| near_threshold(e, opts.eps));
        return Ok(KernelDimension { count, ambiguous, saturated: false, method: KernelMethod::Dense });
    }
    let mut rng = opts.rng.rng();
    let mut locked: Vec<Vec<num_complex::Complex64>> = Vec::new();
    let mut ambiguous = false;
    let mut saturated = false;
    loop {
        if locked.len() >= opts.max_dim {
            saturated = true;
            break;
        }
        if locked.len() >= h.dim() {
            break;
        }
        let r = lowest_eigenpair(h, &opts.lanczos, &mut rng, &locked)?;
        if !r.converged || near_threshold(r.e0, opts.eps) {
            ambiguous = true;
        }
        if r.e0 >= opts.eps {
            break;
        }
        let mut v = r.vector;
        let n = norm(&v);
        v.iter_mut().for_each(|z| *z /= n);
        locked.push(v);
    }
    Ok(KernelDimension { count: locked.len(), ambiguous, saturated, method: KernelMethod::Deflation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{sample_projectors, InteractionGraph, ProjectorMode};

    #[test]
    fn trivial_kernels() {
        let g = InteractionGraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(1, 0));
        let h = HamiltonianHandle::new(&g, &p).unwrap();
        assert_eq!(kernel_dimension(&h, &KernelOptions::default()).unwrap().count, 7);

        let g = InteractionGraph::empty(3, 3);
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(1, 0));
        let h = HamiltonianHandle::new(&g, &p).unwrap();
        assert_eq!(kernel_dimension(&h, &KernelOptions::default()).unwrap().count, 8);
    }

    #[test]
    fn deflation_agrees_with_dense() {
        // two clauses sharing one qubit on 5 qubits: kernel 32 − rank
        let g = InteractionGraph::new(5, 3, vec![vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(3, 0));
        let h = HamiltonianHandle::new(&g, &p).unwrap();
        let dense = kernel_dimension(&h, &KernelOptions::default()).unwrap();
        let opts = KernelOptions { dense_threshold: 0, max_dim: 32, ..Default::default() };
        let defl = kernel_dimension(&h, &opts).unwrap();
        assert_eq!(dense.count, defl.count);
        assert_eq!(defl.method, KernelMethod::Deflation);
    }
}
