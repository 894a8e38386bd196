//! Matrix-free projector Hamiltonians `H = Σ_m |φ_m⟩⟨φ_m|` and their low
//! spectrum.
//!
//! Bit `q` of a basis index is the state of qubit `q`.

mod experiment;
mod kernel;
mod lanczos;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsatError, Result};
use crate::hypergraph::{InteractionGraph, ProjectorSet};

pub use experiment::{
    decide_sat, decide_with_projectors, unsat_core_experiment, CellSummary, CoreRecord, ExperimentConfig,
    ExperimentTable, Thresholds,
};
pub use kernel::{kernel_dimension, KernelDimension, KernelMethod, KernelOptions};
pub use lanczos::{ground_energy, GroundEnergy, LanczosOptions};

/// Largest Hilbert space handled (qubits).
pub const MAX_QUBITS: usize = 24;

/// Clause-local view of one projector: the global index offsets of the `2^k`
/// local basis states and the clause mask.
#[derive(Clone, Debug)]
struct LocalProjector {
    mask: usize,
    offsets: Vec<usize>,
    phi: Vec<Complex64>,
}

/// Borrowed graph + projectors; represents `H` without storing it.
#[derive(Clone, Debug)]
pub struct HamiltonianHandle<'a> {
    graph: &'a InteractionGraph,
    projectors: &'a ProjectorSet,
    local: Vec<LocalProjector>,
}

impl<'a> HamiltonianHandle<'a> {
    pub fn new(graph: &'a InteractionGraph, projectors: &'a ProjectorSet) -> Result<Self> {
        projectors.check_against(graph)?;
        if graph.n_qubits() > MAX_QUBITS {
            return Err(QsatError::Unsupported(format!(
                "{} qubits exceeds the {MAX_QUBITS}-qubit limit",
                graph.n_qubits()
            )));
        }
        let local = graph
            .clauses()
            .iter()
            .zip(projectors.vectors())
            .map(|(c, phi)| {
                let mask = c.iter().fold(0usize, |m, &q| m | (1 << q));
                let offsets = (0..1usize << c.len())
                    .map(|b| c.iter().enumerate().fold(0, |o, (j, &q)| o | (((b >> j) & 1) << q)))
                    .collect();
                LocalProjector { mask, offsets, phi: phi.clone() }
            })
            .collect();
        Ok(Self { graph, projectors, local })
    }

    pub fn graph(&self) -> &InteractionGraph {
        self.graph
    }

    pub fn projectors(&self) -> &ProjectorSet {
        self.projectors
    }

    pub fn n_qubits(&self) -> usize {
        self.graph.n_qubits()
    }

    pub fn dim(&self) -> usize {
        1 << self.graph.n_qubits()
    }

    /// `out = H v`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let dim = self.dim();
        if v.len() != dim || out.len() != dim {
            return Err(QsatError::Contract(format!(
                "state vectors must have length {dim}, got {} and {}",
                v.len(),
                out.len()
            )));
        }
        out.fill(Complex64::new(0.0, 0.0));
        for p in &self.local {
            // enumerate every index with the clause bits cleared
            let mut base = 0usize;
            loop {
                let mut s = Complex64::new(0.0, 0.0);
                for (o, f) in p.offsets.iter().zip(&p.phi) {
                    s += f.conj() * v[base | o];
                }
                if s.re != 0.0 || s.im != 0.0 {
                    for (o, f) in p.offsets.iter().zip(&p.phi) {
                        out[base | o] += f * s;
                    }
                }
                base = ((base | p.mask) + 1) & !p.mask;
                if base == 0 || base >= dim {
                    break;
                }
            }
        }
        Ok(())
    }

    /// `⟨v|H|v⟩`, real for Hermitian `H`.
    pub fn expectation(&self, v: &[Complex64]) -> Result<f64> {
        let mut hv = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(v, &mut hv)?;
        Ok(dot(v, &hv).re)
    }
}

/// `H v`, clause-locally, without materializing `H`.
pub fn apply_h(h: &HamiltonianHandle, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); h.dim()];
    h.apply_into(v, &mut out)?;
    Ok(out)
}

/// Dense `2^N × 2^N` matrix, built clause by clause (small N only).
pub fn dense_hamiltonian(h: &HamiltonianHandle) -> DMatrix<Complex64> {
    let dim = h.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for p in &h.local {
        let mut base = 0usize;
        loop {
            for (oa, fa) in p.offsets.iter().zip(&p.phi) {
                for (ob, fb) in p.offsets.iter().zip(&p.phi) {
                    m[(base | oa, base | ob)] += fa * fb.conj();
                }
            }
            base = ((base | p.mask) + 1) & !p.mask;
            if base == 0 || base >= dim {
                break;
            }
        }
    }
    m
}

/// Ascending eigenvalues of the dense Hamiltonian.
pub fn dense_spectrum(h: &HamiltonianHandle) -> Vec<f64> {
    let m = dense_hamiltonian(h);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Sat,
    Unsat,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub e0: f64,
    pub residual: f64,
    pub near_zero_count: Option<usize>,
    pub verdict: Verdict,
    /// Matrix-vector products used.
    pub iterations: usize,
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
