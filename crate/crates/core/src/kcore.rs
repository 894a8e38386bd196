//! Leaf-removal core extraction and the analytic core statistics of the
//! Erdős–Rényi ensemble.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree::DegreeLaw;
use crate::error::{QsatError, Result};
use crate::hypergraph::{clauses_for_density, sample_er_graph, InteractionGraph};
use crate::rng::RngSpec;
use crate::scalar::Scalar;

/// One leaf-removal step: a qubit of degree ≤ 1 and the clause it took with it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub qubit: usize,
    pub clause: Option<usize>,
}

/// Partition of a graph into its 2-core and the hair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreDecomposition {
    pub core_qubits: Vec<usize>,
    pub core_clauses: Vec<usize>,
    pub hair_qubits: Vec<usize>,
    pub hair_clauses: Vec<usize>,
    pub removal_trace: Vec<Removal>,
}

impl CoreDecomposition {
    pub fn n_core_qubits(&self) -> usize {
        self.core_qubits.len()
    }

    pub fn n_core_clauses(&self) -> usize {
        self.core_clauses.len()
    }

    /// Core clause density M_c/N_c, or `None` for an empty core.
    pub fn beta(&self) -> Option<f64> {
        (!self.core_qubits.is_empty()).then(|| self.core_clauses.len() as f64 / self.core_qubits.len() as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.core_qubits.is_empty()
    }

    /// Core as a standalone graph with qubits relabeled `0..N_c`.
    pub fn core_graph(&self, g: &InteractionGraph) -> InteractionGraph {
        g.restrict(&self.core_clauses, &self.core_qubits).0
    }
}

struct LeafState<'a> {
    g: &'a InteractionGraph,
    incidence: Vec<Vec<usize>>,
    degree: Vec<usize>,
    qubit_alive: Vec<bool>,
    clause_alive: Vec<bool>,
    trace: Vec<Removal>,
}

impl<'a> LeafState<'a> {
    fn new(g: &'a InteractionGraph) -> Self {
        Self {
            g,
            incidence: g.incidence(),
            degree: g.degrees(),
            qubit_alive: vec![true; g.n_qubits()],
            clause_alive: vec![true; g.n_clauses()],
            trace: Vec::new(),
        }
    }

    fn removable(&self, q: usize) -> bool {
        self.qubit_alive[q] && self.degree[q] <= 1
    }

    /// Removes leaf `q`; pushes qubits that became removable onto `out`.
    fn remove(&mut self, q: usize, out: &mut impl FnMut(usize)) {
        self.qubit_alive[q] = false;
        let clause = self.incidence[q].iter().copied().find(|&m| self.clause_alive[m]);
        if let Some(m) = clause {
            self.clause_alive[m] = false;
            for &p in &self.g.clauses()[m] {
                self.degree[p] -= 1;
                if p != q && self.removable(p) {
                    out(p);
                }
            }
        }
        self.trace.push(Removal { qubit: q, clause });
    }

    fn finish(self) -> CoreDecomposition {
        let split = |alive: &[bool]| {
            let (mut core, mut hair) = (Vec::new(), Vec::new());
            for (i, &a) in alive.iter().enumerate() {
                if a {
                    core.push(i)
                } else {
                    hair.push(i)
                }
            }
            (core, hair)
        };
        let (core_qubits, hair_qubits) = split(&self.qubit_alive);
        let (core_clauses, hair_clauses) = split(&self.clause_alive);
        CoreDecomposition { core_qubits, core_clauses, hair_qubits, hair_clauses, removal_trace: self.trace }
    }
}

/// Maximal subgraph in which every qubit has degree ≥ 2 (FIFO leaf removal).
///
/// Isolated qubits are removed as hair too.
pub fn strip_core(g: &InteractionGraph) -> CoreDecomposition {
    let mut st = LeafState::new(g);
    let mut queue: VecDeque<usize> = (0..g.n_qubits()).filter(|&q| st.removable(q)).collect();
    while let Some(q) = queue.pop_front() {
        if !st.removable(q) {
            continue;
        }
        st.remove(q, &mut |p| queue.push_back(p));
    }
    st.finish()
}

/// Leaf removal choosing uniformly among the current leaves at every step.
///
/// Produces the same partition as [`strip_core`]; only the trace differs.
pub fn strip_core_random_order<R: Rng + ?Sized>(g: &InteractionGraph, rng: &mut R) -> CoreDecomposition {
    let mut st = LeafState::new(g);
    let mut pool: Vec<usize> = (0..g.n_qubits()).filter(|&q| st.removable(q)).collect();
    while !pool.is_empty() {
        let i = rng.random_range(0..pool.len());
        let q = pool.swap_remove(i);
        if !st.removable(q) {
            continue;
        }
        let mut fresh = Vec::new();
        st.remove(q, &mut |p| fresh.push(p));
        pool.extend(fresh);
    }
    st.finish()
}

/// Replays a removal trace from the full graph and returns the surviving
/// `(qubits, clauses)`; fails if some step removes a qubit that was not a leaf.
pub fn replay_trace(g: &InteractionGraph, trace: &[Removal]) -> Result<(Vec<usize>, Vec<usize>)> {
    let inc = g.incidence();
    let mut degree = g.degrees();
    let mut q_alive = vec![true; g.n_qubits()];
    let mut c_alive = vec![true; g.n_clauses()];
    for (step, r) in trace.iter().enumerate() {
        if !q_alive[r.qubit] || degree[r.qubit] > 1 {
            return Err(QsatError::Contract(format!("step {step}: qubit {} is not a leaf", r.qubit)));
        }
        let live: Vec<usize> = inc[r.qubit].iter().copied().filter(|&m| c_alive[m]).collect();
        if live.first().copied() != r.clause {
            return Err(QsatError::Contract(format!("step {step}: clause mismatch for qubit {}", r.qubit)));
        }
        q_alive[r.qubit] = false;
        if let Some(m) = r.clause {
            c_alive[m] = false;
            for &p in &g.clauses()[m] {
                degree[p] -= 1;
            }
        }
    }
    let keep = |a: Vec<bool>| a.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i).collect();
    Ok((keep(q_alive), keep(c_alive)))
}

/// Defining function of λ*: `e^{-λ} - 1 + (λ/(kα))^{1/(k-1)}`.
pub fn lambda_star_residual<T: Scalar>(lambda: T, alpha: T, k: usize) -> T {
    (-lambda).exp() - T::one() + (lambda / (T::of_usize(k) * alpha)).powf(T::one() / T::of_usize(k - 1))
}

const LAMBDA_SCAN_POINTS: usize = 20_000;

/// Largest positive root of the leaf-removal fixed-point equation, or `None`
/// when the ensemble has no core at this density.
pub fn lambda_star<T: Scalar>(alpha: T, k: usize) -> Option<T> {
    if !(alpha > T::zero()) || k < 2 {
        return None;
    }
    let lo = T::of(1e-6);
    let hi = T::of(10.0) * T::of_usize(k) * alpha;
    let f = |x: T| lambda_star_residual(x, alpha, k);
    let step = (hi - lo) / T::of_usize(LAMBDA_SCAN_POINTS);
    let mut right = hi;
    let mut f_right = f(right);
    for i in (0..LAMBDA_SCAN_POINTS).rev() {
        let left = lo + step * T::of_usize(i);
        let f_left = f(left);
        if (f_left < T::zero()) != (f_right < T::zero()) {
            return Some(bisect(f, left, right, T::of(1e-12)));
        }
        right = left;
        f_right = f_left;
    }
    None
}

fn bisect<T: Scalar, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> T {
    let fa_neg = f(a) < T::zero();
    for _ in 0..200 {
        let mid = (a + b) / T::of(2.0);
        if (f(mid) < T::zero()) == fa_neg {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() < tol {
            break;
        }
    }
    (a + b) / T::of(2.0)
}

/// Thermodynamic-limit core statistics of the random ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreStats<T> {
    pub alpha: T,
    pub k: usize,
    pub lambda_star: T,
    /// N_c / N
    pub nc_frac: T,
    /// M_c / N
    pub mc_frac: T,
    /// M_c / N_c
    pub beta: T,
    /// Qubit degrees on the core, normalized over the core.
    pub degree_law: DegreeLaw<T>,
}

impl<T: Scalar> CoreStats<T> {
    /// Hair fraction N_h/N.
    pub fn hair_frac(&self) -> T {
        T::one() - self.nc_frac
    }

    /// Unnormalized `P_c(d)`: probability that a node of the full graph is
    /// in the core with degree `d`.
    pub fn pc(&self, d: usize) -> T {
        if d < 2 {
            T::zero()
        } else {
            crate::degree::poisson_pmf(self.lambda_star, d)
        }
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.alpha, self.lambda_star, self.nc_frac, self.mc_frac, self.beta)
    }

    pub const CSV_HEADER: &'static str = "alpha,lambda_star,nc_frac,mc_frac,beta";
}

pub fn core_stats<T: Scalar>(alpha: T, k: usize) -> Option<CoreStats<T>> {
    let ls = lambda_star(alpha, k)?;
    let e = (-ls).exp();
    let nc_frac = T::one() - (T::one() + ls) * e;
    let mc_frac = ls / T::of_usize(k) * (T::one() - e);
    Some(CoreStats {
        alpha,
        k,
        lambda_star: ls,
        nc_frac,
        mc_frac,
        beta: mc_frac / nc_frac,
        degree_law: DegreeLaw::core(ls),
    })
}

/// One sampled graph's core sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreSample {
    pub nc_frac: f64,
    pub mc_frac: f64,
    pub core_degree_sum: usize,
    pub core_clauses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreComparison {
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub samples: Vec<CoreSample>,
    pub mean_nc_frac: f64,
    pub mean_mc_frac: f64,
    pub analytic: Option<CoreStats<f64>>,
}

/// Strips `samples` independent graphs and compares their cores with
/// [`core_stats`].
pub fn empirical_vs_analytic(alpha: f64, k: usize, n: usize, samples: usize, spec: RngSpec) -> Result<CoreComparison> {
    let m = clauses_for_density(n, alpha);
    let rows: Result<Vec<CoreSample>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = sample_er_graph(n, m, k, spec.child(i as u64))?;
            let dec = strip_core(&g);
            let in_core: Vec<bool> = {
                let mut v = vec![false; n];
                for &q in &dec.core_qubits {
                    v[q] = true;
                }
                v
            };
            // degrees counted within the core subgraph
            let core_degree_sum =
                dec.core_clauses.iter().flat_map(|&c| g.clause(c).iter()).filter(|&&q| in_core[q]).count();
            Ok(CoreSample {
                nc_frac: dec.n_core_qubits() as f64 / n as f64,
                mc_frac: dec.n_core_clauses() as f64 / n as f64,
                core_degree_sum,
                core_clauses: dec.n_core_clauses(),
            })
        })
        .collect();
    let rows = rows?;
    let denom = rows.len().max(1) as f64;
    Ok(CoreComparison {
        alpha,
        k,
        n,
        mean_nc_frac: rows.iter().map(|r| r.nc_frac).sum::<f64>() / denom,
        mean_mc_frac: rows.iter().map(|r| r.mc_frac).sum::<f64>() / denom,
        samples: rows,
        analytic: core_stats(alpha, k),
    })
}

/// Parent-graph ensemble for rejection-sampling small cores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreEnsemble {
    pub k: usize,
    pub alpha: f64,
    /// Parent sizes are drawn uniformly from this inclusive range.
    pub n_min: usize,
    pub n_max: usize,
}

/// A core accepted by [`next_core`], with the draw that produced it.
#[derive(Clone, Debug)]
pub struct SampledCore {
    /// Parent size.
    pub n: usize,
    pub spec: RngSpec,
    pub core: InteractionGraph,
}

/// Draws parent graphs at streams `cell.child(attempt)`, advancing `attempt`,
/// until one strips to a core with `accept(N_c, M_c)`. Returns `None` once
/// `attempt` reaches `max_attempts`.
pub fn next_core<F: Fn(usize, usize) -> bool>(
    ens: &CoreEnsemble,
    cell: RngSpec,
    attempt: &mut u64,
    max_attempts: u64,
    accept: F,
) -> Result<Option<SampledCore>> {
    if ens.n_min > ens.n_max || ens.n_min < ens.k {
        return Err(QsatError::InvalidParameter(format!(
            "parent size range [{}, {}] is empty or below k = {}",
            ens.n_min, ens.n_max, ens.k
        )));
    }
    while *attempt < max_attempts {
        let spec = cell.child(*attempt);
        *attempt += 1;
        let n = spec.named("size").rng().random_range(ens.n_min..=ens.n_max);
        let m = clauses_for_density(n, ens.alpha);
        let g = match sample_er_graph(n, m, ens.k, spec) {
            Ok(g) => g,
            Err(QsatError::InfeasibleEnsemble { .. }) => continue,
            Err(e) => return Err(e),
        };
        let dec = strip_core(&g);
        if dec.n_core_qubits() > 0 && accept(dec.n_core_qubits(), dec.n_core_clauses()) {
            return Ok(Some(SampledCore { n, spec, core: dec.core_graph(&g) }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, clauses: &[&[usize]]) -> InteractionGraph {
        InteractionGraph::new(n, 3, clauses.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_clause_is_all_hair() {
        let d = strip_core(&graph(3, &[&[0, 1, 2]]));
        assert!(d.is_empty());
        assert_eq!(d.hair_clauses, vec![0]);
        assert_eq!(d.hair_qubits, vec![0, 1, 2]);
    }

    #[test]
    fn complete_four_qubit_graph_is_its_own_core() {
        let g = graph(4, &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]]);
        let d = strip_core(&g);
        assert_eq!(d.core_qubits, vec![0, 1, 2, 3]);
        assert_eq!(d.core_clauses, vec![0, 1, 2, 3]);
        assert!(d.removal_trace.is_empty());
    }

    #[test]
    fn minifan_collapses() {
        let g = graph(5, &[&[1, 2, 3], &[1, 2, 4]]);
        let d = strip_core(&g);
        assert!(d.is_empty());
        // isolated qubit 0 goes too
        assert!(d.removal_trace.iter().any(|r| r.qubit == 0 && r.clause.is_none()));
        assert_eq!(replay_trace(&g, &d.removal_trace).unwrap(), (vec![], vec![]));
    }

    #[test]
    fn replay_rejects_illegal_steps() {
        let g = graph(4, &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]]);
        let bad = [Removal { qubit: 0, clause: Some(0) }];
        assert!(replay_trace(&g, &bad).is_err());
    }

    /// The equation inverts in closed form: `α(λ) = λ / (k (1 - e^{-λ})^{k-1})`.
    fn alpha_of(lambda: f64, k: usize) -> f64 {
        lambda / (k as f64 * (1.0 - (-lambda).exp()).powi(k as i32 - 1))
    }

    #[test]
    fn lambda_star_inverts_the_closed_form() {
        for &l in &[1.5, 2.149, 3.0, 6.0] {
            let a = alpha_of(l, 3);
            let got = lambda_star(a, 3).unwrap();
            assert!((got - l).abs() < 1e-9, "{l} vs {got}");
        }
        // λ = 2.149 sits at α ≈ 0.9179, not at 0.917
        assert!((alpha_of(2.149, 3) - 0.91794).abs() < 1e-4);
        let l = lambda_star(0.917f64, 3).unwrap();
        assert!((l - 2.14406).abs() < 1e-4, "{l}");
        assert!(lambda_star_residual(l, 0.917, 3).abs() < 1e-9);
        assert!(lambda_star(0.2f64, 3).is_none());
        let l32 = lambda_star(0.917f32, 3).unwrap();
        assert!((l32 - 2.14406).abs() < 2e-3);
    }

    #[test]
    fn core_stats_consistency() {
        let s = core_stats(0.917f64, 3).unwrap();
        assert!((s.beta - 1.0).abs() < 2e-3);
        let l = s.lambda_star;
        assert!((s.nc_frac - (1.0 - (1.0 + l) * (-l).exp())).abs() < 1e-12);
        assert!((s.nc_frac - 0.633).abs() < 2e-3);
        assert!((s.mc_frac / s.nc_frac - s.beta).abs() < 1e-12);
        assert!(s.degree_law.is_normalized());
        let total_pc: f64 = (0..40).map(|d| s.pc(d)).sum();
        assert!((total_pc - s.nc_frac).abs() < 1e-12);
    }

    #[test]
    fn dense_limit_core_takes_over() {
        let s = core_stats(10.0f64, 3).unwrap();
        let ka: f64 = 30.0;
        assert!((s.lambda_star - ka).abs() < 1e-6);
        assert!((s.nc_frac - (1.0 - (1.0 + ka) * (-ka).exp())).abs() < 1e-9);
    }
}
