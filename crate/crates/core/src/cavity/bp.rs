//! Belief propagation on a single interaction graph.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::messages::{clause_occupancy, edge_term, update_q, vertex_term};
use super::CavityReport;
use crate::error::{QsatError, Result};
use crate::hypergraph::InteractionGraph;
use crate::rng::RngSpec;
use crate::scalar::Scalar;

/// Bond messages of one graph. Bond `α = m·k + j` joins clause `m` to its
/// `j`-th qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondMessages<T> {
    /// `q_{i→α}` (= `l_{α→a}`)
    pub q_i: Vec<T>,
    /// `q_{a→α}` (= `l_{α→i}`)
    pub q_a: Vec<T>,
}

impl<T: Scalar> BondMessages<T> {
    pub fn l_to_clause(&self, bond: usize) -> T {
        self.q_i[bond]
    }

    pub fn l_to_qubit(&self, bond: usize) -> T {
        self.q_a[bond]
    }

    pub fn all_in_range(&self) -> bool {
        self.q_i.iter().chain(&self.q_a).all(|&x| x >= T::zero() && x <= T::one())
    }
}

#[derive(Clone, Debug)]
pub struct BpOptions<T> {
    pub lambda: T,
    pub tol: T,
    pub max_sweeps: usize,
    /// Weight of the old message in each update.
    pub damping: T,
    pub rng: RngSpec,
}

impl<T: Scalar> BpOptions<T> {
    pub fn new(lambda: T) -> Self {
        Self { lambda, tol: T::of(1e-10), max_sweeps: 10_000, damping: T::of(0.5), rng: RngSpec::new(0, 0) }
    }
}

/// Bond bookkeeping for a graph.
struct Bonds {
    k: usize,
    /// bonds incident to each qubit
    at_qubit: Vec<Vec<usize>>,
    /// qubit of each bond
    qubit: Vec<usize>,
}

impl Bonds {
    fn new(g: &InteractionGraph) -> Self {
        let k = g.k();
        let mut at_qubit = vec![Vec::new(); g.n_qubits()];
        let mut qubit = Vec::with_capacity(g.n_clauses() * k);
        for (m, c) in g.clauses().iter().enumerate() {
            for (j, &q) in c.iter().enumerate() {
                at_qubit[q].push(m * k + j);
                qubit.push(q);
            }
        }
        Self { k, at_qubit, qubit }
    }

    fn clause_bonds(&self, bond: usize) -> std::ops::Range<usize> {
        let m = bond / self.k;
        m * self.k..(m + 1) * self.k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpResult<T> {
    pub messages: BondMessages<T>,
    pub report: CavityReport<T>,
}

/// Random-order asynchronous BP sweeps until the largest undamped message
/// change drops below `tol`. Non-convergence is reported, not raised.
pub fn single_instance_bp<T: Scalar>(g: &InteractionGraph, opts: &BpOptions<T>) -> Result<BpResult<T>> {
    if g.n_clauses() == 0 {
        return Err(QsatError::InvalidParameter("belief propagation needs at least one clause".into()));
    }
    let bonds = Bonds::new(g);
    let nb = bonds.qubit.len();
    let mut rng = opts.rng.rng();
    let mut msg = BondMessages {
        q_i: (0..nb).map(|_| T::of(rng.random::<f64>())).collect(),
        q_a: (0..nb).map(|_| T::of(rng.random::<f64>())).collect(),
    };
    let mut order: Vec<usize> = (0..nb).collect();
    let mut converged = false;
    let mut sweeps = 0;
    let mut last_change = T::infinity();
    let lambda = opts.lambda;
    let keep = opts.damping;
    let take = T::one() - keep;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut change = T::zero();
        for &b in &order {
            let i = bonds.qubit[b];
            let new_qi = update_q(bonds.at_qubit[i].iter().filter(|&&x| x != b).map(|&x| msg.q_a[x]), lambda);
            change = change.max((new_qi - msg.q_i[b]).abs());
            msg.q_i[b] = keep * msg.q_i[b] + take * new_qi;

            let new_qa = update_q(bonds.clause_bonds(b).filter(|&x| x != b).map(|x| msg.q_i[x]), lambda);
            change = change.max((new_qa - msg.q_a[b]).abs());
            msg.q_a[b] = keep * msg.q_a[b] + take * new_qa;
        }
        last_change = change;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let f = bethe_free_energy(g, &msg, lambda)?;
    let occ = mean_occupancy(g, &msg);
    let n = T::of_usize(g.n_qubits());
    let beta = T::of_usize(g.n_clauses()) / n;
    let mut report = CavityReport::new(f / n, occ, beta, lambda);
    report.converged = converged;
    report.sweeps = sweeps;
    report.drift = last_change;
    Ok(BpResult { messages: msg, report })
}

fn checked_term<T: Scalar>(x: T, name: &str, idx: usize) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(QsatError::NumericalDomain { term: format!("{name}[{idx}]"), value: x.to_f64_lossy().exp() })
    }
}

/// Bethe free energy `Σ F_a + Σ F_i + Σ F_α − Σ F_iα − Σ F_aα` (natural log).
pub fn bethe_free_energy<T: Scalar>(g: &InteractionGraph, msg: &BondMessages<T>, lambda: T) -> Result<T> {
    let bonds = Bonds::new(g);
    let k = g.k();
    let mut total = T::zero();
    let mut buf = Vec::with_capacity(k.max(8));
    for m in 0..g.n_clauses() {
        buf.clear();
        buf.extend((m * k..(m + 1) * k).map(|b| msg.l_to_clause(b)));
        total = total + checked_term(vertex_term(&buf), "F_a", m)?;
    }
    for (i, bs) in bonds.at_qubit.iter().enumerate() {
        buf.clear();
        buf.extend(bs.iter().map(|&b| msg.l_to_qubit(b)));
        total = total + checked_term(vertex_term(&buf), "F_i", i)?;
    }
    for b in 0..bonds.qubit.len() {
        let f_bond = checked_term(edge_term(msg.q_a[b], msg.q_i[b], lambda), "F_alpha", b)?;
        let f_qubit_edge = checked_term(edge_term(msg.l_to_qubit(b), msg.q_i[b], lambda), "F_i_alpha", b)?;
        let f_clause_edge = checked_term(edge_term(msg.l_to_clause(b), msg.q_a[b], lambda), "F_a_alpha", b)?;
        total = total + f_bond - f_qubit_edge - f_clause_edge;
    }
    Ok(total)
}

/// `⟨n_a⟩` for clause `m`.
pub fn occupancy<T: Scalar>(g: &InteractionGraph, msg: &BondMessages<T>, m: usize) -> T {
    let k = g.k();
    let ls: Vec<T> = (m * k..(m + 1) * k).map(|b| msg.l_to_clause(b)).collect();
    clause_occupancy(&ls)
}

/// Mean of `⟨n_a⟩` over clauses, i.e. `N_dimer / M`.
pub fn mean_occupancy<T: Scalar>(g: &InteractionGraph, msg: &BondMessages<T>) -> T {
    let m = g.n_clauses();
    if m == 0 {
        return T::zero();
    }
    (0..m).map(|a| occupancy(g, msg, a)).fold(T::zero(), |x, y| x + y) / T::of_usize(m)
}

/// Hard-constraint (infinite-fugacity) BP: every clause covered exactly once,
/// every qubit at most once. Messages are occupation odds and may blow up;
/// this is a diagnostic, not a counting tool.
pub fn hard_constraint_bp(g: &InteractionGraph, max_sweeps: usize, tol: f64, spec: RngSpec) -> (bool, usize) {
    let bonds = Bonds::new(g);
    let nb = bonds.qubit.len();
    let mut rng = spec.rng();
    // odds of occupation sent towards the clause / towards the qubit
    let mut to_clause: Vec<f64> = (0..nb).map(|_| rng.random::<f64>() + 0.5).collect();
    let mut to_qubit: Vec<f64> = (0..nb).map(|_| rng.random::<f64>() + 0.5).collect();
    let mut order: Vec<usize> = (0..nb).collect();
    for sweep in 1..=max_sweeps {
        order.shuffle(&mut rng);
        let mut change: f64 = 0.0;
        for &b in &order {
            let i = bonds.qubit[b];
            let s: f64 = bonds.at_qubit[i].iter().filter(|&&x| x != b).map(|&x| to_qubit[x]).sum();
            let new_c = 1.0 / (1.0 + s);
            let s: f64 = bonds.clause_bonds(b).filter(|&x| x != b).map(|x| to_clause[x]).sum();
            let new_q = if s == 0.0 { f64::INFINITY } else { 1.0 / s };
            let rel = |a: f64, b: f64| {
                if a.is_finite() && b.is_finite() {
                    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
                } else if a == b {
                    0.0
                } else {
                    f64::INFINITY
                }
            };
            change = change.max(rel(new_c, to_clause[b])).max(rel(new_q, to_qubit[b]));
            to_clause[b] = new_c;
            to_qubit[b] = new_q;
        }
        if change < tol {
            return (true, sweep);
        }
    }
    (false, max_sweeps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, clauses: &[&[usize]]) -> InteractionGraph {
        InteractionGraph::new(n, 3, clauses.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    fn exact_opts(lambda: f64) -> BpOptions<f64> {
        BpOptions { lambda, tol: 1e-14, max_sweeps: 500, damping: 0.0, rng: RngSpec::new(1, 0) }
    }

    #[test]
    fn single_clause_is_exact() {
        let g = graph(3, &[&[0, 1, 2]]);
        for lambda in [0.1, 1.0, 7.5, 1e3] {
            let r = single_instance_bp(&g, &exact_opts(lambda)).unwrap();
            assert!(r.report.converged);
            let f = r.report.free_energy_density * 3.0;
            assert!((f - (1.0 + 3.0 * lambda).ln()).abs() < 1e-12, "lambda {lambda}");
        }
        let r = single_instance_bp(&g, &exact_opts(1.0)).unwrap();
        assert!((r.report.occupancy - 0.75).abs() < 1e-12);
    }

    #[test]
    fn vanishing_fugacity() {
        let g = graph(5, &[&[0, 1, 2], &[2, 3, 4]]);
        let r = single_instance_bp(&g, &exact_opts(1e-9)).unwrap();
        assert!(r.report.free_energy_density.abs() < 1e-8);
    }

    #[test]
    fn entropy_identity_holds() {
        let g = graph(5, &[&[0, 1, 2], &[2, 3, 4]]);
        let r = single_instance_bp(&g, &BpOptions::new(20.0f64)).unwrap().report;
        let lhs = r.entropy_density;
        let rhs = r.free_energy_density - r.beta * r.occupancy * r.lambda.ln();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_is_rejected() {
        let g = InteractionGraph::empty(3, 3);
        assert!(single_instance_bp(&g, &BpOptions::new(1.0f64)).is_err());
    }

    #[test]
    fn f32_bp_runs() {
        let g = graph(3, &[&[0, 1, 2]]);
        let opts = BpOptions { lambda: 1.0f32, tol: 1e-6, max_sweeps: 100, damping: 0.0, rng: RngSpec::new(1, 0) };
        let r = single_instance_bp(&g, &opts).unwrap();
        assert!((r.report.free_energy_density * 3.0 - 4f32.ln()).abs() < 1e-5);
    }
}
