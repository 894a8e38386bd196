//! Dimer coverings of interaction graphs: existence via maximum matching,
//! exact enumeration, loop structure between two coverings, and the product
//! states they label.

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QsatError, Result};
use crate::hypergraph::{InteractionGraph, ProjectorMode, ProjectorSet};

/// Injective assignment of every clause to one of its own qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DimerCovering {
    assignment: Vec<usize>,
}

impl DimerCovering {
    /// Validates `assignment[m]` as a qubit of clause `m`, with no qubit used twice.
    pub fn new(g: &InteractionGraph, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != g.n_clauses() {
            return Err(QsatError::Contract(format!(
                "covering has {} dimers for {} clauses",
                assignment.len(),
                g.n_clauses()
            )));
        }
        let mut used = vec![false; g.n_qubits()];
        for (m, &q) in assignment.iter().enumerate() {
            if !g.clause(m).contains(&q) {
                return Err(QsatError::Contract(format!("qubit {q} is not in clause {m}")));
            }
            if std::mem::replace(&mut used[q], true) {
                return Err(QsatError::Contract(format!("qubit {q} carries two dimers")));
            }
        }
        Ok(Self { assignment })
    }

    pub fn qubit_of(&self, clause: usize) -> usize {
        self.assignment[clause]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// `(clause, qubit)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment.iter().copied().enumerate()
    }

    /// Qubits left uncovered (monomers) among `n_qubits`.
    pub fn monomers(&self, n_qubits: usize) -> Vec<usize> {
        let mut used = vec![false; n_qubits];
        for &q in &self.assignment {
            used[q] = true;
        }
        (0..n_qubits).filter(|&q| !used[q]).collect()
    }
}

impl Serialize for DimerCovering {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[usize; 2]> = self.pairs().map(|(c, q)| [c, q]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DimerCovering {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut pairs: Vec<[usize; 2]> = Vec::deserialize(d)?;
        pairs.sort_unstable();
        if pairs.iter().enumerate().any(|(i, p)| p[0] != i) {
            return Err(serde::de::Error::custom("covering must list every clause exactly once"));
        }
        Ok(Self { assignment: pairs.into_iter().map(|p| p[1]).collect() })
    }
}

/// Hopcroft–Karp maximum matching from clauses to usable qubits.
///
/// Returns `match_of_clause`.
fn hopcroft_karp(g: &InteractionGraph, usable: &[bool]) -> Vec<Option<usize>> {
    const INF: usize = usize::MAX;
    let m = g.n_clauses();
    let mut mate_c: Vec<Option<usize>> = vec![None; m];
    let mut mate_q: Vec<Option<usize>> = vec![None; g.n_qubits()];
    let mut dist = vec![INF; m];

    loop {
        // BFS layering from free clauses
        let mut queue = VecDeque::new();
        for c in 0..m {
            if mate_c[c].is_none() {
                dist[c] = 0;
                queue.push_back(c);
            } else {
                dist[c] = INF;
            }
        }
        let mut found = false;
        while let Some(c) = queue.pop_front() {
            for &q in g.clause(c) {
                if !usable[q] {
                    continue;
                }
                match mate_q[q] {
                    None => found = true,
                    Some(c2) if dist[c2] == INF => {
                        dist[c2] = dist[c] + 1;
                        queue.push_back(c2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        for c in 0..m {
            if mate_c[c].is_none() {
                augment(g, usable, c, &mut mate_c, &mut mate_q, &mut dist);
            }
        }
    }
    mate_c
}

fn augment(
    g: &InteractionGraph,
    usable: &[bool],
    c: usize,
    mate_c: &mut [Option<usize>],
    mate_q: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &q in g.clause(c) {
        if !usable[q] {
            continue;
        }
        let ok = match mate_q[q] {
            None => true,
            Some(c2) => dist[c2] == dist[c].wrapping_add(1) && augment(g, usable, c2, mate_c, mate_q, dist),
        };
        if ok {
            mate_c[c] = Some(q);
            mate_q[q] = Some(c);
            return true;
        }
    }
    dist[c] = usize::MAX;
    false
}

/// Whether every clause can receive its own dimer.
pub fn has_covering(g: &InteractionGraph) -> bool {
    if g.n_clauses() > g.n_qubits() {
        return false;
    }
    hopcroft_karp(g, &vec![true; g.n_qubits()]).iter().all(Option::is_some)
}

/// Maximum partial covering; `None` entries are uncovered clauses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximumCovering {
    pub assignment: Vec<Option<usize>>,
    pub uncovered: usize,
}

impl MaximumCovering {
    pub fn into_covering(self) -> Option<DimerCovering> {
        let assignment: Option<Vec<usize>> = self.assignment.into_iter().collect();
        assignment.map(|assignment| DimerCovering { assignment })
    }
}

pub fn maximum_covering(g: &InteractionGraph) -> MaximumCovering {
    maximum_covering_on(g, &vec![true; g.n_qubits()])
}

/// Maximum covering using only qubits flagged in `usable`.
pub fn maximum_covering_on(g: &InteractionGraph, usable: &[bool]) -> MaximumCovering {
    let assignment = hopcroft_karp(g, usable);
    let uncovered = assignment.iter().filter(|a| a.is_none()).count();
    MaximumCovering { assignment, uncovered }
}

/// Limits for [`enumerate_coverings`].
#[derive(Clone, Debug, Default)]
pub struct EnumerationLimits {
    /// Keep at most this many coverings in the result list.
    pub list_cap: usize,
    /// Stop once the count exceeds this bound and flag saturation.
    pub count_limit: Option<BigUint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringCount {
    pub count: BigUint,
    pub coverings: Vec<DimerCovering>,
    /// The count limit was hit; `count` is a lower bound.
    pub saturated: bool,
}

impl CoveringCount {
    /// Natural log of the count (`-inf` for zero).
    pub fn log_count(&self) -> f64 {
        ln_biguint(&self.count)
    }
}

/// `ln(n)` for an arbitrary-size integer.
pub fn ln_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits < 1000 {
        if let Some(f) = n.to_f64() {
            if f.is_finite() {
                return f.ln();
            }
        }
    }
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

struct Enumerator<'a> {
    g: &'a InteractionGraph,
    incidence: Vec<Vec<usize>>,
    used: Vec<bool>,
    done: Vec<bool>,
    free: Vec<usize>,
    current: Vec<usize>,
    limits: &'a EnumerationLimits,
    out: CoveringCount,
}

impl<'a> Enumerator<'a> {
    fn new(g: &'a InteractionGraph, limits: &'a EnumerationLimits) -> Self {
        Self {
            g,
            incidence: g.incidence(),
            used: vec![false; g.n_qubits()],
            done: vec![false; g.n_clauses()],
            free: vec![g.k(); g.n_clauses()],
            current: vec![usize::MAX; g.n_clauses()],
            limits,
            out: CoveringCount { count: BigUint::zero(), coverings: Vec::new(), saturated: false },
        }
    }

    fn place(&mut self, c: usize, q: usize) {
        self.done[c] = true;
        self.used[q] = true;
        self.current[c] = q;
        for &m in &self.incidence[q] {
            self.free[m] -= 1;
        }
    }

    fn unplace(&mut self, c: usize, q: usize) {
        self.done[c] = false;
        self.used[q] = false;
        self.current[c] = usize::MAX;
        for &m in &self.incidence[q] {
            self.free[m] += 1;
        }
    }

    /// Undecided clause with the fewest free qubits (lowest index on ties).
    fn pick(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for c in 0..self.g.n_clauses() {
            if self.done[c] {
                continue;
            }
            let f = self.free[c];
            if best.is_none_or(|(_, bf)| f < bf) {
                best = Some((c, f));
                if f == 0 {
                    break;
                }
            }
        }
        best
    }

    fn run(&mut self) {
        if self.out.saturated {
            return;
        }
        let Some((c, f)) = self.pick() else {
            self.out.count += 1u32;
            if self.out.coverings.len() < self.limits.list_cap {
                self.out.coverings.push(DimerCovering { assignment: self.current.clone() });
            }
            if let Some(limit) = &self.limits.count_limit {
                if &self.out.count > limit {
                    self.out.saturated = true;
                }
            }
            return;
        };
        if f == 0 {
            return;
        }
        let choices: Vec<usize> = self.g.clause(c).iter().copied().filter(|&q| !self.used[q]).collect();
        for q in choices {
            self.place(c, q);
            self.run();
            self.unplace(c, q);
            if self.out.saturated {
                return;
            }
        }
    }
}

/// Exact number of dimer coverings by backtracking (fewest-choices clause first).
pub fn enumerate_coverings(g: &InteractionGraph, limits: &EnumerationLimits) -> CoveringCount {
    if g.n_clauses() > g.n_qubits() {
        return CoveringCount { count: BigUint::zero(), coverings: Vec::new(), saturated: false };
    }
    let mut e = Enumerator::new(g, limits);
    e.run();
    e.out
}

/// Count only, splitting the first branching clause across worker threads.
pub fn count_coverings_parallel(g: &InteractionGraph) -> BigUint {
    if g.n_clauses() == 0 {
        return BigUint::from(1u32);
    }
    if g.n_clauses() > g.n_qubits() {
        return BigUint::zero();
    }
    let limits = EnumerationLimits::default();
    let root = Enumerator::new(g, &limits);
    let (c, _) = root.pick().expect("nonempty");
    g.clause(c)
        .par_iter()
        .map(|&q| {
            let mut e = Enumerator::new(g, &limits);
            e.place(c, q);
            e.run();
            e.out.count
        })
        .reduce(BigUint::zero, |a, b| a + b)
}

/// Node of the clause–qubit incidence graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    Clause(usize),
    Qubit(usize),
}

/// Components of the symmetric difference of two coverings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopStructure {
    /// Alternating cycles, listed as node sequences (closing edge implied).
    pub loops: Vec<Vec<Node>>,
    /// Alternating open paths.
    pub paths: Vec<Vec<Node>>,
    /// Number of edges in the symmetric difference.
    pub total_length: usize,
}

impl LoopStructure {
    pub fn loop_lengths(&self) -> Vec<usize> {
        self.loops.iter().map(Vec::len).collect()
    }
}

pub fn loop_structure(g: &InteractionGraph, dc1: &DimerCovering, dc2: &DimerCovering) -> Result<LoopStructure> {
    DimerCovering::new(g, dc1.assignment.clone())?;
    DimerCovering::new(g, dc2.assignment.clone())?;
    let m = g.n_clauses();
    let n = g.n_qubits();
    // node ids: clauses 0..m, qubits m..m+n; each has at most two incident edges
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    let mut total = 0;
    for c in 0..m {
        let (a, b) = (dc1.assignment[c], dc2.assignment[c]);
        if a != b {
            for q in [a, b] {
                adj[c].push(m + q);
                adj[m + q].push(c);
                total += 1;
            }
        }
    }
    let to_node = |id: usize| if id < m { Node::Clause(id) } else { Node::Qubit(id - m) };
    let mut seen = vec![false; m + n];
    let mut out = LoopStructure { total_length: total, ..Default::default() };

    // open paths start at degree-1 nodes
    for start in 0..m + n {
        if seen[start] || adj[start].len() != 1 {
            continue;
        }
        let mut seq = vec![to_node(start)];
        seen[start] = true;
        let (mut prev, mut cur) = (start, adj[start][0]);
        loop {
            seen[cur] = true;
            seq.push(to_node(cur));
            match adj[cur].iter().copied().find(|&x| x != prev) {
                Some(next) if adj[cur].len() == 2 => {
                    prev = cur;
                    cur = next;
                }
                _ => break,
            }
        }
        out.paths.push(seq);
    }
    for start in 0..m + n {
        if seen[start] || adj[start].is_empty() {
            continue;
        }
        let mut seq = vec![to_node(start)];
        seen[start] = true;
        let (mut prev, mut cur) = (start, adj[start][0]);
        while cur != start {
            seen[cur] = true;
            seq.push(to_node(cur));
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
        out.loops.push(seq);
    }
    Ok(out)
}

/// A site of a product state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Site {
    /// Fixed by a dimer.
    Assigned([Complex64; 2]),
    /// Not constrained by the covering; carries the value used for evaluation.
    Free([Complex64; 2]),
}

impl Site {
    pub fn amplitudes(&self) -> [Complex64; 2] {
        match *self {
            Site::Assigned(v) | Site::Free(v) => v,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Site::Free(_))
    }
}

pub const KET_ZERO: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

/// Product state over all qubits of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub sites: Vec<Site>,
}

impl ProductState {
    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    /// Full `2^N` amplitude vector (bit `q` of the index is qubit `q`).
    pub fn to_vector(&self) -> Vec<Complex64> {
        let n = self.sites.len();
        let mut v = vec![Complex64::new(1.0, 0.0)];
        for q in 0..n {
            let a = self.sites[q].amplitudes();
            let mut next = vec![Complex64::zero(); v.len() * 2];
            // qubit q is bit q: lower bits already laid out
            let low = v.len();
            for (i, &x) in v.iter().enumerate() {
                next[i] = x * a[0];
                next[i + low] = x * a[1];
            }
            v = next;
        }
        v
    }

    /// `⟨Ψ|H|Ψ⟩` evaluated clause by clause.
    pub fn energy(&self, g: &InteractionGraph, p: &ProjectorSet) -> f64 {
        (0..g.n_clauses())
            .map(|m| {
                let local: Vec<[Complex64; 2]> = g.clause(m).iter().map(|&q| self.sites[q].amplitudes()).collect();
                let psi = crate::hypergraph::tensor_factors(&local);
                let amp: Complex64 = p.vector(m).iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
                amp.norm_sqr()
            })
            .sum()
    }
}

/// Unit vector orthogonal to `u` in `C^2`.
pub fn orthogonal_qubit(u: [Complex64; 2]) -> [Complex64; 2] {
    [-u[1].conj(), u[0].conj()]
}

/// Zero-energy product state labelled by a dimer covering.
///
/// Product projectors: the dimer qubit of clause `m` is set orthogonal to its
/// factor of `Π_m`. Generic projectors: clauses are solved in dependency
/// order, which requires the covering's orientation to be acyclic. Free qubits
/// take `free_fill`.
pub fn build_product_state(
    g: &InteractionGraph,
    p: &ProjectorSet,
    dc: &DimerCovering,
    free_fill: [Complex64; 2],
) -> Result<ProductState> {
    p.check_against(g)?;
    DimerCovering::new(g, dc.assignment.clone())?;
    let n = g.n_qubits();
    let mut sites: Vec<Site> = vec![Site::Free(free_fill); n];
    match p.mode() {
        ProjectorMode::Product => {
            for (m, q) in dc.pairs() {
                let j = g.clause(m).iter().position(|&x| x == q).expect("validated");
                let u = p.factors(m).expect("product mode")[j];
                sites[q] = Site::Assigned(orthogonal_qubit(u));
            }
        }
        ProjectorMode::Generic => {
            let order = dependency_order(g, dc)?;
            for m in order {
                let q = dc.qubit_of(m);
                let clause = g.clause(m);
                let j = clause.iter().position(|&x| x == q).expect("validated");
                let phi = p.vector(m);
                // c_b = Σ conj(φ[idx]) Π_{i≠j} ψ_i[bit_i], with bit j = b
                let mut c = [Complex64::zero(); 2];
                for (idx, &amp) in phi.iter().enumerate() {
                    let mut w = amp.conj();
                    for (i, &qi) in clause.iter().enumerate() {
                        if i != j {
                            w *= sites[qi].amplitudes()[(idx >> i) & 1];
                        }
                    }
                    c[(idx >> j) & 1] += w;
                }
                let norm = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
                if norm < 1e-14 {
                    return Err(QsatError::DegenerateProjector { clause: m });
                }
                // Σ_b c_b x_b = 0
                sites[q] = Site::Assigned([c[1] / norm, -c[0] / norm]);
            }
        }
    }
    Ok(ProductState { sites })
}

/// Topological order of clauses where clause `m` comes after every clause
/// whose dimer sits on one of `m`'s other qubits.
fn dependency_order(g: &InteractionGraph, dc: &DimerCovering) -> Result<Vec<usize>> {
    let m = g.n_clauses();
    let mut owner = vec![None; g.n_qubits()];
    for (c, q) in dc.pairs() {
        owner[q] = Some(c);
    }
    let mut indeg = vec![0usize; m];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); m];
    for c in 0..m {
        for &q in g.clause(c) {
            if q == dc.qubit_of(c) {
                continue;
            }
            if let Some(src) = owner[q] {
                out[src].push(c);
                indeg[c] += 1;
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..m).filter(|&c| indeg[c] == 0).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(c) = queue.pop_front() {
        order.push(c);
        for &d in &out[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                queue.push_back(d);
            }
        }
    }
    if order.len() != m {
        return Err(QsatError::Unsupported(
            "dimer orientation contains a cycle; generic projectors need an acyclic orientation".into(),
        ));
    }
    Ok(order)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreePolicy {
    /// Compare only sites assigned in both states.
    #[default]
    Exclude,
    /// Compare every site using the stored values.
    Include,
}

/// `Σ_i ln|⟨a_i|b_i⟩|` over the compared sites; `-inf` on any orthogonal pair.
pub fn log_overlap(s1: &ProductState, s2: &ProductState, policy: FreePolicy) -> Result<f64> {
    if s1.n_qubits() != s2.n_qubits() {
        return Err(QsatError::Contract("product states differ in qubit count".into()));
    }
    let mut total = 0.0;
    for (a, b) in s1.sites.iter().zip(&s2.sites) {
        if policy == FreePolicy::Exclude && (a.is_free() || b.is_free()) {
            continue;
        }
        let (x, y) = (a.amplitudes(), b.amplitudes());
        let ov = (x[0].conj() * y[0] + x[1].conj() * y[1]).norm();
        if ov == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += ov.ln();
    }
    Ok(total)
}

/// Entropy density extrapolated in system size: least-squares fit of
/// `s = s_inf + slope / N_c` over `(N_c, s)` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeFit {
    pub s_inf: f64,
    pub slope: f64,
    pub points: usize,
}

pub fn finite_size_fit(points: &[(usize, f64)]) -> Result<SizeFit> {
    let xs: Vec<f64> = points.iter().map(|&(n, _)| 1.0 / n as f64).collect();
    let n = points.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if points.len() < 2 || !(sxx > 0.0) || points.iter().any(|&(n, s)| n == 0 || !s.is_finite()) {
        return Err(QsatError::InvalidParameter("size fit needs finite values at two or more distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(SizeFit { s_inf: my - slope * mx, slope, points: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::sample_projectors;
    use crate::rng::RngSpec;

    fn graph(n: usize, clauses: &[&[usize]]) -> InteractionGraph {
        InteractionGraph::new(n, 3, clauses.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    fn count(g: &InteractionGraph) -> u64 {
        enumerate_coverings(g, &EnumerationLimits::default()).count.to_u64().unwrap()
    }

    /// All maps clause → own qubit, filtered for injectivity.
    fn brute_force(g: &InteractionGraph) -> u64 {
        let k = g.k();
        let m = g.n_clauses();
        let mut total = 0;
        for code in 0..k.pow(m as u32) {
            let mut used = vec![false; g.n_qubits()];
            let mut ok = true;
            let mut x = code;
            for c in 0..m {
                let q = g.clause(c)[x % k];
                x /= k;
                if std::mem::replace(&mut used[q], true) {
                    ok = false;
                    break;
                }
            }
            total += ok as u64;
        }
        total
    }

    #[test]
    fn small_counts() {
        let single = graph(3, &[&[0, 1, 2]]);
        assert_eq!(count(&single), 3);
        assert!(has_covering(&single));
        let minifan = graph(5, &[&[1, 2, 3], &[1, 2, 4]]);
        assert_eq!(count(&minifan), 7);
        assert_eq!(brute_force(&minifan), 7);
        assert!(has_covering(&minifan));
        let full = graph(4, &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]]);
        assert_eq!(count(&full), brute_force(&full));
    }

    #[test]
    fn more_clauses_than_qubits_has_no_covering() {
        let g = InteractionGraph::new(4, 2, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![0, 2]]).unwrap();
        assert!(!has_covering(&g));
        assert_eq!(count(&g), 0);
        assert_eq!(maximum_covering(&g).uncovered, 1);
    }

    #[test]
    fn maximum_covering_examples() {
        let g = graph(7, &[&[1, 2, 3], &[1, 2, 4], &[1, 2, 5], &[1, 2, 6]]);
        let mc = maximum_covering(&g);
        assert_eq!(mc.uncovered, 0);
        assert!(mc.into_covering().is_some());
        let g = graph(6, &[&[1, 2, 3], &[1, 2, 4], &[1, 2, 5]]);
        let mut usable = vec![true; 6];
        for q in [3, 4, 5] {
            usable[q] = false;
        }
        assert_eq!(maximum_covering_on(&g, &usable).uncovered, 1);
    }

    #[test]
    fn enumeration_matches_brute_force_on_random_graphs() {
        for i in 0..30 {
            let g = crate::hypergraph::sample_er_graph(8, 5, 3, RngSpec::new(11, i)).unwrap();
            let c = count(&g);
            assert_eq!(c, brute_force(&g), "graph {i}");
            assert_eq!(c > 0, has_covering(&g));
            assert_eq!(count_coverings_parallel(&g).to_u64().unwrap(), c);
        }
    }

    #[test]
    fn list_cap_and_saturation() {
        let g = graph(9, &[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]]);
        let limits = EnumerationLimits { list_cap: 4, count_limit: None };
        let r = enumerate_coverings(&g, &limits);
        assert_eq!(r.count, BigUint::from(27u32));
        assert_eq!(r.coverings.len(), 4);
        assert!((r.log_count() - 27f64.ln()).abs() < 1e-12);
        let limits = EnumerationLimits { list_cap: 0, count_limit: Some(BigUint::from(10u32)) };
        let r = enumerate_coverings(&g, &limits);
        assert!(r.saturated);
        assert_eq!(r.count, BigUint::from(11u32));
    }

    #[test]
    fn ln_of_big_counts() {
        let big = BigUint::from(3u32).pow(2000);
        assert!((ln_biguint(&big) - 2000.0 * 3f64.ln()).abs() < 1e-6);
        assert_eq!(ln_biguint(&BigUint::zero()), f64::NEG_INFINITY);
    }

    #[test]
    fn loops_between_minifan_coverings() {
        let g = graph(3, &[&[0, 1, 2]]);
        let a = DimerCovering::new(&g, vec![0]).unwrap();
        let ls = loop_structure(&g, &a, &a).unwrap();
        assert_eq!(ls.total_length, 0);
        assert!(ls.loops.is_empty() && ls.paths.is_empty());

        let g = graph(5, &[&[1, 2, 3], &[1, 2, 4]]);
        let a = DimerCovering::new(&g, vec![1, 2]).unwrap();
        let b = DimerCovering::new(&g, vec![2, 1]).unwrap();
        let ls = loop_structure(&g, &a, &b).unwrap();
        assert_eq!(ls.total_length, 4);
        assert_eq!(ls.loop_lengths(), vec![4]);
        assert!(ls.paths.is_empty());

        let c = DimerCovering::new(&g, vec![3, 2]).unwrap();
        let ls = loop_structure(&g, &a, &c).unwrap();
        assert_eq!(ls.total_length, 2);
        assert_eq!(ls.paths.len(), 1);
        assert_eq!(ls.paths[0].len(), 3);
    }

    #[test]
    fn covering_json_is_pair_list() {
        let g = graph(5, &[&[1, 2, 3], &[1, 2, 4]]);
        let a = DimerCovering::new(&g, vec![3, 1]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[0,3],[1,1]]");
        let back: DimerCovering = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn product_state_for_projector_onto_000() {
        let g = graph(3, &[&[0, 1, 2]]);
        let p = ProjectorSet::product(vec![vec![KET_ZERO; 3]]).unwrap();
        let dc = DimerCovering::new(&g, vec![0]).unwrap();
        let s = build_product_state(&g, &p, &dc, KET_ZERO).unwrap();
        let a = s.sites[0].amplitudes();
        assert!(!s.sites[0].is_free());
        assert!(a[0].norm() < 1e-15 && (a[1].norm() - 1.0).abs() < 1e-15);
        assert!(s.sites[1].is_free() && s.sites[2].is_free());
        assert!(s.energy(&g, &p) < 1e-24);
    }

    #[test]
    fn generic_acyclic_and_cyclic_orientations() {
        // chain: clause 0 on {0,1,2}, clause 1 on {2,3,4}; dimers 0 and 3 are acyclic
        let g = graph(5, &[&[0, 1, 2], &[2, 3, 4]]);
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(5, 0));
        let dc = DimerCovering::new(&g, vec![2, 3]).unwrap();
        let s = build_product_state(&g, &p, &dc, KET_ZERO).unwrap();
        assert!(s.energy(&g, &p) < 1e-20);

        let g = graph(4, &[&[0, 1, 2], &[0, 1, 3]]);
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(5, 1));
        let dc = DimerCovering::new(&g, vec![0, 1]).unwrap();
        assert!(matches!(build_product_state(&g, &p, &dc, KET_ZERO), Err(QsatError::Unsupported(_))));
    }

    #[test]
    fn overlaps() {
        let g = graph(3, &[&[0, 1, 2]]);
        let p = sample_projectors(&g, ProjectorMode::Product, RngSpec::new(1, 2));
        let dc = DimerCovering::new(&g, vec![1]).unwrap();
        let s = build_product_state(&g, &p, &dc, KET_ZERO).unwrap();
        assert!(log_overlap(&s, &s, FreePolicy::Exclude).unwrap().abs() < 1e-12);

        let h = 0.5f64.sqrt();
        let plus = [Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
        let a = ProductState { sites: vec![Site::Assigned(KET_ZERO), Site::Assigned(KET_ZERO)] };
        let b = ProductState { sites: vec![Site::Assigned(KET_ZERO), Site::Assigned(plus)] };
        let lo = log_overlap(&a, &b, FreePolicy::Exclude).unwrap();
        assert!((lo - h.ln()).abs() < 1e-12);
        assert!((lo + 0.3466).abs() < 1e-4);
        let one = [Complex64::zero(), Complex64::new(1.0, 0.0)];
        let c = ProductState { sites: vec![Site::Assigned(one), Site::Free(one)] };
        assert_eq!(log_overlap(&a, &c, FreePolicy::Exclude).unwrap(), f64::NEG_INFINITY);
        let d = ProductState { sites: vec![Site::Assigned(KET_ZERO), Site::Free(one)] };
        assert_eq!(log_overlap(&a, &d, FreePolicy::Exclude).unwrap(), 0.0);
        assert_eq!(log_overlap(&a, &d, FreePolicy::Include).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn size_fit_recovers_a_line() {
        let pts: Vec<(usize, f64)> = [8, 10, 14, 20].iter().map(|&n| (n, 0.25 + 0.6 / n as f64)).collect();
        let f = finite_size_fit(&pts).unwrap();
        assert!((f.s_inf - 0.25).abs() < 1e-12 && (f.slope - 0.6).abs() < 1e-12);
        assert!(finite_size_fit(&[(8, 0.1), (8, 0.2)]).is_err());
    }
}
