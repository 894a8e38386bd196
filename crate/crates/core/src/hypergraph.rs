//! Random k-QSAT interaction graphs and projector realizations.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QsatError, Result};
use crate::rng::RngSpec;

/// Bipartite incidence structure of qubits and k-qubit clauses.
///
/// Each clause is stored with its qubits in ascending order; the local basis
/// of a clause uses bit `j` for its `j`-th qubit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionGraph {
    n_qubits: usize,
    k: usize,
    clauses: Vec<Vec<usize>>,
}

impl InteractionGraph {
    /// Validates and canonicalizes a clause list.
    pub fn new(n_qubits: usize, k: usize, clauses: Vec<Vec<usize>>) -> Result<Self> {
        if k == 0 {
            return Err(QsatError::InvalidParameter("clause arity must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        let mut canon = Vec::with_capacity(clauses.len());
        for (idx, mut c) in clauses.into_iter().enumerate() {
            c.sort_unstable();
            if c.len() != k {
                return Err(QsatError::Contract(format!("clause {idx} has {} qubits, expected {k}", c.len())));
            }
            if c.windows(2).any(|w| w[0] == w[1]) {
                return Err(QsatError::Contract(format!("clause {idx} repeats a qubit")));
            }
            if let Some(&q) = c.iter().find(|&&q| q >= n_qubits) {
                return Err(QsatError::Contract(format!("clause {idx} references qubit {q} outside [0, {n_qubits})")));
            }
            if !seen.insert(c.clone()) {
                return Err(QsatError::Contract(format!("clause {idx} duplicates an earlier clause")));
            }
            canon.push(c);
        }
        Ok(Self { n_qubits, k, clauses: canon })
    }

    pub fn empty(n_qubits: usize, k: usize) -> Self {
        Self { n_qubits, k, clauses: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<usize>] {
        &self.clauses
    }

    pub fn clause(&self, m: usize) -> &[usize] {
        &self.clauses[m]
    }

    /// Clause density M/N.
    pub fn alpha(&self) -> f64 {
        if self.n_qubits == 0 {
            0.0
        } else {
            self.clauses.len() as f64 / self.n_qubits as f64
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_qubits];
        for c in &self.clauses {
            for &q in c {
                d[q] += 1;
            }
        }
        d
    }

    /// For every qubit, the indices of the clauses containing it.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_qubits];
        for (m, c) in self.clauses.iter().enumerate() {
            for &q in c {
                inc[q].push(m);
            }
        }
        inc
    }

    /// Induced subgraph on a clause subset, with qubits relabeled densely.
    ///
    /// Returns the subgraph and the original index of each new qubit. Only
    /// qubits touched by a kept clause, plus those listed in `extra_qubits`,
    /// survive.
    pub fn restrict(&self, clause_ids: &[usize], extra_qubits: &[usize]) -> (InteractionGraph, Vec<usize>) {
        let mut keep: Vec<usize> = clause_ids
            .iter()
            .flat_map(|&m| self.clauses[m].iter().copied())
            .chain(extra_qubits.iter().copied())
            .collect();
        keep.sort_unstable();
        keep.dedup();
        let relabel: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        let clauses = clause_ids.iter().map(|&m| self.clauses[m].iter().map(|q| relabel[q]).collect()).collect();
        let g = InteractionGraph::new(keep.len(), self.k, clauses).expect("restriction of a valid graph is valid");
        (g, keep)
    }

    /// Copy of this graph with one extra clause appended.
    pub fn with_clause(&self, clause: Vec<usize>) -> Result<InteractionGraph> {
        let mut clauses = self.clauses.clone();
        clauses.push(clause);
        InteractionGraph::new(self.n_qubits, self.k, clauses)
    }
}

/// Number of k-subsets of an n-set, saturating at `u128::MAX`.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

const ENUMERATE_LIMIT: u128 = 1 << 22;

/// Uniform sample of `m` distinct k-subsets of `n` qubits (fixed-M Erdős–Rényi).
pub fn sample_er_graph(n: usize, m: usize, k: usize, spec: RngSpec) -> Result<InteractionGraph> {
    if k < 2 {
        return Err(QsatError::InvalidParameter(format!("clause arity k={k} must be at least 2")));
    }
    let available = binomial_u128(n, k);
    if (m as u128) > available {
        return Err(QsatError::InfeasibleEnsemble { n, m, k, available: available.to_string() });
    }
    let mut rng = spec.rng();
    let clauses = if available <= ENUMERATE_LIMIT && (m as u128) * 2 > available {
        let all = all_subsets(n, k);
        index::sample(&mut rng, all.len(), m).into_iter().map(|i| all[i].clone()).collect()
    } else {
        let mut seen = HashSet::with_capacity(m);
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let mut c = index::sample(&mut rng, n, k).into_vec();
            c.sort_unstable();
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
        out
    };
    InteractionGraph::new(n, k, clauses)
}

/// `m = round(alpha * n)`.
pub fn clauses_for_density(n: usize, alpha: f64) -> usize {
    (alpha * n as f64).round().max(0.0) as usize
}

fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Unordered clause pairs whose qubit sets share at least two qubits.
pub fn find_minifans(g: &InteractionGraph) -> Vec<(usize, usize)> {
    let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (m, c) in g.clauses().iter().enumerate() {
        for a in 0..c.len() {
            for b in a + 1..c.len() {
                by_pair.entry((c[a], c[b])).or_default().push(m);
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = by_pair
        .values()
        .filter(|v| v.len() > 1)
        .flat_map(|v| {
            v.iter().enumerate().flat_map(move |(i, &x)| v[i + 1..].iter().map(move |&y| (x.min(y), x.max(y))))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

pub fn degree_histogram(g: &InteractionGraph) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for d in g.degrees() {
        *h.entry(d).or_insert(0) += 1;
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectorMode {
    Generic,
    Product,
}

/// One rank-1 projector `|φ_m⟩⟨φ_m|` per clause.
///
/// In product mode `|φ_m⟩ = |u_1⟩ ⊗ … ⊗ |u_k⟩` and the single-qubit factors
/// are kept alongside the expanded vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSet {
    mode: ProjectorMode,
    vectors: Vec<Vec<Complex64>>,
    factors: Vec<Vec<[Complex64; 2]>>,
}

impl ProjectorSet {
    pub fn generic(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        for (m, v) in vectors.iter().enumerate() {
            check_unit(v, m)?;
        }
        Ok(Self { mode: ProjectorMode::Generic, vectors, factors: Vec::new() })
    }

    pub fn product(factors: Vec<Vec<[Complex64; 2]>>) -> Result<Self> {
        for (m, f) in factors.iter().enumerate() {
            for u in f {
                check_unit(u, m)?;
            }
        }
        let vectors = factors.iter().map(|f| tensor_factors(f)).collect();
        Ok(Self { mode: ProjectorMode::Product, vectors, factors })
    }

    pub fn mode(&self) -> ProjectorMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Expanded `2^k` amplitudes of `|φ_m⟩`.
    pub fn vector(&self, m: usize) -> &[Complex64] {
        &self.vectors[m]
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Single-qubit factors of clause `m` (product mode only).
    pub fn factors(&self, m: usize) -> Option<&[[Complex64; 2]]> {
        self.factors.get(m).map(|f| f.as_slice())
    }

    /// Checks the projector count and dimension against a graph.
    pub fn check_against(&self, g: &InteractionGraph) -> Result<()> {
        if self.vectors.len() != g.n_clauses() {
            return Err(QsatError::Contract(format!(
                "{} projectors for {} clauses",
                self.vectors.len(),
                g.n_clauses()
            )));
        }
        let dim = 1usize << g.k();
        if let Some(m) = self.vectors.iter().position(|v| v.len() != dim) {
            return Err(QsatError::Contract(format!("projector {m} is not {dim}-dimensional")));
        }
        Ok(())
    }

    /// Same projectors with one more appended (for monotonicity checks).
    pub fn with_vector(&self, v: Vec<Complex64>) -> Result<Self> {
        check_unit(&v, self.vectors.len())?;
        let mut vectors = self.vectors.clone();
        vectors.push(v);
        Ok(Self { mode: ProjectorMode::Generic, vectors, factors: Vec::new() })
    }
}

fn check_unit(v: &[Complex64], m: usize) -> Result<()> {
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(QsatError::Contract(format!("projector vector {m} has norm {n}")));
    }
    Ok(())
}

/// Expands `u_0 ⊗ u_1 ⊗ …` with bit `j` of the index addressing factor `j`.
pub fn tensor_factors(f: &[[Complex64; 2]]) -> Vec<Complex64> {
    let dim = 1usize << f.len();
    (0..dim).map(|b| f.iter().enumerate().map(|(j, u)| u[(b >> j) & 1]).product()).collect()
}

/// Haar-uniform unit vector in `C^dim`.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> [Complex64; 2] {
    let v = haar_vector(rng, 2);
    [v[0], v[1]]
}

pub fn sample_projectors(g: &InteractionGraph, mode: ProjectorMode, spec: RngSpec) -> ProjectorSet {
    let mut rng = spec.rng();
    match mode {
        ProjectorMode::Generic => {
            let dim = 1usize << g.k();
            let vectors = (0..g.n_clauses()).map(|_| haar_vector(&mut rng, dim)).collect();
            ProjectorSet { mode, vectors, factors: Vec::new() }
        }
        ProjectorMode::Product => {
            let factors: Vec<Vec<[Complex64; 2]>> =
                (0..g.n_clauses()).map(|_| (0..g.k()).map(|_| haar_qubit(&mut rng)).collect()).collect();
            let vectors = factors.iter().map(|f| tensor_factors(f)).collect();
            ProjectorSet { mode, vectors, factors }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, clauses: &[&[usize]]) -> InteractionGraph {
        InteractionGraph::new(n, 3, clauses.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    #[test]
    fn only_subset_is_drawn() {
        let g = sample_er_graph(3, 1, 3, RngSpec::new(1, 0)).unwrap();
        assert_eq!(g.clauses(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn empty_graph_has_zero_degrees() {
        let g = sample_er_graph(10, 0, 3, RngSpec::new(1, 0)).unwrap();
        assert_eq!(g.n_clauses(), 0);
        assert_eq!(degree_histogram(&g), BTreeMap::from([(0, 10)]));
    }

    #[test]
    fn infeasible_density_is_rejected() {
        let err = sample_er_graph(4, 5, 3, RngSpec::new(1, 0)).unwrap_err();
        assert!(matches!(err, QsatError::InfeasibleEnsemble { .. }));
        assert!(sample_er_graph(4, 4, 3, RngSpec::new(1, 0)).is_ok());
    }

    #[test]
    fn validation_rejects_bad_clauses() {
        assert!(InteractionGraph::new(4, 3, vec![vec![0, 1]]).is_err());
        assert!(InteractionGraph::new(4, 3, vec![vec![0, 1, 1]]).is_err());
        assert!(InteractionGraph::new(4, 3, vec![vec![0, 1, 4]]).is_err());
        assert!(InteractionGraph::new(4, 3, vec![vec![0, 1, 2], vec![2, 1, 0]]).is_err());
    }

    #[test]
    fn minifans_need_two_shared_qubits() {
        assert_eq!(find_minifans(&graph(5, &[&[1, 2, 3], &[1, 2, 4]])), vec![(0, 1)]);
        assert!(find_minifans(&graph(6, &[&[1, 2, 3], &[3, 4, 5]])).is_empty());
        // three clauses through the same pair give three minifans
        let g = graph(6, &[&[0, 1, 2], &[0, 1, 3], &[0, 1, 4]]);
        assert_eq!(find_minifans(&g), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn histogram_of_single_clause() {
        assert_eq!(degree_histogram(&graph(3, &[&[0, 1, 2]])), BTreeMap::from([(1, 3)]));
    }

    #[test]
    fn dense_and_sparse_paths_agree_on_validity() {
        for (n, m) in [(6, 19), (6, 3), (40, 500)] {
            let g = sample_er_graph(n, m, 3, RngSpec::new(9, n as u64)).unwrap();
            assert_eq!(g.n_clauses(), m);
            assert_eq!(g.degrees().iter().sum::<usize>(), 3 * m);
        }
    }

    #[test]
    fn projectors_are_normalized_and_reproducible() {
        let g = sample_er_graph(8, 5, 3, RngSpec::new(2, 0)).unwrap();
        for mode in [ProjectorMode::Generic, ProjectorMode::Product] {
            let a = sample_projectors(&g, mode, RngSpec::new(3, 1));
            let b = sample_projectors(&g, mode, RngSpec::new(3, 1));
            assert_eq!(a, b);
            a.check_against(&g).unwrap();
            for v in a.vectors() {
                let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn restrict_relabels_densely() {
        let g = graph(7, &[&[0, 2, 4], &[4, 5, 6], &[1, 2, 3]]);
        let (sub, map) = g.restrict(&[0, 1], &[]);
        assert_eq!(map, vec![0, 2, 4, 5, 6]);
        assert_eq!(sub.clauses(), &[vec![0, 1, 2], vec![2, 3, 4]]);
    }
}
