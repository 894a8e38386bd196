use std::collections::BTreeSet;

use proptest::prelude::*;
use qsat_core::cavity::{regular_fixed_point, single_instance_bp, update_q_a, update_q_i, BpOptions};
use qsat_core::dimer::{enumerate_coverings, has_covering, loop_structure, DimerCovering, EnumerationLimits};
use qsat_core::hypergraph::{sample_er_graph, sample_projectors};
use qsat_core::instance::Instance;
use qsat_core::kcore::{replay_trace, strip_core, strip_core_random_order};
use qsat_core::spectrum::{dense_spectrum, HamiltonianHandle};
use qsat_core::{InteractionGraph, ProjectorMode, RngSpec};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = InteractionGraph> {
    (4..=max_n, any::<u64>()).prop_flat_map(|(n, seed)| {
        (Just(n), 1..=(n + 2).min(n * (n - 1) * (n - 2) / 6), Just(seed))
            .prop_map(|(n, m, seed)| sample_er_graph(n, m, 3, RngSpec::new(seed, 0)).unwrap())
    })
}

fn log_z(g: &InteractionGraph, lambda: f64) -> f64 {
    fn go(g: &InteractionGraph, c: usize, used: &mut [bool], k: i32, lambda: f64) -> f64 {
        if c == g.n_clauses() {
            return lambda.powi(k);
        }
        let mut z = go(g, c + 1, used, k, lambda);
        for &q in g.clause(c) {
            if !used[q] {
                used[q] = true;
                z += go(g, c + 1, used, k + 1, lambda);
                used[q] = false;
            }
        }
        z
    }
    go(g, 0, &mut vec![false; g.n_qubits()], 0, lambda).ln()
}

/// Each clause after the first shares at most one qubit with earlier ones.
fn forest(attach: &[Option<usize>]) -> InteractionGraph {
    let mut n = 0usize;
    let mut cs = Vec::new();
    for a in attach {
        let mut c = Vec::new();
        if let (Some(i), true) = (a, n > 0) {
            c.push(i % n);
        }
        while c.len() < 3 {
            c.push(n);
            n += 1;
        }
        cs.push(c);
    }
    InteractionGraph::new(n, 3, cs).unwrap()
}

fn core_sets(qubits: &[usize], clauses: &[usize]) -> (BTreeSet<usize>, BTreeSet<usize>) {
    (qubits.iter().copied().collect(), clauses.iter().copied().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn messages_stay_in_range(ins in prop::collection::vec(0.0f64..=1.0, 0..6), log_l in -4.0f64..8.0) {
        let lambda = 10f64.powf(log_l);
        for q in [update_q_i(ins.clone(), lambda), update_q_a(ins.clone(), lambda)] {
            prop_assert!((0.0..=1.0).contains(&q));
            prop_assert!(q <= lambda / (1.0 + lambda) + 1e-15);
        }
    }

    #[test]
    fn bp_is_exact_on_forests(attach in prop::collection::vec(prop::option::of(0usize..100), 1..6), log_l in -1.0f64..2.0) {
        let g = forest(&attach);
        let lambda = 10f64.powf(log_l);
        let opts = BpOptions { lambda, tol: 1e-14, max_sweeps: 2000, damping: 0.0, rng: RngSpec::new(1, 0) };
        let r = single_instance_bp(&g, &opts).unwrap().report;
        prop_assert!(r.converged);
        let f = r.free_energy_density * g.n_qubits() as f64;
        prop_assert!((f - log_z(&g, lambda)).abs() < 1e-9, "{} vs {}", f, log_z(&g, lambda));
    }

    #[test]
    fn leaf_removal_is_confluent(g in graph_strategy(30), seed in any::<u64>()) {
        let base = strip_core(&g);
        let want = core_sets(&base.core_qubits, &base.core_clauses);
        let mut rng = RngSpec::new(seed, 0).rng();
        for _ in 0..20 {
            let d = strip_core_random_order(&g, &mut rng);
            prop_assert_eq!(core_sets(&d.core_qubits, &d.core_clauses), want.clone());
            let (q, c) = replay_trace(&g, &d.removal_trace).unwrap();
            prop_assert_eq!(core_sets(&q, &c), want.clone());
        }
    }

    #[test]
    fn core_of_subgraph_is_inside_core(g in graph_strategy(24), drop in any::<prop::sample::Index>()) {
        prop_assume!(g.n_clauses() > 1);
        let skip = drop.index(g.n_clauses());
        let kept: Vec<Vec<usize>> = g.clauses().iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, c)| c.clone()).collect();
        let sub = InteractionGraph::new(g.n_qubits(), 3, kept).unwrap();
        let big: BTreeSet<usize> = strip_core(&g).core_qubits.into_iter().collect();
        let small: BTreeSet<usize> = strip_core(&sub).core_qubits.into_iter().collect();
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn coverings_exist_iff_counted(g in graph_strategy(10)) {
        let c = enumerate_coverings(&g, &EnumerationLimits::default());
        prop_assert_eq!(c.count > 0u32.into(), has_covering(&g));
    }

    #[test]
    fn count_is_label_invariant(g in graph_strategy(10), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = RngSpec::new(seed, 0).rng();
        let mut perm: Vec<usize> = (0..g.n_qubits()).collect();
        perm.shuffle(&mut rng);
        let mut clauses: Vec<Vec<usize>> = g.clauses().iter().map(|c| c.iter().map(|&q| perm[q]).collect()).collect();
        clauses.shuffle(&mut rng);
        let h = InteractionGraph::new(g.n_qubits(), 3, clauses).unwrap();
        let lim = EnumerationLimits::default();
        prop_assert_eq!(enumerate_coverings(&g, &lim).count, enumerate_coverings(&h, &lim).count);
    }

    #[test]
    fn fully_packed_loops_are_closed(seed in 0u64..200) {
        let g = sample_er_graph(24, 22, 3, RngSpec::new(seed, 0)).unwrap();
        let core = strip_core(&g).core_graph(&g);
        prop_assume!(core.n_qubits() > 0 && core.n_qubits() == core.n_clauses());
        let covs = enumerate_coverings(&core, &EnumerationLimits { list_cap: 16, count_limit: None }).coverings;
        for a in &covs {
            for b in &covs {
                let ls = loop_structure(&core, a, b).unwrap();
                prop_assert!(ls.paths.is_empty());
                prop_assert_eq!(ls.total_length, ls.loop_lengths().iter().sum::<usize>());
            }
        }
    }

    #[test]
    fn instance_json_round_trips(g in graph_strategy(12), seed in any::<u64>()) {
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(seed, 1));
        let inst = Instance::new(g.clone(), Some(p), RngSpec::new(seed, 0)).unwrap().with_core(&strip_core(&g));
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ground_energy_grows_with_clauses(g in graph_strategy(8), seed in any::<u64>()) {
        prop_assume!(g.n_clauses() > 1);
        let p = sample_projectors(&g, ProjectorMode::Generic, RngSpec::new(seed, 0));
        let m = g.n_clauses() - 1;
        let sub = InteractionGraph::new(g.n_qubits(), 3, g.clauses()[..m].to_vec()).unwrap();
        let p_sub = qsat_core::ProjectorSet::generic(p.vectors()[..m].to_vec()).unwrap();
        let e = |g: &InteractionGraph, p: &qsat_core::ProjectorSet| dense_spectrum(&HamiltonianHandle::new(g, p).unwrap())[0];
        prop_assert!(e(&g, &p) >= e(&sub, &p_sub) - 1e-10);
    }
}

#[test]
fn occupancy_grows_with_fugacity() {
    let mut prev = 0.0;
    for i in 0..40 {
        let l = 10f64.powf(-2.0 + i as f64 * 0.2);
        let n = regular_fixed_point(3, 3, l).unwrap().report.occupancy;
        assert!(n >= prev);
        prev = n;
    }
}

#[test]
fn covering_round_trip_through_pairs() {
    let g = InteractionGraph::new(5, 3, vec![vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
    let dc = DimerCovering::new(&g, vec![1, 3]).unwrap();
    let pairs: Vec<(usize, usize)> = dc.pairs().collect();
    assert_eq!(pairs, vec![(0, 1), (1, 3)]);
    assert_eq!(dc.monomers(5), vec![0, 2, 4]);
}
