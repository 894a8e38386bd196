//! SAT/UNSAT decisions and the barely-overconstrained core experiment.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lanczos::{ground_energy, GroundEnergy, LanczosOptions};
use super::{HamiltonianHandle, SpectrumReport, Verdict};
use crate::error::{QsatError, Result};
use crate::hypergraph::{find_minifans, sample_projectors, InteractionGraph};
use crate::hypergraph::{ProjectorMode, ProjectorSet};
use crate::kcore::{next_core, CoreEnsemble, SampledCore};
use crate::rng::RngSpec;

/// Verdict band: `e0 < eps_sat` is SAT, `e0 > eps_unsat` is UNSAT, anything
/// in between is UNDECIDED.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eps_sat: f64,
    pub eps_unsat: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { eps_sat: 1e-8, eps_unsat: 1e-6 }
    }
}

impl Thresholds {
    /// Band used by the core experiment.
    pub fn experiment() -> Self {
        Self { eps_sat: 1e-8, eps_unsat: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_sat > 0.0 && self.eps_sat <= self.eps_unsat) {
            return Err(QsatError::InvalidParameter(format!(
                "need 0 < eps_sat <= eps_unsat, got {} and {}",
                self.eps_sat, self.eps_unsat
            )));
        }
        Ok(())
    }

    fn classify(&self, g: &GroundEnergy) -> Verdict {
        // the Ritz value bounds e0 from above, so SAT needs no convergence
        if g.e0 < self.eps_sat {
            Verdict::Sat
        } else if g.e0 > self.eps_unsat && (g.converged || g.lower_estimate > self.eps_unsat) {
            Verdict::Unsat
        } else {
            Verdict::Undecided
        }
    }
}

/// Ground-energy verdict from two independent Krylov starts; disagreement
/// makes the instance UNDECIDED.
pub fn decide_with_projectors(
    g: &InteractionGraph,
    p: &ProjectorSet,
    th: &Thresholds,
    lanczos: &LanczosOptions,
    spec: RngSpec,
) -> Result<SpectrumReport> {
    th.validate()?;
    let h = HamiltonianHandle::new(g, p)?;
    // stop each run as soon as its verdict is settled
    let opts = LanczosOptions {
        stop_below: lanczos.stop_below.or(Some(th.eps_sat)),
        stop_above: lanczos.stop_above.or(Some(th.eps_unsat)),
        ..lanczos.clone()
    };
    let a = ground_energy(&h, &opts, &mut spec.child(0).rng())?;
    let b = ground_energy(&h, &opts, &mut spec.child(1).rng())?;
    let va = th.classify(&a);
    let vb = th.classify(&b);
    let verdict = if va == vb { va } else { Verdict::Undecided };
    let best = if a.e0 <= b.e0 { &a } else { &b };
    Ok(SpectrumReport {
        e0: best.e0,
        residual: best.residual,
        near_zero_count: None,
        verdict,
        iterations: a.iterations + b.iterations,
    })
}

/// Samples projectors in `mode` and decides satisfiability.
pub fn decide_sat(g: &InteractionGraph, mode: ProjectorMode, spec: RngSpec, th: &Thresholds) -> Result<SpectrumReport> {
    let p = sample_projectors(g, mode, spec.named("projectors"));
    decide_with_projectors(g, &p, th, &LanczosOptions::default(), spec.named("krylov"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub core_sizes: Vec<usize>,
    /// Decidable cores wanted per size.
    pub samples_per_size: usize,
    pub k: usize,
    /// Clause density of the parent graphs.
    pub alpha: f64,
    /// Parent sizes are drawn uniformly from `[N_c + 2, n_max_factor·N_c]`.
    pub n_max_factor: f64,
    /// Parent graphs drawn per size before giving up.
    pub max_attempts: u64,
    pub thresholds: Thresholds,
    pub lanczos: LanczosOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            core_sizes: vec![8, 10, 12, 14],
            samples_per_size: 100,
            k: 3,
            alpha: 0.95,
            n_max_factor: 2.0,
            max_attempts: 5_000_000,
            thresholds: Thresholds::default(),
            lanczos: LanczosOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreRecord {
    pub n: usize,
    pub n_c: usize,
    pub m_c: usize,
    /// Stream of the parent-graph draw under the experiment's master seed.
    pub seed: u64,
    pub minifan_count: usize,
    pub e0: f64,
    pub residual: f64,
    pub verdict: Verdict,
    pub iters: usize,
    pub wall_ms: u128,
}

impl CoreRecord {
    pub const CSV_HEADER: &'static str = "N,N_c,M_c,seed,minifan_count,e0,residual,verdict,iters,wall_ms";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{},{},{}",
            self.n,
            self.n_c,
            self.m_c,
            self.seed,
            self.minifan_count,
            self.e0,
            self.residual,
            self.verdict,
            self.iters,
            self.wall_ms
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n_c: usize,
    pub accepted: usize,
    pub decidable: usize,
    pub unsat: usize,
    pub decidable_minifan: usize,
    pub unsat_minifan: usize,
    pub parent_draws: usize,
    /// Decidable cores still missing when the attempt budget ran out.
    pub deficit: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

impl CellSummary {
    pub fn p_unsat(&self) -> f64 {
        ratio(self.unsat, self.decidable)
    }

    /// Binomial standard error of `p_unsat`.
    pub fn sigma(&self) -> f64 {
        let p = self.p_unsat();
        (p * (1.0 - p) / self.decidable as f64).sqrt()
    }

    pub fn p_unsat_minifan(&self) -> f64 {
        ratio(self.unsat_minifan, self.decidable_minifan)
    }

    pub fn p_unsat_no_minifan(&self) -> f64 {
        ratio(self.unsat - self.unsat_minifan, self.decidable - self.decidable_minifan)
    }

    pub fn minifan_fraction(&self) -> f64 {
        ratio(self.decidable_minifan, self.decidable)
    }

    pub const CSV_HEADER: &'static str =
        "N_c,accepted,decidable,p_unsat,sigma,p_unsat_minifan,p_unsat_no_minifan,minifan_fraction,deficit";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n_c,
            self.accepted,
            self.decidable,
            self.p_unsat(),
            self.sigma(),
            self.p_unsat_minifan(),
            self.p_unsat_no_minifan(),
            self.minifan_fraction(),
            self.deficit
        )
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub records: Vec<CoreRecord>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentTable {
    pub fn records_csv(&self) -> String {
        let mut s = String::from(CoreRecord::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(CellSummary::CSV_HEADER);
        s.push('\n');
        for c in &self.cells {
            s.push_str(&c.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn cell(&self, n_c: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n_c == n_c)
    }
}

impl ExperimentConfig {
    fn ensemble(&self, n_c: usize) -> CoreEnsemble {
        let n_min = n_c + 2;
        let n_max = ((self.n_max_factor * n_c as f64).round() as usize).max(n_min + 1);
        CoreEnsemble { k: self.k, alpha: self.alpha, n_min, n_max }
    }
}

fn evaluate(cfg: &ExperimentConfig, c: &SampledCore) -> Result<CoreRecord> {
    let start = Instant::now();
    let p = sample_projectors(&c.core, ProjectorMode::Generic, c.spec.named("projectors"));
    let rep = decide_with_projectors(&c.core, &p, &cfg.thresholds, &cfg.lanczos, c.spec.named("krylov"))?;
    Ok(CoreRecord {
        n: c.n,
        n_c: c.core.n_qubits(),
        m_c: c.core.n_clauses(),
        seed: c.spec.stream,
        minifan_count: find_minifans(&c.core).len(),
        e0: rep.e0,
        residual: rep.residual,
        verdict: rep.verdict,
        iters: rep.iterations,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// Rejection-samples barely overconstrained cores (`M_c = N_c + 1`) for each
/// requested size and decides each with generic projectors. Results do not
/// depend on the thread count.
pub fn unsat_core_experiment(cfg: &ExperimentConfig, spec: RngSpec) -> Result<ExperimentTable> {
    cfg.thresholds.validate()?;
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut table = ExperimentTable::default();
    for &n_c in &cfg.core_sizes {
        let cell_spec = spec.child(n_c as u64);
        let ens = cfg.ensemble(n_c);
        let mut attempt = 0u64;
        let mut summary = CellSummary {
            n_c,
            accepted: 0,
            decidable: 0,
            unsat: 0,
            decidable_minifan: 0,
            unsat_minifan: 0,
            parent_draws: 0,
            deficit: 0,
        };
        let mut exhausted = false;
        while summary.decidable < cfg.samples_per_size && !exhausted {
            let mut cands = Vec::with_capacity(batch);
            while cands.len() < batch {
                let found =
                    next_core(&ens, cell_spec, &mut attempt, cfg.max_attempts, |nc, mc| nc == n_c && mc == n_c + 1)?;
                match found {
                    Some(c) => cands.push(c),
                    None => {
                        exhausted = true;
                        break;
                    }
                }
            }
            let records: Vec<CoreRecord> = cands.par_iter().map(|c| evaluate(cfg, c)).collect::<Result<_>>()?;
            for r in records {
                if summary.decidable >= cfg.samples_per_size {
                    break;
                }
                summary.accepted += 1;
                if r.verdict != Verdict::Undecided {
                    summary.decidable += 1;
                    let unsat = r.verdict == Verdict::Unsat;
                    summary.unsat += unsat as usize;
                    if r.minifan_count > 0 {
                        summary.decidable_minifan += 1;
                        summary.unsat_minifan += unsat as usize;
                    }
                }
                table.records.push(r);
            }
        }
        summary.parent_draws = attempt as usize;
        summary.deficit = cfg.samples_per_size.saturating_sub(summary.decidable);
        table.cells.push(summary);
    }
    Ok(table)
}
