use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use qsat_core::cavity::{
    extrapolate_lambda, population_dynamics, regular_fixed_point, single_instance_bp, BpOptions, CavityReport,
    PopulationOptions,
};
use qsat_core::degree::DegreeLaw;
use qsat_core::dimer::{enumerate_coverings, finite_size_fit, EnumerationLimits};
use qsat_core::entropy::{ledger, pauling_estimate, Provenance};
use qsat_core::hypergraph::{clauses_for_density, find_minifans, sample_er_graph, sample_projectors};
use qsat_core::instance::Instance;
use qsat_core::kcore::{core_stats, empirical_vs_analytic, next_core, strip_core, CoreEnsemble, CoreStats};
use qsat_core::spectrum::{
    decide_with_projectors, kernel_dimension, unsat_core_experiment, ExperimentConfig, HamiltonianHandle,
    KernelOptions, LanczosOptions, Thresholds,
};
use qsat_core::{InteractionGraph, ProjectorMode, ProjectorSet, RngSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::{sha256_hex, Run};
use crate::{
    CavityArgs, Cli, Command, CoreArgs, CoreSampling, DiagArgs, DimersArgs, ExperimentArgs, GenArgs, LedgerArgs,
    ModeArg, ProvenanceArg,
};

/// Invalid parameter combination; maps to the usage exit code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn params<T: Serialize>(common: &crate::Common, args: &T) -> serde_json::Value {
    serde_json::json!({ "common": common, "args": args })
}

/// Runs the selected command; returns the number of failed rows.
pub fn run(cli: &Cli) -> Result<usize> {
    let c = &cli.common;
    let (name, p) = match &cli.command {
        Command::Gen(a) => ("gen", params(c, a)),
        Command::Core(a) => ("core", params(c, a)),
        Command::Dimers(a) => ("dimers", params(c, a)),
        Command::Cavity(a) => ("cavity", params(c, a)),
        Command::Diag(a) => ("diag", params(c, a)),
        Command::Experiment(a) => ("experiment", params(c, a)),
        Command::Ledger(a) => ("ledger", params(c, a)),
        Command::Report(_) => return report(&c.out_dir),
    };
    let mut run = Run::new(name, p, c.seed, &c.out_dir)?;
    let master = RngSpec::new(c.seed, 0);
    match &cli.command {
        Command::Gen(a) => gen(&mut run, a, c.seed)?,
        Command::Core(a) => core(&mut run, a, master)?,
        Command::Dimers(a) => dimers(&mut run, a, master)?,
        Command::Cavity(a) => cavity(&mut run, a, master)?,
        Command::Diag(a) => diag(&mut run, a, c.seed)?,
        Command::Experiment(a) => experiment(&mut run, a, master)?,
        Command::Ledger(a) => ledger_cmd(&mut run, a)?,
        Command::Report(_) => unreachable!(),
    }
    run.finish()
}

/// Failed rows go to `errors.csv`; the batch carries on.
fn record_errors(run: &mut Run, errors: &[(String, String)]) -> Result<()> {
    if errors.is_empty() {
        return Ok(());
    }
    let mut s = String::from("row,error\n");
    for (row, e) in errors {
        writeln!(s, "{row},\"{}\"", e.replace('"', "'"))?;
    }
    run.output("errors.csv", s.as_bytes())?;
    run.manifest.failed_rows += errors.len();
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn gen(run: &mut Run, a: &GenArgs, seed: u64) -> Result<()> {
    let m = match (a.alpha, a.m) {
        (Some(alpha), None) if alpha >= 0.0 => clauses_for_density(a.n, alpha),
        (None, Some(m)) => m,
        (Some(alpha), None) => return Err(usage(format!("--alpha must be non-negative, got {alpha}"))),
        _ => return Err(usage("give exactly one of --alpha and --m")),
    };
    let width = a.count.saturating_sub(1).max(1).to_string().len().max(4);
    let instances: Vec<(String, String)> = run.stage("sample", || {
        (0..a.count)
            .into_par_iter()
            .map(|i| {
                let spec = RngSpec::new(seed, i as u64);
                let g = sample_er_graph(a.n, m, a.k, spec)?;
                let p = match a.mode {
                    ModeArg::Generic => Some(sample_projectors(&g, ProjectorMode::Generic, spec.named("projectors"))),
                    ModeArg::Product => Some(sample_projectors(&g, ProjectorMode::Product, spec.named("projectors"))),
                    ModeArg::None => None,
                };
                let json = Instance::new(g, p, spec)?.to_json()?;
                Ok((format!("instance_{i:0width$}.json"), json))
            })
            .collect::<qsat_core::Result<_>>()
    })?;
    for (name, json) in instances {
        run.output(&name, json.as_bytes())?;
    }
    Ok(())
}

fn stats_row(alpha: f64, k: usize) -> (Option<CoreStats<f64>>, String) {
    match core_stats(alpha, k) {
        Some(s) => {
            let row = s.csv_row();
            (Some(s), row)
        }
        None => (None, format!("{alpha},NaN,0,0,NaN")),
    }
}

fn core(run: &mut Run, a: &CoreArgs, master: RngSpec) -> Result<()> {
    let mut csv = format!("{}\n", CoreStats::<f64>::CSV_HEADER);
    for &alpha in &a.alpha {
        csv.push_str(&stats_row(alpha, a.k).1);
        csv.push('\n');
    }
    run.output("core_stats.csv", csv.as_bytes())?;

    if let Some(n) = a.n {
        let mut rows = String::from("alpha,n,sample,nc_frac,mc_frac,core_degree_sum\n");
        let mut summary = String::from("alpha,n,samples,mean_nc_frac,mean_mc_frac,analytic_nc_frac,analytic_mc_frac\n");
        for (i, &alpha) in a.alpha.iter().enumerate() {
            let cmp = run.stage(&format!("strip alpha={alpha}"), || {
                empirical_vs_analytic(alpha, a.k, n, a.samples, master.named("core").child(i as u64))
            })?;
            for (j, s) in cmp.samples.iter().enumerate() {
                writeln!(rows, "{alpha},{n},{j},{},{},{}", s.nc_frac, s.mc_frac, s.core_degree_sum)?;
            }
            let (anc, amc) = cmp.analytic.as_ref().map_or((0.0, 0.0), |s| (s.nc_frac, s.mc_frac));
            writeln!(summary, "{alpha},{n},{},{},{},{anc},{amc}", a.samples, cmp.mean_nc_frac, cmp.mean_mc_frac)?;
        }
        run.output("core_samples.csv", rows.as_bytes())?;
        run.output("core_empirical.csv", summary.as_bytes())?;
    }

    if !a.input.is_empty() {
        let mut csv = String::from("instance,N,M,N_c,M_c,minifan_count\n");
        let mut errors = Vec::new();
        for path in &a.input {
            let id = stem(path);
            let res = run.input(path).and_then(|bytes| {
                let inst = Instance::from_json(std::str::from_utf8(&bytes)?)?;
                let dec = strip_core(&inst.graph);
                let fans = find_minifans(&dec.core_graph(&inst.graph)).len();
                let g = &inst.graph;
                let row = format!(
                    "{id},{},{},{},{},{fans}",
                    g.n_qubits(),
                    g.n_clauses(),
                    dec.n_core_qubits(),
                    dec.n_core_clauses()
                );
                Ok((row, inst.with_core(&dec).to_json()?))
            });
            match res {
                Ok((row, json)) => {
                    csv.push_str(&row);
                    csv.push('\n');
                    run.output(&format!("{id}.core.json"), json.as_bytes())?;
                }
                Err(e) => errors.push((id, format!("{e:#}"))),
            }
        }
        run.output("cores.csv", csv.as_bytes())?;
        record_errors(run, &errors)?;
    }
    Ok(())
}

/// Sequentially rejection-samples cores so the set does not depend on the
/// thread count.
fn sample_cores(s: &CoreSampling, k: usize, spec: RngSpec) -> Result<Vec<(String, InteractionGraph)>> {
    if s.nc_min > s.nc_max {
        return Err(usage(format!("--nc-min {} exceeds --nc-max {}", s.nc_min, s.nc_max)));
    }
    let ens = CoreEnsemble { k, alpha: s.parent_alpha, n_min: s.n_min, n_max: s.n_max };
    let mut attempt = 0u64;
    let mut out = Vec::with_capacity(s.cores);
    while out.len() < s.cores {
        let accept = |nc: usize, mc: usize| (s.nc_min..=s.nc_max).contains(&nc) && mc as i64 == nc as i64 + s.excess;
        match next_core(&ens, spec, &mut attempt, s.max_attempts, accept)? {
            Some(c) => out.push((format!("core_{}", c.spec.stream), c.core)),
            None => {
                eprintln!("warning: attempt budget exhausted after {} of {} cores", out.len(), s.cores);
                break;
            }
        }
    }
    Ok(out)
}

/// Cores from instance files, or sampled when none are given.
fn load_cores(
    run: &mut Run,
    inputs: &[std::path::PathBuf],
    s: &CoreSampling,
    k: usize,
    spec: RngSpec,
    errors: &mut Vec<(String, String)>,
) -> Result<Vec<(String, InteractionGraph)>> {
    if inputs.is_empty() {
        return run.stage("sample cores", || sample_cores(s, k, spec));
    }
    let mut out = Vec::new();
    for path in inputs {
        let id = stem(path);
        let res = run.input(path).and_then(|b| Ok(Instance::from_json(std::str::from_utf8(&b)?)?));
        match res {
            Ok(inst) => {
                let dec = strip_core(&inst.graph);
                out.push((id, dec.core_graph(&inst.graph)));
            }
            Err(e) => errors.push((id, format!("{e:#}"))),
        }
    }
    Ok(out)
}

fn dimers(run: &mut Run, a: &DimersArgs, master: RngSpec) -> Result<()> {
    let mut errors = Vec::new();
    let cores = load_cores(run, &a.input, &a.sampling, a.k, master.named("dimers"), &mut errors)?;
    let limits = EnumerationLimits { list_cap: a.list, count_limit: None };
    let counts: Vec<_> =
        run.stage("enumerate", || cores.par_iter().map(|(_, g)| enumerate_coverings(g, &limits)).collect());
    let mut csv = String::from("instance,N_c,M_c,count,log_count\n");
    for ((id, g), c) in cores.iter().zip(&counts) {
        writeln!(csv, "{id},{},{},{},{}", g.n_qubits(), g.n_clauses(), c.count, c.log_count())?;
        if a.list > 0 {
            run.output(&format!("coverings/{id}.json"), serde_json::to_string(&c.coverings)?.as_bytes())?;
        }
    }
    run.output("dimers.csv", csv.as_bytes())?;
    record_errors(run, &errors)
}

fn extrapolation_rows(out: &mut String, beta: f64, rows: &[CavityReport<f64>]) -> Result<()> {
    let forms: [(&str, fn(&CavityReport<f64>) -> f64); 2] =
        [("gibbs", |r| r.entropy_density), ("covering", |r| r.covering_entropy_density)];
    for (form, f) in forms {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, f(r))).collect();
        match extrapolate_lambda(&pts) {
            Ok(x) => writeln!(out, "{beta},{form},{},{},{},{},{}", x.s_inf, x.a, x.b, x.residual, x.condition)?,
            Err(e) => eprintln!("warning: no extrapolation at beta={beta} ({form}): {e}"),
        }
    }
    Ok(())
}

fn cavity(run: &mut Run, a: &CavityArgs, master: RngSpec) -> Result<()> {
    if a.lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(usage("fugacities must be positive and finite"));
    }
    if a.figure6 {
        return figure6(run, a, master);
    }
    let mut errors = Vec::new();
    let mut csv = format!("{}\n", CavityReport::<f64>::CSV_HEADER);
    let mut extra = String::from("beta,form,S_inf,a,b,residual,condition\n");

    if let Some(d) = a.regular {
        let beta = d as f64 / a.k as f64;
        let mut rows = Vec::new();
        for &l in &a.lambda {
            let r = regular_fixed_point(a.k, d, l)?.report;
            csv.push_str(&r.csv_row(0));
            csv.push('\n');
            rows.push(r);
        }
        extrapolation_rows(&mut extra, beta, &rows)?;
    } else {
        let betas: Vec<f64> = if a.figure5 { (7..=14).map(|i| i as f64 / 10.0).collect() } else { a.beta.clone() };
        let grid: Vec<(f64, f64)> = betas.iter().flat_map(|&b| a.lambda.iter().map(move |&l| (b, l))).collect();
        let opts = |i: usize| PopulationOptions {
            pop_size: a.pop_size,
            sweeps: a.sweeps,
            burn_in: a.burn_in,
            rng: master.named("cavity").child(i as u64),
            ..Default::default()
        };
        let reports: Vec<Result<CavityReport<f64>>> = run.stage("population dynamics", || {
            grid.par_iter()
                .enumerate()
                .map(|(i, &(beta, l))| {
                    let law = DegreeLaw::truncated_poisson_with_mean(a.k as f64 * beta, 2)?;
                    Ok(population_dynamics(&law, a.k, l, &opts(i))?)
                })
                .collect()
        });
        for &beta in &betas {
            let mut ok = Vec::new();
            for (&(b, l), r) in grid.iter().zip(&reports) {
                if b != beta {
                    continue;
                }
                match r {
                    Ok(r) => {
                        csv.push_str(&r.csv_row(a.pop_size));
                        csv.push('\n');
                        ok.push(r.clone());
                    }
                    Err(e) => errors.push((format!("beta={b} lambda={l}"), format!("{e:#}"))),
                }
            }
            extrapolation_rows(&mut extra, beta, &ok)?;
        }
    }
    run.output(if a.figure5 { "figure5.csv" } else { "cavity.csv" }, csv.as_bytes())?;
    run.output("extrapolation.csv", extra.as_bytes())?;
    record_errors(run, &errors)
}

fn figure6(run: &mut Run, a: &CavityArgs, master: RngSpec) -> Result<()> {
    let mut errors = Vec::new();
    let cores = run.stage("sample cores", || sample_cores(&a.sampling, a.k, master.named("figure6")))?;
    let rows: Vec<_> = run.stage("enumerate + bp", || {
        cores
            .par_iter()
            .enumerate()
            .map(|(i, (_, g))| {
                let count = enumerate_coverings(g, &EnumerationLimits::default());
                let opts = BpOptions { rng: master.named("bp").child(i as u64), ..BpOptions::new(a.bp_lambda) };
                (count, single_instance_bp(g, &opts))
            })
            .collect()
    });
    // S_bp is the Gibbs entropy at the BP fugacity; S_bp_covering drops the
    // uncovered-clause correction and converges more slowly in λ
    let mut csv = String::from("instance,N_c,M_c,count,log_count,S_exact,S_bp,S_bp_covering,bp_converged,bp_sweeps\n");
    let mut fit_points = Vec::new();
    for ((id, g), (count, bp)) in cores.iter().zip(rows) {
        let n = g.n_qubits();
        let s_exact = count.log_count() / n as f64;
        let (s_bp, s_cov, conv, sweeps) = match bp {
            Ok(b) => (b.report.entropy_density, b.report.covering_entropy_density, b.report.converged, b.report.sweeps),
            Err(e) => {
                errors.push((id.clone(), format!("{e:#}")));
                (f64::NAN, f64::NAN, false, 0)
            }
        };
        writeln!(
            csv,
            "{id},{n},{},{},{},{s_exact},{s_bp},{s_cov},{conv},{sweeps}",
            g.n_clauses(),
            count.count,
            count.log_count()
        )?;
        // uncoverable cores have no entropy density to fit
        if s_exact.is_finite() {
            fit_points.push((n, s_exact));
        }
    }
    run.output("figure6.csv", csv.as_bytes())?;
    let mut fit = String::from("points,S_inf,slope\n");
    match finite_size_fit(&fit_points) {
        Ok(f) => writeln!(fit, "{},{},{}", f.points, f.s_inf, f.slope)?,
        Err(e) => eprintln!("warning: no size fit: {e}"),
    }
    run.output("figure6_fit.csv", fit.as_bytes())?;
    record_errors(run, &errors)
}

fn diag(run: &mut Run, a: &DiagArgs, seed: u64) -> Result<()> {
    let th = Thresholds { eps_sat: a.eps_sat, eps_unsat: a.eps_unsat };
    th.validate().map_err(|e| usage(e.to_string()))?;
    let lanczos = LanczosOptions { tol: a.tol, max_iter: a.max_iter, ..Default::default() };
    let mut csv = String::from("instance,N,M,e0,residual,verdict,iters,kernel_dim,kernel_ambiguous\n");
    let mut errors = Vec::new();
    for (i, path) in a.input.iter().enumerate() {
        let id = stem(path);
        let spec = RngSpec::new(seed, i as u64);
        let res = run.input(path).and_then(|bytes| {
            let inst = Instance::from_json(std::str::from_utf8(&bytes)?)?;
            let (g, p) = if a.core {
                let dec = strip_core(&inst.graph);
                let g = dec.core_graph(&inst.graph);
                let p = match &inst.projectors {
                    Some(p) => ProjectorSet::generic(dec.core_clauses.iter().map(|&c| p.vector(c).to_vec()).collect())?,
                    None => sample_projectors(&g, ProjectorMode::Generic, spec.named("projectors")),
                };
                (g, p)
            } else {
                let p = inst.projectors.clone().unwrap_or_else(|| {
                    sample_projectors(&inst.graph, ProjectorMode::Generic, spec.named("projectors"))
                });
                (inst.graph, p)
            };
            let rep = decide_with_projectors(&g, &p, &th, &lanczos, spec.named("krylov"))?;
            let kernel = if a.kernel {
                let h = HamiltonianHandle::new(&g, &p)?;
                let opts = KernelOptions { rng: spec.named("kernel"), lanczos: lanczos.clone(), ..Default::default() };
                Some(kernel_dimension(&h, &opts)?)
            } else {
                None
            };
            let (kd, amb) =
                kernel.map_or((String::new(), String::new()), |k| (k.count.to_string(), k.ambiguous.to_string()));
            Ok(format!(
                "{id},{},{},{:e},{:e},{},{},{kd},{amb}",
                g.n_qubits(),
                g.n_clauses(),
                rep.e0,
                rep.residual,
                rep.verdict,
                rep.iterations
            ))
        });
        match res {
            Ok(row) => {
                csv.push_str(&row);
                csv.push('\n');
            }
            Err(e) => errors.push((id, format!("{e:#}"))),
        }
    }
    run.output("diag.csv", csv.as_bytes())?;
    record_errors(run, &errors)
}

fn experiment(run: &mut Run, a: &ExperimentArgs, master: RngSpec) -> Result<()> {
    let d = Thresholds::experiment();
    let thresholds =
        Thresholds { eps_sat: a.eps_sat.unwrap_or(d.eps_sat), eps_unsat: a.eps_unsat.unwrap_or(d.eps_unsat) };
    thresholds.validate().map_err(|e| usage(e.to_string()))?;
    if a.sizes.iter().any(|&n| n < 4 || n + 2 > qsat_core::spectrum::MAX_QUBITS) {
        return Err(usage(format!("core sizes must lie in [4, {}]", qsat_core::spectrum::MAX_QUBITS - 2)));
    }
    let cfg = ExperimentConfig {
        core_sizes: a.sizes.clone(),
        samples_per_size: a.samples,
        k: a.k,
        alpha: a.alpha,
        n_max_factor: a.n_max_factor,
        max_attempts: a.max_attempts,
        thresholds,
        ..Default::default()
    };
    let table = run.stage("experiment", || unsat_core_experiment(&cfg, master.named("experiment")))?;
    run.output("unsat_records.csv", table.records_csv().as_bytes())?;
    run.output("unsat_summary.csv", table.summary_csv().as_bytes())?;
    for c in &table.cells {
        if c.deficit > 0 {
            eprintln!("warning: N_c={} is short of {} decidable cores", c.n_c, c.deficit);
        }
    }
    Ok(())
}

fn ledger_cmd(run: &mut Run, a: &LedgerArgs) -> Result<()> {
    let mut sweep = String::from(
        "alpha,k,nc_frac,nh_frac,gamma,s_core_per_n,s_zero_per_n,s_hair_upper_per_n,s_total_upper_per_n,unit\n",
    );
    let unit = if a.bits { "bits" } else { "nats" };
    for &alpha in &a.alpha {
        let stats = core_stats(alpha, a.k).ok_or_else(|| usage(format!("no core at alpha = {alpha}")))?;
        let (s, prov) = match a.s_core {
            Some(s) => (
                s,
                match a.provenance {
                    ProvenanceArg::Pauling => Provenance::Pauling,
                    ProvenanceArg::Cavity => Provenance::Cavity,
                    ProvenanceArg::Exact => Provenance::Exact,
                },
            ),
            None => (pauling_estimate(stats.beta, a.k, &stats.degree_law)?, Provenance::Pauling),
        };
        let mut l = ledger(&stats, s, prov)?;
        if a.bits {
            l = l.in_bits();
        }
        let p = &l.parameters;
        writeln!(
            sweep,
            "{alpha},{},{},{},{},{},{},{},{},{unit}",
            a.k,
            p.nc_frac,
            p.nh_frac,
            p.gamma,
            l.s_core_per_n,
            l.s_zero_per_n,
            l.s_hair_upper_per_n,
            l.s_total_upper_per_n
        )?;
        let published = l.entry("s_hair_upper_per_n_published_fraction").map_or(f64::NAN, |e| e.value);
        println!("alpha = {alpha}, k = {}", a.k);
        println!("  S_core/N  = {:.4} {unit} [{}]", l.s_core_per_n, format!("{:?}", l.core_provenance).to_lowercase());
        println!("  S_zero/N  = {:.4} {unit} [analytic, gamma = {:.4}]", l.s_zero_per_n, p.gamma);
        println!(
            "  S_hair/N <= {:.4} {unit} [analytic, N_h/N = {:.4}]; {:.4} with the rounded N_h/N = 0.4 [published]",
            l.s_hair_upper_per_n, p.nh_frac, published
        );
        run.output(&format!("ledger_{alpha}.json"), serde_json::to_string_pretty(&l)?.as_bytes())?;
    }
    run.output("ledger_sweep.csv", sweep.as_bytes())?;
    Ok(())
}

/// Lists every manifest in the output directory and re-checks output digests.
fn report(out_dir: &Path) -> Result<usize> {
    let mut names: Vec<_> = std::fs::read_dir(out_dir)
        .with_context(|| format!("reading {}", out_dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("manifest_") && n.ends_with(".json"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(usage(format!("no manifests in {}", out_dir.display())));
    }
    let mut md =
        String::from("| command | seed | outputs | failed rows | wall (s) | digests |\n|---|---|---|---|---|---|\n");
    let mut changed = 0;
    for name in &names {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join(name))?)?;
        let outputs = v["outputs"].as_array().cloned().unwrap_or_default();
        let mut ok = true;
        for o in &outputs {
            let path = out_dir.join(o["path"].as_str().unwrap_or_default());
            let same = std::fs::read(&path).map(|b| sha256_hex(&b) == o["sha256"].as_str().unwrap_or_default());
            if !same.unwrap_or(false) {
                ok = false;
                eprintln!("digest mismatch: {}", path.display());
            }
        }
        changed += !ok as usize;
        writeln!(
            md,
            "| {} | {} | {} | {} | {:.2} | {} |",
            v["command"].as_str().unwrap_or("?"),
            v["seed"],
            outputs.len(),
            v["failed_rows"],
            v["wall_ms"].as_f64().unwrap_or(0.0) / 1e3,
            if ok { "ok" } else { "changed" }
        )?;
    }
    print!("{md}");
    std::fs::write(out_dir.join("report.md"), &md)?;
    Ok(changed)
}
