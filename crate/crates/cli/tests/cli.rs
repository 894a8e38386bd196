use std::path::Path;
use std::process::{Command, Output};

fn qsat(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsat")).arg("--out-dir").arg(out).args(args).output().expect("spawn qsat")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path, cmd: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, &format!("manifest_{cmd}.json"))).unwrap()
}

/// CSV with the named column blanked out.
fn without_column(csv: &str, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != col).map(|(_, f)| f).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn usage_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&qsat(d.path(), &["gen", "--n", "10"])), 1);
    assert_eq!(code(&qsat(d.path(), &["gen", "--n", "10", "--alpha", "0.5", "--m", "3"])), 1);
    assert_eq!(code(&qsat(d.path(), &["experiment", "--eps-sat", "1e-3", "--eps-unsat", "1e-6"])), 1);
    assert_eq!(code(&qsat(d.path(), &["report"])), 1);
    assert_eq!(code(&qsat(d.path(), &["--help"])), 0);
}

#[test]
fn runtime_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    // more clauses than 3-subsets of 5 qubits
    assert_eq!(code(&qsat(d.path(), &["gen", "--n", "5", "--m", "11"])), 2);
}

#[test]
fn bad_input_rows_exit_3() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&qsat(d.path(), &["gen", "--n", "12", "--alpha", "0.9"])), 0);
    let bad = d.path().join("broken.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let good = d.path().join("instance_0000.json");
    let list = format!("{},{}", good.display(), bad.display());
    let o = qsat(d.path(), &["dimers", "--input", &list]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(d.path(), "errors.csv").contains("broken"));
    assert_eq!(read(d.path(), "dimers.csv").lines().count(), 2);
    assert_eq!(manifest(d.path(), "dimers")["failed_rows"], 1);
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.conf");
    std::fs::write(&cfg, "# small grid\nn = 9\nalpha = 0.5\ncount = 3\nmode = product\n").unwrap();
    let o = qsat(d.path(), &["--config", cfg.to_str().unwrap(), "gen", "--count", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = &manifest(d.path(), "gen")["parameters"]["args"];
    assert_eq!(p["n"], 9);
    assert_eq!(p["count"], 2);
    assert_eq!(p["mode"], "Product");
    assert!(d.path().join("instance_0001.json").exists());
    assert!(!d.path().join("instance_0002.json").exists());

    std::fs::write(&cfg, "n = 9\nalpha = 0.5\nsampels = 3\n").unwrap();
    assert_eq!(code(&qsat(d.path(), &["--config", cfg.to_str().unwrap(), "gen"])), 1);
}

#[test]
fn generation_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&qsat(d.path(), &["--seed", "7", "gen", "--n", "14", "--alpha", "0.8", "--count", "3"])), 0);
    }
    for i in 0..3 {
        let name = format!("instance_{i:04}.json");
        assert_eq!(read(a.path(), &name), read(b.path(), &name));
    }
    assert_eq!(manifest(a.path(), "gen")["outputs"], manifest(b.path(), "gen")["outputs"]);
}

#[test]
fn experiment_smoke_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "3", "experiment", "--sizes", "6,8", "--samples", "3"];
    for d in [&a, &b] {
        let o = qsat(d.path(), &args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rec = read(a.path(), "unsat_records.csv");
    assert!(rec.starts_with("N,N_c,M_c,seed,minifan_count,e0,residual,verdict,iters,wall_ms"));
    for l in rec.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        let (nc, mc): (usize, usize) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        assert_eq!(mc, nc + 1);
        assert!(["SAT", "UNSAT", "UNDECIDED"].contains(&f[7]));
    }
    let sum = read(a.path(), "unsat_summary.csv");
    assert_eq!(sum.lines().count(), 3);
    assert_eq!(sum, read(b.path(), "unsat_summary.csv"));
    // wall-clock timings are the only nondeterministic column
    assert_eq!(without_column(&rec, "wall_ms"), without_column(&read(b.path(), "unsat_records.csv"), "wall_ms"));
}

#[test]
fn figure5_grid_schema() {
    let d = tempfile::tempdir().unwrap();
    let o = qsat(d.path(), &["cavity", "--figure5", "--lambda", "10,100,1000", "--pop-size", "200", "--sweeps", "40"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "figure5.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "beta,lambda,pop_size,sweeps,F_density,occupancy,entropy_density,converged");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 8 * 3);
    let betas: std::collections::BTreeSet<String> =
        rows.iter().map(|r| format!("{:.1}", r[0].parse::<f64>().unwrap())).collect();
    assert_eq!(betas.len(), 8);
    let ext = read(d.path(), "extrapolation.csv");
    assert_eq!(ext.lines().count(), 1 + 8 * 2);
}

#[test]
fn regular_cavity_extrapolates() {
    let d = tempfile::tempdir().unwrap();
    let o = qsat(d.path(), &["cavity", "--regular", "3", "--lambda", "100,1000,10000,100000"]);
    assert_eq!(code(&o), 0);
    let ext = read(d.path(), "extrapolation.csv");
    let covering = ext.lines().find(|l| l.contains(",covering,")).unwrap();
    let s_inf: f64 = covering.split(',').nth(2).unwrap().parse().unwrap();
    assert!((s_inf - 0.2877).abs() < 5e-3, "{s_inf}");
}

#[test]
fn ledger_prints_three_labelled_lines() {
    let d = tempfile::tempdir().unwrap();
    let o = qsat(d.path(), &["ledger", "--s-core", "0.23"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    let core = out.lines().find(|l| l.contains("S_core/N")).unwrap();
    assert!(core.contains("0.1453") && core.contains("[cavity]"), "{core}");
    assert!(out.lines().any(|l| l.contains("S_zero/N") && l.contains("0.1958")));
    assert!(out.lines().any(|l| l.contains("S_hair/N <=") && l.contains("0.2554")));

    let o = qsat(d.path(), &["ledger"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l.contains("S_core/N") && l.contains("[pauling]")));
    let json: serde_json::Value = serde_json::from_str(&read(d.path(), "ledger_0.917.json")).unwrap();
    assert_eq!(json["core_provenance"], "pauling");
}

#[test]
fn core_and_diag_pipeline() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&qsat(d.path(), &["gen", "--n", "10", "--alpha", "0.7", "--count", "2"])), 0);
    let inputs =
        format!("{},{}", d.path().join("instance_0000.json").display(), d.path().join("instance_0001.json").display());
    let o = qsat(d.path(), &["diag", "--input", &inputs, "--kernel"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(d.path(), "diag.csv").lines().count(), 3);
    let o = qsat(d.path(), &["core", "--alpha", "0.8,0.917", "--n", "2000", "--samples", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(d.path(), "core_stats.csv").lines().count(), 3);
}

#[test]
fn report_detects_changed_outputs() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&qsat(d.path(), &["gen", "--n", "8", "--alpha", "0.5"])), 0);
    assert_eq!(code(&qsat(d.path(), &["report"])), 0);
    assert!(read(d.path(), "report.md").contains("| gen |"));
    std::fs::write(d.path().join("instance_0000.json"), "{}").unwrap();
    assert_eq!(code(&qsat(d.path(), &["report"])), 3);
}
