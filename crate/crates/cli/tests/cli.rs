use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pointhartree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointhartree"))
        .args(args)
        .args(["--output.dir", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, prefix: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{prefix}_report.json"))).unwrap()).unwrap()
}

#[test]
fn evolve_without_interaction_writes_monitors() {
    let dir = tempfile::tempdir().unwrap();
    let out = pointhartree(dir.path(), &["evolve", "--physics.potential.kind", "zero", "--grid.n", "200", "--solver.dt", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("evolve_monitors.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# seed = "));
    assert_eq!(lines.next().unwrap(), "t,mass,energy,h_s_norm,l2_norm,lr_norm,tail_mass");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    let (m0, m1) = (rows[0][1], rows[100][1]);
    assert!((m1 - m0).abs() < 1e-10 * m0);
    assert!((rows[100][0] - 1.0).abs() < 1e-12);
    assert_eq!(report(dir.path(), "evolve")["status"], "ok");
    assert!(fs::read_to_string(dir.path().join("evolve_monitors.svg")).unwrap().contains("<polyline"));
}

#[test]
fn oversized_picard_window_is_a_physics_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = pointhartree(
        dir.path(),
        &["picard", "--solver.window", "10", "--grid.n", "200", "--solver.dt", "0.01", "--physics.datum.amplitude", "4"],
    );
    assert_eq!(out.status.code(), Some(2));
    let diag: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(diag["kind"], "physics");
    let ratios = diag["detail"]["ratios"].as_array().unwrap();
    assert!(ratios.iter().all(|r| r.as_f64().unwrap() > 1.0));
    assert_eq!(report(dir.path(), "picard")["status"], "failed");
}

#[test]
fn proof_window_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let out = pointhartree(dir.path(), &["picard", "--grid.n", "200", "--solver.dt", "0.01", "--physics.datum.amplitude", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(dir.path(), "picard");
    assert!(rep["report"]["ratios"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() <= 0.5));
    assert!(rep["report"]["strang_sup_distance"].as_f64().unwrap() < 1e-3);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["evolve", "--physics.s", "0.5"],
        vec!["evolve", "--solver.dt", "-0.1"],
        vec!["evolve", "--physics.alhpa", "1"],
        vec!["teleport"],
        vec!["evolve", "--physics.alpha", "-1"],
    ] {
        let out = pointhartree(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let diag: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
        assert_eq!(diag["kind"], "usage");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# demo\ngrid.n = 200\nphysics.alpha = 0.5\nphysics.potential.kind = zero\nsolver.dt = 0.01\nsolver.t_end = 0.1\n").unwrap();
    let out = pointhartree(dir.path(), &["evolve", "--config", cfg.to_str().unwrap(), "--solver.t_end", "0.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("evolve_monitors.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 21);

    fs::write(&cfg, "grid.n = 200\n\nsolver.tend = 1\n").unwrap();
    let out = pointhartree(dir.path(), &["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn reports_for_norms_hypotheses_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    let out = pointhartree(dir.path(), &["norms", "--physics.datum.kind", "green", "--physics.alpha", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mass = report(dir.path(), "norms")["report"]["mass"].as_f64().unwrap();
    assert!((mass - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-4);

    let out = pointhartree(dir.path(), &["check-hypotheses", "--physics.potential.kind", "inverse_power", "--physics.s", "0.75"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(dir.path(), "check-hypotheses");
    assert!(rep["report"]["report"]["gamma_local"].as_f64().unwrap() > 0.9);

    let out = pointhartree(
        dir.path(),
        &["dispersive", "--grid.r_max", "200", "--grid.n", "2000", "--physics.alpha", "1", "--physics.lebesgue", "2.5"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("dispersive_decay.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "t,lr_norm_2.5");
}

#[test]
fn stability_and_globalization_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = pointhartree(dir.path(), &["stability", "--grid.n", "200", "--solver.dt", "0.01", "--physics.datum.width", "1.4142135623730951"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = pointhartree(
        dir.path(),
        &["globalize", "--grid.r_max", "40", "--grid.n", "400", "--solver.dt", "0.01", "--solver.horizon", "5"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(dir.path(), "globalize");
    assert_eq!(rep["report"]["inequality_holds"], true);
    assert_eq!(rep["report"]["within_bound"], true);
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["stability", "--grid.n", "100", "--grid.r_max", "10", "--solver.dt", "0.02", "--solver.seed", "11"];
    assert_eq!(pointhartree(a.path(), &args).status.code(), Some(0));
    assert_eq!(pointhartree(b.path(), &args).status.code(), Some(0));
    for f in ["stability_stability.csv", "stability_report.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.path().join("stability_stability.csv")).unwrap();
    assert!(csv.starts_with("# seed = 11\n"));
}

#[test]
fn selftest_on_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = pointhartree(dir.path(), &["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("12/12 criteria passed"));
    let rep = report(dir.path(), "selftest");
    assert_eq!(rep["status"], "ok");
    assert_eq!(rep["report"]["results"].as_array().unwrap().len(), 12);
}
