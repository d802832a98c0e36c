use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_invariant-forge"));
    c.env_remove("INVARIANT_FORGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ring_flow_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ring_flow.json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn simulate_into(dir: &Path) -> PathBuf {
    let o = run(&[
        "simulate",
        "--config",
        ring_flow_config().to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("dataset.csv")
}

#[test]
fn simulate_writes_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate_into(tmp.path());
    let text = fs::read_to_string(&data).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,z1,z2,z3,z4,z5"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
    assert!(rows[0].starts_with("1,"));

    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,x3,x4,x5\n"));
    assert_eq!(traj.lines().count(), 2002);

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seeds"][0], 1);
    assert_eq!(manifest["parameters"]["steps"], 2000);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_into(a.path());
    simulate_into(b.path());
    for f in ["trajectory.csv", "dataset.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn manifest_parameters_reproduce_outputs() {
    let a = tempfile::tempdir().unwrap();
    simulate_into(a.path());
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let cfg = write(a.path(), "again.json", &manifest["parameters"].to_string());
    let b = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(a.path().join("dataset.csv")).unwrap(),
        fs::read(b.path().join("dataset.csv")).unwrap()
    );
}

#[test]
fn simulate_rejects_zero_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"rates":[1,1],"x0":[0.5,0.5],"dt":0.1,"steps":0,"sigma2":0}"#,
    );
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));
}

#[test]
fn simulate_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"rates":[1,1],"x0":[0.5,0.5],"dt":0.1,"steps":3,"sigma2":0,"sigma":1}"#,
    );
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"rates":[1,2],"x0":[0.5,0.5],"dt":0.1,"steps":5,"sigma2":0.01,"seed":7}"#,
    );
    let seed_of = |dir: &str, extra: &[&str], env: Option<&str>| -> u64 {
        let out = tmp.path().join(dir);
        let mut c = bin();
        c.args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        c.args(extra);
        if let Some(e) = env {
            c.env("INVARIANT_FORGE_SEED", e);
        }
        assert!(c.output().unwrap().status.success());
        let m: Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m["seeds"][0].as_u64().unwrap()
    };
    assert_eq!(seed_of("a", &["--seed", "3"], Some("11")), 3);
    assert_eq!(seed_of("b", &[], Some("11")), 7);
    let no_seed = write(
        tmp.path(),
        "d.json",
        r#"{"rates":[1,2],"x0":[0.5,0.5],"dt":0.1,"steps":5,"sigma2":0.01}"#,
    );
    let out = tmp.path().join("c");
    let o = bin()
        .args([
            "simulate",
            "--config",
            no_seed.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .env("INVARIANT_FORGE_SEED", "11")
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seeds"][0], 11);
}

#[test]
fn fit_round_trip_with_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate_into(tmp.path());
    let out = tmp.path().join("fit");
    let o = run(&[
        "fit",
        data.to_str().unwrap(),
        "--sigma-bar2",
        "2e-5",
        "--theta0",
        "-0.12,0.20,0.41,0.76,0.45",
        "--reference",
        "1,1,1,1,1",
        "--max-iters",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(trace["iterations"], 2);
    assert_eq!(trace["thetas"].as_array().unwrap().len(), 3);
    assert_eq!(trace["ratios"].as_array().unwrap().len(), 2);
    assert_eq!(trace["status"], "max_iters");
    let rad = trace["angle_to_reference"]["radians"].as_f64().unwrap();
    let deg = trace["angle_to_reference"]["degrees"].as_f64().unwrap();
    assert!((rad.to_degrees() - deg).abs() < 1e-12);
    assert!(deg < 10.0);
    let written: Value =
        serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(written, trace);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn fit_random_start_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate_into(tmp.path());
    let go = |seed: &str| {
        let o = run(&[
            "fit",
            data.to_str().unwrap(),
            "--sigma-bar2",
            "2e-5",
            "--random-theta0",
            "--seed",
            seed,
            "--json",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["thetas"][0].clone()
    };
    assert_eq!(go("4"), go("4"));
    assert_ne!(go("4"), go("5"));
}

#[test]
fn fit_identical_rows_is_singular() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("k,z1,z2,z3\n");
    for k in 1..=20 {
        text.push_str(&format!("{k},0.1,0.2,0.3\n"));
    }
    let data = write(tmp.path(), "d.csv", &text);
    let o = run(&[
        "fit",
        data.to_str().unwrap(),
        "--sigma-bar2",
        "0.04",
        "--theta0",
        "1,0,0",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn fit_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write(tmp.path(), "d.csv", "k,z1,z2\n1,0.1,0.2\n2,0.3,0.1\n");
    let o = run(&[
        "fit",
        data.to_str().unwrap(),
        "--sigma-bar2",
        "0.04",
        "--theta0",
        "1,0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["fit", data.to_str().unwrap(), "--theta0", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(tmp.path(), "e.csv", "k,z1,z2\n1,0.1,abc\n");
    let o = run(&["fit", bad.to_str().unwrap(), "--sigma-bar2", "0.04"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_degenerate_exit_code() {
    // Unit covariance with sigma_bar2 = 1 leaves every eigenvalue equal.
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("k,z1,z2\n");
    for (k, (a, b)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .enumerate()
    {
        text.push_str(&format!("{},{a},{b}\n", k + 1));
    }
    let data = write(tmp.path(), "d.csv", &text);
    let o = run(&[
        "fit",
        data.to_str().unwrap(),
        "--sigma-bar2",
        "1.3333333333333333",
        "--theta0",
        "1,0",
    ]);
    assert_eq!(o.status.code(), Some(5), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn analyze_reference_point() {
    let o = run(&[
        "analyze",
        "--sigma2",
        "0.01",
        "--sigma-bar2",
        "0.04",
        "--n",
        "3",
        "--epsilon",
        "0.1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["conditions"]["r"].as_f64().unwrap() + 0.03125).abs() < 1e-15);
    assert!(r["perturbed"]["eigenvalue_residual"].as_f64().unwrap() < 1e-10);
    assert!(r["perturbed"]["eigenvector_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn analyze_boundary_and_experiment_regime() {
    let o = run(&[
        "analyze",
        "--sigma2",
        "0.01",
        "--sigma-bar2",
        "1",
        "--n",
        "3",
    ]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["conditions"]["equilibrium"], false);
    assert_eq!(r["boundary"], true);

    let o = run(&[
        "analyze",
        "--sigma2",
        "1e-5",
        "--sigma-bar2",
        "2e-5",
        "--n",
        "5",
    ]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["cond_a", "cond_b", "equilibrium"] {
        assert_eq!(r["conditions"][key], true, "{key}");
    }
}

#[test]
fn analyze_validation() {
    let o = run(&[
        "analyze",
        "--sigma2",
        "-1",
        "--sigma-bar2",
        "0.04",
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "analyze",
        "--sigma2",
        "0.01",
        "--sigma-bar2",
        "0.04",
        "--n",
        "3",
        "--epsilon",
        "0.1",
        "--k",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_grid_order_and_regions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "g.json",
        r#"{"n":3,"sigma2":[0.01,0.09],"sigma_bar2_ratio":[0.5,2.0,3.0],"epsilon":[0.001,-0.001]}"#,
    );
    let out = tmp.path().join("s");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("sigma2,sigma_bar2,epsilon,converged,iters,final_angle")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 3 * 2);
    let first: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(first.windows(2).all(|w| w[0] <= w[1]));
    for r in &rows {
        let (s2, sb2): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let cond_a = s2 < sb2 && sb2 < 1.0;
        let cond_b = 2.0 * sb2 < 1.0 + s2;
        if cond_a && cond_b {
            assert_eq!(r[3], "true", "{r:?}");
        }
    }
    // Same grid twice gives the same bytes.
    let again = tmp.path().join("t");
    run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(text, fs::read_to_string(again.join("results.csv")).unwrap());
}

#[test]
fn sweep_below_noise_variance_is_not_one_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "g.json",
        r#"{"n":3,"sigma2":[0.04],"sigma_bar2":[0.02],"epsilon":[1.0e6]}"#,
    );
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cells: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(cells[0]["iters"].as_u64().unwrap() > 1);
}

#[test]
fn sweep_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.json", r#"{"sigma2":[0.01],"epsilon":[0.1]}"#);
    assert_eq!(
        run(&["sweep", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let cfg = write(
        tmp.path(),
        "h.json",
        r#"{"sigma2":[0.01],"sigma_bar2":[0.04],"epsilon":[0.1],"grid":1}"#,
    );
    assert_eq!(
        run(&["sweep", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_analytic_criteria_pass() {
    let o = run(&[
        "verify",
        "--criterion",
        "2",
        "--criterion",
        "3",
        "--criterion",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("[PASS]").count(), 3);
}

#[test]
fn verify_tamper_names_criterion() {
    let o = run(&["verify", "--criterion", "3", "--tamper", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] criterion 3"));
    assert!(stderr(&o).contains("3 (one-step convergence from H)"));
}

#[test]
fn verify_json_report() {
    let o = run(&["verify", "--criterion", "8", "--json"]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["criteria"][0]["id"], 8);
    assert_eq!(run(&["verify", "--criterion", "42"]).status.code(), Some(2));
}
