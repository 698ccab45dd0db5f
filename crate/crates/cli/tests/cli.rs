use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polysphere"));
    c.env_remove("POLYSPHERE_SEED");
    c
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_then_solve_square_system() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    run_ok(bin().args(["gen", "--dim", "3", "--degree", "2,3", "--seed", "4", "--out"]).arg(&sys));
    let v = json(&run_ok(bin().arg("solve").arg("--in").arg(&sys)));
    assert_eq!(v["algorithm"], "multi-scale-search");
    assert_eq!(v["descriptor"]["kind"], "given");
    match &v["outcome"] {
        Value::String(s) => assert_eq!(s, "false"),
        o => {
            assert_eq!(o["point"].as_array().unwrap().len(), 3);
            assert_eq!(v["certified"], true);
        }
    }
}

#[test]
fn seed_from_environment_matches_flag() {
    let a = run_ok(bin().args(["solve", "--dim", "3", "--degree", "3", "--seed", "9", "--no-timings"]));
    let b = run_ok(bin().args(["solve", "--dim", "3", "--degree", "3", "--no-timings"]).env("POLYSPHERE_SEED", "9"));
    assert_eq!(a.stdout, b.stdout);
    let c = run_ok(bin().args(["solve", "--dim", "3", "--degree", "3", "--seed", "9", "--no-timings"]));
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn parallel_search_returns_the_sequential_point() {
    let args = ["solve", "mss", "--dim", "3", "--degree", "3", "--seed", "21", "--no-timings"];
    let seq = json(&run_ok(bin().args(args)));
    let par = json(&run_ok(bin().args(args).args(["--threads", "2"])));
    assert_eq!(seq["outcome"], par["outcome"]);
}

#[test]
fn hessian_descent_run_reports_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    run_ok(bin().args(["solve", "hd", "--dim", "12", "--degree", "3", "--seed", "1", "--out"]).arg(&out));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["regime"], "L1");
    assert_eq!(v["algorithm"], "hessian-descent");
    assert!(!v["hd"]["energy_trace"].as_array().unwrap().is_empty());
    assert!(v["timings"]["total_ms"].as_f64().is_some());
}

#[test]
fn certify_accepts_an_exact_root_and_rejects_a_far_point() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("xy.json");
    // F = x1·x2 − x3², which vanishes at e1.
    std::fs::write(&sys, r#"{"schema_version":1,"d":3,"degrees":[2],"polys":[[[[1,1,0],1.0],[[0,0,2],-1.0]]]}"#)
        .unwrap();
    let yes = json(&run_ok(bin().arg("certify").arg("--in").arg(&sys).args(["--point", "1,0,0"])));
    assert_eq!(yes["report"]["certified"], true);
    let no = json(&run_ok(bin().arg("certify").arg("--in").arg(&sys).args(["--point", "0,0,-1"])));
    assert_eq!(no["report"]["certified"], false);
}

#[test]
fn probes_and_stats_emit_json() {
    let v = json(&run_ok(bin().args(["probe", "smax", "--rows", "4", "--cols", "6", "--seed", "2"])));
    let (est, dense) = (v["estimate"].as_f64().unwrap(), v["dense"].as_f64().unwrap());
    assert!(est >= dense / 2f64.sqrt() && est <= dense * (1.0 + 1e-10));
    let v = json(&run_ok(bin().args(["stats", "covariance", "--dim", "3", "--degree", "2", "--samples", "2000"])));
    assert_eq!(v["entries"].as_array().unwrap().len(), 4);
    let v = json(&run_ok(bin().args(["bench", "--dim", "2", "--degree", "4", "--runs", "3"])));
    assert_eq!(v["runs_detail"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_input_fails_with_message() {
    let out = bin().args(["solve", "--dim", "3"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["solve", "--in", "/nonexistent/sys.json"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
    let out = bin().args(["solve", "--dim", "3", "--degree", "2", "--delta", "0.5"]).output().unwrap();
    assert!(!out.status.success());
}
