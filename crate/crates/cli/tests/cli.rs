use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sftlab")).args(args).env_remove("SFTLAB_THREADS").output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sftlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["sample", "emptiness", "entropy", "orbits", "zeta", "cover", "experiment"] {
        assert!(text.contains(cmd), "help lists {cmd}");
    }
    let sub = run(&["experiment", "--help"]);
    assert!(String::from_utf8_lossy(&sub.stdout).contains("--boundary-samples"));
}

#[test]
fn zeta_values() {
    let v = json_of(&run(&["zeta", "--d", "1", "--alphabet", "2", "--alpha", "0.25", "--jmax", "20"]));
    let value = v["result"]["value"].as_f64().unwrap();
    let tail = v["result"]["tail_bound"].as_f64().unwrap();
    // the full product is 1 - 2 alpha
    assert!((value.ln() - 0.5f64.ln()).abs() <= tail);
    assert_eq!(v["config"]["jmax"], 20);
    let three = json_of(&run(&["zeta", "--alpha", "0.25", "--jmax", "3"]));
    assert!((three["result"]["value"].as_f64().unwrap() - 0.51099).abs() < 1e-5);
    let div = json_of(&run(&["zeta", "--alpha", "0.6", "--jmax", "5"]));
    assert_eq!(div["result"]["divergent"], true);
}

#[test]
fn invalid_values_name_the_flag() {
    let out = run(&["zeta", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--alpha"));
    let out = run(&["emptiness", "--d", "4", "--n", "2", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--d"));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn library_errors_are_json() {
    let out = run(&["entropy", "--alpha", "0.5", "--k", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["kind"], "domain");
    assert!(err["error"].as_str().unwrap().contains("--n"));
    let out = run(&["orbits", "--d", "3", "--jmax", "40"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "resource");
}

#[test]
fn stored_and_sampled_sets_agree() {
    let path = scratch("omega.bin");
    let p = path.to_str().unwrap();
    let s = json_of(&run(&["sample", "--d", "2", "--n", "2", "--alpha", "0.4", "--seed", "11", "--trial", "3", "--omega-out", p]));
    assert_eq!(s["result"]["windows"], 16);
    let direct = json_of(&run(&["emptiness", "--d", "2", "--n", "2", "--alpha", "0.4", "--seed", "11", "--trial", "3"]));
    let stored = json_of(&run(&["emptiness", "--omega-in", p]));
    assert_eq!(direct["result"]["decision"], stored["result"]["decision"]);
    assert_eq!(stored["result"]["origin"]["seed"], 11);
    assert_eq!(stored["result"]["shift"]["allowed"], s["result"]["allowed"]);
}

#[test]
fn orbit_counts_are_decimal_strings() {
    let v = json_of(&run(&["orbits", "--d", "1", "--alphabet", "2", "--jmax", "6"]));
    let counts: Vec<&str> = v["result"]["counts"].as_array().unwrap().iter().map(|c| c["count"].as_str().unwrap()).collect();
    assert_eq!(counts, ["2", "1", "2", "3", "6", "9"]);
    let present = json_of(&run(&["orbits", "--n", "3", "--alpha", "1", "--seed", "1", "--jmax", "3"]));
    assert_eq!(present["result"]["present"]["orbits"].as_array().unwrap().len(), 5);
}

#[test]
fn config_file_fills_missing_flags() {
    let cfg = scratch("run.cfg");
    std::fs::write(&cfg, "# defaults\nn = 3\nalpha = 0.5\nseed = 9\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = json_of(&run(&["--config", c, "emptiness"]));
    assert_eq!(from_file["config"]["seed"], 9);
    assert_eq!(from_file["config"]["n"], 3);
    let overridden = json_of(&run(&["--config", c, "emptiness", "--seed", "10"]));
    assert_eq!(overridden["config"]["seed"], 10);
    std::fs::write(&cfg, "n 3\n").unwrap();
    assert_eq!(run(&["--config", c, "emptiness"]).status.code(), Some(2));
}

#[test]
fn experiment_csv_is_deterministic() {
    let base = ["experiment", "emptiness", "--d", "1", "--alphabet", "2", "--n", "6", "--alpha", "0.2,0.6", "--trials", "500", "--seed", "42"];
    let j1 = scratch("one.json");
    let j3 = scratch("three.json");
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["--threads", "1", "--json-out", j1.to_str().unwrap()]);
    let mut b: Vec<&str> = base.to_vec();
    b.extend(["--threads", "3", "--json-out", j3.to_str().unwrap()]);
    let (x, y) = (run(&a), run(&b));
    assert_eq!(x.stdout, y.stdout);
    assert_eq!(std::fs::read(&j1).unwrap(), std::fs::read(&j3).unwrap());
    let csv = String::from_utf8(x.stdout).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("alpha,trials,empty,nonempty,unknown"));
    assert_eq!(lines.count(), 2);
    let summary: Value = serde_json::from_slice(&std::fs::read(&j1).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 42);
    assert_eq!(summary["config"]["alphas"], serde_json::json!([0.2, 0.6]));
    assert_eq!(x.status.code(), Some(if summary["passed"] == true { 0 } else { 1 }));
}

#[test]
fn experiment_records_generated_seed() {
    let out = run(&["experiment", "orbits", "--n", "4", "--alpha", "0.3", "--trials", "20"]);
    let err: Value = serde_json::from_slice(&out.stderr).expect("seed notice is JSON");
    assert!(err["generated_seed"].is_u64());
}

#[test]
fn cover_of_periodic_pattern() {
    let path = scratch("stripes.txt");
    let mut text = String::from("2 30 2\n");
    for x in 0..30 {
        let row: Vec<String> = (0..30).map(|_| ["0", "1", "1"][x % 3].to_string()).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let three = json_of(&run(&["cover", "--in", p, "--n", "6", "--r", "3", "--ell", "1"]));
    assert_eq!(three["result"]["valid"], true);
    assert_eq!(three["result"]["within_bound"], true);
    assert_eq!(three["result"]["window_complexity"], 3);
    let all = json_of(&run(&["cover", "--in", p, "--n", "6"]));
    assert_eq!(all["result"]["covered"], three["result"]["covered"]);
    assert!(all["result"]["size"].as_u64().unwrap() > three["result"]["size"].as_u64().unwrap());
    assert_eq!(run(&["cover", "--in", p, "--n", "6", "--r", "3"]).status.code(), Some(2));
}
