use std::process::{Command, Output};

use serde_json::Value;

fn ssmedian(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssmedian")).args(args).output().expect("run ssmedian")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn generated_run_prints_report() {
    let v = report(&ssmedian(&["--generate", "gaussian-mixture:centers=3,per=40", "--k", "3", "--seed", "5"]));
    for key in ["k", "seed", "alpha", "beta", "k_prime", "final_cost", "c_sigma", "rounds", "image_size", "final_centers", "stage_timings_ms"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["k"], 3);
    assert!(v["final_centers"].as_array().unwrap().len() <= 3);
}

#[test]
fn points_file_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.txt");
    std::fs::write(&path, "# five points\n0 1\n0 0\n0 -1\n-1000 0\n1000 0\n").unwrap();
    let v = report(&ssmedian(&["--input", path.to_str().unwrap(), "--k", "3", "--oracle"]));
    assert_eq!(v["oracle_cost"].as_f64().unwrap(), 2.0);
    assert_eq!(v["final_cost"].as_f64().unwrap(), 2.0);
}

#[test]
fn matrix_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    std::fs::write(&path, "4\n0 1 2 3\n1 0 1 2\n2 1 0 1\n3 2 1 0\n").unwrap();
    let v = report(&ssmedian(&["--input", path.to_str().unwrap(), "--format", "matrix", "--k", "2"]));
    assert_eq!(v["final_cost"].as_f64().unwrap(), 2.0);
}

#[test]
fn validation_errors_exit_2() {
    let bad_k = ssmedian(&["--generate", "uniform-box:n=20", "--k", "0"]);
    assert_eq!(bad_k.status.code(), Some(2));
    let bad_beta = ssmedian(&["--generate", "uniform-box:n=20", "--k", "2", "--beta", "1.5"]);
    assert_eq!(bad_beta.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    std::fs::write(&path, "2\n0 1\n2 0\n").unwrap();
    let asym = ssmedian(&["--input", path.to_str().unwrap(), "--format", "matrix", "--k", "1"]);
    assert_eq!(asym.status.code(), Some(2));
    assert!(!asym.stderr.is_empty());
}

#[test]
fn infeasible_k_and_oracle_cap_exit_3() {
    let infeasible = ssmedian(&["--generate", "uniform-box:n=5", "--k", "9"]);
    assert_eq!(infeasible.status.code(), Some(3));
    let too_big = ssmedian(&["--generate", "uniform-box:n=200", "--k", "10", "--oracle"]);
    assert_eq!(too_big.status.code(), Some(3));
}

#[test]
fn missing_file_exits_1() {
    let out = ssmedian(&["--input", "/nonexistent/points.txt", "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trace_and_csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let csv = dir.path().join("runs.csv");
    let out = ssmedian(&[
        "--generate", "uniform-box:n=2000", "--k", "4", "--repeat", "3",
        "--trace", trace.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    let v = report(&out);
    assert_eq!(v.as_array().unwrap().len(), 3);

    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!lines.is_empty());
    for l in &lines {
        let carved = l["carved_weight"].as_f64().unwrap();
        let surviving = l["surviving_weight"].as_f64().unwrap();
        assert!(surviving <= carved, "{l}");
    }

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next().unwrap(), "seed,n,k,mode,final_cost,oracle_cost,ratio,time_ms");
    assert_eq!(rows.count(), 3);
}

#[test]
fn no_timings_is_reproducible() {
    let args = ["--generate", "gaussian-mixture:centers=4,per=100,wmax=50", "--k", "4", "--seed", "11", "--no-timings", "--mode", "kmeans-init"];
    let a = ssmedian(&args);
    let b = ssmedian(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
