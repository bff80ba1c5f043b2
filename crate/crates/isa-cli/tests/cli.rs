//! Command-level behavior: file contracts, exit codes, error reporting.

use std::process::Command;

fn isa(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_isa"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn simulate_writes_declared_files_with_expected_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("sim");
    let out = isa(&[
        "simulate",
        "--d",
        "30",
        "--s",
        "10",
        "--n",
        "100",
        "--seed",
        "7",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in [
        "sigma.csv",
        "omega.csv",
        "theta_star.csv",
        "support.json",
        "partition.json",
        "data.csv",
        "manifest.json",
    ] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let data = isa_core::io::read_data_csv(&out_dir.join("data.csv")).unwrap();
    assert_eq!((data.nrows(), data.ncols()), (100, 30));
    let sigma = isa_core::io::read_matrix_csv(&out_dir.join("sigma.csv")).unwrap();
    assert_eq!(sigma.nrows(), 30);
    // default condition target lands in the manifest
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["cond"], 30.0);
    assert_eq!(manifest["command"], "simulate");
}

#[test]
fn simulate_multi_group_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("sim3");
    let out = isa(&[
        "simulate", "--d", "12", "--s", "2", "--l", "3", "--n", "20", "--seed", "1",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let p = isa_core::io::read_partition_json(&out_dir.join("partition.json")).unwrap();
    assert_eq!(p.len(), 3);
}

#[test]
fn estimate_single_lambda_has_no_selection_file() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(isa(&[
        "simulate", "--d", "10", "--s", "2", "--n", "60", "--seed", "2", "--out-dir",
        sim.to_str().unwrap(),
    ])
    .status
    .success());
    let est = tmp.path().join("est");
    let out = isa(&[
        "estimate",
        "--data",
        sim.join("data.csv").to_str().unwrap(),
        "--partition",
        sim.join("partition.json").to_str().unwrap(),
        "--lambda",
        "0.3",
        "--center",
        "false",
        "--out-dir",
        est.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(est.join("theta_hat.csv").exists());
    assert!(est.join("fit.json").exists());
    assert!(!est.join("selection.json").exists());
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["lambda"], 0.3);
}

#[test]
fn estimate_grid_selection_writes_argmin() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(isa(&[
        "simulate", "--d", "10", "--s", "2", "--n", "120", "--seed", "3", "--out-dir",
        sim.to_str().unwrap(),
    ])
    .status
    .success());
    let val = tmp.path().join("val");
    assert!(isa(&[
        "simulate", "--d", "10", "--s", "2", "--n", "120", "--seed", "4", "--out-dir",
        val.to_str().unwrap(),
    ])
    .status
    .success());
    let est = tmp.path().join("est");
    let out = isa(&[
        "estimate",
        "--data",
        sim.join("data.csv").to_str().unwrap(),
        "--partition",
        sim.join("partition.json").to_str().unwrap(),
        "--val-data",
        val.join("data.csv").to_str().unwrap(),
        "--center",
        "false",
        "--out-dir",
        est.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sel: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est.join("selection.json")).unwrap())
            .unwrap();
    let losses: Vec<f64> = sel["val_losses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(losses.len(), 50);
    let chosen = sel["chosen_index"].as_u64().unwrap() as usize;
    let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(losses[chosen], min);
}

#[test]
fn estimate_grid_without_val_data_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(isa(&[
        "simulate", "--d", "8", "--s", "2", "--n", "40", "--seed", "5", "--out-dir",
        sim.to_str().unwrap(),
    ])
    .status
    .success());
    let out = isa(&[
        "estimate",
        "--data",
        sim.join("data.csv").to_str().unwrap(),
        "--partition",
        sim.join("partition.json").to_str().unwrap(),
        "--out-dir",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("val-data"));
}

#[test]
fn infer_bad_alpha_is_usage_error() {
    let out = isa(&[
        "infer", "--data", "whatever.csv", "--partition", "p.json", "--alpha", "1.5",
        "--out-dir", "/tmp/never",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infer_odd_rows_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data.csv");
    std::fs::write(&data, "1.0,2.0\n2.0,1.0\n0.5,0.5\n").unwrap();
    let part = tmp.path().join("p.json");
    std::fs::write(&part, r#"{"groups": [[1],[2]]}"#).unwrap();
    let out = isa(&[
        "infer",
        "--data",
        data.to_str().unwrap(),
        "--partition",
        part.to_str().unwrap(),
        "--lambda",
        "0.1",
        "--out-dir",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("even"));
}

#[test]
fn infer_infeasible_budget_exits_one_with_suggestion() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(isa(&[
        "simulate", "--d", "12", "--s", "2", "--n", "8", "--seed", "6", "--out-dir",
        sim.to_str().unwrap(),
    ])
    .status
    .success());
    // 4 samples per half cannot pin an approximate inverse at a tiny budget
    let out = isa(&[
        "infer",
        "--data",
        sim.join("data.csv").to_str().unwrap(),
        "--partition",
        sim.join("partition.json").to_str().unwrap(),
        "--lambda",
        "0.3",
        "--lambda-prime",
        "1e-8",
        "--center",
        "false",
        "--out-dir",
        tmp.path().join("inf").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("infeasible"), "stderr: {err}");
    assert!(err.contains("--lambda-prime"), "stderr: {err}");
}

#[test]
fn coverage_table_has_expected_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cov = tmp.path().join("cov");
    let out = isa(&[
        "coverage", "--d", "8", "--s", "2", "--n", "50", "--reps", "2", "--seed", "1",
        "--lambda", "0.4", "--out-dir", cov.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(cov.join("coverage.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,s,avgcov_s,avgcov_sc,avglen_s,avglen_sc,replications,failed"
    );
    assert!(lines.next().unwrap().starts_with("8,2,"));
    // tracked exports exist
    let qq: Vec<_> = std::fs::read_dir(&cov)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.starts_with("qq_").then_some(name)
        })
        .collect();
    assert_eq!(qq.len(), 3);
}

#[test]
fn benchmark_results_do_not_depend_on_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |jobs: &str, dir: &str| {
        let out_dir = tmp.path().join(dir);
        let out = isa(&[
            "benchmark", "--d", "8", "--s", "2", "--n-train", "40", "--n-val", "40",
            "--reps", "4", "--seed", "9", "--jobs", jobs, "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(out_dir.join("metrics.csv")).unwrap()
    };
    assert_eq!(run("1", "j1"), run("2", "j2"));
}

#[test]
fn benchmark_rejects_zero_reps() {
    let out = isa(&[
        "benchmark", "--d", "8", "--s", "2", "--reps", "0", "--out-dir", "/tmp/never",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
