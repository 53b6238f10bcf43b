//! End-to-end checks of the command-line surface: exit codes, record
//! shapes, file formats, and cross-invocation determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_median-adversary"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn scratch(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!(
        "median-adversary-test-{}-{name}",
        std::process::id()
    ));
    p
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn run_emits_ok_record_with_exact_floor() {
    let out = run_ok(&["run", "--n", "300", "--delta", "1/15", "--alg", "pivot"]);
    let record = stdout_json(&out);
    assert_eq!(record["status"], "ok");
    assert_eq!(record["n"], 300);
    // 4 * (300 - 2*ceil(300/15) - 2) = 1032, over the planted point's cost.
    assert_eq!(record["ratio_floor"], "344/123");
    assert_eq!(record["cost_opt"], record["cost_phat"]);
}

#[test]
fn run_surfaces_premise_failure_as_exit_3() {
    let out = bin()
        .args([
            "run",
            "--n",
            "100",
            "--delta",
            "1/20",
            "--alg",
            "exhaustive",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let record = stdout_json(&out);
    assert_eq!(record["status"], "empty_safe_set");
    assert_eq!(record["b_size"], 100);
}

#[test]
fn bad_parameters_exit_2() {
    for args in [
        vec!["run", "--n", "100", "--delta", "1/5", "--alg", "pivot"],
        vec!["run", "--n", "100", "--delta", "0.05", "--alg", "pivot"],
        vec!["run", "--n", "100", "--delta", "1/20", "--alg", "bogus"],
        vec!["run", "--n", "1", "--delta", "1/20", "--alg", "pivot"],
        vec![
            "sweep", "--n", "50", "--delta", "1/5,1/20", "--alg", "pivot",
        ],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let diag: Value = serde_json::from_slice(&out.stderr).expect("diagnostic JSON");
        assert_eq!(diag["error"], "invalid_request", "{args:?}");
    }
}

#[test]
fn budget_zero_is_reported_in_row() {
    let out = run_ok(&[
        "sweep", "--n", "40", "--delta", "1/20", "--alg", "pivot", "--budget", "0",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with("budget_exceeded"));
}

#[test]
fn sweep_csv_is_deterministic_modulo_wall_time() {
    let args = [
        "sweep",
        "--n",
        "50,100",
        "--delta",
        "1/20,1/15",
        "--alg",
        "pivot_h:3,pivot_h:4,exhaustive",
        "--workers",
        "2",
    ];
    let strip_wall = |raw: &[u8]| -> Vec<String> {
        String::from_utf8(raw.to_vec())
            .unwrap()
            .lines()
            .map(|line| {
                let cols: Vec<&str> = line.split(',').collect();
                let mut cols = cols;
                cols.remove(cols.len() - 2); // wall_time_ms
                cols.join(",")
            })
            .collect()
    };
    let first = strip_wall(&run_ok(&args).stdout);
    let second = strip_wall(&run_ok(&args).stdout);
    assert_eq!(first, second);
    assert_eq!(
        first[0],
        "n,delta,algorithm,q_total,redundant_queries,b_size,alpha_phat,cost_p,cost_phat,\
         cost_opt,measured_ratio,ratio_floor,status"
    );
    // (n, delta, alg) grid order, row count = 2*2*3 + header.
    assert_eq!(first.len(), 13);
    assert!(first[1].starts_with("50,1/20,pivot_h:3"));
    assert!(first[12].starts_with("100,1/15,exhaustive"));
}

#[test]
fn sweep_jsonl_rows_parse() {
    let out_path = scratch("sweep.jsonl");
    run_ok(&[
        "sweep",
        "--n",
        "100",
        "--delta",
        "1/20",
        "--alg",
        "pivot_h:3,greedy_probe",
        "--format",
        "jsonl",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out_path).unwrap();
    let rows: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["algorithm"], "pivot_h:3");
    assert_eq!(rows[0]["status"], "ok");
    assert_eq!(rows[1]["algorithm"], "greedy_probe");
    assert_eq!(rows[1]["status"], "empty_safe_set");
    fs::remove_file(&out_path).ok();
}

#[test]
fn workers_env_var_overrides_flag() {
    let out = bin()
        .args([
            "sweep",
            "--n",
            "60",
            "--delta",
            "1/15",
            "--alg",
            "pivot_h:4",
            "--workers",
            "7",
        ])
        .env("MEDIAN_ADVERSARY_WORKERS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn validate_accepts_exported_instance_and_rejects_corruption() {
    let dense_path = scratch("instance.txt");
    run_ok(&[
        "run",
        "--n",
        "60",
        "--delta",
        "1/15",
        "--alg",
        "pivot_h:4",
        "--export-dense",
        dense_path.to_str().unwrap(),
    ]);
    let out = run_ok(&["validate", dense_path.to_str().unwrap()]);
    let report = stdout_json(&out);
    assert_eq!(report["triangle_ok"], true);
    assert_eq!(report["first_violation"], Value::Null);

    // A 1-1-4 triangle fails, in both modes, with the violating triple.
    let bad_path = scratch("bad.txt");
    fs::write(&bad_path, "3\n0 1 1\n1 0 4\n1 4 0\n").unwrap();
    for mode in ["full", "structured"] {
        let out = bin()
            .args(["validate", bad_path.to_str().unwrap(), "--mode", mode])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{mode}");
        let report = stdout_json(&out);
        assert_eq!(report["triangle_ok"], false);
        assert_eq!(report["first_violation"]["check"], "triangle");
    }

    // Asymmetry is flagged.
    let asym_path = scratch("asym.txt");
    fs::write(&asym_path, "3\n0 2 2\n2 0 2\n2 3 0\n").unwrap();
    let out = bin()
        .args(["validate", asym_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["symmetric_ok"], false);

    // Parse errors carry line numbers.
    let ragged_path = scratch("ragged.txt");
    fs::write(&ragged_path, "3\n0 2 2\n2 0\n2 2 0\n").unwrap();
    let out = bin()
        .args(["validate", ragged_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "parse_error");
    assert!(diag["detail"].as_str().unwrap().contains("line 3"));

    for p in [dense_path, bad_path, asym_path, ragged_path] {
        fs::remove_file(p).ok();
    }
}

#[test]
fn recover_chain_holds_and_all_pairs_is_exact() {
    let out = run_ok(&[
        "recover",
        "--n",
        "100",
        "--delta",
        "1/20",
        "--alg",
        "pivot_h:3",
    ]);
    let rec = stdout_json(&out);
    assert_eq!(rec["dominates"], true);
    assert_eq!(rec["median_cost_dominated"], true);
    assert_eq!(rec["mean_bound_ok"], true);
    assert_eq!(rec["norm_bound_ok"], true);
    assert_eq!(rec["query_edges"], 485);

    let out = run_ok(&[
        "recover",
        "--n",
        "100",
        "--delta",
        "1/20",
        "--alg",
        "pivot_h:3",
        "--query-source",
        "all-pairs",
    ]);
    let rec = stdout_json(&out);
    assert_eq!(rec["l1_relative_error"], "0/1");
    assert_eq!(rec["cost_d_ztilde"], rec["cost_d_zstar"]);
}

#[test]
fn trace_and_query_set_files_round_trip() {
    let trace_path = scratch("trace.jsonl");
    let qs_path = scratch("queries.txt");
    let record = stdout_json(&run_ok(&[
        "run",
        "--n",
        "100",
        "--delta",
        "1/20",
        "--alg",
        "pivot_h:4",
        "--export-trace",
        trace_path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&trace_path).unwrap();
    let rows: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // The trace holds the algorithm's distinct queries, padding excluded.
    let q_total = record["q_total"].as_u64().unwrap();
    let redundant = record["redundant_queries"].as_u64().unwrap();
    assert!(rows.len() as u64 <= q_total);
    assert!(redundant > 0 || rows.len() as u64 == q_total);
    for row in &rows {
        let trip = row.as_array().unwrap();
        assert_eq!(trip.len(), 3);
        assert!(trip[0].as_u64().unwrap() < trip[1].as_u64().unwrap());
        assert!((1..=4).contains(&trip[2].as_u64().unwrap()));
    }

    // The query set used by recover can be exported and fed back in.
    let direct = stdout_json(&run_ok(&[
        "recover",
        "--n",
        "100",
        "--delta",
        "1/20",
        "--alg",
        "pivot_h:4",
        "--export-query-set",
        qs_path.to_str().unwrap(),
    ]));
    let qs_text = fs::read_to_string(&qs_path).unwrap();
    assert!(qs_text.starts_with("100 "));
    let from_file = stdout_json(&run_ok(&[
        "recover",
        "--n",
        "100",
        "--delta",
        "1/20",
        "--alg",
        "pivot_h:4",
        "--query-file",
        qs_path.to_str().unwrap(),
    ]));
    assert_eq!(direct["l1_relative_error"], from_file["l1_relative_error"]);
    assert_eq!(
        direct["median_from_completion"],
        from_file["median_from_completion"]
    );
    fs::remove_file(&trace_path).ok();
    fs::remove_file(&qs_path).ok();
}

#[test]
fn exported_instance_round_trips_through_recover() {
    let json_path = scratch("instance.json");
    let run_out = run_ok(&[
        "run",
        "--n",
        "120",
        "--delta",
        "1/15",
        "--alg",
        "pivot_h:3",
        "--export-instance",
        json_path.to_str().unwrap(),
    ]);
    let record = stdout_json(&run_out);

    let direct = stdout_json(&run_ok(&[
        "recover",
        "--n",
        "120",
        "--delta",
        "1/15",
        "--alg",
        "pivot_h:3",
    ]));
    let from_file = stdout_json(&run_ok(&[
        "recover",
        "--instance",
        json_path.to_str().unwrap(),
    ]));
    for field in [
        "l1_relative_error",
        "median_from_completion",
        "cost_d_ztilde",
        "cost_dq_ztilde",
        "z_star",
        "query_edges",
    ] {
        assert_eq!(direct[field], from_file[field], "{field}");
    }
    assert_eq!(from_file["n"], record["n"]);
    fs::remove_file(&json_path).ok();
}
