use std::process::{Command, Output};

use serde_json::Value;

fn advbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advbound"))
        .args(args)
        .env_remove("ADVBOUND_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn gamma2_of_j_minus_f_for_or2() {
    let out = advbound(&[
        "bound",
        "--function",
        "OR:2",
        "--bound",
        "gamma2",
        "--matrix",
        "JminusF",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["tool"], "advbound");
    assert_eq!(r["command"], "bound");
    assert!(r["tolerances"]["adv_certificate"].is_number());
    assert!(r["report"]["value"].as_f64().unwrap() <= 2.0 + 1e-6);
    assert!(r["report"]["iterations"].as_u64().unwrap() > 0);
    assert!(r.get("wall_clock_seconds").is_none());
}

#[test]
fn identity_madv_is_one() {
    let out = advbound(&["bound", "--function", "ID:1", "--bound", "madv", "--c", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out)["report"]["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() <= 1e-6, "{v}");
}

#[test]
fn constant_function_has_zero_adversary_bound() {
    let out = advbound(&["bound", "--function", "CONST:2", "--bound", "adv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn function_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xor.txt");
    std::fs::write(
        &path,
        "arity 2\nalphabet 2\ncodomain 2\n0 0 -> 0\n0 1 -> 1\n1 0 -> 1\n1 1 -> 0\n",
    )
    .unwrap();
    let out = advbound(&["bound", "--function", path.to_str().unwrap(), "--bound", "adv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out)["report"]["value"].as_f64().unwrap();
    assert!((v - 2.0).abs() <= 1e-4, "{v}");
}

#[test]
fn sdpt_table_has_sixteen_rows_linear_in_k() {
    let out = advbound(&[
        "dpt",
        "--formula",
        "sdpt",
        "--k",
        "1..16",
        "--delta",
        "0.8",
        "--adv",
        "1.414",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let vi = headers.iter().position(|h| h == "value").unwrap();
    assert_eq!(headers.iter().next_back(), Some("vacuous"));
    let values: Vec<f64> = rdr.records().map(|r| r.unwrap()[vi].parse().unwrap()).collect();
    assert_eq!(values.len(), 16);
    for (i, v) in values.iter().enumerate() {
        assert!((v - (i + 1) as f64 * values[0]).abs() <= 1e-12);
    }
}

#[test]
fn threshold_gives_a_single_value() {
    let out = advbound(&[
        "dpt",
        "--formula",
        "threshold",
        "--k",
        "10",
        "--K",
        "10",
        "--delta",
        "0.25",
        "--mu",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["report"]["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 1);
    // D(0.9 || 0.75) by hand.
    let d = 0.9 * (0.9f64 / 0.75).ln() + 0.1 * (0.1f64 / 0.25).ln();
    let expected = (1.0 - 10.0 * d).exp();
    assert!((rows[0]["value"].as_f64().unwrap() - expected).abs() <= 1e-12);
}

#[test]
fn xor_arithmetic() {
    let out = advbound(&["dpt", "--formula", "xor", "--k", "8", "--delta", "1", "--adv", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["rows"][0]["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn dpt_suite_passes() {
    let out = advbound(&["verify", "--suite", "dpt"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["report"]["failed"], 0);
    assert!(r["report"]["passed"].as_u64().unwrap() > 300);
}

#[test]
fn witness_suite_passes_with_seed_7() {
    let out = advbound(&["verify", "--suite", "witness", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["failed"], 0);
}

#[test]
fn preliminaries_suite_passes_with_seed_42() {
    let out = advbound(&["verify", "--suite", "preliminaries", "--seed", "42", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("suite,claim,instance,check,slack,tolerance,passed,error\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn usage_errors_exit_2_with_error_object() {
    for args in [
        &["bound", "--bound", "adv"][..],
        &["bound", "--function", "NOPE:2", "--bound", "adv"],
        &["bound", "--function", "ID:1", "--bound", "madv"],
        &["bound", "--function", "ID:1", "--bound", "madv", "--c", "0.5"],
        &["dpt", "--formula", "sdpt", "--k", "3", "--delta", "0.5", "--adv", "1"],
        &["verify", "--suite", "everything"],
    ] {
        let out = advbound(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let e = json(&out);
        assert_eq!(e["schema"], 1);
        assert!(e["error"]["message"].as_str().unwrap().len() > 5);
    }
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_advbound"))
        .args(["dpt", "--formula", "xor", "--k", "1", "--delta", "1", "--adv", "1"])
        .env("ADVBOUND_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_file_is_reproducible_and_timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    let args = [
        "bound",
        "--function",
        "OR:2",
        "--bound",
        "adv",
        "--seed",
        "3",
        "--out",
        p,
    ];
    assert_eq!(advbound(&args).status.code(), Some(0));
    let first = std::fs::read(&path).unwrap();
    assert_eq!(advbound(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&path).unwrap());

    let mut timed = args.to_vec();
    timed.push("--timing");
    assert_eq!(advbound(&timed).status.code(), Some(0));
    let r: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert!(r["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sigma_f_needs_boolean_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sum.txt");
    std::fs::write(
        &path,
        "arity 2\nalphabet 2\ncodomain 3\n0 0 -> 0\n0 1 -> 1\n1 0 -> 1\n1 1 -> 2\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(
        advbound(&["bound", "--function", p, "--bound", "adv"]).status.code(),
        Some(0)
    );
    let out = advbound(&["bound", "--function", p, "--bound", "adv", "--sigma", "sigma_f"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"]["message"].as_str().unwrap().contains("boolean"));
}
