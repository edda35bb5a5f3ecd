use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("logspace").chain(args.iter().copied());
    let code = logspace::cli::run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn records(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn lemma_check_prints_verdict_and_both_polynomials() {
    let (code, text) = run(&["check", "lemma210", "--p", "5", "--n", "2"]);
    assert_eq!(code, 0);
    let recs = records(&text);
    assert_eq!(recs[0]["params"]["check"]["lemma210"]["p"], 5);
    assert_eq!(recs[1]["verdict"], true);
    assert_eq!(recs[1]["report"]["extracted"], recs[1]["report"]["closed_form"]);
    assert!(!recs[1]["report"]["extracted"].as_array().unwrap().is_empty());
}

#[test]
fn existence_check_prints_three_rows() {
    let (code, text) = run(&["verify", "theorem29", "--p", "3", "--kmax", "2"]);
    assert_eq!(code, 0);
    let recs = records(&text);
    assert!(recs[0].get("params").is_some());
    assert!(recs[1]["scope"].as_str().unwrap().contains("relative to the searched fields"));
    let rows: Vec<_> = recs[2..].iter().map(|r| (r["m_plus_1"].as_u64().unwrap(), r["verdict"].as_str().unwrap())).collect();
    assert_eq!(rows, [(3, "exhausted_none"), (6, "found"), (9, "exhausted_none")]);
}

#[test]
fn constructed_space_passes_verify_space() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("space.json");
    let p = path.to_str().unwrap();
    let (code, text) =
        run(&["construct", "p2", "--p", "2", "--k", "2", "--x", "1", "--u", "t", "--v", "1", "--space-out", p]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(records(&text).last().unwrap()["validation"]["verdict"], "valid");
    let (code, text) = run(&["verify-space", "--input", p]);
    assert_eq!(code, 0);
    let v = &records(&text)[1]["validation"];
    assert_eq!(v["verdict"], "valid");
    assert_eq!(v["total_poles"], 3);
}

#[test]
fn pullback_of_constructed_space() {
    use logspace::{Fe, Field};
    let f = Field::new(3, 3).unwrap();
    // generators in the image of Φ = t^3 - t, so every preimage is rational
    let phi = |x: Fe| f.sub(f.pow(x, 3), x);
    let t = f.generator_t();
    let a1 = f.format(phi(t));
    let a2 = f.format(phi(f.mul(t, t)));
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.json");
    let (code, text) = run(&["construct", "matignon", "--p", "3", "--k", "3", "--a", &a1, &a2, "--space-out", base.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let (code, text) = run(&["pullback", "--input", base.to_str().unwrap(), "--alpha", "2", "--phi-p", "0", "1"]);
    assert_eq!(code, 0, "{text}");
    let v = &records(&text).pop().unwrap()["validation"];
    assert_eq!(v["verdict"], "valid");
    assert_eq!(v["m"], 6 * 3 - 1);
}

#[test]
fn precondition_and_usage_errors_exit_one() {
    let (code, text) = run(&["check", "lemma210", "--p", "5", "--n", "3"]);
    assert_eq!(code, 1);
    let recs = records(&text);
    assert!(recs[0].get("params").is_some());
    assert_eq!(recs[1]["error"]["kind"], "precondition");

    let (code, text) = run(&["verify", "theorem29", "--p", "2", "--kmax", "2"]);
    assert_eq!(code, 1);
    assert_eq!(records(&text)[1]["error"]["kind"], "precondition");

    let (code, _) = run(&["verify-space", "--input", "/nonexistent/space.json"]);
    assert_eq!(code, 1);
    let (code, _) = run(&["construct", "p2", "--k", "2", "--x", "1", "--u", "t^", "--v", "1"]);
    assert_eq!(code, 1);
    let (code, _) = run(&["no-such-command"]);
    assert_eq!(code, 1);
}

#[test]
fn output_is_identical_across_runs_and_jobs() {
    for args in [
        vec!["search", "space2", "--p", "3", "--k", "2", "--poles", "6", "--verify-none"],
        vec!["hurwitz", "search", "--p", "5", "--k", "2", "--classes", "1", "1", "1", "2", "--verify-none"],
        vec!["verify", "theorem29", "--p", "3", "--kmax", "2"],
        vec!["construct", "matignon", "--p", "5", "--k", "3", "--n", "2", "--seed", "9"],
        vec!["lift", "p2", "--k", "3", "--n", "2", "--seed", "4"],
    ] {
        let base = run(&args);
        assert_eq!(base.0, 0, "{args:?}: {}", base.1);
        for jobs in ["1", "3"] {
            let mut with_jobs = args.clone();
            if !args.contains(&"construct") && !args.contains(&"lift") {
                with_jobs.extend(["--jobs", jobs]);
            }
            assert_eq!(run(&with_jobs), base, "{with_jobs:?}");
        }
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.jsonl");
    let (code, text) = run(&["--output", path.to_str().unwrap(), "check", "lemma210", "--p", "7", "--n", "3"]);
    assert_eq!(code, 0);
    assert!(text.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(records(&written)[1]["verdict"], true);
}

#[test]
fn search_checkpoint_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.json");
    let args = ["search", "space2", "--p", "3", "--k", "2", "--poles", "6", "--verify-none", "--checkpoint", cp.to_str().unwrap()];
    let first = run(&args);
    assert_eq!(first.0, 0);
    assert!(cp.exists());
    let second = run(&args);
    assert_eq!(first, second);
}

#[test]
fn lift_and_shape_commands() {
    let (code, text) = run(&["lift", "p2", "--k", "2", "--n", "2", "--seed", "1"]);
    assert_eq!(code, 0);
    let recs = records(&text);
    assert_eq!(recs[2]["reduction_check"]["holds"], true);
    assert!(recs[3]["uncorrected_check"].is_object());

    let (code, text) = run(&["lift", "shape", "--p", "2", "--k", "2", "--points", "1:1", "t:1"]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(records(&text)[1]["shape"]["holds"], true);
}

#[test]
fn cartier_and_hurwitz_commands() {
    let (code, text) = run(&["cartier", "--p", "5", "--num", "1", "--den", "0", "1"]);
    assert_eq!(code, 0);
    let r = &records(&text)[1];
    assert_eq!(r["fixed"], true);
    assert_eq!(r["derivative_criterion"], r["residue_criterion"]);

    let (code, text) = run(&["cartier", "--p", "5", "--k", "2", "--num", "t", "--den", "0", "1"]);
    assert_eq!(code, 0);
    assert_eq!(records(&text)[1]["fixed"], false);

    let (code, text) = run(&["hurwitz", "substitute", "--p", "3", "--k", "2", "--points", "0:1", "1:2", "--q", "0", "0", "1"]);
    assert_eq!(code, 0, "{text}");
    assert!(records(&text)[1]["datum"]["classes"].is_array());
}

#[test]
fn field_table_env_overrides_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.json");
    std::fs::write(&table, r#"[{"p": 3, "k": 2, "modulus": [1, 0]}]"#).unwrap();
    let space = dir.path().join("space.json");
    let bin = env!("CARGO_BIN_EXE_logspace");
    let out = Command::new(bin)
        .env(logspace::field::FIELD_TABLE_ENV, &table)
        .args(["construct", "matignon", "--p", "3", "--k", "2", "--a", "1", "t", "--space-out"])
        .arg(&space)
        .output()
        .unwrap();
    assert!(out.status.success());
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&space).unwrap()).unwrap();
    assert_eq!(rec["modulus"], serde_json::json!([1, 0]));
    // the record carries its modulus, so it validates without the override
    let out = Command::new(bin).args(["verify-space", "--input"]).arg(&space).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(records(&text)[1]["validation"]["verdict"], "valid");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_logspace");
    let ok = Command::new(bin).args(["check", "lemma210", "--p", "3", "--n", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["check", "lemma210", "--p", "3", "--n", "3"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(Path::new(bin).exists());
}
