use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asymtrust"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn strs(v: &Value) -> Vec<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect()
}

fn seven() -> String {
    config("seven_process.toml").display().to_string()
}

#[test]
fn analyze_output_is_byte_stable() {
    let out = run(&["analyze", "--config", &seven()]);
    assert_eq!(out.status.code(), Some(0));
    let golden = include_str!("golden/seven_process_analyze.jsonl");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn analyze_seven_process() {
    let out = run(&["analyze", "--config", &seven(), "--require-b3"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let a = &recs[0];
    assert_eq!(a["schema_version"], 1);
    assert_eq!(a["b3"], true);
    assert_eq!(a["quorum_source"], "canonical");
    let q7: Vec<Vec<String>> = a["quorums"][6]["quorums"]
        .as_array()
        .unwrap()
        .iter()
        .map(strs)
        .collect();
    assert_eq!(q7, vec![vec!["p1", "p2", "p6", "p7"]]);
    let q6: Vec<Vec<String>> = a["quorums"][5]["quorums"]
        .as_array()
        .unwrap()
        .iter()
        .map(strs)
        .collect();
    assert_eq!(q6, vec![vec!["p2", "p4", "p5", "p6"]]);
    let c = &a["classification"];
    assert_eq!(strs(&c["wise"]), ["p1", "p2", "p3", "p7"]);
    assert_eq!(strs(&c["naive"]), ["p6"]);
    assert_eq!(strs(&c["maximal_guild"]), ["p1", "p2", "p3"]);
    let x = &c["excluded"][0];
    assert_eq!(x["process"], "p7");
    assert_eq!(x["member"], "p6");
    assert_eq!(x["member_status"], "naive");
    let table = String::from_utf8(out.stderr).unwrap();
    assert!(
        table.contains("quorum {p1,p2,p6,p7} contains naive p6"),
        "{table}"
    );
}

#[test]
fn analyze_reports_b3_failure() {
    let path = config("threshold_3_1.toml").display().to_string();
    let out = run(&["analyze", "--config", &path]);
    assert_eq!(out.status.code(), Some(0));
    let a = &records(&out)[0];
    assert_eq!(a["b3"], false);
    assert_eq!(a["quorum_source"], "none");
    let out = run(&["analyze", "--config", &path, "--require-b3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn parse_errors_exit_2() {
    let bad = scratch(
        "bad_dsl.toml",
        "roster = [\"a\", \"b\"]\n[failprone]\na = \"{a,\"\nb = \"{a}\"\n",
    );
    let out = run(&["analyze", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let missing = scratch(
        "missing_row.toml",
        "roster = [\"a\", \"b\"]\n[failprone]\na = \"{b}\"\n",
    );
    assert_eq!(
        run(&["analyze", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["analyze", "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["run", "--config", &seven(), "--seeds", "4..2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["attack", "--variant", "jacm15"]).status.code(),
        Some(2)
    );
}

#[test]
fn run_without_scenario_or_b3() {
    let path = config("threshold_3_1.toml").display().to_string();
    assert_eq!(run(&["run", "--config", &path]).status.code(), Some(2));
    let with_scenario = scratch(
        "t31_scenario.toml",
        &format!(
            "{}\n[scenario]\nfaulty = [\"p3\"]\n",
            std::fs::read_to_string(&path).unwrap()
        ),
    );
    assert_eq!(
        run(&["run", "--config", with_scenario.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn unanimous_inputs_decide_that_value() {
    let path = config("seven_process_unanimous.toml").display().to_string();
    let out = run(&["run", "--config", &path]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 101);
    for r in &recs[..100] {
        assert_eq!(r["kind"], "run");
        assert_eq!(r["wise_decided"], true);
        for p in [0, 1, 2, 6] {
            assert_eq!(r["decisions"][p]["bit"], 1, "seed {}", r["seed"]);
        }
    }
    let s = &recs[100];
    assert_eq!(s["kind"], "summary");
    assert_eq!(s["runs"], 100);
    assert_eq!(s["decision_rate"], 1.0);
    assert_eq!(s["safety_violations"], 0);
}

#[test]
fn threshold_batch_decides_with_agreement() {
    let path = config("threshold_4_1.toml").display().to_string();
    let out = run(&["run", "--config", &path]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 501);
    for r in &recs[..500] {
        let bits: Vec<&Value> = r["decisions"].as_array().unwrap()[..3]
            .iter()
            .map(|d| &d["bit"])
            .collect();
        assert!(
            bits.iter().all(|b| *b == bits[0] && !b.is_null()),
            "seed {}",
            r["seed"]
        );
    }
    let hist: u64 = recs[500]["round_histogram"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(hist, 500);
}

#[test]
fn podc14_batches_usually_decide_without_the_script() {
    let path = config("threshold_4_1.toml").display().to_string();
    let out = run(&[
        "run",
        "--config",
        &path,
        "--variant",
        "podc14",
        "--seeds",
        "0..40",
    ]);
    let recs = records(&out);
    let decided = recs[..40]
        .iter()
        .filter(|r| r["wise_decided"] == true)
        .count();
    assert!(decided >= 20, "{decided}");
    assert!(recs[..40].iter().all(|r| r["variant"] == "podc14"));
}

#[test]
fn run_output_is_deterministic_and_flags_override() {
    let args = ["run", "--config", &seven(), "--seeds", "10..30"];
    let a = run(&args);
    assert_eq!(a.stdout, run(&args).stdout);
    let recs = records(&a);
    assert_eq!(recs.len(), 21);
    for (k, r) in recs[..20].iter().enumerate() {
        assert_eq!(r["seed"], 10 + k as u64);
        assert_eq!(r["end"], "all_done");
    }
    let capped = records(&run(&[
        "run",
        "--config",
        &seven(),
        "--seeds",
        "10..30",
        "--max-rounds",
        "1",
    ]));
    let ends: Vec<&Value> = capped[..20].iter().map(|r| &r["end"]).collect();
    assert!(ends.iter().any(|e| *e == "round_cap"), "{ends:?}");
}

#[test]
fn out_flag_writes_the_stream() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("attack.jsonl");
    let out = run(&[
        "attack",
        "--variant",
        "fixed",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        String::from_utf8(run(&["attack", "--variant", "fixed"]).stdout).unwrap()
    );
}

#[test]
fn coin_lies_without_share_authentication_exit_4() {
    let text = std::fs::read_to_string(config("seven_process.toml")).unwrap();
    let path = scratch(
        "sender_only.toml",
        &text.replace(
            "adversary = \"equivocate\"",
            "adversary = \"equivocate\"\nauth = \"sender_only\"",
        ),
    );
    let out = run(&["run", "--config", path.to_str().unwrap(), "--seeds", "0..3"]);
    assert_eq!(out.status.code(), Some(4));
    let recs = records(&out);
    assert!(recs[..3].iter().any(|r| r["violations"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v["kind"] == "coin_mismatch")));
}

#[test]
fn attack_keeps_podc14_undecided() {
    let trace = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("podc14_trace.jsonl");
    let out = run(&[
        "attack",
        "--variant",
        "podc14",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    assert_eq!(r["decided"], false);
    assert_eq!(r["rounds_reached"], 100);
    assert_eq!(r["verdict"], "no decision after 100 rounds");
    let events = std::fs::read_to_string(&trace).unwrap();
    assert!(events.lines().count() > 1000);
    assert!(events
        .lines()
        .all(|l| serde_json::from_str::<Value>(l).is_ok()));
}

#[test]
fn attack_fixed_decides_on_every_seed() {
    let out = run(&["attack", "--variant", "fixed", "--seeds", "0..200"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 200);
    for r in &recs {
        assert_eq!(r["decided"], true, "seed {}", r["seed"]);
        let k = r["decision_round"].as_u64().unwrap();
        assert_eq!(r["verdict"], format!("decided in round {k}"));
    }
}
