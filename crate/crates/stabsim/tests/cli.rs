//! End-to-end tests of the `stabsim` binary: exit codes, output formats,
//! and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn stabsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabsim"))
        .args(args)
        .env_remove("STABSIM_SEED")
        .output()
        .expect("binary must spawn")
}

fn stabsim_with_seed_env(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabsim"))
        .args(args)
        .env("STABSIM_SEED", seed)
        .output()
        .expect("binary must spawn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal expected")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

#[test]
fn run_exits_zero_on_a_legitimate_fixpoint() {
    let out = stabsim(&[
        "run", "--graph", "line:4", "--algo", "b", "--d", "5", "--daemon", "central",
        "--seed", "3",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("rep,source,algo,"));
    let row = lines.next().unwrap();
    assert!(row.contains(",terminal,"), "row: {row}");
    assert!(row.contains(",yes,valid,"), "row: {row}");
}

#[test]
fn run_exits_four_when_the_fixpoint_is_illegitimate() {
    // With the cap below the diameter, every terminal configuration of the
    // bounded variant squashes distant processes to the cap: the run halts,
    // but not on the shortest-path tree.
    let out = stabsim(&[
        "run", "--graph", "line:3", "--algo", "b", "--d", "1", "--daemon", "distributed",
        "--seed", "7",
    ]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains(",no,"), "the row must report illegitimacy");
}

#[test]
fn run_exits_two_when_the_budget_runs_out() {
    let out = stabsim(&[
        "run", "--graph", "lollipop:4", "--algo", "hc", "--d", "8", "--seed", "1",
        "--budget", "1",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("budget-exceeded"));
}

#[test]
fn usage_errors_exit_two() {
    // Unknown variant name.
    assert_eq!(code(&stabsim(&["run", "--graph", "line:3", "--algo", "z"])), 2);
    // Bounded variant without a cap.
    assert_eq!(code(&stabsim(&["run", "--graph", "line:3", "--algo", "b"])), 2);
    // Cap of zero.
    assert_eq!(
        code(&stabsim(&["run", "--graph", "line:3", "--algo", "b", "--d", "0"])),
        2
    );
    // Malformed graph.
    assert_eq!(
        code(&stabsim(&["run", "--graph", "pretzel:3", "--algo", "u"])),
        2
    );
}

#[test]
fn identical_inputs_give_byte_identical_csv() {
    let args = [
        "run", "--graph", "random:6,0.4,2", "--algo", "fhc", "--d", "4", "--daemon",
        "distributed", "--repetitions", "6",
    ];
    let with_flag: Vec<String> = {
        let mut a: Vec<&str> = args.to_vec();
        a.extend_from_slice(&["--seed", "99"]);
        let out = stabsim(&a);
        assert_eq!(code(&out), 0);
        stdout(&out).lines().map(String::from).collect()
    };
    // Same seed via the environment instead of the flag.
    let with_env: Vec<String> = {
        let out = stabsim_with_seed_env(&args, "99");
        assert_eq!(code(&out), 0);
        stdout(&out).lines().map(String::from).collect()
    };
    assert_eq!(with_flag, with_env);
    // Parallel workers must not change the output, only its production.
    let with_jobs: Vec<String> = {
        let mut a: Vec<&str> = args.to_vec();
        a.extend_from_slice(&["--seed", "99", "--jobs", "4"]);
        let out = stabsim(&a);
        assert_eq!(code(&out), 0);
        stdout(&out).lines().map(String::from).collect()
    };
    assert_eq!(with_flag, with_jobs);
    assert_eq!(with_flag.len(), 7, "header plus six repetition rows");
}

#[test]
fn scenario_run_reports_the_expected_counts() {
    let out = stabsim(&["run", "--scenario", "hc-slow:k=3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    // steps=6, rounds=4, no tail.
    assert!(row.contains(",terminal,6,4,0,yes,valid,"), "row: {row}");
}

#[test]
fn rounds_table_matches_the_pinned_values() {
    let out = stabsim(&["table", "--kind", "rounds", "--max-diam", "5"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "diam,u,b,fhc,hc_slow");
    assert_eq!(lines.next().unwrap(), "2,2,2,3,2");
    assert_eq!(lines.next().unwrap(), "3,3,3,4,—");
    assert_eq!(lines.next().unwrap(), "4,4,4,5,—");
    assert_eq!(lines.next().unwrap(), "5,5,5,6,—");
}

#[test]
fn steps_table_matches_the_closed_form() {
    let out = stabsim(&["table", "--kind", "steps", "--max-k", "4"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,steps,lower_bound");
    assert_eq!(lines.next().unwrap(), "1,4,4");
    assert_eq!(lines.next().unwrap(), "2,18,18");
    assert_eq!(lines.next().unwrap(), "3,56,56");
    assert_eq!(lines.next().unwrap(), "4,150,150");
}

#[test]
fn explore_exit_codes_separate_sound_broken_and_oversized() {
    // Sound instance: all checks pass.
    let out = stabsim(&["explore", "--graph", "line:2", "--algo", "b", "--d", "2"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["config_count"], 8);
    assert_eq!(json["acyclic"], true);
    assert_eq!(json["sinks_match_legitimate"], true);

    // Broken rule set: check fails and a cycle witness lands on stderr.
    let out = stabsim(&[
        "explore", "--graph", "lollipop:2", "--algo", "b", "--d", "2", "--mutation",
        "weaken-b3-guard",
    ]);
    assert_eq!(code(&out), 1);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["acyclic"], false);
    assert_eq!(json["cycle_length"], 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle witness"));

    // Oversized space: refused, not attempted.
    let out = stabsim(&[
        "explore", "--graph", "random:8,0.5,1", "--algo", "hc", "--d", "8",
        "--cap-configs", "1000",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn scenario_bundles_round_trip_through_dump_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("scenario.json");
    let out = stabsim(&[
        "scenario-dump", "--scenario", "unbounded-line:x=50", "--out",
        bundle.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(Path::new(&bundle).exists());

    let out = stabsim(&["replay", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("ok: scenario `unbounded-line` held: 51 steps"));

    // A bundle whose expectations the run does not meet fails the replay.
    let text = std::fs::read_to_string(&bundle).unwrap();
    let lying = text.replace("\"exact\": 51", "\"exact\": 52");
    assert_ne!(lying, text, "the expectation must have been rewritten");
    std::fs::write(&bundle, lying).unwrap();
    let out = stabsim(&["replay", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "a count mismatch is its own failure mode");
}

#[test]
fn traces_round_trip_through_run_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.jsonl");
    let out = stabsim(&[
        "run", "--graph", "lollipop:3", "--algo", "fhc", "--d", "3", "--daemon",
        "central", "--seed", "5", "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let out = stabsim(&["replay", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("ok:"));

    // Corrupt one recorded write; reload or replay must reject it.
    let text = std::fs::read_to_string(&trace).unwrap();
    let tampered = text.replacen("\"writes\":[{\"d\":2", "\"writes\":[{\"d\":1", 1);
    assert_ne!(tampered, text);
    std::fs::write(&trace, tampered).unwrap();
    let out = stabsim(&["replay", "--trace", trace.to_str().unwrap()]);
    assert_ne!(code(&out), 0, "a tampered trace must not verify");
}
