use std::process::{Command, Output};

use serde::Deserialize;

fn sqfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqfree")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct DecomposeJson {
    n: String,
    a: String,
    b: String,
    s: u64,
    stage: String,
    groups_tried: u64,
    forms_tried: u64,
    elapsed_ms: u64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct FactorJson {
    n: String,
    factors: Vec<String>,
    groups_tried: u64,
    forms_tried: u64,
    elapsed_ms: u64,
    seed: u64,
}

const STAGES: [&str; 6] =
    ["precheck", "stage1_ambiguous", "stage1_readoff", "stage2_readoff", "composite_completion", "gcd_shortcut"];

#[test]
fn decompose_json_schema() {
    let o = sqfree(&["decompose", "37559", "--seed", "1", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let j: DecomposeJson = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!((j.n.as_str(), j.a.as_str(), j.b.as_str(), j.seed), ("37559", "23", "71", 1));
    assert!(STAGES.contains(&j.stage.as_str()));
    // the key set is exactly the documented one
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["a", "b", "elapsed_ms", "forms_tried", "groups_tried", "n", "s", "seed", "stage"]);
}

#[test]
fn decompose_human_output() {
    let o = sqfree(&["decompose", "37559", "--seed", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("a = 23\n") && out.contains("b = 71\n"), "{out}");
    assert!(!out.contains("elapsed"));
    assert!(stderr(&o).contains("elapsed"));
    // every option combination still decomposes
    for extra in [
        &["--r-mode", "prime-sqrt"][..],
        &["--r-mode", "prime-sixth", "--strategy", "scored"],
        &["--strategy", "crt", "--no-stage2"],
        &["--threads", "3", "--b2-bound", "100"],
        &["--b2-bound", "auto", "--max-multipliers", "1000", "--max-seconds", "60"],
    ] {
        let mut args = vec!["decompose", "37559"];
        args.extend_from_slice(extra);
        let o = sqfree(&args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).contains("a = 23\n"), "{args:?}");
    }
}

#[test]
fn exit_codes() {
    let o = sqfree(&["decompose", "12"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n must be odd; factor out 2 first"));
    assert_eq!(sqfree(&["decompose", "12x"]).status.code(), Some(1));
    assert_eq!(sqfree(&["decompose", "0"]).status.code(), Some(1));
    assert_eq!(sqfree(&["decompose"]).status.code(), Some(1));
    assert_eq!(sqfree(&["decompose", "15", "--r-mode", "bogus"]).status.code(), Some(1));
    assert_eq!(sqfree(&["--help"]).status.code(), Some(0));
    // p^2 q with 30-bit primes cannot finish inside a nanosecond
    let n = "1237940054273359889548967999";
    let o = sqfree(&["decompose", n, "--max-seconds", "0.000000001"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("budget exhausted"));
}

#[test]
fn decompose_thirty_bit_instance() {
    // p = 1073741827, q = 1073741831
    let o = sqfree(&["decompose", "1237940054273359889548967999", "--seed", "3", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let j: DecomposeJson = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!((j.a.as_str(), j.b.as_str()), ("1073741827", "1073741831"));
}

#[test]
fn factor_examples() {
    for (n, want) in [("225", "225 = 3 * 3 * 5 * 5\n"), ("15", "15 = 3 * 5\n"), ("7", "7 = 7\n"), ("1", "1 = 1\n")] {
        let o = sqfree(&["factor", n]);
        assert!(o.status.success());
        assert!(stdout(&o).starts_with(want), "{}", stdout(&o));
    }
    let o = sqfree(&["factor", "37559", "--json", "--seed", "4"]);
    let j: FactorJson = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(j.factors, ["23", "23", "71"]);
    assert_eq!(sqfree(&["factor", "10"]).status.code(), Some(1));
}

#[test]
fn bench_and_experiment_csv() {
    let o = sqfree(&["bench", "--q-exp", "3", "--samples", "4", "--no-stage2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "q_size,mode,mean_time_s,median_time_s,success_stage1_pct,success_stage2_pct,mean_groups,median_groups,factored"
    );
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((cols[0], cols[1], cols[5], cols[8]), ("1e3", "stage1", "0.0", "4"));

    let o = sqfree(&["experiment", "--q-exp", "3", "--samples", "5", "--symbol", "3:-1", "--multipliers", "1,2,3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "s,success_prob,ratio_to_s1,sym3,sym5,sym7,samples");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3,") && lines[3].contains(",0,na,na,"), "{}", lines[3]);
}

#[test]
fn fixtures_command_matches_committed_file() {
    let o = sqfree(&["fixtures", "--min", "3", "--max", "400"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("fixtures/class_groups_3_400.txt"));
}
