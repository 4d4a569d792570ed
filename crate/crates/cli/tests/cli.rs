use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

fn cpnilp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpnilp")).args(args).output().expect("binary runs")
}

fn cpnilp_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cpnilp"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHIFT: &str = r#"{"schema_version":"1","kind":"kraus_map","payload":{"dim":2,"kraus":[[[[0,0],[1,0]],[[0,0],[0,0]]]]}}"#;
const IDENTITY: &str = r#"{"schema_version":"1","kind":"kraus_map","payload":{"dim":2,"kraus":[[[[1,0],[0,0]],[[0,0],[1,0]]]]}}"#;

#[test]
fn analyze_shift() {
    let out = cpnilp_stdin(&["analyze", "-"], SHIFT);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["summary"]["order"], 2);
    assert_eq!(report["summary"]["cp_type"], serde_json::json!([1, 1]));
    for (key, verdict) in report["verdicts"].as_object().unwrap() {
        assert_eq!(verdict, "pass", "{key}");
    }
    for key in ["thm_2_4", "thm_2_7", "cor_2_5", "prop_2_6", "thm_3_1", "thm_4_3", "l_lower_bound", "block_triangular", "commuting_flags"] {
        assert!(report["verdicts"].get(key).is_some(), "{key} missing");
    }
    assert_eq!(report["tolerance"]["atol"], 1e-10);
    assert!(report["wall_time_s"].as_f64().is_some());
}

#[test]
fn analyze_identity_channel() {
    let out = cpnilp_stdin(&["analyze", "-"], IDENTITY);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert!(report["summary"].get("order").is_none());
    assert_eq!(report["verdicts"]["thm_2_4"], "not_applicable");
    assert_eq!(report["verdicts"]["commuting_flags"], "not_applicable");
    assert_eq!(report["verdicts"]["prop_2_1"], "pass");
}

#[test]
fn malformed_input_is_a_parse_error() {
    let out = cpnilp_stdin(&["analyze", "-"], "{\"schema_version\": ");
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["error"]["kind"], "usage");
    let extra = SHIFT.replacen("\"kind\"", "\"extra\":1,\"kind\"", 1);
    assert_eq!(code(&cpnilp_stdin(&["analyze", "-"], &extra)), 2);
    assert_eq!(code(&cpnilp(&["analyze", "/nonexistent/file.json"])), 2);
    assert_eq!(code(&cpnilp(&["--gap-ratio", "0.5", "analyze", "-"])), 2);
}

#[test]
fn synthesize_then_analyze() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("t.json");
    let out = cpnilp(&["synthesize", "--type", "1,2", "-d", "2", "--out", path_str(&file)]);
    assert_eq!(code(&out), 0);
    let report = json(&cpnilp(&["analyze", path_str(&file)]));
    assert_eq!(report["summary"]["cp_type"], serde_json::json!([1, 2]));
    assert_eq!(report["summary"]["adjoint_type"], serde_json::json!([2, 1]));
    assert_eq!(report["status"], "pass");

    let out = cpnilp(&["synthesize", "--type", "1,2", "-d", "1"]);
    assert_eq!(code(&out), 4);

    let out = cpnilp(&["synthesize", "--type", "3", "-d", "1"]);
    assert_eq!(code(&out), 0);
    let instance = json(&out);
    assert_eq!(instance["kind"], "kraus_map");
    let report = json(&cpnilp_stdin(&["analyze", "-"], &instance.to_string()));
    assert_eq!(report["summary"]["order"], 1);
}

#[test]
fn analyze_reproduces_every_small_synthesized_type() {
    fn types(left: usize, last: Option<usize>, d: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        let cap = last.map_or(left, |a| left.min(d * a));
        for a in 1..=cap {
            prefix.push(a);
            types(left - a, Some(a), d, prefix, out);
            prefix.pop();
        }
    }
    let mut checked = 0;
    for d in 1..=3 {
        for n in 1..=6 {
            let mut all = Vec::new();
            types(n, None, d, &mut Vec::new(), &mut all);
            for t in all {
                let list = t.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
                let instance = cpnilp(&["synthesize", "--type", &list, "-d", &d.to_string()]);
                let report = json(&cpnilp_stdin(&["analyze", "-"], &String::from_utf8_lossy(&instance.stdout)));
                assert_eq!(report["summary"]["cp_type"], serde_json::json!(t), "d={d}");
                assert_eq!(report["status"], "pass", "type {t:?}, d={d}");
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("ce");
    let args = ["verify", "--n-max", "4", "--d-max", "2", "--trials", "12", "--seed", "3", "--out", path_str(&out_dir)];
    let first = cpnilp(&args);
    assert_eq!(code(&first), 0);
    let a = json(&first);
    let b = json(&cpnilp(&args));
    assert_eq!(a["verdicts"], b["verdicts"]);
    assert_eq!(a["counts"], b["counts"]);
    assert_eq!(a["seed"], 3);
    assert_eq!(a["verdicts"]["thm_3_1"], "pass");
    assert!(!out_dir.exists());
}

#[test]
fn verify_rejects_zero_trials() {
    let out = cpnilp(&["verify", "--trials", "0"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["error"]["kind"], "usage");
}

#[test]
fn counterexamples_replay() {
    // tolerances this loose break the kernel correspondence on some random maps
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("ce");
    let tol = ["--atol", "1e-2", "--gap-ratio", "2"];
    let mut args = tol.to_vec();
    args.extend(["verify", "--n-max", "3", "--trials", "10", "--out", path_str(&out_dir)]);
    let out = cpnilp(&args);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    let failures = report["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    for f in failures {
        let file = f["counterexample"].as_str().unwrap();
        let dumped: Value = serde_json::from_slice(&std::fs::read(file).unwrap()).unwrap();
        let kind = &dumped["kind"];
        let mut replay = tol.to_vec();
        if *kind == "vector" {
            replay.extend(["extreme", "--input", file]);
        } else {
            replay.extend(["analyze", file]);
        }
        let again = cpnilp(&replay);
        assert_ne!(code(&again), 0, "{file} did not reproduce");
        if let Some(check) = f["checks"][0].as_str() {
            if let Some(v) = json(&again)["verdicts"].get(check) {
                assert_eq!(v, "fail");
            }
        }
    }

    let out_dir = dir.path().join("ill");
    let out = cpnilp(&["--atol", "1e-3", "verify", "--n-max", "3", "--trials", "2", "--out", path_str(&out_dir)]);
    assert_eq!(code(&out), 3);
    let file = out_dir.join("counterexample-seed1-trial0.json");
    assert_eq!(code(&cpnilp(&["--atol", "1e-3", "analyze", path_str(&file)])), 3);
}

#[test]
fn extreme_points_of_small_vectors() {
    let out = cpnilp(&["extreme", "1", "1", "1"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["count"], 4);
    assert!(report["points"].as_array().unwrap().contains(&serde_json::json!([0.0, 0.0, 3.0])));
    assert_eq!(report["verdicts"]["extreme_grid"], "pass");

    let report = json(&cpnilp(&["extreme", "2"]));
    assert_eq!(report["points"], serde_json::json!([[2.0]]));

    assert_eq!(code(&cpnilp(&["extreme", "1,0"])), 4);
    assert_eq!(code(&cpnilp(&["extreme", "1", "-2"])), 4);
}

#[test]
fn root_build_and_check() {
    let dir = TempDir::new().unwrap();
    let shift = dir.path().join("shift.json");
    let root = dir.path().join("root.json");
    std::fs::write(&shift, SHIFT).unwrap();

    let out = cpnilp(&["root", "build", path_str(&shift), "--out", path_str(&root)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["p"], 2);

    let out = cpnilp(&["root", "check", path_str(&root)]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["is_root_of_state"], true);
    assert_eq!(report["compression_order"], 2);

    let out = cpnilp(&["root", "check", path_str(&root), "--p", "1"]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["reason"], "PowerMismatch");

    let out = cpnilp_stdin(&["root", "build", "-"], IDENTITY);
    assert_eq!(code(&out), 4);
    assert!(json(&out)["error"]["message"].as_str().unwrap().contains("not nilpotent"));

    let posing = r#"{"schema_version":"1","kind":"root_candidate","payload":{"dim":2,"kraus":[[[[1,0],[0,0]],[[0,0],[1,0]]]],"u":[[1,0],[0,0]],"p":1}}"#;
    let out = cpnilp_stdin(&["root", "check", "-"], posing);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["reason"], "PowerMismatch");
}

#[test]
fn root_build_rejects_non_contractive_maps() {
    let big = r#"{"schema_version":"1","kind":"kraus_map","payload":{"dim":2,"kraus":[[[[0,0],[2,0]],[[0,0],[0,0]]]]}}"#;
    let out = cpnilp_stdin(&["root", "build", "-"], big);
    assert_eq!(code(&out), 4);
    assert!(json(&out)["error"]["message"].as_str().unwrap().contains("contractive"));
}
