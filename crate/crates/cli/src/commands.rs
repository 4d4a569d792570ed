use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use cpnilp_core::ensemble::trial_rng;
use cpnilp_core::json::Instance;
use cpnilp_core::majorization::{extreme_points, MajorizationVector};
use cpnilp_core::nilpotency::{nilpotency_order, synthesize as synthesize_map};
use cpnilp_core::roots::{build_root, check_root, compress_to_nilpotent, RootCandidate};
use cpnilp_core::verify::{analyze as analyze_map, any_failed, extreme_verdicts, run_trial, Verdict, Verdicts};
use cpnilp_core::{CPNilpotentType, Error, KrausMap, Tolerance};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{Failure, Outcome};

fn read_input(path: &str) -> Result<String, Failure> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Usage(format!("reading stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("reading {path}: {e}")))?;
    }
    Ok(text)
}

fn load(path: &str) -> Result<Instance, Failure> {
    Instance::parse(&read_input(path)?).map_err(|e| Failure::Usage(format!("{path}: {e}")))
}

fn load_map(path: &str) -> Result<KrausMap, Failure> {
    match load(path)? {
        Instance::KrausMap(alpha) => Ok(alpha),
        other => Err(Failure::Usage(format!("{path}: expected kind kraus_map, found {}", other.kind()))),
    }
}

fn write_instance(instance: &Instance, out: Option<&Path>) -> Result<Value, Failure> {
    let doc = instance.to_json().map_err(Failure::from)?;
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&doc).expect("serializable instance");
        fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("writing {}: {e}", path.display())))?;
    }
    Ok(doc)
}

fn status(verdicts: &Verdicts) -> (&'static str, u8) {
    if any_failed(verdicts) {
        ("fail", 1)
    } else {
        ("pass", 0)
    }
}

pub fn analyze(input: &str, tol: &Tolerance) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let alpha = load_map(input)?;
    let analysis = analyze_map(&alpha, tol)?;
    let (label, code) = status(&analysis.verdicts);
    let document = json!({
        "command": "analyze",
        "input": input,
        "summary": analysis.summary,
        "verdicts": analysis.verdicts,
        "status": label,
        "tolerance": tol,
        "seed": Value::Null,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    Ok(Outcome { document, code })
}

pub fn synthesize(type_list: Vec<usize>, d: usize, out: Option<&Path>) -> Result<Outcome, Failure> {
    let t = CPNilpotentType::new(type_list);
    let alpha = synthesize_map(&t, d)?;
    let doc = write_instance(&Instance::KrausMap(alpha), out)?;
    let document = match out {
        Some(path) => json!({
            "command": "synthesize",
            "type": t,
            "d": d,
            "out": path.display().to_string(),
        }),
        None => doc,
    };
    Ok(Outcome { document, code: 0 })
}

pub fn verify(
    n_max: usize,
    d_max: usize,
    trials: u64,
    seed: u64,
    out: &Path,
    tol: &Tolerance,
) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let outcomes: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(seed, trial, n_max, d_max, tol))
        .collect::<Result<_, Error>>()?;

    let mut verdicts = Verdicts::new();
    let mut counts: BTreeMap<String, BTreeMap<&'static str, u64>> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut ill_conditioned = 0;
    for outcome in &outcomes {
        for (key, &v) in &outcome.verdicts {
            let merged = verdicts.get(key).map_or(v, |old: &Verdict| old.merge(v));
            verdicts.insert(key.clone(), merged);
            let label = match v {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::NotApplicable => "not_applicable",
            };
            *counts.entry(key.clone()).or_default().entry(label).or_default() += 1;
        }
        if let Some(f) = &outcome.failure {
            if f.ill_conditioned {
                ill_conditioned += 1;
            }
            fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("creating {}: {e}", out.display())))?;
            let path = out.join(format!("counterexample-seed{seed}-trial{}.json", outcome.trial));
            write_instance(&f.instance, Some(&path))?;
            failures.push(json!({
                "trial": outcome.trial,
                "checks": f.checks,
                "ill_conditioned": f.ill_conditioned,
                "counterexample": path.display().to_string(),
            }));
        }
    }
    let code = if failures.len() > ill_conditioned {
        1
    } else if ill_conditioned > 0 {
        3
    } else {
        0
    };
    let document = json!({
        "command": "verify",
        "n_max": n_max,
        "d_max": d_max,
        "trials": trials,
        "verdicts": verdicts,
        "counts": counts,
        "failures": failures,
        "status": if code == 0 { "pass" } else { "fail" },
        "tolerance": tol,
        "seed": seed,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    Ok(Outcome { document, code })
}

pub fn extreme(x: Vec<f64>, input: Option<&str>, seed: u64, tol: &Tolerance) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let x = match input {
        Some(path) => match load(path)? {
            Instance::Vector(v) => v,
            other => return Err(Failure::Usage(format!("{path}: expected kind vector, found {}", other.kind()))),
        },
        None => x,
    };
    if x.is_empty() {
        return Err(Failure::Usage("x is empty".into()));
    }
    if let Some(v) = x.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Failure::Precondition(format!("x has a non-positive entry {v}")));
    }
    let x = MajorizationVector(x);
    let points = extreme_points(&x)?;
    let mut rng = trial_rng(seed, 0);
    let verdicts = extreme_verdicts(&x, 16, &mut rng, tol)?;
    let (label, code) = status(&verdicts);
    let document = json!({
        "command": "extreme",
        "x": x.0,
        "count": points.len(),
        "points": points.iter().map(|p| p.0.clone()).collect::<Vec<_>>(),
        "verdicts": verdicts,
        "status": label,
        "tolerance": tol,
        "seed": seed,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    Ok(Outcome { document, code })
}

pub fn root_build(input: &str, out: Option<&Path>, tol: &Tolerance) -> Result<Outcome, Failure> {
    let alpha = load_map(input)?;
    let root = build_root(&alpha, tol)?.with_kraus_form(tol)?;
    let p = root.order;
    let doc = write_instance(&Instance::RootCandidate(root), out)?;
    let document = match out {
        Some(path) => json!({ "command": "root build", "p": p, "out": path.display().to_string() }),
        None => doc,
    };
    Ok(Outcome { document, code: 0 })
}

pub fn root_check(input: &str, p: Option<usize>, tol: &Tolerance) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let mut candidate: RootCandidate = match load(input)? {
        Instance::RootCandidate(r) => r,
        other => return Err(Failure::Usage(format!("{input}: expected kind root_candidate, found {}", other.kind()))),
    };
    if let Some(p) = p {
        candidate.order = p;
    }
    let check = check_root(&candidate, tol);
    let compression_order = match check {
        Ok(()) if candidate.tau.dim() > 1 => {
            let compressed = compress_to_nilpotent(&candidate, tol)?;
            nilpotency_order(&compressed, tol)?
        }
        _ => None,
    };
    let document = json!({
        "command": "root check",
        "input": input,
        "p": candidate.order,
        "is_root_of_state": check.is_ok(),
        "verdict": if check.is_ok() { Verdict::Pass } else { Verdict::Fail },
        "reason": check.err().map(|r| r.to_string()),
        "compression_order": compression_order,
        "tolerance": tol,
        "seed": Value::Null,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    Ok(Outcome { document, code: if check.is_ok() { 0 } else { 4 } })
}
