//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test -p vinolab-validation --test acceptance -- 1 6 8`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use vinolab_core::harness::{self, ExperimentConfig, Report};
use vinolab_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn config(id: &str, set: &[(&str, &str)]) -> Result<ExperimentConfig> {
    set.iter().try_fold(ExperimentConfig::defaults(id)?, |c, (k, v)| c.with(k, v))
}

fn run(id: &str, set: &[(&str, &str)]) -> Result<Report> {
    harness::run(&config(id, set)?)
}

/// Verdict from the named assertions of a report, or from all of them.
fn judge(report: &Report, names: &[&str]) -> Outcome {
    let picked: Vec<_> = report.assertions.iter().filter(|a| names.is_empty() || names.contains(&a.name.as_str())).collect();
    let missing: Vec<&&str> = names.iter().filter(|n| !picked.iter().any(|a| a.name == **n)).collect();
    let pass = missing.is_empty() && !picked.is_empty() && picked.iter().all(|a| a.pass);
    let mut parts: Vec<String> = picked
        .iter()
        .map(|a| format!("{} {} ({})", a.name, if a.pass { "ok" } else { "FAILED" }, a.detail))
        .collect();
    parts.extend(missing.iter().map(|n| format!("{n} missing")));
    Outcome { pass, detail: format!("{}: {}", report.experiment, parts.join("; ")) }
}

fn combine(outcomes: Vec<Outcome>) -> Outcome {
    Outcome {
        pass: outcomes.iter().all(|o| o.pass),
        detail: outcomes.into_iter().map(|o| o.detail).collect::<Vec<_>>().join(" | "),
    }
}

fn geometry() -> Result<Outcome> {
    Ok(judge(&run("geometry-exactness", &[("cases", "1000"), ("trials", "1")])?, &[]))
}

fn triple_volume() -> Result<Outcome> {
    Ok(judge(&run("triple-volume", &[("delta", "1/8,1/16,1/32")])?, &["volume-band"]))
}

fn l4_planks() -> Result<Outcome> {
    Ok(judge(&run("l4-planks", &[("delta", "1/8,1/16,1/32"), ("method", "exact")])?, &["normalized-growth"]))
}

fn partition() -> Result<Outcome> {
    let r = run("partition-lemmas", &[("R", "2^9,2^12"), ("samples", "1e5")])?;
    Ok(judge(&r, &["containment", "multiplicity-growth"]))
}

fn incidence() -> Result<Outcome> {
    Ok(combine(vec![
        judge(&run("tube-incidence", &[("R", "2^12"), ("N", "4"), ("trials", "20")])?, &[]),
        judge(&run("plate-incidence", &[("delta", "1/16"), ("N", "2"), ("bound", "both"), ("trials", "20")])?, &[]),
        judge(&run("plank-incidence", &[("R", "2^12"), ("N", "2"), ("Z1", "2"), ("trials", "20")])?, &[]),
    ]))
}

fn counting() -> Result<Outcome> {
    Ok(judge(&run("counting-oracle", &[("R", "2^6"), ("trials", "50")])?, &["exact-match"]))
}

fn criticality() -> Result<Outcome> {
    let r = run("criticality", &[("R", "2^8,2^10,2^12,2^14,2^16"), ("trials", "20"), ("samples", "1e6")])?;
    Ok(judge(&r, &["random-phase-slope", "supercritical-gap"]))
}

fn exponents() -> Result<Outcome> {
    Ok(judge(&run("exponents", &[])?, &["sigma-10-3", "critical-bound-7"]))
}

fn pigeonhole() -> Result<Outcome> {
    Ok(judge(&run("pigeonhole", &[("trials", "110")])?, &["fixtures-recovered", "ly-le-mx", "single-constant"]))
}

/// Small settings for every registered experiment, run twice.
fn determinism() -> Result<Outcome> {
    let mut differing = Vec::new();
    for exp in harness::EXPERIMENTS {
        let set: &[(&str, &str)] = match exp.id {
            "geometry-exactness" => &[("cases", "200"), ("trials", "2")],
            "partition-lemmas" => &[("samples", "5000")],
            "triple-volume" | "l4-planks" => &[("delta", "1/8")],
            "tube-incidence" | "plate-incidence" | "counting-oracle" => &[("trials", "2")],
            "plank-incidence" => &[("trials", "1"), ("r_max", "8")],
            "moments" => &[("samples", "5000")],
            "criticality" => &[("R", "2^8,2^10"), ("samples", "5000"), ("trials", "2")],
            "flat-decoupling" => &[("trials", "5")],
            "pigeonhole" => &[("trials", "12")],
            _ => &[],
        };
        let c = config(exp.id, set)?.with("seed", 20240611)?;
        let (a, b) = (harness::run(&c)?, harness::run(&c)?);
        if a.to_csv().as_bytes() != b.to_csv().as_bytes() {
            differing.push(exp.id);
        }
    }
    Ok(Outcome {
        pass: differing.is_empty(),
        detail: format!("{} experiments rerun with one seed; differing CSV: {:?}", harness::EXPERIMENTS.len(), differing),
    })
}

type Check = fn() -> Result<Outcome>;

const CRITERIA: [(&str, Check, u64); 10] = [
    ("geometry exactness", geometry, 5),
    ("triple intersection volume band", triple_volume, 120),
    ("L4 plank growth", l4_planks, 600),
    ("partition containment and multiplicity", partition, 120),
    ("incidence envelopes", incidence, 900),
    ("rich-cube counting oracle", counting, u64::MAX),
    ("decoupling criticality", criticality, 1800),
    ("exponent arithmetic", exponents, u64::MAX),
    ("pigeonholing", pigeonhole, u64::MAX),
    ("determinism", determinism, u64::MAX),
];

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (i, (name, check, limit)) in CRITERIA.iter().enumerate() {
        let n = i + 1;
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*limit);
        let pass = outcome.pass && in_time;
        let budget = if *limit == u64::MAX { String::new() } else { format!(", limit {limit} s") };
        println!(
            "criterion {n:>2} {:<4} {name} [{:.1} s{budget}]{}: {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            if in_time { "" } else { " over time" },
            outcome.detail
        );
        if !pass {
            failed.push(n);
        }
    }
    println!("acceptance: {} of {ran} criteria passed; failed: {failed:?}", ran - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
