use std::process::Command;

use vinolab_core::harness::{self, merge, merge_reports, ExperimentConfig, Report};
use vinolab_core::Error;

/// Cheap settings for every registered experiment.
fn quick(id: &str) -> ExperimentConfig {
    let c = ExperimentConfig::defaults(id).unwrap();
    let set: &[(&str, &str)] = match id {
        "geometry-exactness" => &[("cases", "100"), ("trials", "2")],
        "partition-lemmas" => &[("samples", "5000")],
        "triple-volume" | "l4-planks" => &[("delta", "1/8")],
        "tube-incidence" | "plate-incidence" | "counting-oracle" => &[("trials", "2")],
        "plank-incidence" => &[("trials", "1"), ("r_max", "8")],
        "moments" => &[("samples", "5000")],
        "criticality" => &[("R", "2^8,2^10"), ("samples", "2000"), ("trials", "2")],
        "flat-decoupling" => &[("trials", "5")],
        "pigeonhole" => &[("trials", "3")],
        _ => &[],
    };
    set.iter().fold(c, |c, (k, v)| c.with(k, v).unwrap())
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

#[test]
fn catalogue_has_at_least_ten_experiments() {
    let list = harness::list_experiments();
    assert!(list.len() >= 10);
    for module in ["geometry", "partition", "incidence", "decoupling"] {
        assert!(list.iter().any(|(_, m, _)| *m == module), "{module}");
    }
    let mut ids: Vec<_> = list.iter().map(|e| e.0).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), list.len());
}

#[test]
fn every_report_validates_and_csv_is_reproducible() {
    let validator = schema();
    for exp in harness::EXPERIMENTS {
        let config = quick(exp.id);
        let a = harness::run(&config).unwrap();
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&json).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", exp.id);
        assert_eq!(a.columns, exp.columns, "{}", exp.id);
        let header = a.to_csv().lines().next().unwrap().to_string();
        assert_eq!(header, exp.columns.join(","));
        let seed = a.config["seed"].clone();
        assert!(a.rows.iter().all(|r| r["seed"] == seed), "{}: rows must carry the config seed", exp.id);
        let b = harness::run(&config).unwrap();
        assert_eq!(a.to_csv(), b.to_csv(), "{}", exp.id);
        assert_eq!(Report::from_json(&a.to_json()).unwrap(), a, "{}: JSON round trip", exp.id);
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let validator = schema();
    let good: serde_json::Value = serde_json::from_str(&harness::run(&quick("exponents")).unwrap().to_json()).unwrap();
    assert!(validator.is_valid(&good));
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("rows");
    assert!(!validator.is_valid(&missing));
    let mut nested = good.clone();
    nested["rows"][0]["value"] = serde_json::json!({"x": 1});
    assert!(!validator.is_valid(&nested));
    let mut module = good;
    module["module"] = serde_json::json!("astrology");
    assert!(!validator.is_valid(&module));
}

#[test]
fn partition_example_has_no_violations() {
    let c = ExperimentConfig::defaults("partition-lemmas").unwrap().with("R", "2^9").unwrap();
    let r = harness::run(&c).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0]["violations"], 0);
    assert!(r.pass);
}

#[test]
fn l4_example_gives_finite_rows() {
    let c = ExperimentConfig::defaults("l4-planks").unwrap().with("delta", "1/8").unwrap().with("method", "exact").unwrap();
    let r = harness::run(&c).unwrap();
    assert_eq!(r.rows.len(), 1);
    for key in ["l4", "l1", "ratio", "normalized"] {
        let v = r.rows[0][key].as_f64().unwrap();
        assert!(v.is_finite() && v > 0.0, "{key} = {v}");
    }
}

#[test]
fn moment_csv_columns() {
    let r = harness::run(&quick("moments")).unwrap();
    assert_eq!(r.to_csv().lines().next().unwrap(), "p,R,alpha,estimate,stderr,samples,seed");
}

fn split(id: &str, trials: &[(usize, usize)]) -> Vec<Report> {
    trials
        .iter()
        .map(|&(first, n)| {
            let c = quick(id).with("first_trial", first).unwrap().with("trials", n).unwrap();
            harness::run(&c).unwrap()
        })
        .collect()
}

#[test]
fn merged_single_trials_equal_a_two_trial_run() {
    for id in ["geometry-exactness", "tube-incidence", "counting-oracle", "flat-decoupling", "pigeonhole", "criticality"] {
        let whole = split(id, &[(0, 2)]).remove(0);
        // given in reverse order on purpose
        let merged = merge(split(id, &[(1, 1), (0, 1)])).unwrap();
        assert_eq!(merged.config, whole.config, "{id}");
        assert_eq!(merged.rows, whole.rows, "{id}");
        assert_eq!(merged.summary, whole.summary, "{id}");
        assert_eq!(merged.assertions, whole.assertions, "{id}");
        assert_eq!(merged.to_csv(), whole.to_csv(), "{id}");
    }
}

#[test]
fn merge_refusals() {
    let none: [&str; 0] = [];
    assert!(matches!(merge_reports(&none), Err(Error::Config { field, .. }) if field == "paths"));
    let a = harness::run(&quick("exponents")).unwrap();
    let b = harness::run(&quick("triple-volume")).unwrap();
    assert!(matches!(merge(vec![a.clone(), b]), Err(Error::Config { field, .. }) if field == "experiment"));
    let other_seed = harness::run(&quick("exponents").with("seed", 9).unwrap()).unwrap();
    assert!(matches!(merge(vec![a, other_seed]), Err(Error::Config { field, .. }) if field == "seed"));
    let gap = split("flat-decoupling", &[(0, 1), (2, 1)]);
    assert!(matches!(merge(gap), Err(Error::Config { field, .. }) if field == "first_trial"));
}

#[test]
fn merge_reads_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let parts = split("flat-decoupling", &[(0, 2), (2, 3)]);
    let paths: Vec<_> = parts
        .iter()
        .enumerate()
        .map(|(i, r)| r.write(&dir.path().join(i.to_string())).unwrap().0)
        .collect();
    let merged = merge_reports(&paths).unwrap();
    let whole = split("flat-decoupling", &[(0, 5)]).remove(0);
    assert_eq!(merged.to_csv(), whole.to_csv());
}

#[test]
fn config_errors_name_the_field() {
    use harness::ConfigBuilder;
    let field = |text: &str| match ConfigBuilder::from_text(text).and_then(|b| b.build()) {
        Err(Error::Config { field, .. }) => field,
        other => panic!("expected a config error, got {other:?}"),
    };
    assert_eq!(field("R = 2^9"), "experiment");
    assert_eq!(field("experiment = partition-lemmas\nR = 500"), "R");
    assert_eq!(field("experiment = partition-lemmas\nsamples = many"), "samples");
    assert_eq!(field("experiment = partition-lemmas\ntrials = 3"), "trials");
    assert_eq!(field("experiment = l4-planks\nmethod = guess"), "method");
    assert_eq!(field("experiment = moments\nformat = xml"), "format");
    assert!(matches!(
        ConfigBuilder::from_text("experiment = nope").unwrap().build(),
        Err(Error::UnknownExperiment(id)) if id == "nope"
    ));
}

#[test]
fn flags_override_file_keys() {
    use harness::ConfigBuilder;
    let b = ConfigBuilder::from_text("experiment = exponents\nseed = 3\np = 10,12").unwrap().set("seed", 5);
    let c = b.build().unwrap();
    assert_eq!(c.seed(), 5);
    assert_eq!(c.floats("p").unwrap(), vec![10.0, 12.0]);
}

fn vinolab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vinolab"))
}

#[test]
fn cli_exit_status_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ok = vinolab()
        .args(["decoupling", "--experiment", "exponents", "--format", "csv"])
        .env(harness::OUT_ENV, dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("seed,quantity,p,d,value\n"));
    assert!(dir.path().join("exponents.json").exists() && dir.path().join("exponents.csv").exists());

    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "experiment = partition-lemmas\nsamples = lots\n").unwrap();
    let bad = vinolab().args(["partition", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("samples"));

    let failing = vinolab()
        .args(["decoupling", "--experiment", "flat-decoupling", "--set", "constant_cap=0.5", "--trials", "3"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stderr).contains("bounded"));

    let wrong_module = vinolab().args(["geometry", "--experiment", "exponents"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(wrong_module.status.code(), Some(2));

    let list = vinolab().args(["report", "list"]).output().unwrap();
    assert!(String::from_utf8_lossy(&list.stdout).lines().count() >= 10);
}

#[test]
fn cli_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(k.to_string());
        let s = vinolab()
            .args(["incidence", "--experiment", "counting-oracle", "--seed", "11", "--trials", "3"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(s.status.success());
        csvs.push(std::fs::read(out.join("counting-oracle.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn cli_merge() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for first in 0..2 {
        let out = dir.path().join(first.to_string());
        let s = vinolab()
            .args(["decoupling", "--experiment", "flat-decoupling", "--trials", "1", "--set"])
            .arg(format!("first_trial={first}"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(s.status.success());
        paths.push(out.join("flat-decoupling.json"));
    }
    let m = vinolab().args(["report", "merge"]).args(&paths).arg("--out").arg(dir.path()).output().unwrap();
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    let merged = Report::read(&dir.path().join("merged/flat-decoupling.json")).unwrap();
    assert_eq!(merged.config["trials"], 2);
    let empty = vinolab().args(["report", "merge"]).output().unwrap();
    assert_eq!(empty.status.code(), Some(2));
}
