use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/v1")
}

fn medalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medalign")).args(args).output().unwrap()
}

fn with_fixtures(cmd: &str, extra: &[&str]) -> Output {
    let dir = fixtures();
    let m = dir.join("manifest.jsonl");
    let a = dir.join("annotations.jsonl");
    let mut args = vec![cmd, "--manifest", m.to_str().unwrap(), "--annotations", a.to_str().unwrap()];
    args.extend_from_slice(extra);
    medalign(&args)
}

fn align_records(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_manifest_names_the_path() {
    let out = medalign(&["evaluate", "--manifest", "no/such/manifest.jsonl", "--annotations", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no/such/manifest.jsonl"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(medalign(&["evaluate"]).status.code(), Some(1));
    assert_eq!(with_fixtures("evaluate", &["--format", "xml"]).status.code(), Some(1));
    assert_eq!(with_fixtures("evaluate", &["--threshold", "1.5"]).status.code(), Some(1));
    assert_eq!(with_fixtures("evaluate", &["--max-ngram", "0"]).status.code(), Some(1));
    assert_eq!(with_fixtures("evaluate", &["--workers", "0"]).status.code(), Some(1));
    assert_eq!(with_fixtures("evaluate", &["--group-by", "ward"]).status.code(), Some(1));
    assert_eq!(medalign(&["--help"]).status.code(), Some(0));
}

#[test]
fn align_digoxin_candidates() {
    let records = align_records(&with_fixtures("align", &[]));
    let row: Vec<_> = records.iter().filter(|r| r["id"] == "digoxin-interaction").collect();
    let candidates: Vec<_> = row.iter().map(|r| r["candidate"].as_str().unwrap()).collect();
    assert_eq!(candidates, ["quinidan", "disopiramid", "dikod sin"]);
    let begins: Vec<_> = row.iter().map(|r| r["begin"].as_u64().unwrap()).collect();
    assert_eq!(begins, [7, 18, 77]);

    let ids: Vec<_> = records.iter().map(|r| r["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);

    let empty: Vec<_> = records.iter().filter(|r| r["id"] == "empty-hypothesis").collect();
    assert_eq!(empty.len(), 3);
    assert!(empty.iter().all(|r| r["candidate"].is_null()));
}

#[test]
fn threshold_one_keeps_only_exact_matches() {
    let records = align_records(&with_fixtures("align", &["--threshold", "1.0"]));
    let matched: Vec<_> = records
        .iter()
        .filter(|r| r["id"] == "ketamine-analgesia" && !r["candidate"].is_null())
        .map(|r| r["entity"].as_str().unwrap())
        .collect();
    assert_eq!(matched, ["paralysis"]);
}

#[test]
fn unigrams_only_split_digoxin() {
    let records = align_records(&with_fixtures("align", &["--max-ngram", "1"]));
    let digoxin = records.iter().find(|r| r["id"] == "digoxin-interaction" && r["entity"] == "digoxin").unwrap();
    assert_eq!(digoxin["candidate"], "dikod");
    assert_eq!(digoxin["score"], serde_json::json!(0.5));
}

#[test]
fn evaluate_reports_all_formats() {
    let json: Value = serde_json::from_slice(&with_fixtures("evaluate", &[]).stdout).unwrap();
    assert_eq!(json["corpus"]["samples"], 8);
    assert_eq!(json["config"]["threshold"], serde_json::json!(0.5));
    let digoxin = json["per_sample"].as_array().unwrap().iter().find(|s| s["id"] == "digoxin-interaction").unwrap();
    assert_eq!(digoxin["mwer"]["rate"], serde_json::json!(1.3333));

    let table = String::from_utf8(with_fixtures("evaluate", &["--format", "table"]).stdout).unwrap();
    assert!(table.contains("M-WER") && table.contains("M-CER"));

    let csv = String::from_utf8(with_fixtures("evaluate", &["--format", "csv"]).stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 + 1);
    assert!(csv.lines().last().unwrap().starts_with("ALL,"));
}

#[test]
fn per_sample_and_groups() {
    let dir = tempfile::tempdir().unwrap();
    let per = dir.path().join("samples.jsonl");
    let out = dir.path().join("report.json");
    let run = with_fixtures(
        "evaluate",
        &["--group-by", "model,domain", "--per-sample", per.to_str().unwrap(), "--out", out.to_str().unwrap()],
    );
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(run.stdout.is_empty());
    let lines = fs::read_to_string(&per).unwrap();
    assert_eq!(lines.lines().count(), 8);
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["groups"]["domain"]["clinical"]["samples"], 8);
    assert_eq!(report["groups"]["model"]["(none)"]["samples"], 1);
}

#[test]
fn selfcheck_passes_on_embedded_fixtures() {
    let out = medalign(&["selfcheck"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("selfcheck passed"));
}

fn copy_fixtures(to: &Path) {
    for name in ["manifest.jsonl", "annotations.jsonl", "expected.json"] {
        fs::copy(fixtures().join(name), to.join(name)).unwrap();
    }
}

#[test]
fn selfcheck_flags_config_drift() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixtures(dir.path());
    let path = dir.path().join("expected.json");
    let text = fs::read_to_string(&path).unwrap().replacen("\"threshold\": 0.5", "\"threshold\": 0.6", 1);
    fs::write(&path, text).unwrap();
    let out = medalign(&["selfcheck", "--fixtures", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL config"));
}

#[test]
fn selfcheck_flags_wrong_expected_value() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixtures(dir.path());
    let path = dir.path().join("expected.json");
    let text = fs::read_to_string(&path).unwrap().replacen("\"quinidan\"", "\"quinidine\"", 1);
    fs::write(&path, text).unwrap();
    let out = medalign(&["selfcheck", "--fixtures", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL golden: digoxin-interaction alignment"));
}

#[test]
fn selfcheck_names_missing_fixture_file() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixtures(dir.path());
    fs::remove_file(dir.path().join("expected.json")).unwrap();
    let out = medalign(&["selfcheck", "--fixtures", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("expected.json"));
    assert!(stderr(&out).contains("missing"));
}

#[test]
fn strict_mode_rejects_missing_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let a = dir.path().join("a.jsonl");
    fs::write(&m, "{\"id\":\"s9\",\"reference\":\"fever\",\"hypothesis\":\"fever\"}\n").unwrap();
    fs::write(&a, "").unwrap();
    let lenient = medalign(&["evaluate", "--manifest", m.to_str().unwrap(), "--annotations", a.to_str().unwrap()]);
    assert!(lenient.status.success());
    let strict =
        medalign(&["evaluate", "--manifest", m.to_str().unwrap(), "--annotations", a.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr(&strict).contains("s9"));
}

#[test]
fn category_map_extends_labels() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let a = dir.path().join("a.jsonl");
    let map = dir.path().join("map.json");
    fs::write(&m, "{\"id\":\"s1\",\"reference\":\"given digoxin\",\"hypothesis\":\"given digoxin\"}\n").unwrap();
    fs::write(
        &a,
        "{\"id\":\"s1\",\"entities\":[{\"text\":\"digoxin\",\"category\":\"DRUG\",\"begin\":6,\"end\":13}]}\n",
    )
    .unwrap();
    fs::write(&map, "{\"DRUG\": \"MED\"}").unwrap();
    let args = ["evaluate", "--manifest", m.to_str().unwrap(), "--annotations", a.to_str().unwrap()];
    assert_eq!(medalign(&args).status.code(), Some(2));
    let mut mapped = args.to_vec();
    mapped.extend(["--category-map", map.to_str().unwrap()]);
    let out = medalign(&mapped);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["corpus"]["recall"]["MED"]["recalled"], 1);
}
