use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pqk(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pqk"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(text) = config {
        let path = out.with_extension("json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn haar_check_small_run_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("haar");
    let o = pqk(&["haar-check", "--seed", "5"], Some(r#"{"dims":[2],"samples":4000,"ks_samples":2000,"twirl_cases":[[2,1]]}"#), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["seed"], 5);
    assert!(m["failing"].as_array().unwrap().is_empty());
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let csv = fs::read_to_string(out.join("haar_check.csv")).unwrap();
    assert!(csv.starts_with("check,d,samples,"));
    assert!(csv.contains("lemma2") && csv.contains("partial_twirl"));
}

#[test]
fn haar_check_refuses_tiny_sample_counts_and_bad_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqk(&["haar-check"], Some(r#"{"samples":10}"#), &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fewer than 100 samples"), "{}", stderr(&o));
    let o = pqk(&["haar-check"], Some(r#"{"dims":[1]}"#), &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(2));
    let o = pqk(&["haar-check"], Some(r#"{"dimz":[2]}"#), &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
}

#[test]
fn theory_check_flags_bound_only_and_bad_placement_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let config = r#"{"cases":[
        {"check":"variance","circuit":{"type":"ala","n":4,"m":2,"layers":2,"kind":"haar"},"kappa":[1],"pairs":4000},
        {"check":"variance","circuit":{"type":"ala","n":8,"m":2,"layers":4,"kind":"haar"},"kappa":[3],"pairs":500},
        {"check":"bridge","max_m":4}
    ]}"#;
    let o = pqk(&["theory-check"], Some(config), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let checks = manifest(&out)["checks"].as_array().unwrap().clone();
    assert_eq!(checks.len(), 3);
    assert_eq!(checks[1]["status"], "warn");
    assert!(checks[1]["detail"].as_str().unwrap().contains("bound only"));

    let bad = r#"{"cases":[{"check":"variance","circuit":{"type":"ala","n":6,"m":2,"layers":2,"kind":"haar"},"kappa":[2,3],"pairs":500}]}"#;
    let out = dir.path().join("bad");
    let o = pqk(&["theory-check"], Some(bad), &out);
    assert_eq!(o.status.code(), Some(1));
    let csv = fs::read_to_string(out.join("theory_check.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains("more than one final-layer block"), "{row}");
}

#[test]
fn default_theory_suite_reports_same_block_covariance_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = pqk(&["theory-check", "--threads", "2"], None, &out);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(&out);
    let failing: Vec<&str> = m["failing"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(failing, ["covariance ala_haar n=4 L=2 kappa=1|2"]);
    assert_eq!(m["threads"], 2);
}

#[test]
fn sweep_is_byte_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"base":{"circuit":{"type":"ala","n":4,"m":2,"layers":2,"kind":"reupload"},"kappa":[1],
        "sampling":{"mode":"data_ensemble","points":6},"seed":3},
        "values":[1,2,3],"inits":["all_zero","ghz","haar_random"]}"#;
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(pqk(&["sweep", "--kind", "depth"], Some(config), &a).status.success());
    assert!(pqk(&["sweep", "--kind", "depth", "--threads", "1"], Some(config), &b).status.success());
    let x = fs::read(a.join("sweep_depth.csv")).unwrap();
    assert_eq!(x, fs::read(b.join("sweep_depth.csv")).unwrap());
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), 1 + 9);
}

#[test]
fn sweep_rejects_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"base":{"circuit":{"type":"ala","n":4,"m":2,"layers":2,"kind":"reupload"},"kappa":[1],
        "sampling":{"mode":"data_ensemble","points":6}},"values":[],"inits":["all_zero"]}"#;
    let o = pqk(&["sweep", "--kind", "depth"], Some(config), &dir.path().join("e"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty sweep grid"));
}

#[test]
fn gram_sweep_writes_one_row_per_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let config = r#"{"qubits":[4],"layers":2,"points":8,"inits":["all_zero","haar_random"],"replicates":3}"#;
    assert!(pqk(&["sweep", "--kind", "gram"], Some(config), &out).status.success());
    let csv = fs::read_to_string(out.join("sweep_gram.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn svm_demo_fits_two_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = pqk(&["svm-demo"], None, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let acc: Value = serde_json::from_str(&fs::read_to_string(out.join("svm_accuracy.json")).unwrap()).unwrap();
    assert_eq!(acc["train"], 1.0);
    assert!(out.join("gram_train.csv").exists() && out.join("svm_model.json").exists());
}

#[test]
fn svm_demo_with_zero_box_predicts_plus_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = pqk(&["svm-demo"], Some(r#"{"svm":{"c":0.0}}"#), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("svm_predictions.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "{csv}");
}

#[test]
fn svm_demo_rejects_mismatched_labels() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"train":{"x":[[0.1,0.2,0.3,0.4],[0.3,0.4,0.5,0.6]],"labels":[1]}}"#;
    let o = pqk(&["svm-demo"], Some(config), &dir.path().join("s"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("2 points but 1 labels"), "{}", stderr(&o));
}
