use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn qcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcat"))
        .args(args)
        .env_remove("QCAT_SEED")
        .output()
        .expect("qcat runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn eval_lists_nadd_entries() {
    let o = qcat(&["eval", path(&data("nadd2.qcat.json"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("signature: [2, 2] -> [2, 2]\n"));
    for line in ["|10⟩⟨11|  1.000000000000", "|11⟩⟨10|  1.000000000000", "nonzero: 4"] {
        assert!(text.contains(line), "missing {line:?} in\n{text}");
    }
}

#[test]
fn eval_of_ghz_and_scalar() {
    let ghz = stdout(&qcat(&["eval", path(&data("ghz3.qcat.json"))]));
    assert!(ghz.contains("|111⟩  0.577350269190"));
    assert!(ghz.contains("nonzero: 3"));
    let scalar = stdout(&qcat(&["eval", path(&data("scalar2.qcat.json"))]));
    assert!(scalar.ends_with("scalar: 2.000000000000\n"));
    let as_json = json(&qcat(&["eval", "--json", path(&data("scalar2.qcat.json"))]));
    assert_eq!(as_json["entries"][0]["re"], 2.0);
}

#[test]
fn exit_codes() {
    let broken = qcat(&["eval", path(&data("broken.qcat.json"))]);
    assert_eq!(broken.status.code(), Some(2));
    assert!(stderr(&broken).starts_with("qcat: parse error"));
    assert!(broken.stdout.is_empty());

    let invalid = qcat(&["eval", path(&data("invalid.qcat.json"))]);
    assert_eq!(invalid.status.code(), Some(3));
    assert!(stderr(&invalid).contains("DimMismatch"));

    let unknown = qcat(&["rewrite", path(&data("snake.qcat.json")), "--rules", "snake,no-such-rule"]);
    assert_eq!(unknown.status.code(), Some(5));

    let missing = qcat(&["eval", "/nonexistent/x.qcat.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn rewrite_straightens_a_snake() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snake.out.qcat.json");
    let report = dir.path().join("report.json");
    let o = qcat(&[
        "rewrite",
        path(&data("snake.qcat.json")),
        "--rules",
        "snake",
        "--verify",
        "-o",
        path(&out),
        "--report",
        path(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("step 1: snake"));
    let before = qcat::document::parse::<f64>(&fs::read_to_string(data("snake.qcat.json")).unwrap()).unwrap();
    let after = qcat::document::parse::<f64>(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(after.node_count(), 0);
    let diff = after.evaluate().unwrap().max_abs_diff(&before.evaluate().unwrap()).unwrap();
    assert!(diff < 1e-9);
    let rep: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["command"][1], "rewrite");
    assert_eq!(rep["steps"][0]["verdict"], "pass");
    assert_eq!(rep["nodes_after"], 0);
}

#[test]
fn rewrite_without_matches_is_identity_on_documents() {
    let original = fs::read_to_string(data("wire.qcat.json")).unwrap();
    let o = qcat(&["rewrite", path(&data("wire.qcat.json")), "--rules", "snake"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), original);
}

#[test]
fn fusion_strategy_reaches_one_dot() {
    let o = qcat(&["rewrite", path(&data("ghz4_dots.qcat.json")), "--rules", "spider-copy,snake", "--verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let nf = qcat::document::parse::<f64>(&stdout(&o)).unwrap();
    assert_eq!(nf.node_count(), 1);
    assert_eq!(nf.nodes().values().next(), Some(&qcat::GeneratorSpec::copy_dot(2, 0, 4)));
}

#[test]
fn corpus_round_trips_byte_for_byte() {
    let entries = fs::read_dir(data("")).unwrap().chain(fs::read_dir(data("corpus")).unwrap());
    let mut checked = 0;
    for entry in entries {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if !name.ends_with(".qcat.json") || name == "broken.qcat.json" || name == "invalid.qcat.json" {
            continue;
        }
        let original = fs::read_to_string(&p).unwrap();
        let o = qcat(&["rewrite", path(&p), "--rules", "neg-cancel", "--max-steps", "0"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        assert_eq!(stdout(&o), original, "{name} changed on round trip");
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} documents");
}

#[test]
fn ghz_circuit_document_reaches_one_dot() {
    let rules = qcat::rewrite::GHZ_STRATEGY.join(",");
    let o = qcat(&["rewrite", path(&data("corpus/ghz4-circuit.qcat.json")), "--rules", &rules, "--verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let nf = qcat::document::parse::<f64>(&stdout(&o)).unwrap();
    assert_eq!(nf.nodes().values().collect::<Vec<_>>(), [&qcat::GeneratorSpec::copy_dot(2, 0, 4)]);
    assert!((nf.scalar.value().re - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn export_is_deterministic() {
    let first = qcat(&["export", path(&data("corpus/h3.qcat.json"))]);
    let second = qcat(&["export", path(&data("corpus/h3.qcat.json"))]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).contains("n0 [shape=box, label=\"H\"];"));
    let broken = qcat(&["export", path(&data("broken.qcat.json"))]);
    assert_eq!(broken.status.code(), Some(2));
    let invalid = qcat(&["export", path(&data("invalid.qcat.json"))]);
    assert_eq!(invalid.status.code(), Some(3));
}

#[test]
fn qubit_only_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcat(&["verify-rules", "--dims", "2", "--reproducers", path(dir.path())]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("result: pass"));
}

#[test]
fn dot_export_matches_golden_file() {
    let o = qcat(&["export", path(&data("teleport.qcat.json")), "--format", "dot"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), fs::read_to_string(data("teleport.dot")).unwrap());
}

#[test]
fn protocols_pass_and_report_json() {
    for name in ["ghz", "superdense", "teleport", "gate-teleport"] {
        let o = qcat(&["protocol", name, "--dim", "2", "--trials", "3"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        assert!(stdout(&o).ends_with("result: pass\n"), "{name}");
    }
    let t = json(&qcat(&["protocol", "teleport", "--dim", "3", "--json"]));
    assert_eq!(t["passed"], true);
    assert_eq!(t["branches"].as_array().unwrap().len(), 9);
    assert_eq!(t["seed"], 7);
    let s = json(&qcat(&["protocol", "superdense", "--dim", "3", "--p", "2", "--q", "0", "--json"]));
    let hit: Vec<_> = s["branches"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|b| b["probability"].as_f64().unwrap() > 0.5)
        .map(|b| b["label"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(hit, ["2,0"]);
}

#[test]
fn seed_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_qcat"))
        .args(["protocol", "teleport", "--json"])
        .env("QCAT_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&o)["seed"], 99);
    let flag = Command::new(env!("CARGO_BIN_EXE_qcat"))
        .args(["protocol", "teleport", "--json", "--seed", "5"])
        .env("QCAT_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&flag)["seed"], 5);
}

#[test]
fn verify_rules_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcat(&[
        "verify-rules",
        "--rules",
        "spider-copy,snake,hopf",
        "--dims",
        "2,3",
        "--trials",
        "5",
        "--json",
        "--reproducers",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 6);
    assert!(cells.iter().all(|c| c["failed"] == 0 && c["passed"].as_u64().unwrap() > 0));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn corrupted_rule_fails_with_reproducers() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcat(&[
        "verify-rules",
        "--rules",
        "spider-copy",
        "--dims",
        "3",
        "--trials",
        "2",
        "--corrupt",
        "spider-copy",
        "--reproducers",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("result: fail"));
    let first = dir.path().join("spider-copy-d3-0.qcat.json");
    let host = qcat::document::parse::<f64>(&fs::read_to_string(first).unwrap()).unwrap();
    assert!(host.validate().is_empty());
}
