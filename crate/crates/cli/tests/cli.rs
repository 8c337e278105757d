//! Contract tests for the `grts` binary: exit codes, file formats, and
//! the documented examples for each subcommand.

use assert_cmd::Command;
use grts_core::rts::{Rts, Rule};
use predicates::prelude::*;

fn grts() -> Command {
    Command::cargo_bin("grts").unwrap()
}

fn torus_files(dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let schema = dir.join("torus_schema.json");
    let learned = dir.join("torus.grts");
    grts()
        .args(["schema", "--builtin", "torus_434", "--out"])
        .arg(&schema)
        .assert()
        .success();
    grts()
        .args(["learn", "--schema"])
        .arg(&schema)
        .arg("--out")
        .arg(&learned)
        .assert()
        .success()
        .stdout(predicate::str::contains("states"));
    (schema, learned)
}

#[test]
fn verify_passes_on_learned_torus() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, learned) = torus_files(dir.path());
    grts()
        .args(["verify", "--grts"])
        .arg(&learned)
        .arg("--schema")
        .arg(&schema)
        .assert()
        .success()
        .stdout(predicate::str::contains("verification passed"));
}

#[test]
fn verify_rejects_flipped_rule_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, learned) = torus_files(dir.path());
    let mut rts = Rts::deserialize(&std::fs::read_to_string(&learned).unwrap()).unwrap();
    let (q, f) = rts
        .states
        .iter()
        .enumerate()
        .find_map(|(q, s)| {
            s.rules.iter().position(|r| matches!(r, Rule::Side { .. })).map(|f| (q, f))
        })
        .unwrap();
    if let Rule::Side { dist, .. } = &mut rts.states[q].rules[f] {
        dist[0] -= 1;
    }
    let bad = dir.path().join("bad.grts");
    std::fs::write(&bad, rts.serialize()).unwrap();
    grts()
        .args(["verify", "--grts"])
        .arg(&bad)
        .arg("--schema")
        .arg(&schema)
        .assert()
        .code(6)
        .stdout(predicate::str::contains("FAILED"));
}

#[test]
fn verify_rejects_mismatched_schema_hash() {
    let dir = tempfile::tempdir().unwrap();
    let (_, learned) = torus_files(dir.path());
    let other = dir.path().join("sw_schema.json");
    grts()
        .args(["schema", "--builtin", "seifert_weber_535", "--out"])
        .arg(&other)
        .assert()
        .success();
    grts()
        .args(["verify", "--grts"])
        .arg(&learned)
        .arg("--schema")
        .arg(&other)
        .assert()
        .code(2)
        .stderr(predicate::str::contains("hash mismatch"));
}

#[test]
fn verify_rejects_unparsable_grts() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, _) = torus_files(dir.path());
    let junk = dir.path().join("junk.grts");
    std::fs::write(&junk, "{not json").unwrap();
    grts()
        .args(["verify", "--grts"])
        .arg(&junk)
        .arg("--schema")
        .arg(&schema)
        .assert()
        .code(2);
}

#[test]
fn learn_rejects_invalid_schema_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad_schema.json");
    // face pairing broken: face 0 of the cube glued to a non-paired face
    let (schema, _) = torus_files(dir.path());
    let text = std::fs::read_to_string(&schema).unwrap().replace("[0,0,0,5]", "[0,0,0,4]");
    assert_ne!(text, std::fs::read_to_string(&schema).unwrap());
    std::fs::write(&bad, text).unwrap();
    grts()
        .args(["learn", "--schema"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out.grts"))
        .assert()
        .code(2)
        .stderr(predicate::str::contains("validation"));
}

#[test]
fn learn_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, learned) = torus_files(dir.path());
    let again = dir.path().join("again.grts");
    grts()
        .args(["learn", "--schema"])
        .arg(&schema)
        .arg("--out")
        .arg(&again)
        .assert()
        .success();
    assert_eq!(
        std::fs::read_to_string(&learned).unwrap(),
        std::fs::read_to_string(&again).unwrap()
    );
}

#[test]
fn coordseq_zero_and_table_terms() {
    let dir = tempfile::tempdir().unwrap();
    let (_, learned) = torus_files(dir.path());
    grts()
        .args(["coordseq", "--grts"])
        .arg(&learned)
        .args(["--n", "0"])
        .assert()
        .success()
        .stdout("1\n");
    grts()
        .args(["coordseq", "--grts"])
        .arg(&learned)
        .args(["--n", "5"])
        .assert()
        .success()
        .stdout("1, 6, 18, 38, 66, 102\n");
    grts()
        .args(["--json", "coordseq", "--grts"])
        .arg(&learned)
        .args(["--n", "2"])
        .assert()
        .success()
        .stdout("[1,6,18]\n");
}

#[test]
fn export_point_counts_and_ball_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, learned) = torus_files(dir.path());
    let g0 = dir.path().join("g0.json");
    grts()
        .args(["export", "--grts"])
        .arg(&learned)
        .arg("--schema")
        .arg(&schema)
        .args(["--radius", "0", "--model", "poincare_ball", "--out"])
        .arg(&g0)
        .assert()
        .success()
        .stdout(predicate::str::contains("1 points"));
    let g2 = dir.path().join("g2.json");
    grts()
        .args(["export", "--grts"])
        .arg(&learned)
        .arg("--schema")
        .arg(&schema)
        .args(["--radius", "2", "--model", "poincare_ball", "--out"])
        .arg(&g2)
        .assert()
        .success()
        .stdout(predicate::str::contains("25 points"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&g2).unwrap()).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 25);
    // Euclidean export uses raw coordinates; the norm bound applies to
    // the hyperbolic Poincare ball, checked in the acceptance suite.
    for p in points {
        assert_eq!(p.as_array().unwrap().len(), 3);
    }
}

#[test]
fn fieldquotient_writes_reports_and_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fq");
    grts()
        .args(["fieldquotient", "--symbol", "3,3,6", "--prime", "3", "--out"])
        .arg(&out)
        .assert()
        .success();
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.ends_with("_report.json")));
    assert!(names.iter().any(|n| n.contains("_q1_schema")));
    assert!(names.iter().any(|n| n.contains("_q5_schema")));
    let report = names.iter().find(|n| n.ends_with("_report.json")).unwrap();
    let text = std::fs::read_to_string(out.join(report)).unwrap();
    assert!(text.contains("\"cells\":10"), "report: {text}");
}

#[test]
fn fieldquotient_not_found_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    // a tiny enumeration cap finds nothing
    grts()
        .args(["fieldquotient", "--symbol", "3,3,6", "--prime", "3", "--limit", "1", "--out"])
        .arg(dir.path().join("none"))
        .assert()
        .code(3);
    // Euclidean and malformed symbols are usage errors
    grts()
        .args(["fieldquotient", "--symbol", "4,3,4", "--prime", "3", "--out"])
        .arg(dir.path().join("e"))
        .assert()
        .code(2);
    grts()
        .args(["fieldquotient", "--symbol", "bogus", "--prime", "3", "--out"])
        .arg(dir.path().join("b"))
        .assert()
        .code(2);
}
