//! End-to-end checks of the command-line surface and its exit-code contract:
//! 0 success, 1 validation failure, 2 infeasible spec, 3 unclassifiable,
//! 4 oracle domain errors.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wander-atlas"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("wander-atlas-test-{}-{name}", std::process::id()));
    p
}

fn write_spec(name: &str, body: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn generate_validate_classify_ladder() {
    let spec = write_spec("ladder.json", r#"{"degree": 2, "label": "ladder"}"#);
    let graph = tmp("ladder-graph.json");
    let out = bin()
        .args(["generate"])
        .arg(&spec)
        .args(["--depth", "5", "--out"])
        .arg(&graph)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed = wander_atlas_core::AtomGraph::from_json(&std::fs::read_to_string(&graph).unwrap())
        .unwrap();
    assert_eq!(parsed.atoms.len(), 6);

    let out = bin().arg("validate").arg(&graph).output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("pass  rh-identity"));

    let out = bin().arg("classify").arg(&graph).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("attractor side: One"));
    assert!(text.contains("repeller side:  One"));

    let dot = tmp("ladder.dot");
    let out = bin().arg("reeb").arg(&graph).arg("--out").arg(&dot).output().unwrap();
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph reeb {"));
}

#[test]
fn generate_branching_spec_counts() {
    // one order-2 branch point on the chain: depth 5 beyond it gives the
    // trunk plus 2^0 + ... + 2^5 = 63 branch atoms
    let spec = write_spec(
        "branch.json",
        r#"{"degree": 2, "events": [{"address": [0], "mult": 2}]}"#,
    );
    let graph = tmp("branch-graph.json");
    let out = bin()
        .arg("generate")
        .arg(&spec)
        .args(["--depth", "5", "--out"])
        .arg(&graph)
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed = wander_atlas_core::AtomGraph::from_json(&std::fs::read_to_string(&graph).unwrap())
        .unwrap();
    assert_eq!(parsed.atoms.len(), 64);
    assert_eq!(parsed.atoms.iter().filter(|a| a.generation < 0).count(), 63);

    let out = bin().arg("classify").arg(&graph).output().unwrap();
    let text = stdout(&out);
    assert!(text.contains("attractor side: One"));
    assert!(text.contains("repeller side:  Cantor"));
}

#[test]
fn infeasible_spec_exits_2_with_rule() {
    let spec = write_spec(
        "merge.json",
        r#"{"degree": 2, "events": [{"address": [0], "mult": 2, "side": "merge"}]}"#,
    );
    let out = bin().arg("generate").arg(&spec).args(["--depth", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("infinitely-many-singular-points"), "stderr: {err}");
}

#[test]
fn validate_fails_on_broken_graph() {
    let spec = write_spec("ok.json", r#"{"degree": 2}"#);
    let graph = tmp("break-graph.json");
    bin()
        .arg("generate")
        .arg(&spec)
        .args(["--depth", "3", "--out"])
        .arg(&graph)
        .output()
        .unwrap();
    let mut g =
        wander_atlas_core::AtomGraph::from_json(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    g.atoms[1].cover_degree = 7;
    std::fs::write(&graph, g.to_json()).unwrap();
    let out = bin().arg("validate").arg(&graph).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("validate").arg(&graph).arg("--json").output().unwrap();
    assert!(stdout(&out).contains("\"passed\": false"));
}

#[test]
fn oracle_surface() {
    let out = bin().args(["oracle", "tau", "--map", "z2", "4", "0"]).output().unwrap();
    assert!(out.status.success());
    let tau: f64 = stdout(&out).trim().parse().unwrap();
    assert!((tau + 0.471234).abs() < 1e-5);

    // non-escaping point: exit 4
    let out = bin().args(["oracle", "tau", "--map", "z2", "0.5", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = bin().args(["oracle", "preimages", "--map", "z2", "4", "0"]).output().unwrap();
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);

    let out = bin()
        .args(["oracle", "neutral", "--map", "z2", "--n", "3", "1.06", "1.06"])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("points: 8"));

    let out = bin().args(["oracle", "levels", "--map", "z2c", "--c-re", "1"]).output().unwrap();
    let first: f64 = stdout(&out).lines().next().unwrap().trim().parse().unwrap();
    assert!((first - 2.2956).abs() < 1e-3);

    let out = bin()
        .args(["oracle", "levels", "--map", "z2", "--trace", "-1", "--grid", "512"])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("components: 1"));
}

#[test]
fn extract_and_crosscheck() {
    let graph = tmp("extracted.json");
    let out = bin()
        .args(["oracle", "extract", "--map", "z2", "--depth", "3", "--grid", "768", "--out"])
        .arg(&graph)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("validation: pass"));

    let spec = write_spec("xc.json", r#"{"degree": 2}"#);
    let out = bin()
        .arg("crosscheck")
        .arg(&spec)
        .args(["--map", "z2", "--depth", "3", "--grid", "768"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("isomorphic: yes"));

    // degree mismatch: extraction of z^3 against a degree-2 ladder
    let out = bin()
        .arg("crosscheck")
        .arg(&spec)
        .args(["--map", "z3", "--depth", "2", "--grid", "1024"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("isomorphic: no"));
}

#[test]
fn unclassifiable_exits_3() {
    // a stump with no stabilized row below it
    let spec = write_spec(
        "shallow.json",
        r#"{"degree": 2, "events": [{"address": [0], "mult": 2}]}"#,
    );
    let graph = tmp("shallow-graph.json");
    bin()
        .arg("generate")
        .arg(&spec)
        .args(["--depth", "1", "--out"])
        .arg(&graph)
        .output()
        .unwrap();
    let g =
        wander_atlas_core::AtomGraph::from_json(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    // keep generations >= -1 only (drop the stabilized row)
    let atoms: Vec<_> = g.atoms.iter().filter(|a| a.generation >= -1).cloned().collect();
    let keep: std::collections::BTreeSet<_> = atoms.iter().map(|a| a.id).collect();
    let circles: Vec<_> = g
        .circles
        .iter()
        .filter(|c| {
            atoms.iter().any(|a| a.internal.contains(&c.id) || a.external.contains(&c.id))
        })
        .cloned()
        .map(|mut c| {
            if c.inner_atom.map(|i| !keep.contains(&i)).unwrap_or(false) {
                c.inner_atom = None;
            }
            if c.outer_atom.map(|o| !keep.contains(&o)).unwrap_or(false) {
                c.outer_atom = None;
            }
            c
        })
        .collect();
    let truncated =
        wander_atlas_core::AtomGraph::from_parts(2, atoms, circles, g.base_chain.clone(), 1)
            .unwrap();
    std::fs::write(&graph, truncated.to_json()).unwrap();
    let out = bin().arg("classify").arg(&graph).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
