use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_steiner-lab"));
    c.env_remove("STEINER_LAB_BUDGET");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, value: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, value.to_string()).unwrap();
    p
}

fn examples(dir: &Path, name: &str) {
    let out = run(dir, &["examples", name]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn examples_write_points_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "square");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("square.json")).unwrap()).unwrap();
    assert_eq!(v["points"], json!([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]));
    assert!(!v["note"].as_str().unwrap().is_empty());
    examples(dir.path(), "triangle-fan");
    for k in 1..=5 {
        assert!(dir.path().join(format!("triangle-fan-{k}.json")).exists());
    }
    let out = run(dir.path(), &["examples", "pentagon"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_counts_shortest_networks() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["square", "octagon", "triangle-fan"] {
        examples(dir.path(), name);
    }
    for (file, count) in [("square.json", 2), ("triangle-fan-1.json", 1), ("octagon.json", 8)] {
        let r = stdout_json(&run(dir.path(), &["solve", file]));
        assert_eq!(r["minima"].as_array().unwrap().len(), count, "{file}");
    }
}

#[test]
fn solve_output_and_rendering_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "square");
    let a = run(dir.path(), &["solve", "square.json"]);
    let b = run(dir.path(), &["solve", "square.json"]);
    assert_eq!(a.stdout, b.stdout);
    std::fs::write(dir.path().join("r.json"), &a.stdout).unwrap();
    assert!(run(dir.path(), &["render", "r.json", "-o", "a.svg"]).status.success());
    assert!(run(dir.path(), &["render", "r.json", "-o", "b.svg"]).status.success());
    let svg = std::fs::read(dir.path().join("a.svg")).unwrap();
    assert_eq!(svg, std::fs::read(dir.path().join("b.svg")).unwrap());
    let text = String::from_utf8(svg).unwrap();
    assert_eq!(text.matches("<line").count(), 10);
    assert!(text.contains("stroke-dasharray"));
}

#[test]
fn melzak_check_agrees_on_full_minima() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "square");
    let r = stdout_json(&run(dir.path(), &["solve", "square.json", "--melzak-check"]));
    let checks = r["melzak_check"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        assert!(c["delta"].as_f64().unwrap().abs() < 1e-9, "{c}");
    }
}

#[test]
fn budget_from_environment_caps_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "octagon");
    let out = bin().current_dir(dir.path()).env("STEINER_LAB_BUDGET", "6").args(["solve", "octagon.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    let out = run(dir.path(), &["solve", "octagon.json", "--budget", "6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"dim\": 2, \"points\": [[0, 0], [1]]").unwrap();
    assert_eq!(run(dir.path(), &["solve", "bad.json"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["solve", "missing.json"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["solve"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn path_between_acute_triangles_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", json!({"dim": 2, "points": [[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]]}));
    write(dir.path(), "b.json", json!({"dim": 2, "points": [[0.1, 0.0], [1.0, 0.2], [0.4, 0.9]]}));
    let out = run(dir.path(), &["path", "a.json", "b.json", "--samples", "50"]);
    let p = stdout_json(&out);
    assert_eq!(p["passed"], json!(true));
    let samples = p["samples"].as_array().unwrap();
    assert!(samples.len() >= 50);
    assert_eq!(samples[0]["config"]["points"], json!([[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]]));

    std::fs::write(dir.path().join("p.json"), &out.stdout).unwrap();
    let frames = run(dir.path(), &["render", "p.json", "-o", "frames"]);
    assert!(frames.status.success());
    assert_eq!(std::fs::read_dir(dir.path().join("frames")).unwrap().count(), samples.len());
    assert!(run(dir.path(), &["render", "p.json", "--frame", "2", "-o", "one.svg"]).status.success());
    assert_eq!(run(dir.path(), &["render", "p.json", "--frame", "100000", "-o", "x.svg"]).status.code(), Some(1));
}

#[test]
fn path_rejects_endpoints_of_different_size() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "square");
    examples(dir.path(), "triangle-fan");
    let out = run(dir.path(), &["path", "triangle-fan-1.json", "square.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cell_mode_is_planar_only() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", json!({"dim": 3, "points": [[0, 0, 0], [1, 0, 0], [0, 1, 0]]}));
    write(dir.path(), "b.json", json!({"dim": 3, "points": [[0, 0, 0], [1, 0, 0.2], [0, 1, 0.3]]}));
    let out = run(dir.path(), &["path", "a.json", "b.json", "--cell-mode"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of theorem scope"));
}

#[test]
fn ambiguous_endpoint_needs_a_type() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "square");
    let out = run(dir.path(), &["path", "square.json", "square.json"]);
    assert_eq!(out.status.code(), Some(1));
    let sig = stdout_json(&run(dir.path(), &["solve", "square.json"]))["minima"][0]["signature"].as_str().unwrap().to_string();
    let out = run(dir.path(), &["path", "square.json", "square.json", "--type", &sig]);
    assert_eq!(out.status.code(), Some(2), "ambiguous endpoints are outside the unambiguous construction");
}

#[test]
fn classify3_matches_search() {
    let dir = tempfile::tempdir().unwrap();
    examples(dir.path(), "triangle-fan");
    let expected = ["full-ccw", "full-cw", "path-A", "path-B", "path-C"];
    for (k, ty) in expected.iter().enumerate() {
        let v = stdout_json(&run(dir.path(), &["classify3", &format!("triangle-fan-{}.json", k + 1)]));
        assert_eq!(v["type"], json!(ty));
        assert_eq!(v["agree"], json!(true));
    }
    let a = run(dir.path(), &["classify3", "--random", "200", "--seed", "3"]);
    let b = run(dir.path(), &["classify3", "--random", "200", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["disagreements"], json!([]));
}

#[test]
fn trim_and_grow_edit_leaves() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.json", json!({"dim": 2, "points": [[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]]}));
    let t = stdout_json(&run(dir.path(), &["trim", "t.json", "--terminal", "1", "--t", "0.5"]));
    let p = &t["config"]["points"][0];
    assert!(p[0].as_f64().unwrap() > 0.0 && p[1].as_f64().unwrap() > 0.0);
    assert_eq!(run(dir.path(), &["trim", "t.json", "--terminal", "1", "--t", "1.5"]).status.code(), Some(2));

    let g = stdout_json(&run(dir.path(), &["grow", "t.json", "--terminal", "2", "--r", "0.1", "--kind", "two-sided", "--side", "right"]));
    assert_eq!(g["grown"]["config"]["points"].as_array().unwrap().len(), 4);
    std::fs::write(dir.path().join("g.json"), g.to_string()).unwrap();
    assert!(run(dir.path(), &["render", "g.json", "-o", "g.svg"]).status.success());

    let r1 = stdout_json(&run(dir.path(), &["r1", "t.json", "--terminal", "2", "--kind", "two-sided"]));
    let est = &r1["estimate"];
    assert!(est["lower"].as_f64().unwrap() > 0.0 && est["lower"].as_f64() <= est["upper"].as_f64());
    assert_eq!(run(dir.path(), &["grow", "t.json", "--terminal", "0", "--r", "0.1"]).status.code(), Some(1));
}

#[test]
fn bundled_figures_render() {
    let dir = tempfile::tempdir().unwrap();
    for (fig, panels) in [("square-overlay", 0), ("triangle-fan", 5), ("octagon-moustache", 3)] {
        let file = format!("{fig}.svg");
        assert!(run(dir.path(), &["render", "--figure", fig, "-o", &file]).status.success());
        let svg = std::fs::read_to_string(dir.path().join(&file)).unwrap();
        assert_eq!(svg.matches("<text x=").count() - svg.matches("font-size=\"11\"").count(), panels, "{fig}");
    }
}
