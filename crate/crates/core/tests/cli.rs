use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tangleforge"));
    c.env_remove("TANGLEFORGE_SEED");
    c
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tangleforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn p3() -> PathBuf {
    scratch("p3.txt", "3 2\n0 1\n1 2\n")
}

#[test]
fn separations_of_p3() {
    let g = p3();
    let (code, out) = run(&["separations", g.to_str().unwrap(), "--k", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["payload"]["separations"].as_array().unwrap().len(), 5);
}

#[test]
fn duality_stree_round_trip() {
    let g = p3();
    let (code, out) = run(&["duality", g.to_str().unwrap(), "--k", "3", "--family", "ustar"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["payload"]["verdict"], "stree");
    let c = scratch("dual.json", &out);
    assert_eq!(run(&["verify", c.to_str().unwrap(), g.to_str().unwrap()]).0, 0);
    let (again, out2) = run(&["duality", g.to_str().unwrap(), "--k", "3", "--family", "ustar"]);
    assert_eq!(again, 0);
    assert_eq!(out, out2);
}

#[test]
fn tampered_certificate_fails() {
    let g = p3();
    let (_, out) = run(&["treewidth", g.to_str().unwrap()]);
    let tampered = out.replacen("\"width\": 1", "\"width\": 2", 1);
    assert_ne!(tampered, out);
    let c = scratch("tw.json", &tampered);
    let (code, doc) = run(&["verify", c.to_str().unwrap(), g.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(doc.contains("digest mismatch"), "{doc}");
}

#[test]
fn usage_and_seed() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["separations"]).0, 2);
    let g = p3();
    let out = bin().env("TANGLEFORGE_SEED", "7").args(["treewidth", g.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refusal_and_parse_errors() {
    let g = p3();
    let (code, doc) = run(&["bramble", g.to_str().unwrap(), "--k", "3"]);
    assert_eq!(code, 1);
    assert!(doc.contains("refusal"));
    let bad = scratch("bad.txt", "3 2\n0 1\n");
    assert_eq!(run(&["treewidth", bad.to_str().unwrap()]).0, 1);
}

#[test]
fn graph6_input_and_jobs() {
    let k4 = scratch("k4.g6", "C~\n");
    let (code, out) = run(&["--format", "graph6", "--jobs", "2", "tangles", k4.to_str().unwrap(), "--k", "3"]);
    assert_eq!(code, 0);
    let (_, single) = run(&["--format", "graph6", "--jobs", "1", "tangles", k4.to_str().unwrap(), "--k", "3"]);
    assert_eq!(out, single);
    let c = scratch("k4.json", &out);
    assert_eq!(run(&["--format", "graph6", "verify", c.to_str().unwrap(), k4.to_str().unwrap()]).0, 0);
}

#[test]
fn every_subcommand_verifies() {
    let g = scratch("two_k4.txt", "6 11\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n2 4\n2 5\n3 4\n3 5\n4 5\n");
    let gs = g.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["separations", gs, "--k", "3"],
        vec!["tangles", gs, "--k", "3", "--family", "tstar"],
        vec!["duality", gs, "--k", "3"],
        vec!["treewidth", gs],
        vec!["bramble", gs, "--k", "3"],
        vec!["bramble", gs, "--k", "3", "--max"],
        vec!["bramble", gs, "--k", "4", "--report"],
        vec!["refine", gs, "--k", "3"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let (code, out) = run(args);
        assert_eq!(code, 0, "{args:?}: {out}");
        let c = scratch(&format!("c{i}.json"), &out);
        assert_eq!(run(&["verify", c.to_str().unwrap(), gs]).0, 0, "{args:?}");
    }
    let (code, out) = run(&["limits", "ray_clique", "--n", "10"]);
    assert_eq!(code, 0);
    let c = scratch("lim.json", &out);
    assert_eq!(run(&["verify", c.to_str().unwrap()]).0, 0);
}
