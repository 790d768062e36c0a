use std::process::{Command, Output};

fn squaremap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squaremap"))
        .args(args)
        .env_remove("SQUAREMAP_MAX_NODES")
        .env_remove("SQUAREMAP_MAX_STREAM_NODES")
        .env_remove("SQUAREMAP_MAX_SPHERE_RESIDUES")
        .env_remove("SQUAREMAP_MAX_SECONDS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = squaremap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

#[test]
fn decompose_p2() {
    let text = stdout(&["decompose", "-p", "2"]);
    assert!(text.contains("P = {0, 1}"));
    assert!(text.contains("M = {}"));
    let v = json(&["decompose", "-p", "2", "--format", "json"]);
    assert_eq!(v["special_p2"], true);
    assert_eq!(v["minimal"].as_array().unwrap().len(), 0);
}

#[test]
fn decompose_p11_json() {
    let v = json(&["decompose", "-p", "11", "--depth", "1", "--format", "json"]);
    assert_eq!(v["p"], 11);
    let lengths: Vec<u64> = v["periodic"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|o| o["d"] != 0)
        .map(|o| o["length"].as_u64().unwrap())
        .collect();
    assert_eq!(lengths, vec![1, 4]);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["p", "N", "depth", "s", "periodic", "minimal", "basin"]);
    for comp in v["minimal"].as_array().unwrap() {
        assert!(comp["disks"].as_array().unwrap().iter().all(|d| d.is_string()));
    }
}

#[test]
fn decompose_p7_text() {
    let text = stdout(&["decompose", "-p", "7", "--depth", "2"]);
    assert!(text.contains("orbit 1, sphere 1: 2 components of 3 disks, radius 7^-2"));
    assert!(text.contains("{8, 15, 29}"));
}

#[test]
fn decompose_writes_output_file() {
    let path = std::env::temp_dir().join(format!("squaremap-report-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let printed = stdout(&["decompose", "-p", "5", "--format", "json", "--output", p]);
    assert!(printed.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["p"], 5);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["decompose", "-p", "13", "--format", "json"][..],
        &["graph", "-p", "11", "-n", "2"][..],
        &["verify", "-p", "5", "--max-level", "3"][..],
    ] {
        assert_eq!(stdout(args), stdout(args), "{args:?}");
    }
}

fn dot_nodes(dot: &str) -> usize {
    dot.lines().filter(|l| l.trim_end().ends_with("\";") && !l.contains("->")).count()
}

#[test]
fn graph_dot() {
    let units = stdout(&["graph", "-p", "11", "-n", "1", "--units-only"]);
    assert!(units.starts_with("digraph \"units_11_1\" {"));
    assert_eq!(dot_nodes(&units), 10);
    assert!(units.contains("\"3\" -> \"9\";"));
    assert!(!units.contains("\"0\""));

    let ring = stdout(&["graph", "-p", "3", "-n", "2"]);
    assert_eq!(dot_nodes(&ring), 9);

    let path = std::env::temp_dir().join(format!("squaremap-17-{}.dot", std::process::id()));
    let census = stdout(&["graph", "-p", "17", "-n", "1", "--units-only", "--dot", path.to_str().unwrap()]);
    assert_eq!(census.trim(), "cycles {(1, 1)}");
    let dot = std::fs::read_to_string(&path).unwrap();
    assert_eq!(dot_nodes(&dot), 16);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn classify_examples() {
    let all = stdout(&["classify", "-p", "3", "-n", "1", "--all"]);
    let rows: Vec<&str> = all.lines().skip(1).collect();
    assert_eq!(rows, ["0\t1\t0\t-\tGrowsTails", "1\t1\t2\t-\tPartiallySplits(2)"]);
    assert!(stdout(&["classify", "-p", "3", "-n", "2", "--cycle", "4"]).ends_with("\tGrows\n"));
    assert!(stdout(&["classify", "-p", "7", "-n", "1", "--cycle", "2"]).ends_with("\tPartiallySplits(3)\n"));
    let v = json(&["classify", "-p", "7", "-n", "1", "--cycle", "2", "--format", "json"]);
    assert_eq!(v[0]["class"]["r"], 3);
}

#[test]
fn classify_needs_a_target() {
    assert_eq!(squaremap(&["classify", "-p", "3"]).status.code(), Some(2));
    // 3 is not periodic mod 7
    assert_eq!(squaremap(&["classify", "-p", "7", "--cycle", "3"]).status.code(), Some(2));
}

#[test]
fn verify_examples() {
    for (p, n) in [("3", "5"), ("7", "4"), ("13", "3")] {
        let text = stdout(&["verify", "-p", p, "--max-level", n]);
        assert!(text.trim_end().ends_with("0 failed"), "{text}");
        assert!(!text.contains("FAIL"));
    }
    let v = json(&["verify", "-p", "11", "--max-level", "3", "--format", "json"]);
    assert_eq!(v["passed"], true);
}

#[test]
fn wieferich_examples() {
    assert_eq!(stdout(&["wieferich", "--limit", "4000"]), "1093 2\n3511 2\n");
    assert_eq!(stdout(&["wieferich", "--limit", "1000"]), "");
    assert_eq!(stdout(&["wieferich", "--limit", "100"]), "");
    let v = json(&["wieferich", "--limit", "4000", "--format", "json"]);
    assert_eq!(v[1]["p"], 3511);
}

#[test]
fn locate_examples() {
    assert!(stdout(&["locate", "-p", "3", "-x", "4", "--precision", "4"])
        .starts_with("component(orbit 1, sphere 1, min center 4"));
    assert_eq!(stdout(&["locate", "-p", "7", "-x", "0"]), "fixed point 0\n");
    assert!(stdout(&["locate", "-p", "7", "-x", "3", "--precision", "2"])
        .contains("reaches orbit 2"));
    let v = json(&["locate", "-p", "7", "-x", "2", "--precision", "2", "--format", "json"]);
    assert_eq!(v["kind"], "Component");
    assert_eq!(v["id"]["orbit_root"], 2);
    assert_eq!(v["id"]["sphere"], 1);
}

#[test]
fn locate_large_input() {
    let x = "123456789012345678901234567891";
    let out = stdout(&["locate", "-p", "5", "-x", x, "--precision", "40"]);
    assert!(out.starts_with("component("), "{out}");
}

#[test]
fn exit_codes() {
    let bad = squaremap(&["decompose", "-p", "9"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("not a prime"));
    assert!(bad.stdout.is_empty());

    assert_eq!(squaremap(&["verify", "-p", "1"]).status.code(), Some(2));
    assert_eq!(squaremap(&["graph", "-p", "17", "-n", "9"]).status.code(), Some(3));
    assert_eq!(
        squaremap(&["graph", "-p", "3", "-n", "8", "--max-nodes", "100"]).status.code(),
        Some(3)
    );
    assert_eq!(squaremap(&["decompose", "-p", "7", "--max-nodes", "0"]).status.code(), Some(2));

    let undecidable = squaremap(&["locate", "-p", "7", "-x", "1"]);
    assert_eq!(undecidable.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&undecidable.stderr).contains("undecidable"));
}

#[test]
fn env_overrides_bounds() {
    let out = Command::new(env!("CARGO_BIN_EXE_squaremap"))
        .args(["graph", "-p", "3", "-n", "8"])
        .env("SQUAREMAP_MAX_NODES", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
