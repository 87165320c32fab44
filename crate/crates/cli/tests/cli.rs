use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn gch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gch")).args(args).env_remove("GCH_WORKERS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn betti_star_csv() {
    let o = gch(&["betti", "--graph", &corpus("star3.graph"), "--field", "q", "--imax", "1", "--kmax", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("graph,field,i,k,betti,torsion\n"));
    assert!(out.lines().any(|l| l.ends_with(",q,1,2,1,")), "{out}");
    assert_eq!(out.lines().count(), 11);
}

#[test]
fn empty_rectangle_is_header_only() {
    let o = gch(&["betti", "--graph", &corpus("star3.graph"), "--kmin", "3", "--kmax", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "graph,field,i,k,betti,torsion\n");
}

#[test]
fn bad_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.graph");
    std::fs::write(&path, "vertex a\nedge e a\n").unwrap();
    let o = gch(&["betti", "--graph", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse error"));
}

#[test]
fn json_output_to_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, workers) in [(&a, "1"), (&b, "4")] {
        let o = gch(&[
            "betti", "--graph", &corpus("htree.graph"), "--imax", "2", "--kmax", "5", "--format", "json",
            "--workers", workers, "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = std::fs::read(&a).unwrap();
    assert_eq!(a, std::fs::read(&b).unwrap());
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["field"], "q");
}

#[test]
fn full_and_reduced_agree() {
    let run = |variant| {
        let o = gch(&["betti", "--graph", &corpus("theta.graph"), "--imax", "2", "--kmax", "4", "--variant", variant]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    assert_eq!(run("full"), run("reduced"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    std::fs::write(&cfg, format!("graph = {:?}\nimax = 1\nkmax = 3\nfield = \"fp:3\"\n", corpus("star3.graph"))).unwrap();
    let o = gch(&["betti", "--config", cfg.to_str().unwrap(), "--kmax", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains(",fp:3,1,2,1,"));
    assert!(!out.contains(",1,3,"));
}

#[test]
fn ramos_partition_example() {
    let o = gch(&["ramos", "--graph", &corpus("partition.graph"), "-i", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["delta"], 5);
    assert_eq!(doc["maximizers"].as_array().unwrap().len(), 3);

    let o = gch(&["ramos", "--graph", &corpus("partition.graph"), "-i", "0"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["delta"], 1);

    let o = gch(&["ramos", "--graph", &corpus("partition.graph"), "-i", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn asym_star_confirmed() {
    let o = gch(&["asym", "--graph", &corpus("star3.graph"), "-i", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["prediction"]["coefficient"], "1/2");
    assert_eq!(doc["verdict"], "confirmed");
}

#[test]
fn asym_banana_degree_one_is_rejected() {
    let o = gch(&["asym", "--graph", &corpus("banana4.graph"), "-i", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Ko–Park"));
}

#[test]
fn asym_short_row_is_inconclusive() {
    let o = gch(&["asym", "--graph", &corpus("star3.graph"), "--kmax", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict inconclusive"));
}

#[test]
fn certify_reports() {
    let check = |file: &str, relation: &str, expect: bool| {
        let o = gch(&["certify", "--graph", &corpus(file), "--relation", relation]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(doc[0]["is_boundary"], expect, "{file} {relation}");
    };
    check("lollipop.graph", "q", true);
    check("theta.graph", "theta", true);
    check("star4.graph", "combined-x", true);
    check("star3.graph", "star", false);
}

#[test]
fn certify_missing_configuration_is_input_error() {
    let o = gch(&["certify", "--graph", &corpus("star3.graph"), "--relation", "theta"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn torsion_k5_and_guard() {
    let o = gch(&["torsion", "--graph", &corpus("k5.graph"), "--imin", "1", "--imax", "1", "--kmin", "2", "--kmax", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!(row.ends_with(",z,1,2,6,2"), "{row}");

    let o = gch(&["torsion", "--graph", &corpus("k5.graph"), "--imax", "3", "--kmax", "12"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn torsion_tree_is_free() {
    let o = gch(&["torsion", "--graph", &corpus("htree.graph"), "--imax", "2", "--kmax", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let scans: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for scan in scans.as_array().unwrap() {
        for row in scan["exponents"].as_object().unwrap().values() {
            assert!(row.as_object().unwrap().is_empty());
        }
    }
}
