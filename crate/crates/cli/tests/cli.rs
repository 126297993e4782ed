use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathcurrents")).current_dir(dir).env_remove("PATHCURRENTS_SEED").env_remove("PATHCURRENTS_OUT").env_remove("PATHCURRENTS_WORKERS").env_remove("PATHCURRENTS_CONFIG").args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn files_under(root: &Path, dir: &Path, acc: &mut Vec<String>) {
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            files_under(root, &p, acc);
        } else {
            acc.push(p.strip_prefix(root).unwrap().to_string_lossy().into_owned());
        }
    }
}

fn manifest_matches_files(out: &Path) -> Value {
    let m = json(&out.join("manifest.json"));
    let mut listed: Vec<String> = m["outputs"].as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap().to_string()).collect();
    listed.push("manifest.json".into());
    listed.sort();
    let mut present = Vec::new();
    files_under(out, out, &mut present);
    present.sort();
    assert_eq!(listed, present);
    for entry in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(entry["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    m
}

#[test]
fn diag_chen_passes_and_manifest_checks_out() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["diag", "--suite", "chen", "--seed", "9", "--level", "7", "--n-paths", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let m = manifest_matches_files(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["seed"], 9);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["chen.csv", "summary.json"]);
    let summary = json(&out.join("summary.json"));
    assert!(summary["max_defect"].as_f64().unwrap() <= 1e-12);
    assert_eq!(fs::read_to_string(out.join("chen.csv")).unwrap().lines().count(), 4);
}

#[test]
fn gibbs_free_case_has_unit_partition_function() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["gibbs", "--lambda", "0", "--n-samples", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let s = json(&out.join("summary.json"));
    assert_eq!(s["z_hat"]["value"].as_f64(), Some(1.0));
    assert_eq!(s["ess"].as_f64(), Some(300.0));
    manifest_matches_files(&out);
    let header = fs::read_to_string(out.join("expectations.csv")).unwrap();
    assert!(header.starts_with("time,component,mean,mean_se,second_moment,second_moment_se\n"));
}

#[test]
fn cluster_identity_check_agrees() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["cluster", "--N", "4", "--lambda", "0.05", "--check", "z-identity"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let s = json(&out.join("summary.json"));
    assert_eq!(s["pass"], true);
    assert!(s["z_score"].as_f64().unwrap().abs() <= 3.0);
    let csv = fs::read_to_string(out.join("activities.csv")).unwrap();
    assert!(csv.starts_with("cluster,weight,k_hat,se,n\n"));
    assert_eq!(csv.lines().count() as u64, 1 + s["report"]["n_clusters"].as_u64().unwrap());
}

#[test]
fn identical_seeds_give_identical_bytes_for_any_worker_count() {
    let tmp = TempDir::new().unwrap();
    let mut hashes = Vec::new();
    for (dir, workers) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let o = run(tmp.path(), &["sample", "--seed", "4", "--n-paths", "3", "--level", "5", "--dim", "2", "--workers", workers, "--out", dir]);
        assert_eq!(o.status.code(), Some(0));
        let m = manifest_matches_files(&tmp.path().join(dir));
        hashes.push(m["outputs"].clone());
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_eq!(hashes[0], hashes[2]);
    let o = run(tmp.path(), &["sample", "--seed", "5", "--n-paths", "3", "--level", "5", "--dim", "2", "--out", "d"]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(json(&tmp.path().join("d/manifest.json"))["outputs"], hashes[0]);
}

#[test]
fn config_file_with_flag_and_env_overrides() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "out": "from-config", "command": {"lift-check": {"paths": {"interval": [0, 2], "level": 5, "dim": 3, "n_paths": 2}, "scheme": "strat_trapezoid"}}}"#;
    fs::write(tmp.path().join("run.json"), cfg).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pathcurrents"))
        .current_dir(tmp.path())
        .env("PATHCURRENTS_SEED", "77")
        .args(["lift-check", "--config", "run.json", "--n-paths", "4"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&tmp.path().join("from-config/manifest.json"));
    assert_eq!(m["config"]["seed"], 77);
    let lc = &m["config"]["command"]["lift-check"];
    assert_eq!(lc["paths"]["n_paths"], 4);
    assert_eq!(lc["paths"]["dim"], 3);
    assert_eq!(lc["scheme"], "strat_trapezoid");
    assert_eq!(fs::read_to_string(tmp.path().join("from-config/chen.csv")).unwrap().lines().count(), 5);
}

#[test]
fn schema_violations_exit_2() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.json"), r#"{"command": {"gibbs": {"n_samples": 10, "colour": 1}}}"#).unwrap();
    let o = run(tmp.path(), &["gibbs", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let m = json(&tmp.path().join("out/manifest.json"));
    assert_eq!(m["status"], "schema_error");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 0);

    fs::write(tmp.path().join("other.json"), r#"{"command": {"diag": {"suite": "tree-graph"}}}"#).unwrap();
    assert_eq!(run(tmp.path(), &["gibbs", "--config", "other.json"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["cluster", "--N", "3"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["energy", "--segments", "3"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["integrate", "--dim", "1"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["gibbs", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["sample", "--workers", "0"]).status.code(), Some(2));
}

#[test]
fn gate_failure_exits_1() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("strict.json"), r#"{"command": {"diag": {"suite": "chen", "paths": {"interval": [0, 1], "level": 6, "dim": 2, "n_paths": 2}, "chen_limit": 1e-300}}}"#).unwrap();
    let o = run(tmp.path(), &["diag", "--config", "strict.json", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest_matches_files(&tmp.path().join("out"));
    assert_eq!(m["status"], "gate_failure");
    assert_eq!(json(&tmp.path().join("out/summary.json"))["pass"], false);
}

#[test]
fn io_failure_exits_3() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("blocker"), "not a directory").unwrap();
    let o = run(tmp.path(), &["diag", "--suite", "tree-graph", "--out", "blocker/sub"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(run(tmp.path(), &["diag", "--config", "missing.json"]).status.code(), Some(3));
}

#[test]
fn remaining_subcommands_write_listed_outputs() {
    let tmp = TempDir::new().unwrap();
    let cases: [(&[&str], &[&str]); 4] = [
        (&["diag", "--suite", "tree-graph", "--instances", "20", "--out", "t"], &["tree_graph.csv", "summary.json"]),
        (&["diag", "--suite", "free-case", "--n-samples", "50", "--out", "f"], &["summary.json"]),
        (&["energy", "--n-paths", "2", "--level", "6", "--out", "e"], &["energy.csv", "pairs.csv"]),
        (&["integrate", "--n-paths", "2", "--level", "6", "--field", r#"{"family":"linear_coordinate","from":0,"to":1}"#, "--out", "i"], &["integrals.csv"]),
    ];
    for (args, expected) in cases {
        let o = run(tmp.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let dir = tmp.path().join(args[args.len() - 1]);
        let m = manifest_matches_files(&dir);
        let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap()).collect();
        assert_eq!(files, expected);
    }
    let pairs = fs::read_to_string(tmp.path().join("e/pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + 2 * 6);
    let binary = run(tmp.path(), &["sample", "--format", "binary", "--n-paths", "2", "--level", "4", "--out", "s"]);
    assert_eq!(binary.status.code(), Some(0));
    assert!(tmp.path().join("s/paths.bin").exists());
}
