//! End-to-end checks of the command-line interface.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_partialnet"))
}

fn write_toy_edges(path: &Path) {
    let mut f = std::fs::File::create(path).unwrap();
    for (u, v) in [(0, 1), (0, 2), (0, 3), (1, 2), (3, 4), (3, 5), (4, 5)] {
        writeln!(f, "{u} {v}").unwrap();
    }
}

#[test]
fn perceive_reports_toy_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("toy.txt");
    write_toy_edges(&edges);
    let output = binary()
        .args(["perceive", "--edges"])
        .arg(&edges)
        .args(["--anchor", "0", "--depth", "2", "--base", "0"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["n"], 6);
    assert_eq!(value["edges"], 7);
    assert_eq!(value["perceived_edges"], 6);
    assert_eq!(value["within_depth_nodes"], 6);
    let ratio = value["stats"]["observed_edge_ratio"].as_f64().unwrap();
    assert!((ratio - 6.0 / 7.0).abs() < 1e-12);
}

#[test]
fn simulate_is_byte_stable_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = binary()
            .args([
                "simulate",
                "--model",
                "1",
                "--ns",
                "80",
                "--qs",
                "fixed(0.15),inv_sqrt_n",
                "--reps",
                "3",
                "--seed",
                "41",
                "--restarts",
                "10",
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated runs must emit identical bytes");
}

#[test]
fn karate_subcommand_emits_study() {
    let output = binary()
        .args([
            "karate",
            "--anchors",
            "H,32",
            "--delete",
            "A:20",
            "--seed",
            "1",
            "--restarts",
            "50",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["baseline"].as_array().unwrap().len(), 2);
    assert_eq!(value["after_deletions"].as_array().unwrap().len(), 2);
    let h = &value["baseline"][0];
    assert!((h["observed_edge_ratio"].as_f64().unwrap() - 0.6538).abs() < 1e-3);
}

#[test]
fn theory_check_reports_instances() {
    let output = binary()
        .args([
            "theory-check",
            "--instances",
            "4",
            "--seed",
            "9",
            "--strict",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let instances = value["instances"].as_array().unwrap();
    assert_eq!(instances.len(), 4);
    for inst in instances {
        assert_eq!(inst["pass"], true);
        assert!(inst["rank_BE"].as_u64().unwrap() >= 2);
        assert!(inst["gap_ratio"].as_f64().unwrap() > 1e6);
    }
    assert_eq!(value["all_pass"], true);
}

#[test]
fn polblogs_subcommand_runs_on_synthetic_files() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    let labels = dir.path().join("labels.csv");
    {
        let mut f = std::fs::File::create(&edges).unwrap();
        // two 6-cliques joined by one bridge, 1-based ids
        for base in [1usize, 7] {
            for i in base..base + 6 {
                for j in (i + 1)..base + 6 {
                    writeln!(f, "{i} {j}").unwrap();
                }
            }
        }
        writeln!(f, "3 9").unwrap();
    }
    {
        let mut f = std::fs::File::create(&labels).unwrap();
        writeln!(f, "node_id,community").unwrap();
        for i in 1..=12 {
            writeln!(f, "{},{}", i, usize::from(i > 6)).unwrap();
        }
    }
    let output = binary()
        .args(["polblogs", "--edges"])
        .arg(&edges)
        .arg("--labels")
        .arg(&labels)
        .args(["--anchors", "3", "--base", "1", "--seed", "2"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["lcc_nodes"], 12);
    assert_eq!(value["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_input_exits_nonzero() {
    let output = binary()
        .args(["karate", "--anchors", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
}
