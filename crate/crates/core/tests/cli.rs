use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn chac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chac"))
        .args(args)
        .output()
        .expect("spawn chac")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stats_json(args: &[&str], dir: &Path) -> serde_json::Value {
    let (tree, stats) = (dir.join("tree.csv"), dir.join("stats.json"));
    let mut argv = vec!["cluster", "--output", s(&tree), "--stats-out", s(&stats)];
    argv.extend_from_slice(args);
    let out = chac(&argv);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&fs::read_to_string(stats).unwrap()).unwrap()
}

#[test]
fn triangle_to_stdout() {
    let out = chac(&["cluster", "--input", s(&data("triangle.csv")), "--mode", "exact"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "left_id,right_id,new_id,distance,size");
    assert_eq!(lines.len(), 3);
    let dist = |line: &str| line.split(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert!((dist(lines[1]) - 1.0).abs() < 1e-12);
    assert!(lines[1].ends_with(",2"));
    assert!((dist(lines[2]) - 0.8660254).abs() < 1e-7);
    // (0, 2) is a hair closer than (0, 1) in floating point
    assert!(lines[1].starts_with("0,2,3,"));
    assert!(lines[2].starts_with("1,3,4,") && lines[2].ends_with(",3"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = chac(&["cluster", "--input", "/no/such/points.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/points.csv"));
}

#[test]
fn bad_flags_exit_two() {
    let tri = data("triangle.csv");
    for args in [
        vec!["cluster", "--input", s(&tri), "--mode", "exact", "--epsilon", "0.3"],
        vec!["cluster", "--input", s(&tri), "--mode", "bucket", "--epsilon", "0"],
        vec!["cluster", "--input", s(&tri), "--epsilon", "-1"],
        vec!["cluster", "--input", s(&tri), "--nns", "lsh", "--c", "1.2", "--lambda", "1.5"],
        vec!["frobnicate"],
    ] {
        assert_eq!(chac(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn malformed_rows_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,4\n5\n").unwrap();
    let out = chac(&["cluster", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('3'));
}

#[test]
fn lsh_runs_repeat_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let path = dir.path().join(name);
        let out = chac(&[
            "cluster", "--input", s(&data("iris.csv")), "--nns", "lsh", "--seed", seed, "--output", s(&path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(path).unwrap()
    };
    assert_eq!(run("9", "a.csv"), run("9", "b.csv"));
}

#[test]
fn stats_report_counts() {
    let dir = tempfile::tempdir().unwrap();
    let iris = data("iris.csv");
    let heap = stats_json(&["--input", s(&iris), "--epsilon", "0.1"], dir.path());
    // iris holds one repeated point, merged up front at distance 0
    assert_eq!(heap["stats"]["n_points"], 150);
    assert_eq!(heap["stats"]["n_dedup"], 149);
    assert_eq!(heap["stats"]["merges"], 148);
    assert_eq!(heap["stats"]["duplicate_point_merges"], 1);
    assert_eq!(fs::read_to_string(dir.path().join("tree.csv")).unwrap().lines().count(), 150);
    let stale = heap["stats"]["stale_dequeues"].as_f64().unwrap();
    assert!((heap["gamma"].as_f64().unwrap() - stale / 148.0).abs() < 1e-6);
    for phase in ["load_s", "cluster_s", "write_s"] {
        assert!(heap["phases"][phase].as_f64().unwrap() >= 0.0);
    }
    let bucket = stats_json(&["--input", s(&iris), "--mode", "bucket", "--epsilon", "0.1"], dir.path());
    assert!(bucket["stats"]["nns_queries"].as_u64() >= heap["stats"]["nns_queries"].as_u64());
}

#[test]
fn metrics_on_iris() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.csv");
    let iris = data("iris.csv");
    assert!(chac(&["cluster", "--input", s(&iris), "--mode", "exact", "--output", s(&tree)]).status.success());
    let scores_path = dir.path().join("scores.json");
    let out = chac(&[
        "metrics",
        "--dendrogram",
        s(&tree),
        "--labels",
        s(&data("iris_labels.txt")),
        "--input",
        s(&iris),
        "--output",
        s(&scores_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scores: serde_json::Value = serde_json::from_str(&fs::read_to_string(scores_path).unwrap()).unwrap();
    assert!((scores["ari"]["score"].as_f64().unwrap() - 0.7592).abs() < 5e-4);
    assert!((scores["nmi"]["score"].as_f64().unwrap() - 0.8057).abs() < 5e-4);
    assert!(scores["dasgupta"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(scores["delta_inversions"].as_array().unwrap().len(), 2);

    let short = dir.path().join("short.txt");
    fs::write(&short, "a\nb\n").unwrap();
    let out = chac(&["metrics", "--dendrogram", s(&tree), "--labels", s(&short)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invariant_check_and_bench() {
    let iris = data("iris.csv");
    let out = chac(&["invariant-check", "--input", s(&iris), "--mode", "bucket", "--epsilon", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict           ok"));

    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.json");
    let out = chac(&["bench", "--input", s(&iris), "--repeats", "2", "--output", s(&bench)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(bench).unwrap()).unwrap();
    assert!(report.is_object());
}
