use std::path::Path;
use std::process::{Command, Output};

fn chorale(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chorale"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = chorale(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small synthetic corpus, chord vectors and one graph under `dir`.
fn prepare(dir: &Path) {
    ok(dir, &["synth", "--out", "corpus.jsonl", "--records", "60"]);
    ok(
        dir,
        &["chords", "--corpus", "corpus.jsonl", "--out", "chords.txt", "--chord-epochs", "5"],
    );
    ok(
        dir,
        &[
            "build-graph", "--corpus", "corpus.jsonl", "--chords", "chords.txt",
            "--target-edges", "400", "--out-dir", "g",
        ],
    );
}

#[test]
fn ingest_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "corpus.jsonl", "--records", "383"]);
    let out = ok(dir.path(), &["ingest", "--corpus", "corpus.jsonl"]);
    assert!(out.starts_with("383 records\n"), "{out}");
    assert!(out.contains("vocabulary:"));
    assert!(out.contains("major") && out.contains("minor"));
}

#[test]
fn ingest_names_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "corpus.jsonl", "--records", "10"]);
    let text = std::fs::read_to_string(dir.path().join("corpus.jsonl")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[6] = "{\"id\": \"broken\"";
    std::fs::write(dir.path().join("bad.jsonl"), lines.join("\n")).unwrap();
    let out = chorale(dir.path(), &["ingest", "--corpus", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));

    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = chorale(dir.path(), &["ingest", "--corpus", "empty.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn complete_graph_and_four_threshold_batch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out", "corpus.jsonl", "--records", "40"]);
    ok(d, &["chords", "--corpus", "corpus.jsonl", "--out", "chords.txt", "--chord-epochs", "3"]);
    let out = ok(
        d,
        &[
            "build-graph", "--corpus", "corpus.jsonl", "--chords", "chords.txt",
            "--xi=-inf,9,10,11", "--out-dir", "g",
        ],
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4, "{out}");
    assert!(lines[0].contains("nodes=40 edges=780 avg_degree=39.00"), "{}", lines[0]);
    for i in 1..=4 {
        let text = std::fs::read_to_string(d.join(format!("g/graph_{i}.txt"))).unwrap();
        let g = chorale_graph::graph::ChoraleGraph::from_text(&text).unwrap();
        let s = g.stats();
        let expected = format!(
            "nodes={} edges={} avg_degree={:.2}",
            s.num_nodes, s.num_edges, s.avg_degree
        );
        assert!(lines[i - 1].contains(&expected), "{} vs {expected}", lines[i - 1]);
    }
    let manifest = std::fs::read_to_string(d.join("g/manifest.jsonl")).unwrap();
    let entry: serde_json::Value = serde_json::from_str(manifest.lines().last().unwrap()).unwrap();
    assert_eq!(entry["stage"], "build-graph");
    assert_eq!(entry["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn query_returns_ranked_ids() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    ok(d, &["train", "--graph", "g/graph_1.txt", "--out", "z.txt", "--epochs", "2", "--dim", "8"]);
    let text = std::fs::read_to_string(d.join("g/graph_1.txt")).unwrap();
    let g = chorale_graph::graph::ChoraleGraph::from_text(&text).unwrap();
    assert!(g.node_count() > 10);
    let node = g.nodes()[0].id.clone();
    let out = ok(
        d,
        &["query", "--graph", "g/graph_1.txt", "--model", "z.txt", "--node", &node, "--k", "10"],
    );
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 10);
    let mut prev = f64::INFINITY;
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (i + 1).to_string());
        assert_ne!(row[1], node);
        assert!(g.index_of(row[1]).is_some());
        let cos: f64 = row[2].parse().unwrap();
        assert!(cos <= prev);
        prev = cos;
    }
    let out = chorale(
        d,
        &["query", "--graph", "g/graph_1.txt", "--model", "z.txt", "--node", "nobody"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn experiment_writes_twenty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    ok(
        d,
        &[
            "build-graph", "--corpus", "corpus.jsonl", "--chords", "chords.txt",
            "--xi=0", "--out-dir", "full",
        ],
    );
    let copies = ["a", "b", "c"];
    for c in copies {
        std::fs::copy(d.join("g/graph_1.txt"), d.join(format!("{c}.txt"))).unwrap();
    }
    ok(
        d,
        &[
            "experiment", "--graphs", "a.txt,b.txt,c.txt,full/graph_1.txt",
            "--graph-ids", "a,b,c,full", "--repeats", "3", "--out", "r/exp.csv",
        ],
    );
    let csv = std::fs::read_to_string(d.join("r/exp.csv")).unwrap();
    let cells: std::collections::HashSet<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[4].to_string())
        })
        .collect();
    assert_eq!(cells.len(), 20, "{csv}");
    assert!(d.join("r/exp_curves.csv").exists());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    std::fs::write(d.join("run.conf"), "walk_length = 4\nwalks-per-node = 2\nrepeats = 9\n").unwrap();
    ok(d, &["walks", "--config", "run.conf", "--graph", "g/graph_1.txt", "--out", "a.txt"]);
    ok(
        d,
        &[
            "walks", "--config", "run.conf", "--walk-length", "6", "--graph", "g/graph_1.txt",
            "--out", "b.txt",
        ],
    );
    let walk_lengths = |f: &str| -> Vec<usize> {
        std::fs::read_to_string(d.join(f))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().count())
            .collect()
    };
    let a = walk_lengths("a.txt");
    let b = walk_lengths("b.txt");
    assert!(a.iter().all(|&n| n == 4));
    assert!(b.iter().all(|&n| n == 6));
    assert_eq!(a.len(), b.len());

    std::fs::write(d.join("bad.conf"), "colour = blue\n").unwrap();
    let out = chorale(d, &["walks", "--config", "bad.conf", "--graph", "g/graph_1.txt", "--out", "c.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_upstream_artifact_is_named() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["walks", "--graph", "gone/graph_1.txt", "--out", "w.txt"],
        vec!["train", "--graph", "gone/graph_1.txt", "--out", "z.txt"],
        vec!["experiment", "--graphs", "gone/graph_1.txt", "--out", "e.csv"],
    ] {
        let out = chorale(dir.path(), &args);
        assert_ne!(out.status.code(), Some(0));
        assert!(stderr(&out).contains("gone/graph_1.txt"), "{}", stderr(&out));
    }
}

#[test]
fn invalid_parameters_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    let out = chorale(d, &["walks", "--graph", "g/graph_1.txt", "--out", "w.txt", "--p", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = chorale(d, &["walks", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(chorale(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    std::fs::write(d.join("blocker"), "").unwrap();
    let out = chorale(d, &["walks", "--graph", "g/graph_1.txt", "--out", "blocker/w.txt"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn same_seed_same_bytes() {
    let run = |seed: &str| -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        prepare(d);
        ok(d, &["walks", "--graph", "g/graph_1.txt", "--out", "w.txt", "--seed", seed]);
        std::fs::read(d.join("w.txt")).unwrap()
    };
    assert_eq!(run("42"), run("42"));
    assert_ne!(run("42"), run("43"));
}
