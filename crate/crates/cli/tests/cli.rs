use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn teggcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teggcn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a 40-node, 2-class graph in the node/edge text layout under
/// `<root>/texas/`: a ring plus chords, with two class-revealing features
/// followed by six noise features.
fn write_small_dataset(root: &Path) {
    let dir = root.join("texas");
    fs::create_dir_all(&dir).unwrap();
    let n = 40;
    let mut nodes = String::from("node_id\tfeature\tlabel\n");
    for i in 0..n {
        let label = i % 2;
        let noise: Vec<String> = (0..6).map(|k| format!("{}", (i * 7 + k * 3) % 5)).collect();
        let (a, b) = if label == 0 { (4, 0) } else { (0, 4) };
        writeln!(nodes, "{i}\t{a},{b},{}\t{label}", noise.join(",")).unwrap();
    }
    let mut edges = String::from("node_id\tnode_id\n");
    for i in 0..n {
        writeln!(edges, "{i}\t{}", (i + 1) % n).unwrap();
        writeln!(edges, "{i}\t{}", (i + 2) % n).unwrap();
    }
    fs::write(dir.join("out1_node_feature_label.txt"), nodes).unwrap();
    fs::write(dir.join("out1_graph_edges.txt"), edges).unwrap();
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn train_writes_summary_log_and_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    write_small_dataset(d.path());
    let out = d.path().join("run.json");
    let log = d.path().join("te.jsonl");
    let ck = d.path().join("best.ckpt");
    let o = teggcn(&[
        "train",
        "--dataset", "texas",
        "--data-dir", d.path().to_str().unwrap(),
        "--epochs", "12",
        "--te-period", "4",
        "--te-het-frac", "0.5",
        "--te-deg-frac", "0.5",
        "--hidden", "8",
        "--out", out.to_str().unwrap(),
        "--te-log", log.to_str().unwrap(),
        "--checkpoint", ck.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&out);
    assert_eq!(v["config"]["epochs"], 12);
    assert_eq!(v["config"]["patience"], 12);
    assert_eq!(v["result"]["dataset"], "texas");
    assert_eq!(v["result"]["te_enabled"], true);
    assert_eq!(v["result"]["optimizer_steps"], 12);
    let acc = v["result"]["test_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    // TE steps at epochs 0, 4 and 8.
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 3);
    assert!(fs::metadata(&ck).unwrap().len() > 0);
}

#[test]
fn command_line_overrides_config_file() {
    let d = tempfile::tempdir().unwrap();
    write_small_dataset(d.path());
    let cfg = d.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# shared settings\ndataset = texas\ndata-dir = {}\nepochs = 9\nhidden = 8\nlr = 0.05\nno-te\n",
            d.path().display()
        ),
    )
    .unwrap();
    let out = d.path().join("run.json");
    let o = teggcn(&[
        "train",
        "--config", cfg.to_str().unwrap(),
        "--epochs", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&out);
    assert_eq!(v["config"]["epochs"], 5);
    assert_eq!(v["config"]["learning_rate"], 0.05);
    assert_eq!(v["config"]["te"]["enabled"], false);
    assert_eq!(v["result"]["history"].as_array().unwrap().len(), 5);
    assert_eq!(v["result"]["te_invocation_count"], 0);
}

#[test]
fn csv_output_has_one_row() {
    let d = tempfile::tempdir().unwrap();
    write_small_dataset(d.path());
    let out = d.path().join("run.csv");
    let o = teggcn(&[
        "train",
        "--dataset", "texas",
        "--data-dir", d.path().to_str().unwrap(),
        "--epochs", "3",
        "--seed", "4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("dataset,split,te_enabled,test_acc"));
    assert!(lines[1].starts_with("texas,0,true,"));
    assert!(lines[1].contains(",4,"));
}

#[test]
fn repeated_runs_are_identical() {
    let d = tempfile::tempdir().unwrap();
    write_small_dataset(d.path());
    let run = |name: &str| {
        let out = d.path().join(name);
        let o = teggcn(&[
            "train",
            "--dataset", "texas",
            "--data-dir", d.path().to_str().unwrap(),
            "--epochs", "8",
            "--te-period", "2",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut v = read_json(&out);
        for k in ["te_wall_time", "total_wall_time"] {
            v["result"][k] = Value::Null;
        }
        v
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn missing_dataset_is_reported() {
    let d = tempfile::tempdir().unwrap();
    let o = teggcn(&[
        "train",
        "--dataset", "cora",
        "--data-dir", d.path().to_str().unwrap(),
        "--out", d.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cora.content"), "{}", stderr(&o));
}

#[test]
fn bad_options_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    fs::write(&cfg, "learning-rate = 0.1\n").unwrap();
    let o = teggcn(&["train", "--config", cfg.to_str().unwrap(), "--dataset", "texas", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning-rate"));

    let o = teggcn(&["train", "--dataset", "texas", "--out", "x", "--epochs", "10", "--patience", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("patience"));

    let o = teggcn(&["train", "--precision", "f16"]);
    assert!(!o.status.success());
}

#[test]
fn benchmark_skips_missing_datasets() {
    let d = tempfile::tempdir().unwrap();
    write_small_dataset(d.path());
    let csv = d.path().join("bench.csv");
    let md = d.path().join("bench.md");
    let o = teggcn(&[
        "benchmark",
        "--datasets", "texas,cornell",
        "--runs", "2",
        "--epochs", "4",
        "--hidden", "8",
        "--data-dir", d.path().to_str().unwrap(),
        "--out", csv.to_str().unwrap(),
        "--markdown", md.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(&csv).unwrap();
    // Header plus TE and baseline rows for each of two runs.
    assert_eq!(rows.lines().count(), 5);
    assert_eq!(rows.lines().filter(|l| l.starts_with("texas,1,")).count(), 2);
    let table = fs::read_to_string(&md).unwrap();
    assert!(table.contains("| texas | 2 |"));
    assert!(table.contains("| cornell | 0 | skipped"));
}

#[test]
fn verify_passes() {
    let o = teggcn(&["verify", "--seeds", "2"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.contains("0 failed"));
    assert!(!stdout.contains("FAIL"));
}
