//! End-to-end checks of the `lgcf` binary: artifact shape, determinism,
//! and error reporting through the process boundary.

use std::path::Path;
use std::process::{Command, Output};

fn lgcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgcf"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_toy_data(dir: &Path) -> std::path::PathBuf {
    // 6 users x 8 items, enough interactions that every user keeps at
    // least one training pair after a 20% split.
    let mut text = String::new();
    for u in 0..6 {
        for i in 0..5 {
            text += &format!("u{u} i{}\n", (u + i) % 8);
        }
    }
    let path = dir.join("toy.txt");
    std::fs::write(&path, text).unwrap();
    path
}

fn train_args<'a>(data: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--data", data, "--out", out, "--dim", "4", "--layers", "2", "--epochs", "5",
        "--batch-size", "8", "--seed", "7", "--lr", "0.01",
    ]
}

#[test]
fn train_writes_checkpoint_loss_curve_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("run");

    let output = lgcf(&train_args(data.to_str().unwrap(), out.to_str().unwrap()));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    assert!(out.join("checkpoint.lgcf").is_file());
    let loss = std::fs::read_to_string(out.join("loss.csv")).unwrap();
    let lines: Vec<&str> = loss.lines().collect();
    assert_eq!(lines[0], "epoch,loss");
    assert_eq!(lines.len(), 6, "header plus one row per epoch");
    for (epoch, line) in lines[1..].iter().enumerate() {
        let (e, l) = line.split_once(',').unwrap();
        assert_eq!(e.parse::<usize>().unwrap(), epoch);
        assert!(l.parse::<f64>().unwrap().is_finite());
    }

    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    for key in ["dim=4", "layers=2", "seed=7", "dataset-sha256=", "init-sha256="] {
        assert!(manifest.contains(key), "manifest missing {key}");
    }
}

#[test]
fn identical_runs_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let data = data.to_str().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    assert!(lgcf(&train_args(data, out_a.to_str().unwrap())).status.success());
    assert!(lgcf(&train_args(data, out_b.to_str().unwrap())).status.success());

    let cp_a = std::fs::read(out_a.join("checkpoint.lgcf")).unwrap();
    let cp_b = std::fs::read(out_b.join("checkpoint.lgcf")).unwrap();
    assert_eq!(cp_a, cp_b, "checkpoints must be byte-identical");
    assert_eq!(
        std::fs::read(out_a.join("loss.csv")).unwrap(),
        std::fs::read(out_b.join("loss.csv")).unwrap()
    );
}

#[test]
fn eval_reports_one_key_per_metric_and_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let data = data.to_str().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    assert!(lgcf(&train_args(data, out_s)).status.success());

    let cp = out.join("checkpoint.lgcf");
    let output = lgcf(&[
        "eval", "--data", data, "--out", out_s, "--dim", "4", "--k", "3,5", "--checkpoint",
        cp.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    let keys: Vec<&str> = stdout
        .lines()
        .map(|l| l.split_once('=').expect("key=value").0)
        .collect();
    assert_eq!(keys, ["recall@3", "recall@5", "ndcg@3", "ndcg@5"]);
    for line in stdout.lines() {
        let v: f64 = line.split_once('=').unwrap().1.parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
    assert_eq!(
        std::fs::read_to_string(out.join("metrics.txt")).unwrap(),
        stdout
    );
}

#[test]
fn missing_data_file_fails_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let output = lgcf(&train_args("/no/such/interactions.txt", out.to_str().unwrap()));
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("/no/such/interactions.txt"),
        "stderr should name the missing file: {stderr}"
    );
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let data = data.to_str().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    assert!(lgcf(&train_args(data, out_s)).status.success());

    let cp = out.join("checkpoint.lgcf");
    let mut bytes = std::fs::read(&cp).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xFF;
    std::fs::write(&cp, bytes).unwrap();

    let output = lgcf(&[
        "eval", "--data", data, "--out", out_s, "--dim", "4", "--checkpoint",
        cp.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("checksum"), "stderr: {stderr}");
}

#[test]
fn sweep_emits_a_csv_with_one_row_per_dim() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("sweep");
    let output = lgcf(&[
        "sweep", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dims",
        "2,4", "--layers", "1", "--epochs", "2", "--batch-size", "8", "--seed", "3", "--k", "5",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dim,recall@5,ndcg@5");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,"));
    assert!(lines[2].starts_with("4,"));
}

#[test]
fn ablate_emits_two_labeled_blocks_with_shared_init() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("ablate");
    let output = lgcf(&[
        "ablate", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dim",
        "4", "--layers", "1", "--epochs", "2", "--batch-size", "8", "--seed", "3", "--k", "5",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = std::fs::read_to_string(out.join("ablate.txt")).unwrap();
    assert!(text.contains("[hyperbolic]\n"));
    assert!(text.contains("[tangent]\n"));
    assert!(text.contains("init-sha256="));

    let hyp = std::fs::read_to_string(out.join("hyperbolic/manifest.txt")).unwrap();
    let tan = std::fs::read_to_string(out.join("tangent/manifest.txt")).unwrap();
    let init = |m: &str| {
        m.lines()
            .find(|l| l.starts_with("init-sha256="))
            .unwrap()
            .to_string()
    };
    assert_eq!(init(&hyp), init(&tan), "ablation arms must share the init");
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_data(dir.path());
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        format!(
            "data={}\ndim=2\nlayers=1\nepochs=3\nbatch-size=8\nseed=5\nlr=0.01\n",
            data.display()
        ),
    )
    .unwrap();

    let out = dir.path().join("run");
    let output = lgcf(&[
        "train", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--dim", "4",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("dim=4"), "flag must win over config file");
    assert!(manifest.contains("epochs=3"), "config file fills the rest");
}
