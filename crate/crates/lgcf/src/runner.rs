//! End-to-end run drivers behind the CLI verbs: train, eval, sweep, and
//! the hyperbolic-vs-tangent ablation. Every run writes a manifest with
//! the full resolved configuration, the seed, and the dataset checksum,
//! so it can be reproduced exactly.

use crate::checkpoint::Checkpoint;
use crate::config::{mode_name, RunConfig};
use crate::report;
use anyhow::{bail, Context, Result};
use lgcf_core::dataset::{build_graph, split_train_test, BipartiteGraph, InteractionSet, Split};
use lgcf_core::eval::{evaluate, EvalReport};
use lgcf_core::model::{forward, init_embeddings, ConvMode, EmbeddingMatrix};
use lgcf_core::optimizer::train;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;

pub struct Dataset {
    pub interactions: InteractionSet,
    pub split: Split,
    pub graph: BipartiteGraph,
    /// sha256 of the raw data file, hex.
    pub checksum: String,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let text = std::fs::read_to_string(&cfg.data)
        .with_context(|| format!("cannot read data file {}", cfg.data.display()))?;
    let checksum = hex(&Sha256::digest(text.as_bytes()));
    let interactions = InteractionSet::parse(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", cfg.data.display()))?;
    let split = split_train_test(&interactions, cfg.test_fraction, cfg.seed);
    let graph = build_graph(&split.train);
    Ok(Dataset {
        interactions,
        split,
        graph,
        checksum,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

fn embedding_hash(e: &EmbeddingMatrix) -> String {
    let mut hasher = Sha256::new();
    for v in e.data() {
        hasher.update(v.to_le_bytes());
    }
    hex(&hasher.finalize())
}

pub struct TrainArtifacts {
    pub checkpoint_path: PathBuf,
    pub loss_csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub loss_history: Vec<f64>,
    /// sha256 of the initial embedding table, for controlled comparisons.
    pub init_hash: String,
}

/// Trains from scratch and writes `checkpoint.lgcf`, `loss.csv`, and
/// `manifest.txt` under `cfg.out`.
pub fn run_train(cfg: &RunConfig) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;

    let model_cfg = cfg.model_config();
    let optim_cfg = cfg.optim_config();
    let n_nodes = data.graph.n_nodes();
    let initial = init_embeddings(
        n_nodes,
        &model_cfg,
        &mut ChaCha8Rng::seed_from_u64(cfg.seed),
    );
    let init_hash = embedding_hash(&initial);

    let result = train(
        &data.graph,
        &data.split.train,
        &initial,
        &model_cfg,
        &optim_cfg,
        |_, _| {},
    )?;

    let checkpoint = Checkpoint {
        n_users: data.interactions.n_users,
        n_items: data.interactions.n_items,
        layers: cfg.layers,
        mode: cfg.mode,
        seed: cfg.seed,
        embeddings: result.embeddings,
    };
    let checkpoint_path = cfg.out.join("checkpoint.lgcf");
    checkpoint.save(&checkpoint_path)?;

    let mut loss_csv = String::from("epoch,loss\n");
    for (epoch, loss) in result.loss_history.iter().enumerate() {
        writeln!(loss_csv, "{epoch},{loss}").unwrap();
    }
    let loss_csv_path = cfg.out.join("loss.csv");
    std::fs::write(&loss_csv_path, loss_csv)?;

    let manifest = format!(
        "{}dataset-sha256={}\ninit-sha256={}\n",
        cfg.to_kv(),
        data.checksum,
        init_hash
    );
    let manifest_path = cfg.out.join("manifest.txt");
    std::fs::write(&manifest_path, manifest)?;

    Ok(TrainArtifacts {
        checkpoint_path,
        loss_csv_path,
        manifest_path,
        loss_history: result.loss_history,
        init_hash,
    })
}

/// Recomputes the forward stack from a checkpoint and evaluates it.
/// The split is rebuilt from the seed stored in the checkpoint header;
/// layer count and mode also come from the header.
pub fn run_eval(cfg: &RunConfig, checkpoint_path: &PathBuf) -> Result<(EvalReport, String)> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let mut cfg = cfg.clone();
    cfg.seed = checkpoint.seed;
    let data = load_dataset(&cfg)?;

    if checkpoint.n_users != data.interactions.n_users
        || checkpoint.n_items != data.interactions.n_items
    {
        bail!(
            "checkpoint holds {}x{} users/items but dataset has {}x{}",
            checkpoint.n_users,
            checkpoint.n_items,
            data.interactions.n_users,
            data.interactions.n_items
        );
    }
    if checkpoint.dim() != cfg.dim {
        bail!(
            "checkpoint dimensionality {} does not match configured {}",
            checkpoint.dim(),
            cfg.dim
        );
    }

    let mut model_cfg = cfg.model_config();
    model_cfg.layers = checkpoint.layers;
    model_cfg.mode = checkpoint.mode;
    let stack = forward(&data.graph, &checkpoint.embeddings, &model_cfg);
    let report = evaluate(&stack, &data.split, &cfg.cutoffs)?;

    let machine = report::machine_lines(&report);
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("metrics.txt"), &machine)?;
    Ok((report, machine))
}

/// Trains and evaluates once per dimensionality with a shared seed;
/// writes a plot-ready `sweep.csv`.
pub fn run_sweep(cfg: &RunConfig, dims: &[usize]) -> Result<(PathBuf, Vec<(usize, EvalReport)>)> {
    if dims.is_empty() {
        bail!("dimension list must be nonempty");
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let mut sub = cfg.clone();
        sub.dim = dim;
        sub.out = cfg.out.join(format!("dim_{dim}"));
        let artifacts = run_train(&sub)?;
        let (report, _) = run_eval(&sub, &artifacts.checkpoint_path)?;
        rows.push((dim, report));
    }
    std::fs::create_dir_all(&cfg.out)?;
    let csv_path = cfg.out.join("sweep.csv");
    std::fs::write(&csv_path, report::sweep_csv(&cfg.cutoffs, &rows))?;
    Ok((csv_path, rows))
}

pub struct AblateOutcome {
    pub hyperbolic: EvalReport,
    pub tangent: EvalReport,
    pub init_hash: String,
    pub report_path: PathBuf,
    /// Two labeled metric blocks plus the shared init hash.
    pub text: String,
}

/// Two runs differing only in convolution mode, sharing seed, split, and
/// initialization (verified by the init hash).
pub fn run_ablate(cfg: &RunConfig) -> Result<AblateOutcome> {
    let mut reports = Vec::with_capacity(2);
    let mut hashes = Vec::with_capacity(2);
    for mode in [ConvMode::Hyperbolic, ConvMode::Tangent] {
        let mut sub = cfg.clone();
        sub.mode = mode;
        sub.out = cfg.out.join(mode_name(mode));
        let artifacts = run_train(&sub)?;
        let (report, _) = run_eval(&sub, &artifacts.checkpoint_path)?;
        reports.push(report);
        hashes.push(artifacts.init_hash);
    }
    if hashes[0] != hashes[1] {
        bail!("ablation runs started from different initializations");
    }

    let tangent = reports.pop().unwrap();
    let hyperbolic = reports.pop().unwrap();
    let mut text = String::new();
    writeln!(text, "[hyperbolic]").unwrap();
    text.push_str(&report::machine_lines(&hyperbolic));
    writeln!(text, "[tangent]").unwrap();
    text.push_str(&report::machine_lines(&tangent));
    writeln!(text, "init-sha256={}", hashes[0]).unwrap();

    std::fs::create_dir_all(&cfg.out)?;
    let report_path = cfg.out.join("ablate.txt");
    std::fs::write(&report_path, &text)?;

    Ok(AblateOutcome {
        hyperbolic,
        tangent,
        init_hash: hashes.pop().unwrap(),
        report_path,
        text,
    })
}
