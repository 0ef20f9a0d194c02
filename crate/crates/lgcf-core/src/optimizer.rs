//! Training: reverse-mode gradients of the margin loss with respect to
//! the ambient embedding coordinates, and Riemannian SGD updates on the
//! hyperboloid.
//!
//! The embedding table is the only leaf; every layer output is an
//! intermediate tape node. The metric correction (time-slot sign flip)
//! and tangent projection are applied once at the leaves, then the step
//! retracts along the exponential map and the row is renormalized.

use crate::dataset::{BipartiteGraph, DatasetError, InteractionSet, UserItemIndex};
use crate::geometry;
use crate::model::{Activation, ConvMode, EmbeddingMatrix, ModelConfig};
use crate::tape::{Tape, Var};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            weight_decay: 0.005,
            epochs: 1000,
            batch_size: 1024,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// Loss became NaN or infinite.
    Diverged { epoch: usize },
    Dataset(DatasetError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Diverged { epoch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}")
            }
            TrainError::Dataset(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<DatasetError> for TrainError {
    fn from(e: DatasetError) -> Self {
        TrainError::Dataset(e)
    }
}

/// Ambient-coordinate gradients for the embedding rows with nonzero
/// adjoints, keyed by global row index.
#[derive(Debug, Clone, Default)]
pub struct SparseGrad {
    rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseGrad {
    pub fn get(&self, row: usize) -> Option<&[f64]> {
        self.rows.get(&row).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(r, g)| (*r, g.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A training triple: user, positive item, sampled negative item
/// (item indices are local, not global).
pub type Triple = (u32, u32, u32);

// ---- tape construction ---------------------------------------------------

const BALL_MAX2: f64 = (1.0 - geometry::EPS_BALL) * (1.0 - geometry::EPS_BALL);

struct TapeRows {
    vars: Vec<Var>,
    width: usize,
}

impl TapeRows {
    fn row(&self, i: usize) -> &[Var] {
        &self.vars[i * self.width..(i + 1) * self.width]
    }
}

fn tape_conv_layer(
    tape: &mut Tape,
    graph: &BipartiteGraph,
    rows: &TapeRows,
    activation: Activation,
) -> TapeRows {
    let w = rows.width;
    let d = w - 1;
    let n_nodes = graph.n_nodes();
    let one = tape.constant(1.0);

    // Klein coordinates and Lorentz factors per node
    let mut klein: Vec<Var> = Vec::with_capacity(n_nodes * d);
    let mut gamma: Vec<Var> = Vec::with_capacity(n_nodes);
    for node in 0..n_nodes {
        let row = rows.row(node);
        let mut sq = Vec::with_capacity(d);
        for t in 1..w {
            let k = tape.div(row[t], row[0]);
            klein.push(k);
            sq.push(tape.square(k));
        }
        let n2 = tape.sum(&sq);
        let n2 = tape.clamp_max(n2, BALL_MAX2);
        let rem = tape.sub(one, n2);
        let root = tape.sqrt(rem);
        gamma.push(tape.div(one, root));
    }

    let mut out: Vec<Var> = Vec::with_capacity(n_nodes * w);
    for node in 0..n_nodes {
        let nbs = graph.neighborhood(node);
        let mut den_terms = Vec::with_capacity(nbs.len());
        for &nb in nbs {
            den_terms.push(gamma[nb as usize]);
        }
        let den = tape.sum(&den_terms);

        let mut mid = Vec::with_capacity(d);
        let mut n2_terms = Vec::with_capacity(d);
        for t in 0..d {
            let mut num_terms = Vec::with_capacity(nbs.len());
            for &nb in nbs {
                let nb = nb as usize;
                num_terms.push(tape.mul(gamma[nb], klein[nb * d + t]));
            }
            let num = tape.sum(&num_terms);
            let m = tape.div(num, den);
            mid.push(m);
            n2_terms.push(tape.square(m));
        }
        let n2 = tape.sum(&n2_terms);
        let n2 = tape.clamp_max(n2, BALL_MAX2);
        let rem = tape.sub(one, n2);
        let root = tape.sqrt(rem);
        let g = tape.div(one, root);

        match activation {
            Activation::None => {
                out.push(g);
                for m in &mid {
                    out.push(tape.mul(g, *m));
                }
            }
            Activation::Relu => {
                let mut spatial = Vec::with_capacity(d);
                let mut s2_terms = Vec::with_capacity(d);
                for m in &mid {
                    let z = tape.mul(g, *m);
                    let s = tape.relu(z);
                    spatial.push(s);
                    s2_terms.push(tape.square(s));
                }
                let s2 = tape.sum(&s2_terms);
                let arg = tape.add(one, s2);
                out.push(tape.sqrt(arg));
                out.extend(spatial);
            }
        }
    }
    TapeRows {
        vars: out,
        width: w,
    }
}

fn tape_tangent_layer(
    tape: &mut Tape,
    graph: &BipartiteGraph,
    rows: &TapeRows,
    activation: Activation,
) -> TapeRows {
    let w = rows.width;
    let d = w - 1;
    let n_nodes = graph.n_nodes();
    let one = tape.constant(1.0);

    // log map at the origin: zero time slot, spatial acosh(x0) * x_s / |x_s|
    let mut lifted: Vec<Var> = Vec::with_capacity(n_nodes * d);
    for node in 0..n_nodes {
        let row = rows.row(node);
        let mut sq = Vec::with_capacity(d);
        for t in 1..w {
            sq.push(tape.square(row[t]));
        }
        let sn2 = tape.sum(&sq);
        let sn2 = tape.clamp_min(sn2, 1e-24);
        let sn = tape.sqrt(sn2);
        let a = tape.acosh_clamped(row[0]);
        let scale = tape.div(a, sn);
        for t in 1..w {
            lifted.push(tape.mul(scale, row[t]));
        }
    }

    let mut out: Vec<Var> = Vec::with_capacity(n_nodes * w);
    for node in 0..n_nodes {
        let nbs = graph.neighborhood(node);
        let inv = 1.0 / nbs.len() as f64;
        let mut mean = Vec::with_capacity(d);
        let mut r2_terms = Vec::with_capacity(d);
        for t in 0..d {
            let mut terms = Vec::with_capacity(nbs.len());
            for &nb in nbs {
                terms.push(lifted[nb as usize * d + t]);
            }
            let s = tape.sum(&terms);
            let mut m = tape.scale(s, inv);
            if activation == Activation::Relu {
                m = tape.relu(m);
            }
            mean.push(m);
            r2_terms.push(tape.square(m));
        }
        let r2 = tape.sum(&r2_terms);
        let r2 = tape.clamp_min(r2, 1e-24);
        let r = tape.sqrt(r2);
        let sh = tape.sinh(r);
        let scale = tape.div(sh, r);
        let mut spatial = Vec::with_capacity(d);
        let mut s2_terms = Vec::with_capacity(d);
        for m in &mean {
            let v = tape.mul(scale, *m);
            spatial.push(v);
            s2_terms.push(tape.square(v));
        }
        let s2 = tape.sum(&s2_terms);
        let arg = tape.add(one, s2);
        out.push(tape.sqrt(arg));
        out.extend(spatial);
    }
    TapeRows {
        vars: out,
        width: w,
    }
}

/// `d_L^2(x, y)` on the tape, with the arcosh argument clamped.
fn tape_dist_sq(tape: &mut Tape, x: &[Var], y: &[Var]) -> Var {
    let p0 = tape.mul(x[0], y[0]);
    let mut rest = Vec::with_capacity(x.len() - 1);
    for t in 1..x.len() {
        rest.push(tape.mul(x[t], y[t]));
    }
    let spatial = tape.sum(&rest);
    let arg = tape.sub(p0, spatial);
    let dist = tape.acosh_clamped(arg);
    tape.square(dist)
}

/// Builds the full batch loss on a fresh tape and returns its value with
/// the exact ambient gradient for every touched embedding row.
///
/// Loss: mean over the batch of the margin hinge, plus
/// `weight_decay * sum d_L^2(x, o)` over the distinct rows appearing in
/// the batch (evaluated at the leaf embeddings).
pub fn batch_loss_and_grad(
    graph: &BipartiteGraph,
    embeddings: &EmbeddingMatrix,
    batch: &[Triple],
    model_config: &ModelConfig,
    weight_decay: f64,
) -> (f64, SparseGrad) {
    assert!(!batch.is_empty(), "batch must be nonempty");
    let w = embeddings.dim() + 1;
    let n_rows = embeddings.n_rows();
    let n_users = graph.n_users;

    let mut tape = Tape::with_capacity(n_rows * w * 8 * model_config.layers);
    let leaves = TapeRows {
        vars: embeddings.data().iter().map(|&v| tape.leaf(v)).collect(),
        width: w,
    };

    let mut layers: Vec<TapeRows> = Vec::with_capacity(model_config.layers);
    {
        let mut current = &leaves;
        for _ in 0..model_config.layers {
            let next = match model_config.mode {
                ConvMode::Hyperbolic => tape_conv_layer(&mut tape, graph, current, model_config.activation),
                ConvMode::Tangent => tape_tangent_layer(&mut tape, graph, current, model_config.activation),
            };
            layers.push(next);
            current = layers.last().unwrap();
        }
    }

    let margin = tape.constant(model_config.margin);
    let mut per_pair = Vec::with_capacity(batch.len());
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    for &(u, pos, neg) in batch {
        let (u, gp, gn) = (u as usize, n_users + pos as usize, n_users + neg as usize);
        touched.extend([u, gp, gn]);
        if model_config.per_layer_hinge {
            let mut hinges = Vec::with_capacity(layers.len());
            for layer in &layers {
                let dp = tape_dist_sq(&mut tape, layer.row(u), layer.row(gp));
                let dn = tape_dist_sq(&mut tape, layer.row(u), layer.row(gn));
                let md = tape.add(margin, dp);
                let h = tape.sub(md, dn);
                hinges.push(tape.relu(h));
            }
            per_pair.push(tape.sum(&hinges));
        } else {
            let mut dp_terms = Vec::with_capacity(layers.len());
            let mut dn_terms = Vec::with_capacity(layers.len());
            for layer in &layers {
                dp_terms.push(tape_dist_sq(&mut tape, layer.row(u), layer.row(gp)));
                dn_terms.push(tape_dist_sq(&mut tape, layer.row(u), layer.row(gn)));
            }
            let dp = tape.sum(&dp_terms);
            let dn = tape.sum(&dn_terms);
            let md = tape.add(margin, dp);
            let h = tape.sub(md, dn);
            per_pair.push(tape.relu(h));
        }
    }
    let total = tape.sum(&per_pair);
    let mut loss = tape.scale(total, 1.0 / batch.len() as f64);

    if weight_decay > 0.0 {
        // d_L(x, o) = acosh(x_0); intrinsic pull toward the origin
        let mut decay_terms = Vec::with_capacity(touched.len());
        for &row in &touched {
            let x0 = leaves.row(row)[0];
            let a = tape.acosh_clamped(x0);
            decay_terms.push(tape.square(a));
        }
        let decay = tape.sum(&decay_terms);
        let scaled = tape.scale(decay, weight_decay);
        loss = tape.add(loss, scaled);
    }

    let adjoints = tape.gradient(loss);
    let mut rows = BTreeMap::new();
    for row in 0..n_rows {
        let g = &adjoints[row * w..(row + 1) * w];
        if g.iter().any(|&c| c != 0.0) {
            rows.insert(row, g.to_vec());
        }
    }
    (loss.value, SparseGrad { rows })
}

/// One Riemannian SGD step, in place: for each row with gradient `g`,
/// flip the time-slot sign (inverse metric), project onto the tangent
/// space, retract by the exponential map, and renormalize.
pub fn rsgd_step(embeddings: &mut EmbeddingMatrix, grads: &SparseGrad, lr: f64) {
    for (row, g) in grads.iter() {
        let x = embeddings.point(row);
        let mut step: Vec<f64> = g.iter().map(|&c| -lr * c).collect();
        step[0] = -step[0];
        // projection is linear, so scaling before projecting is the same
        // as projecting then scaling
        let h = geometry::proj_tangent(&x, &step);
        let moved = geometry::exp_map(&h);
        let repaired = geometry::renormalize(moved.coords());
        embeddings.row_mut(row).copy_from_slice(repaired.coords());
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub embeddings: EmbeddingMatrix,
    /// Mean loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Full training loop: each epoch shuffles the positives, pairs every
/// positive with one fresh uniform negative, and applies one RSGD step
/// per batch. Deterministic for a fixed seed.
pub fn train(
    graph: &BipartiteGraph,
    train_set: &InteractionSet,
    initial: &EmbeddingMatrix,
    model_config: &ModelConfig,
    optim_config: &OptimConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainResult, TrainError> {
    let index = UserItemIndex::build(train_set);
    let mut rng = ChaCha8Rng::seed_from_u64(optim_config.seed);
    let mut positives = train_set.pairs.clone();
    let mut embeddings = initial.clone();
    let mut loss_history = Vec::with_capacity(optim_config.epochs);

    for epoch in 0..optim_config.epochs {
        positives.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in positives.chunks(optim_config.batch_size.max(1)) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &(u, i) in chunk {
                let neg = index.sample_negative(u as usize, &mut rng)?;
                batch.push((u, i, neg));
            }
            let (loss, grads) =
                batch_loss_and_grad(graph, &embeddings, &batch, model_config, optim_config.weight_decay);
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            rsgd_step(&mut embeddings, &grads, optim_config.lr);
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let mean = epoch_loss / seen as f64;
        loss_history.push(mean);
        on_epoch(epoch, mean);
    }

    Ok(TrainResult {
        embeddings,
        loss_history,
    })
}
