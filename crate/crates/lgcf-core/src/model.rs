//! The LGCF forward pass: Klein-bridge graph convolution layers, the
//! tangent-space ablation variant, geodesic preference scoring, and the
//! margin ranking loss.
//!
//! The embedding table is the model's only trainable parameter. A layer
//! maps every embedding to the Klein ball, takes the Einstein midpoint
//! over each node's self-inclusive neighborhood, maps back to the
//! hyperboloid, and optionally applies ReLU followed by calibration.

use crate::dataset::BipartiteGraph;
use crate::geometry::{self, LorentzPoint, EPS_BALL, EPS_STEP};
use alloc::vec::Vec;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    /// Fully hyperbolic convolution through the Klein bridge.
    Hyperbolic,
    /// Ablation: aggregation by unweighted mean in the tangent space at
    /// the origin.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Spatial embedding dimensionality `d`; rows have `d + 1` ambient
    /// coordinates.
    pub dim: usize,
    /// Number of graph convolution layers `L`.
    pub layers: usize,
    pub activation: Activation,
    pub mode: ConvMode,
    /// Margin of the ranking loss, nonnegative.
    pub margin: f64,
    /// Standard deviation of the wrapped-normal initialization.
    pub init_sigma: f64,
    /// Apply the hinge per layer instead of once over the summed squared
    /// distances.
    pub per_layer_hinge: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.dim < 2 {
            return Err("embedding dimensionality must be at least 2");
        }
        if self.layers < 1 {
            return Err("layer count must be at least 1");
        }
        if self.margin < 0.0 {
            return Err("margin must be nonnegative");
        }
        if self.init_sigma <= 0.0 {
            return Err("init sigma must be positive");
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            layers: 3,
            activation: Activation::Relu,
            mode: ConvMode::Hyperbolic,
            margin: 0.5,
            init_sigma: 0.1,
            per_layer_hinge: false,
        }
    }
}

/// Row-major `(n_users + n_items) x (d + 1)` table of hyperboloid points,
/// users first.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(n_rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: alloc::vec![0.0; n_rows * (dim + 1)],
        }
    }

    pub fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len() % (dim + 1), 0);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / (self.dim + 1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.dim + 1;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.dim + 1;
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn point(&self, i: usize) -> LorentzPoint {
        LorentzPoint::from_coords_unchecked(self.row(i).to_vec())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest `|<x,x>_L + 1|` over all rows.
    pub fn max_constraint_violation(&self) -> f64 {
        (0..self.n_rows())
            .map(|i| {
                let r = self.row(i);
                libm::fabs(geometry::lorentz_inner(r, r).unwrap() + 1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Per-layer embedding tables `e^(1) .. e^(L)` produced by the forward
/// pass; scoring and the loss sum over all of them.
#[derive(Debug, Clone)]
pub struct LayerStack {
    pub n_users: usize,
    pub layers: Vec<EmbeddingMatrix>,
}

impl LayerStack {
    fn item_row(&self, i: usize) -> usize {
        self.n_users + i
    }
}

/// Draws every row independently from the wrapped normal at the origin.
pub fn init_embeddings<R: Rng + ?Sized>(
    n_rows: usize,
    config: &ModelConfig,
    rng: &mut R,
) -> EmbeddingMatrix {
    let mut data = Vec::with_capacity(n_rows * (config.dim + 1));
    for _ in 0..n_rows {
        let p = geometry::sample_wrapped_normal(config.dim, config.init_sigma, rng);
        data.extend_from_slice(p.coords());
    }
    EmbeddingMatrix::from_raw(config.dim, data)
}

/// One Klein-bridge convolution layer over the whole graph.
pub fn conv_layer(
    graph: &BipartiteGraph,
    embeddings: &EmbeddingMatrix,
    activation: Activation,
) -> EmbeddingMatrix {
    let d = embeddings.dim();
    let n_nodes = graph.n_nodes();
    debug_assert_eq!(n_nodes, embeddings.n_rows());

    // Klein coordinates and Lorentz factors, once per node
    let mut klein = alloc::vec![0.0; n_nodes * d];
    let mut gamma = alloc::vec![0.0; n_nodes];
    for node in 0..n_nodes {
        let row = embeddings.row(node);
        let k = &mut klein[node * d..(node + 1) * d];
        let mut n2 = 0.0;
        for (kc, xc) in k.iter_mut().zip(&row[1..]) {
            *kc = xc / row[0];
            n2 += *kc * *kc;
        }
        let max2 = (1.0 - EPS_BALL) * (1.0 - EPS_BALL);
        gamma[node] = 1.0 / libm::sqrt(1.0 - if n2 > max2 { max2 } else { n2 });
    }

    let mut out = EmbeddingMatrix::zeros(n_nodes, d);
    let mut mid = alloc::vec![0.0; d];
    for node in 0..n_nodes {
        for m in mid.iter_mut() {
            *m = 0.0;
        }
        let mut den = 0.0;
        for &nb in graph.neighborhood(node) {
            let nb = nb as usize;
            let g = gamma[nb];
            den += g;
            for (m, kc) in mid.iter_mut().zip(&klein[nb * d..(nb + 1) * d]) {
                *m += g * kc;
            }
        }
        let mut n2 = 0.0;
        for m in mid.iter_mut() {
            *m /= den;
            n2 += *m * *m;
        }
        let max2 = (1.0 - EPS_BALL) * (1.0 - EPS_BALL);
        if n2 > max2 {
            let s = libm::sqrt(max2 / n2);
            for m in mid.iter_mut() {
                *m *= s;
            }
            n2 = max2;
        }
        let g = 1.0 / libm::sqrt(1.0 - n2);
        let row = out.row_mut(node);
        match activation {
            Activation::None => {
                row[0] = g;
                for (r, m) in row[1..].iter_mut().zip(mid.iter()) {
                    *r = g * m;
                }
            }
            Activation::Relu => {
                let mut s2 = 0.0;
                for (r, m) in row[1..].iter_mut().zip(mid.iter()) {
                    let z = g * m;
                    *r = if z > 0.0 { z } else { 0.0 };
                    s2 += *r * *r;
                }
                row[0] = libm::sqrt(1.0 + s2);
            }
        }
    }
    out
}

/// One tangent-space convolution layer: log map at the origin, unweighted
/// neighborhood mean (with optional ReLU), exp map back.
pub fn tangent_conv_layer(
    graph: &BipartiteGraph,
    embeddings: &EmbeddingMatrix,
    activation: Activation,
) -> EmbeddingMatrix {
    let d = embeddings.dim();
    let n_nodes = graph.n_nodes();

    // log_o(x) has zero time slot and spatial part acosh(x_0) * x_s / |x_s|
    let mut lifted = alloc::vec![0.0; n_nodes * d];
    for node in 0..n_nodes {
        let row = embeddings.row(node);
        let sn = libm::sqrt(geometry::norm_sq(&row[1..]));
        if sn < EPS_STEP {
            continue;
        }
        let scale = libm::acosh(if row[0] < 1.0 { 1.0 } else { row[0] }) / sn;
        for (v, x) in lifted[node * d..(node + 1) * d].iter_mut().zip(&row[1..]) {
            *v = scale * x;
        }
    }

    let mut out = EmbeddingMatrix::zeros(n_nodes, d);
    let mut mean = alloc::vec![0.0; d];
    for node in 0..n_nodes {
        for m in mean.iter_mut() {
            *m = 0.0;
        }
        let nbs = graph.neighborhood(node);
        for &nb in nbs {
            let nb = nb as usize;
            for (m, v) in mean.iter_mut().zip(&lifted[nb * d..(nb + 1) * d]) {
                *m += v;
            }
        }
        let inv = 1.0 / nbs.len() as f64;
        let mut r2 = 0.0;
        for m in mean.iter_mut() {
            *m *= inv;
            if activation == Activation::Relu && *m < 0.0 {
                *m = 0.0;
            }
            r2 += *m * *m;
        }
        let r = libm::sqrt(r2);
        let row = out.row_mut(node);
        if r < EPS_STEP {
            row[0] = 1.0;
            continue;
        }
        let sh = libm::sinh(r) / r;
        for (o, m) in row[1..].iter_mut().zip(mean.iter()) {
            *o = sh * m;
        }
        row[0] = libm::sqrt(1.0 + geometry::norm_sq(&row[1..]));
    }
    out
}

/// Runs `config.layers` convolution layers and returns layers `1..=L`.
/// Dispatches on `config.mode`.
pub fn forward(
    graph: &BipartiteGraph,
    initial: &EmbeddingMatrix,
    config: &ModelConfig,
) -> LayerStack {
    let mut layers = Vec::with_capacity(config.layers);
    let mut current = initial.clone();
    for _ in 0..config.layers {
        current = match config.mode {
            ConvMode::Hyperbolic => conv_layer(graph, &current, config.activation),
            ConvMode::Tangent => tangent_conv_layer(graph, &current, config.activation),
        };
        layers.push(current.clone());
    }
    LayerStack {
        n_users: graph.n_users,
        layers,
    }
}

/// `sum_l d_L^2(e_u^(l), e_i^(l))`, the aggregate squared geodesic
/// distance driving both the score and the loss.
pub fn sum_sq_dist(user: usize, item: usize, stack: &LayerStack) -> f64 {
    let item_row = stack.item_row(item);
    stack
        .layers
        .iter()
        .map(|layer| {
            let d = geometry::dist_slices(layer.row(user), layer.row(item_row));
            d * d
        })
        .sum()
}

/// Cap returned when the aggregate squared distance underflows; coincident
/// pairs rank first.
pub const SCORE_CAP: f64 = 1e12;

/// Preference score `y(u, i) = 1 / sum_l d_L^2(e_u^(l), e_i^(l))`.
pub fn score(user: usize, item: usize, stack: &LayerStack) -> f64 {
    let s = sum_sq_dist(user, item, stack);
    if s < 1e-12 {
        SCORE_CAP
    } else {
        1.0 / s
    }
}

/// Margin ranking loss
/// `max(m + sum_l d^2(u, i_pos) - sum_l d^2(u, j_neg), 0)`.
pub fn pair_loss(
    user: usize,
    item_pos: usize,
    item_neg: usize,
    stack: &LayerStack,
    margin: f64,
) -> f64 {
    let h = margin + sum_sq_dist(user, item_pos, stack) - sum_sq_dist(user, item_neg, stack);
    if h > 0.0 {
        h
    } else {
        0.0
    }
}

/// Variant applying the hinge separately to each layer's squared
/// distances, then summing.
pub fn pair_loss_per_layer(
    user: usize,
    item_pos: usize,
    item_neg: usize,
    stack: &LayerStack,
    margin: f64,
) -> f64 {
    let item_pos = stack.item_row(item_pos);
    let item_neg = stack.item_row(item_neg);
    stack
        .layers
        .iter()
        .map(|layer| {
            let dp = geometry::dist_slices(layer.row(user), layer.row(item_pos));
            let dn = geometry::dist_slices(layer.row(user), layer.row(item_neg));
            let h = margin + dp * dp - dn * dn;
            if h > 0.0 {
                h
            } else {
                0.0
            }
        })
        .sum()
}
