//! Full-catalog ranking and Recall@K / NDCG@K over held-out interactions.

use crate::dataset::{Split, UserItemIndex};
use crate::model::{self, LayerStack};
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// Every user has an empty test set.
    NoEvaluableUsers,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NoEvaluableUsers => write!(f, "no users with nonempty test sets"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Ranks the full catalog for one user: every item the user has not
/// interacted with in train, by ascending aggregate squared distance
/// (a monotone transform of the score, safe at zero distance), ties
/// broken by ascending item index.
pub fn rank_items(user: usize, stack: &LayerStack, train_items: &BTreeSet<u32>) -> Vec<u32> {
    let n_items = stack.layers[0].n_rows() - stack.n_users;
    let mut scored: Vec<(f64, u32)> = (0..n_items as u32)
        .filter(|i| !train_items.contains(i))
        .map(|i| (model::sum_sq_dist(user, i as usize, stack), i))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, i)| i).collect()
}

/// `|top-K intersect test| / |test|`.
pub fn recall_at_k(ranked: &[u32], test_items: &BTreeSet<u32>, k: usize) -> f64 {
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| test_items.contains(i))
        .count();
    hits as f64 / test_items.len() as f64
}

/// Binary-relevance NDCG with the `1 / log2(p + 1)` discount.
pub fn ndcg_at_k(ranked: &[u32], test_items: &BTreeSet<u32>, k: usize) -> f64 {
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| test_items.contains(i))
        .map(|(p, _)| 1.0 / libm::log2((p + 2) as f64))
        .sum();
    let idcg: f64 = (0..k.min(test_items.len()))
        .map(|p| 1.0 / libm::log2((p + 2) as f64))
        .sum();
    dcg / idcg
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEval {
    pub user: u32,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
}

/// Mean metrics over evaluable users (nonempty test sets) at each cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cutoffs: Vec<usize>,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub evaluable_users: usize,
    pub per_user: Vec<UserEval>,
}

/// Full-catalog evaluation of a trained stack against the held-out test
/// interactions; train items are excluded from each user's ranking.
pub fn evaluate(stack: &LayerStack, split: &Split, cutoffs: &[usize]) -> Result<EvalReport, EvalError> {
    assert!(!cutoffs.is_empty());
    let train_index = UserItemIndex::build(&split.train);
    let test_index = UserItemIndex::build(&split.test);

    let mut per_user = Vec::new();
    let mut recall_sum = alloc::vec![0.0; cutoffs.len()];
    let mut ndcg_sum = alloc::vec![0.0; cutoffs.len()];
    for user in 0..split.train.n_users {
        let test_items = test_index.items_of(user);
        if test_items.is_empty() {
            continue;
        }
        let ranked = rank_items(user, stack, train_index.items_of(user));
        let mut row = UserEval {
            user: user as u32,
            recall: Vec::with_capacity(cutoffs.len()),
            ndcg: Vec::with_capacity(cutoffs.len()),
        };
        for (slot, &k) in cutoffs.iter().enumerate() {
            let r = recall_at_k(&ranked, test_items, k);
            let n = ndcg_at_k(&ranked, test_items, k);
            recall_sum[slot] += r;
            ndcg_sum[slot] += n;
            row.recall.push(r);
            row.ndcg.push(n);
        }
        per_user.push(row);
    }

    let count = per_user.len();
    if count == 0 {
        return Err(EvalError::NoEvaluableUsers);
    }
    Ok(EvalReport {
        cutoffs: cutoffs.to_vec(),
        recall: recall_sum.into_iter().map(|s| s / count as f64).collect(),
        ndcg: ndcg_sum.into_iter().map(|s| s / count as f64).collect(),
        evaluable_users: count,
        per_user,
    })
}
