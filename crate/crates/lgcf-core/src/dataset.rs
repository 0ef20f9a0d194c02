//! Implicit-feedback interactions, the train/test split, and the
//! bipartite interaction graph.
//!
//! Node indexing convention used everywhere downstream: users occupy
//! global indices `0..n_users`, items `n_users..n_users+n_items`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetError {
    /// A non-comment line did not hold exactly two tokens.
    MalformedLine { line: usize },
    EmptyInput,
    /// Negative sampling is impossible: the user interacted with every item.
    NoNegativeAvailable { user: usize },
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::MalformedLine { line } => {
                write!(f, "line {line}: expected `user item`, got a different token count")
            }
            DatasetError::EmptyInput => write!(f, "no interactions found in input"),
            DatasetError::NoNegativeAvailable { user } => {
                write!(f, "user {user} interacted with every item; no negative to sample")
            }
        }
    }
}

impl core::error::Error for DatasetError {}

/// Deduplicated binary interaction matrix in pair-list form, with the
/// original string ids retained for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSet {
    pub n_users: usize,
    pub n_items: usize,
    pub pairs: Vec<(u32, u32)>,
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
}

impl InteractionSet {
    /// Parses `user item` pairs, one per line. `#`-prefixed and blank
    /// lines are skipped; ids are mapped to dense indices in
    /// first-appearance order; duplicate pairs collapse to one.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut user_index: BTreeMap<&str, u32> = BTreeMap::new();
        let mut item_index: BTreeMap<&str, u32> = BTreeMap::new();
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut pairs = Vec::new();
        let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let (user, item) = match (tokens.next(), tokens.next(), tokens.next()) {
                (Some(u), Some(i), None) => (u, i),
                _ => return Err(DatasetError::MalformedLine { line: lineno + 1 }),
            };
            let u = *user_index.entry(user).or_insert_with(|| {
                user_ids.push(user.to_string());
                (user_ids.len() - 1) as u32
            });
            let i = *item_index.entry(item).or_insert_with(|| {
                item_ids.push(item.to_string());
                (item_ids.len() - 1) as u32
            });
            if seen.insert((u, i)) {
                pairs.push((u, i));
            }
        }

        if pairs.is_empty() {
            return Err(DatasetError::EmptyInput);
        }
        Ok(Self {
            n_users: user_ids.len(),
            n_items: item_ids.len(),
            pairs,
            user_ids,
            item_ids,
        })
    }

    /// Builds a set directly from dense pairs (synthetic benchmarks).
    pub fn from_pairs(n_users: usize, n_items: usize, pairs: Vec<(u32, u32)>) -> Self {
        let mut seen = BTreeSet::new();
        let pairs: Vec<_> = pairs.into_iter().filter(|p| seen.insert(*p)).collect();
        Self {
            n_users,
            n_items,
            pairs,
            user_ids: (0..n_users).map(|u| u.to_string()).collect(),
            item_ids: (0..n_items).map(|i| i.to_string()).collect(),
        }
    }

    /// Item lists per user, in pair order.
    pub fn items_by_user(&self) -> Vec<Vec<u32>> {
        let mut by_user = alloc::vec![Vec::new(); self.n_users];
        for &(u, i) in &self.pairs {
            by_user[u as usize].push(i);
        }
        by_user
    }

    fn with_pairs(&self, pairs: Vec<(u32, u32)>) -> Self {
        Self {
            n_users: self.n_users,
            n_items: self.n_items,
            pairs,
            user_ids: self.user_ids.clone(),
            item_ids: self.item_ids.clone(),
        }
    }
}

/// Per-user random 80/20-style partition of an interaction set.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: InteractionSet,
    pub test: InteractionSet,
    pub seed: u64,
}

/// Partitions each user's interactions, putting `ceil(test_fraction * deg)`
/// pairs in test (capped at `deg - 1`). Users with a single interaction
/// keep it in train. Deterministic for a fixed seed.
pub fn split_train_test(set: &InteractionSet, test_fraction: f64, seed: u64) -> Split {
    assert!(test_fraction > 0.0 && test_fraction < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (u, mut items) in set.items_by_user().into_iter().enumerate() {
        let deg = items.len();
        if deg < 2 {
            train.extend(items.into_iter().map(|i| (u as u32, i)));
            continue;
        }
        items.shuffle(&mut rng);
        let mut n_test = libm::ceil(test_fraction * deg as f64) as usize;
        if n_test >= deg {
            n_test = deg - 1;
        }
        for (idx, i) in items.into_iter().enumerate() {
            if idx < n_test {
                test.push((u as u32, i));
            } else {
                train.push((u as u32, i));
            }
        }
    }
    Split {
        train: set.with_pairs(train),
        test: set.with_pairs(test),
        seed,
    }
}

/// CSR adjacency over users and items with self-inclusive, ascending
/// neighbor lists `N(i) = {i} u neighbors(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub n_users: usize,
    pub n_items: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl BipartiteGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_items
    }

    /// Self-inclusive neighbor list of global node `i`, sorted ascending.
    pub fn neighborhood(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn total_neighbor_len(&self) -> usize {
        self.neighbors.len()
    }
}

/// Builds the interaction graph from training pairs. Every edge appears in
/// both endpoints' lists; every node lists itself.
pub fn build_graph(train: &InteractionSet) -> BipartiteGraph {
    let n = train.n_users;
    let n_nodes = n + train.n_items;
    let mut counts = alloc::vec![1usize; n_nodes]; // one slot per self-loop
    for &(u, i) in &train.pairs {
        counts[u as usize] += 1;
        counts[n + i as usize] += 1;
    }
    let mut offsets = Vec::with_capacity(n_nodes + 1);
    let mut acc = 0;
    offsets.push(0);
    for c in &counts {
        acc += c;
        offsets.push(acc);
    }
    let mut neighbors = alloc::vec![0u32; acc];
    let mut fill = offsets.clone();
    for node in 0..n_nodes {
        neighbors[fill[node]] = node as u32;
        fill[node] += 1;
    }
    for &(u, i) in &train.pairs {
        let (u, g) = (u as usize, n + i as usize);
        neighbors[fill[u]] = g as u32;
        fill[u] += 1;
        neighbors[fill[g]] = u as u32;
        fill[g] += 1;
    }
    for node in 0..n_nodes {
        neighbors[offsets[node]..offsets[node + 1]].sort_unstable();
    }
    BipartiteGraph {
        n_users: n,
        n_items: train.n_items,
        offsets,
        neighbors,
    }
}

/// Per-user interacted-item sets, precomputed for negative sampling and
/// train-item exclusion during ranking.
#[derive(Debug, Clone)]
pub struct UserItemIndex {
    sets: Vec<BTreeSet<u32>>,
    n_items: usize,
}

impl UserItemIndex {
    pub fn build(set: &InteractionSet) -> Self {
        let mut sets = alloc::vec![BTreeSet::new(); set.n_users];
        for &(u, i) in &set.pairs {
            sets[u as usize].insert(i);
        }
        Self {
            sets,
            n_items: set.n_items,
        }
    }

    pub fn items_of(&self, user: usize) -> &BTreeSet<u32> {
        &self.sets[user]
    }

    /// Uniform draw over the items `user` has not interacted with.
    pub fn sample_negative<R: Rng + ?Sized>(
        &self,
        user: usize,
        rng: &mut R,
    ) -> Result<u32, DatasetError> {
        let seen = &self.sets[user];
        let free = self.n_items - seen.len();
        if free == 0 {
            return Err(DatasetError::NoNegativeAvailable { user });
        }
        if free * 2 >= self.n_items {
            // rejection sampling terminates quickly when at least half the
            // catalog is free
            loop {
                let cand = rng.random_range(0..self.n_items as u32);
                if !seen.contains(&cand) {
                    return Ok(cand);
                }
            }
        }
        // dense user: enumerate the complement and index into it
        let target = rng.random_range(0..free);
        let mut skipped = 0usize;
        let mut next = 0u32;
        for &s in seen {
            let gap = (s - next) as usize;
            if skipped + gap > target {
                return Ok(next + (target - skipped) as u32);
            }
            skipped += gap;
            next = s + 1;
        }
        Ok(next + (target - skipped) as u32)
    }
}

/// Convenience wrapper matching the one-shot contract; builds the index
/// each call. Use [`UserItemIndex`] directly inside loops.
pub fn sample_negative<R: Rng + ?Sized>(
    user: usize,
    train: &InteractionSet,
    rng: &mut R,
) -> Result<u32, DatasetError> {
    UserItemIndex::build(train).sample_negative(user, rng)
}
