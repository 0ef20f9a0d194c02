//! Synthetic benchmark data: a three-level tree-structured bipartite
//! graph with item pools shared at the leaf, branch, and global levels.
//!
//! 4 branches x 5 leaf communities x 10 users = 200 users. Items: 8
//! exclusive to each leaf community (160), 8 shared within each branch
//! (32), and 8 global (200 total). Every user draws 6 leaf items, 3
//! branch items, and 1 global item, so a 20% per-user split holds out
//! exactly 2 interactions.

use lgcf_core::dataset::InteractionSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const N_USERS: usize = 200;
pub const N_ITEMS: usize = 200;

const BRANCHES: usize = 4;
const LEAVES_PER_BRANCH: usize = 5;
const USERS_PER_LEAF: usize = 10;
const POOL: usize = 8;

pub fn tree_benchmark(seed: u64) -> InteractionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf_items_base = 0u32;
    let branch_items_base = (BRANCHES * LEAVES_PER_BRANCH * POOL) as u32; // 160
    let global_items_base = branch_items_base + (BRANCHES * POOL) as u32; // 192

    let mut pairs = Vec::new();
    for branch in 0..BRANCHES {
        for leaf in 0..LEAVES_PER_BRANCH {
            let leaf_id = branch * LEAVES_PER_BRANCH + leaf;
            let leaf_pool: Vec<u32> = (0..POOL as u32)
                .map(|i| leaf_items_base + (leaf_id * POOL) as u32 + i)
                .collect();
            let branch_pool: Vec<u32> = (0..POOL as u32)
                .map(|i| branch_items_base + (branch * POOL) as u32 + i)
                .collect();
            let global_pool: Vec<u32> =
                (0..POOL as u32).map(|i| global_items_base + i).collect();

            for slot in 0..USERS_PER_LEAF {
                let user = (leaf_id * USERS_PER_LEAF + slot) as u32;
                for &item in pick(&leaf_pool, 6, &mut rng).iter() {
                    pairs.push((user, item));
                }
                for &item in pick(&branch_pool, 3, &mut rng).iter() {
                    pairs.push((user, item));
                }
                for &item in pick(&global_pool, 1, &mut rng).iter() {
                    pairs.push((user, item));
                }
            }
        }
    }
    InteractionSet::from_pairs(N_USERS, N_ITEMS, pairs)
}

fn pick(pool: &[u32], count: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(rng);
    shuffled.truncate(count);
    shuffled
}

/// Renders an interaction set back to the `user item` line format.
pub fn to_pair_lines(set: &InteractionSet) -> String {
    let mut out = String::new();
    for &(u, i) in &set.pairs {
        out.push_str(&set.user_ids[u as usize]);
        out.push(' ');
        out.push_str(&set.item_ids[i as usize]);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_shape() {
        let set = tree_benchmark(7);
        assert_eq!(set.n_users, 200);
        assert_eq!(set.n_items, 200);
        assert_eq!(set.pairs.len(), 200 * 10);
        for items in set.items_by_user() {
            assert_eq!(items.len(), 10);
        }
        assert_eq!(tree_benchmark(7), set);
        assert_ne!(tree_benchmark(8), set);
    }

    #[test]
    fn pair_lines_round_trip() {
        let set = tree_benchmark(3);
        let reparsed = InteractionSet::parse(&to_pair_lines(&set)).unwrap();
        assert_eq!(reparsed.pairs.len(), set.pairs.len());
        assert_eq!((reparsed.n_users, reparsed.n_items), (200, 200));
    }
}
