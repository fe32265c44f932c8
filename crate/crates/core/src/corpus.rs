//! Seeded random instances for cross-checking the closed forms against the
//! brute-force routes on many small cases.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::trees::{validate_tree, RootedTreePrefix, TreeSpec, VertexSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree prefix with branching index at most `max_index`, child counts
/// at most `max_children`, truncated `extra_depth` levels past the last
/// possible branching level.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    name: &str,
    max_index: usize,
    max_children: usize,
    extra_depth: usize,
) -> RootedTreePrefix {
    assert!(max_children >= 1);
    let truncation = max_index + extra_depth.max(1);
    let mut vertices = vec![VertexSpec { id: 0, parent: None }];
    let mut next_id = 1i64;
    let mut frontier = vec![0i64];
    for level in 0..truncation {
        let mut next = Vec::new();
        for &p in &frontier {
            // Branching allowed only strictly below the index bound.
            let fanout = if level < max_index && max_children > 1 {
                rng.gen_range(1..=max_children)
            } else {
                1
            };
            for _ in 0..fanout {
                vertices.push(VertexSpec { id: next_id, parent: Some(p) });
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    validate_tree(TreeSpec { name: name.to_string(), truncation_depth: truncation, vertices })
        .expect("generated prefix is valid")
}

/// Applies a random parent-preserving relabeling and reorders the document;
/// the result is graph isomorphic to the input by construction.
pub fn relabel_tree(rng: &mut ChaCha8Rng, t: &RootedTreePrefix, name: &str) -> RootedTreePrefix {
    let n = t.vertex_count();
    // Random new ids.
    let mut ids: Vec<i64> = (0..n as i64).map(|i| i * 7 + rng.gen_range(0..7)).collect();
    // Make them unique by construction: shuffle a strictly increasing list.
    ids.sort_unstable();
    ids.dedup();
    while ids.len() < n {
        let last = *ids.last().unwrap();
        ids.push(last + 1 + rng.gen_range(0..5));
    }
    // Random permutation of the order in which vertices are listed, keeping
    // parents before children (shuffle within depth levels).
    let shuffle_key: Vec<u32> = (0..n).map(|_| rng.gen_range(0..1_000_000)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (t.depth(v), shuffle_key[v], v));
    let mut new_id = vec![0i64; n];
    for (slot, &v) in order.iter().enumerate() {
        new_id[v] = ids[slot];
    }
    let vertices: Vec<VertexSpec> = order
        .iter()
        .map(|&v| VertexSpec {
            id: new_id[v],
            parent: t.parent(v).map(|p| new_id[p]),
        })
        .collect();
    validate_tree(TreeSpec {
        name: name.to_string(),
        truncation_depth: t.truncation_depth(),
        vertices,
    })
    .expect("relabeled prefix is valid")
}
