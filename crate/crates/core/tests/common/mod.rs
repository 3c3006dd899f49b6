//! Shared test support: an implementation-independent matching oracle and
//! small instance builders.
//!
//! Each integration-test binary compiles its own copy and uses a subset.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use calibmatch::{edge_count, edge_endpoints};

/// Enumerates every matching of the complete graph on `nodes` nodes as a
/// sorted edge-index list (the empty matching included), by walking the edges
/// in canonical order and branching on take/skip.
pub fn enumerate_matchings(nodes: usize) -> Vec<Vec<usize>> {
    fn rec(
        nodes: usize,
        edge: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if edge == edge_count(nodes) {
            out.push(current.clone());
            return;
        }
        rec(nodes, edge + 1, used, current, out);
        let (u, v) = edge_endpoints(nodes, edge);
        if !used[u] && !used[v] {
            used[u] = true;
            used[v] = true;
            current.push(edge);
            rec(nodes, edge + 1, used, current, out);
            current.pop();
            used[u] = false;
            used[v] = false;
        }
    }
    let mut out = Vec::new();
    rec(nodes, 0, &mut vec![false; nodes], &mut Vec::new(), &mut out);
    out
}

/// Total weight of a sorted edge list, accumulated in descending index order
/// (the same convention as `FeasibleSet::value`).
pub fn matching_weight(edges: &[usize], weights: &[f64]) -> f64 {
    edges.iter().rev().fold(0.0, |acc, &e| acc + weights[e])
}

/// Brute-force max-weight matching: maximum value, ties broken toward the
/// lexicographically smallest sorted edge list.
pub fn best_matching_by_enumeration(nodes: usize, weights: &[f64]) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for matching in enumerate_matchings(nodes) {
        let value = matching_weight(&matching, weights);
        let better = match &best {
            None => true,
            Some((set, v)) => value > *v || (value == *v && matching < *set),
        };
        if better {
            best = Some((matching, value));
        }
    }
    best.expect("the empty matching is always enumerated")
}

/// Seeded uniform weight vector on [0, 1).
pub fn random_weights(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random::<f64>()).collect()
}
