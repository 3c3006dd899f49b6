//! Matching solvers on the complete graph.

use super::{edge_count, edge_index, ensure_finite, FeasibleSet};
use crate::error::{Error, Result};

/// Node cap of the exact solver's subset dynamic program.
pub const MAX_EXACT_NODES: usize = 16;

fn check_dimensions(nodes: usize, weights: &[f64]) -> Result<()> {
    let m = edge_count(nodes);
    if weights.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: weights.len(),
        });
    }
    ensure_finite(weights)
}

/// Exact max-weight matching via dynamic programming over node subsets.
///
/// Among matchings of maximum total weight, returns the one whose sorted
/// edge-index list is lexicographically smallest; in particular, zero-weight
/// edges are never padded in. Value ties are compared with exact
/// floating-point equality so the output is a pure function of the input bits.
pub fn exact_max_weight_matching(nodes: usize, weights: &[f64]) -> Result<FeasibleSet> {
    if nodes > MAX_EXACT_NODES {
        return Err(Error::TooManyNodes {
            nodes,
            limit: MAX_EXACT_NODES,
        });
    }
    check_dimensions(nodes, weights)?;

    // dp[mask] = (best value, lexicographically smallest optimal edge list)
    // over the nodes in `mask`. The lowest node of `mask` is either skipped or
    // matched; edges incident to it carry the lowest canonical indices within
    // the mask, so prepending keeps lists sorted and makes the lex comparison
    // of sub-results compose.
    let mut dp: Vec<(f64, Vec<u16>)> = vec![(0.0, Vec::new()); 1 << nodes];
    for mask in 1usize..(1 << nodes) {
        let u = mask.trailing_zeros() as usize;
        let without_u = mask & !(1 << u);
        let mut best = dp[without_u].clone();
        let mut rest = without_u;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let sub = without_u & !(1 << v);
            let e = edge_index(nodes, u, v);
            let value = weights[e] + dp[sub].0;
            if value > best.0 {
                let mut edges = Vec::with_capacity(dp[sub].1.len() + 1);
                edges.push(e as u16);
                edges.extend_from_slice(&dp[sub].1);
                best = (value, edges);
            } else if value == best.0 {
                let mut edges = Vec::with_capacity(dp[sub].1.len() + 1);
                edges.push(e as u16);
                edges.extend_from_slice(&dp[sub].1);
                if edges < best.1 {
                    best = (value, edges);
                }
            }
        }
        dp[mask] = best;
    }

    let (_, edges) = &dp[(1 << nodes) - 1];
    Ok(FeasibleSet::from_sorted_unchecked(
        edges.iter().map(|&e| e as usize).collect(),
    ))
}

fn greedy_over(nodes: usize, weights: &[f64], keep: impl Fn(f64) -> bool) -> FeasibleSet {
    let m = edge_count(nodes);
    let mut order: Vec<usize> = (0..m)
        .filter(|&e| weights[e] > 0.0 && keep(weights[e]))
        .collect();
    // Highest weight first, canonical index breaking ties.
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .expect("weights checked finite")
            .then(a.cmp(&b))
    });

    let mut matched = vec![false; nodes];
    let mut chosen = Vec::new();
    for e in order {
        let (u, v) = super::edge_endpoints(nodes, e);
        if !matched[u] && !matched[v] {
            matched[u] = true;
            matched[v] = true;
            chosen.push(e);
        }
    }
    chosen.sort_unstable();
    FeasibleSet::from_sorted_unchecked(chosen)
}

/// Greedy matching: repeatedly add the highest-weight feasible edge with
/// positive weight, breaking weight ties by canonical edge index.
pub fn greedy_matching(nodes: usize, weights: &[f64]) -> Result<FeasibleSet> {
    check_dimensions(nodes, weights)?;
    Ok(greedy_over(nodes, weights, |_| true))
}

/// Greedy matching restricted to edges of weight at least `threshold`.
pub(crate) fn greedy_matching_thresholded(
    nodes: usize,
    weights: &[f64],
    threshold: f64,
) -> Result<FeasibleSet> {
    check_dimensions(nodes, weights)?;
    Ok(greedy_over(nodes, weights, |w| w >= threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_weights_n4() -> Vec<f64> {
        let mut w = vec![0.0; 6];
        w[edge_index(4, 0, 1)] = 0.6;
        w[edge_index(4, 1, 2)] = 1.0;
        w[edge_index(4, 2, 3)] = 0.6;
        w
    }

    #[test]
    fn exact_solves_the_path_instance() {
        let set = exact_max_weight_matching(4, &path_weights_n4()).unwrap();
        assert_eq!(set.indices(), &[edge_index(4, 0, 1), edge_index(4, 2, 3)]);
        assert!((set.value(&path_weights_n4()) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn exact_prefers_the_empty_matching_on_all_zero_weights() {
        let set = exact_max_weight_matching(4, &[0.0; 6]).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn exact_takes_a_single_positive_edge() {
        let mut w = vec![0.0; 6];
        w[0] = 0.5;
        let set = exact_max_weight_matching(4, &w).unwrap();
        assert_eq!(set.indices(), &[0]);
        assert_eq!(set.value(&w), 0.5);
    }

    #[test]
    fn exact_rejects_oversized_graphs_and_nan() {
        let nodes = 17;
        let err = exact_max_weight_matching(nodes, &vec![0.0; edge_count(nodes)]);
        assert!(matches!(err, Err(Error::TooManyNodes { limit: 16, .. })));

        let mut w = vec![0.0; 6];
        w[3] = f64::NAN;
        assert!(matches!(
            exact_max_weight_matching(4, &w),
            Err(Error::NonFiniteValue { index: 3 })
        ));
        assert!(matches!(
            greedy_matching(4, &w),
            Err(Error::NonFiniteValue { index: 3 })
        ));
    }

    #[test]
    fn greedy_grabs_the_heavy_middle_edge() {
        let set = greedy_matching(4, &path_weights_n4()).unwrap();
        assert_eq!(set.indices(), &[edge_index(4, 1, 2)]);
        assert_eq!(set.value(&path_weights_n4()), 1.0);
    }

    #[test]
    fn greedy_breaks_ties_by_edge_index() {
        let set = greedy_matching(4, &[0.3; 6]).unwrap();
        // Edge 0 = (0,1) first, then the only disjoint edge (2,3) = 5.
        assert_eq!(set.indices(), &[0, 5]);
    }

    #[test]
    fn greedy_returns_empty_without_positive_edges() {
        let set = greedy_matching(4, &[0.0; 6]).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn greedy_handles_graphs_beyond_the_exact_cap() {
        let nodes = 20;
        let mut w = vec![0.0; edge_count(nodes)];
        w[edge_index(nodes, 2, 19)] = 0.4;
        w[edge_index(nodes, 0, 1)] = 0.9;
        let set = greedy_matching(nodes, &w).unwrap();
        assert_eq!(
            set.indices(),
            &[edge_index(nodes, 0, 1), edge_index(nodes, 2, 19)]
        );
    }

    #[test]
    fn solvers_are_deterministic() {
        let w = path_weights_n4();
        assert_eq!(
            exact_max_weight_matching(4, &w).unwrap(),
            exact_max_weight_matching(4, &w).unwrap()
        );
        assert_eq!(
            greedy_matching(4, &w).unwrap(),
            greedy_matching(4, &w).unwrap()
        );
    }
}
