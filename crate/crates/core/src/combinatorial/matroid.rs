//! Matroid independence oracles and the greedy base solver.

use serde::{Deserialize, Serialize};

use super::{ensure_finite, FeasibleSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MatroidKind {
    /// Independent sets are those of size at most `rank`.
    Uniform { rank: usize },
    /// The ground set is split into consecutive blocks; a set is independent
    /// when it takes at most `capacities[i]` elements from block `i`.
    Partition {
        block_sizes: Vec<usize>,
        capacities: Vec<usize>,
    },
}

/// A matroid over ground set `{0, …, ground − 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatroidRepr", into = "MatroidRepr")]
pub struct Matroid {
    kind: MatroidKind,
    ground: usize,
}

#[derive(Serialize, Deserialize)]
struct MatroidRepr {
    ground: usize,
    #[serde(flatten)]
    kind: MatroidKind,
}

impl TryFrom<MatroidRepr> for Matroid {
    type Error = Error;

    fn try_from(repr: MatroidRepr) -> Result<Self> {
        match repr.kind {
            MatroidKind::Uniform { rank } => Matroid::uniform(repr.ground, rank),
            MatroidKind::Partition {
                block_sizes,
                capacities,
            } => Matroid::partition(block_sizes, capacities),
        }
    }
}

impl From<Matroid> for MatroidRepr {
    fn from(m: Matroid) -> Self {
        MatroidRepr {
            ground: m.ground,
            kind: m.kind,
        }
    }
}

impl Matroid {
    pub fn uniform(ground: usize, rank: usize) -> Result<Self> {
        if ground == 0 {
            return Err(Error::InvalidParameter(
                "ground set must be nonempty".into(),
            ));
        }
        if rank > ground {
            return Err(Error::InvalidParameter(format!(
                "rank {rank} exceeds ground set size {ground}"
            )));
        }
        Ok(Matroid {
            kind: MatroidKind::Uniform { rank },
            ground,
        })
    }

    pub fn partition(block_sizes: Vec<usize>, capacities: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.len() != capacities.len() {
            return Err(Error::InvalidParameter(
                "partition matroid needs one capacity per nonempty block list".into(),
            ));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidParameter("empty partition block".into()));
        }
        let ground = block_sizes.iter().sum();
        Ok(Matroid {
            kind: MatroidKind::Partition {
                block_sizes,
                capacities,
            },
            ground,
        })
    }

    pub fn kind(&self) -> &MatroidKind {
        &self.kind
    }

    pub fn ground_size(&self) -> usize {
        self.ground
    }

    /// Common size of all maximal independent sets.
    pub fn rank(&self) -> usize {
        match &self.kind {
            MatroidKind::Uniform { rank } => *rank,
            MatroidKind::Partition {
                block_sizes,
                capacities,
            } => block_sizes
                .iter()
                .zip(capacities)
                .map(|(s, c)| s.min(c))
                .sum(),
        }
    }

    fn block_of(block_sizes: &[usize], element: usize) -> usize {
        let mut start = 0;
        for (i, &size) in block_sizes.iter().enumerate() {
            if element < start + size {
                return i;
            }
            start += size;
        }
        unreachable!("element out of ground set")
    }

    /// Independence oracle; out-of-range or duplicate elements are dependent.
    pub fn is_independent(&self, elements: &[usize]) -> bool {
        if elements.iter().any(|&e| e >= self.ground) {
            return false;
        }
        let mut sorted = elements.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        match &self.kind {
            MatroidKind::Uniform { rank } => elements.len() <= *rank,
            MatroidKind::Partition {
                block_sizes,
                capacities,
            } => {
                let mut counts = vec![0usize; block_sizes.len()];
                for &e in elements {
                    counts[Self::block_of(block_sizes, e)] += 1;
                }
                counts.iter().zip(capacities).all(|(n, cap)| n <= cap)
            }
        }
    }
}

fn greedy_over(matroid: &Matroid, weights: &[f64], keep: impl Fn(f64) -> bool) -> FeasibleSet {
    let mut order: Vec<usize> = (0..matroid.ground).filter(|&e| keep(weights[e])).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .expect("weights checked finite")
            .then(a.cmp(&b))
    });

    let mut chosen: Vec<usize> = Vec::new();
    for e in order {
        chosen.push(e);
        if !matroid.is_independent(&chosen) {
            chosen.pop();
        }
    }
    chosen.sort_unstable();
    FeasibleSet::from_sorted_unchecked(chosen)
}

/// Greedy max-weight independent set: elements in descending weight order
/// (ties by index), each added when independence is preserved.
///
/// For nonnegative weights — predictions always are — the greedy output is a
/// maximum-weight independent set, so this doubles as the exact solver for
/// matroid problems.
pub fn matroid_greedy_base(matroid: &Matroid, weights: &[f64]) -> Result<FeasibleSet> {
    if weights.len() != matroid.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: matroid.ground_size(),
            actual: weights.len(),
        });
    }
    ensure_finite(weights)?;
    Ok(greedy_over(matroid, weights, |_| true))
}

/// Greedy restricted to elements of weight at least `threshold`.
pub(crate) fn matroid_greedy_thresholded(
    matroid: &Matroid,
    weights: &[f64],
    threshold: f64,
) -> Result<FeasibleSet> {
    if weights.len() != matroid.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: matroid.ground_size(),
            actual: weights.len(),
        });
    }
    ensure_finite(weights)?;
    Ok(greedy_over(matroid, weights, |w| w >= threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rank2_example() {
        let matroid = Matroid::uniform(3, 2).unwrap();
        let set = matroid_greedy_base(&matroid, &[0.5, 0.9, 0.3]).unwrap();
        assert_eq!(set.indices(), &[0, 1]);
        assert!((set.value(&[0.5, 0.9, 0.3]) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn rank_zero_yields_empty_base() {
        let matroid = Matroid::uniform(3, 0).unwrap();
        let set = matroid_greedy_base(&matroid, &[0.5, 0.9, 0.3]).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn equal_weights_take_first_rank_elements() {
        let matroid = Matroid::uniform(5, 3).unwrap();
        let set = matroid_greedy_base(&matroid, &[0.4; 5]).unwrap();
        assert_eq!(set.indices(), &[0, 1, 2]);
    }

    #[test]
    fn free_matroid_takes_everything() {
        let matroid = Matroid::uniform(4, 4).unwrap();
        let set = matroid_greedy_base(&matroid, &[0.0, 0.2, 0.0, 0.1]).unwrap();
        assert_eq!(set.indices(), &[0, 1, 2, 3]);
    }

    #[test]
    fn partition_matroid_respects_block_capacities() {
        // Blocks {0,1,2} and {3,4}, capacities 1 and 2.
        let matroid = Matroid::partition(vec![3, 2], vec![1, 2]).unwrap();
        assert_eq!(matroid.ground_size(), 5);
        assert_eq!(matroid.rank(), 3);
        let set = matroid_greedy_base(&matroid, &[0.9, 0.8, 0.7, 0.2, 0.1]).unwrap();
        assert_eq!(set.indices(), &[0, 3, 4]);
        assert!(matroid.is_independent(&[0, 3]));
        assert!(!matroid.is_independent(&[0, 1]));
    }

    #[test]
    fn matroid_axioms_hold_on_small_ground_sets() {
        let matroids = [
            Matroid::uniform(5, 2).unwrap(),
            Matroid::partition(vec![2, 3], vec![1, 2]).unwrap(),
        ];
        for matroid in &matroids {
            let n = matroid.ground_size();
            let independent = |mask: usize| {
                let elems: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                matroid.is_independent(&elems)
            };
            assert!(independent(0), "empty set must be independent");
            for mask in 0usize..(1 << n) {
                if !independent(mask) {
                    continue;
                }
                // Downward closure.
                for i in 0..n {
                    if mask >> i & 1 == 1 {
                        assert!(independent(mask & !(1 << i)));
                    }
                }
                // Exchange against every smaller independent set.
                for other in 0usize..(1 << n) {
                    if independent(other)
                        && (other.count_ones() as usize) < (mask.count_ones() as usize)
                    {
                        let can_extend = (0..n).any(|i| {
                            mask >> i & 1 == 1
                                && other >> i & 1 == 0
                                && independent(other | (1 << i))
                        });
                        assert!(can_extend, "exchange fails: {mask:b} vs {other:b}");
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_constructions_are_rejected() {
        assert!(Matroid::uniform(3, 4).is_err());
        assert!(Matroid::uniform(0, 0).is_err());
        assert!(Matroid::partition(vec![2, 0], vec![1, 1]).is_err());
        assert!(Matroid::partition(vec![2], vec![1, 1]).is_err());
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let matroid = Matroid::partition(vec![2, 2], vec![1, 2]).unwrap();
        let json = serde_json::to_string(&matroid).unwrap();
        assert_eq!(serde_json::from_str::<Matroid>(&json).unwrap(), matroid);
        assert!(
            serde_json::from_str::<Matroid>(r#"{"ground":3,"type":"uniform","rank":7}"#).is_err()
        );
    }
}
