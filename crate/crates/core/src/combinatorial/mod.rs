//! Feasible-set abstractions and deterministic solvers.
//!
//! A [`Problem`] fixes the ground set a weight vector indexes: the edges of a
//! complete graph, the elements of a matroid, or a set of actions. A
//! [`DecisionRule`] deterministically maps a weight vector to a [`FeasibleSet`];
//! [`apply_rule`] dispatches to the kind-specific solver. Determinism and fixed
//! tie-breaking (lexicographic by canonical index) are load-bearing: weight
//! functions built from rules must be single-valued functions of their input.

mod matching;
mod matroid;

pub use matching::{exact_max_weight_matching, greedy_matching, MAX_EXACT_NODES};
pub use matroid::{matroid_greedy_base, Matroid, MatroidKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of edges of the complete graph on `nodes` nodes.
pub fn edge_count(nodes: usize) -> usize {
    nodes * (nodes - 1) / 2
}

/// Canonical index of the edge `(u, v)`, `u < v`, in lexicographic order over
/// sorted node pairs.
pub fn edge_index(nodes: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < nodes);
    u * (2 * nodes - u - 1) / 2 + (v - u - 1)
}

/// Endpoints `(u, v)` of the edge with canonical index `index`.
pub fn edge_endpoints(nodes: usize, index: usize) -> (usize, usize) {
    debug_assert!(index < edge_count(nodes));
    let mut u = 0;
    let mut first_of_row = 0;
    while first_of_row + (nodes - u - 1) <= index {
        first_of_row += nodes - u - 1;
        u += 1;
    }
    (u, u + 1 + index - first_of_row)
}

pub(crate) fn ensure_finite(weights: &[f64]) -> Result<()> {
    for (index, w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFiniteValue { index });
        }
    }
    Ok(())
}

/// What a weight vector indexes and which feasibility notion applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Max-weight matching on the complete graph; weights are indexed by the
    /// canonical edge order.
    Matching { nodes: usize },
    /// Independent sets of a matroid; weights are indexed by ground-set element.
    MatroidBase { matroid: Matroid },
    /// Pick one of `actions` actions; weights are the predicted action values.
    BestAction { actions: usize },
}

/// A combinatorial task together with the dimension `m` of its weight vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemKind", into = "ProblemKind")]
pub struct Problem {
    kind: ProblemKind,
}

impl Problem {
    pub fn matching(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidParameter(format!(
                "matching needs at least 2 nodes, got {nodes}"
            )));
        }
        Ok(Problem {
            kind: ProblemKind::Matching { nodes },
        })
    }

    pub fn matroid_base(matroid: Matroid) -> Self {
        Problem {
            kind: ProblemKind::MatroidBase { matroid },
        }
    }

    pub fn best_action(actions: usize) -> Result<Self> {
        if actions == 0 {
            return Err(Error::InvalidParameter(
                "best-action problem needs at least one action".into(),
            ));
        }
        Ok(Problem {
            kind: ProblemKind::BestAction { actions },
        })
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    /// Dimension of the weight vectors this problem consumes.
    pub fn m(&self) -> usize {
        match &self.kind {
            ProblemKind::Matching { nodes } => edge_count(*nodes),
            ProblemKind::MatroidBase { matroid } => matroid.ground_size(),
            ProblemKind::BestAction { actions } => *actions,
        }
    }

    /// Checks the kind-specific feasibility invariant, including index bounds.
    pub fn is_feasible(&self, set: &FeasibleSet) -> bool {
        if set.indices().iter().any(|&i| i >= self.m()) {
            return false;
        }
        match &self.kind {
            ProblemKind::Matching { nodes } => {
                let mut seen = vec![false; *nodes];
                for &e in set.indices() {
                    let (u, v) = edge_endpoints(*nodes, e);
                    if seen[u] || seen[v] {
                        return false;
                    }
                    seen[u] = true;
                    seen[v] = true;
                }
                true
            }
            ProblemKind::MatroidBase { matroid } => matroid.is_independent(set.indices()),
            ProblemKind::BestAction { .. } => set.len() == 1,
        }
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ProblemKind::Matching { nodes } => write!(f, "matching({nodes} nodes)"),
            ProblemKind::MatroidBase { matroid } => {
                write!(f, "matroid-base(ground {})", matroid.ground_size())
            }
            ProblemKind::BestAction { actions } => write!(f, "best-action({actions} actions)"),
        }
    }
}

impl TryFrom<ProblemKind> for Problem {
    type Error = Error;

    fn try_from(kind: ProblemKind) -> Result<Self> {
        match kind {
            ProblemKind::Matching { nodes } => Problem::matching(nodes),
            ProblemKind::MatroidBase { matroid } => Ok(Problem::matroid_base(matroid)),
            ProblemKind::BestAction { actions } => Problem::best_action(actions),
        }
    }
}

impl From<Problem> for ProblemKind {
    fn from(problem: Problem) -> Self {
        problem.kind
    }
}

/// Builds the best-action problem equivalent to max-weight matching in a star
/// graph of `actions + 1` nodes: a matching in a star selects at most one of
/// the `actions` leaf edges, so picking an action and picking a star matching
/// are the same task.
pub fn star_graph_embed(actions: usize) -> Result<Problem> {
    Problem::best_action(actions)
}

/// A sorted, duplicate-free list of selected weight-vector coordinates.
///
/// The derived ordering is lexicographic over the sorted index list; solvers
/// use it to break value ties deterministically.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeasibleSet {
    indices: Vec<usize>,
}

impl FeasibleSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "feasible set contains duplicate indices".into(),
            ));
        }
        Ok(FeasibleSet { indices })
    }

    pub fn empty() -> Self {
        FeasibleSet::default()
    }

    pub fn singleton(index: usize) -> Self {
        FeasibleSet {
            indices: vec![index],
        }
    }

    /// Internal constructor for solver output that is sorted by construction.
    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        FeasibleSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Total weight of the selection.
    ///
    /// Accumulates in descending index order, which reproduces bit-for-bit the
    /// value the exact matching solver compares internally.
    pub fn value(&self, weights: &[f64]) -> f64 {
        self.indices
            .iter()
            .rev()
            .fold(0.0, |acc, &e| acc + weights[e])
    }

    /// The 0/1 membership vector of length `dim`.
    pub fn indicator(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &i in &self.indices {
            v[i] = 1.0;
        }
        v
    }
}

impl TryFrom<Vec<usize>> for FeasibleSet {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        FeasibleSet::new(indices)
    }
}

impl From<FeasibleSet> for Vec<usize> {
    fn from(set: FeasibleSet) -> Self {
        set.indices
    }
}

/// How a rule turns a weight vector into a feasible set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RuleKind {
    /// The optimal solver for the problem kind: exact max-weight matching,
    /// greedy matroid base, or lowest-index argmax.
    ExactOpt,
    /// Highest-positive-weight-first heuristic (matching or matroid).
    Greedy,
    /// Greedy restricted to coordinates with weight at least `threshold`.
    ThresholdGreedy { threshold: f64 },
    /// Returns the stored set regardless of the weights.
    Fixed { set: FeasibleSet },
    /// Picks the lowest index attaining the maximum weight.
    ArgmaxAction,
}

/// A deterministic map from weight vectors to feasible sets.
///
/// Identical weight vectors must yield identical sets; all tie-breaking is by
/// canonical index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub id: String,
    pub kind: RuleKind,
}

impl DecisionRule {
    pub fn exact_opt() -> Self {
        DecisionRule {
            id: "exact-opt".into(),
            kind: RuleKind::ExactOpt,
        }
    }

    pub fn greedy() -> Self {
        DecisionRule {
            id: "greedy".into(),
            kind: RuleKind::Greedy,
        }
    }

    pub fn threshold_greedy(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(DecisionRule {
            id: format!("threshold-greedy-{threshold}"),
            kind: RuleKind::ThresholdGreedy { threshold },
        })
    }

    pub fn fixed(id: impl Into<String>, set: FeasibleSet) -> Self {
        DecisionRule {
            id: id.into(),
            kind: RuleKind::Fixed { set },
        }
    }

    pub fn argmax_action() -> Self {
        DecisionRule {
            id: "argmax".into(),
            kind: RuleKind::ArgmaxAction,
        }
    }
}

/// The default concrete rule family for matching scenarios.
///
/// The choice of heuristics is ours: exact solve, plain greedy, greedy over
/// edges predicted at least 0.5, and the constant empty matching.
pub fn default_matching_family() -> Vec<DecisionRule> {
    vec![
        DecisionRule::exact_opt(),
        DecisionRule::greedy(),
        DecisionRule::threshold_greedy(0.5).expect("0.5 is a valid threshold"),
        DecisionRule::fixed("fixed-empty", FeasibleSet::empty()),
    ]
}

/// Runs `rule` on `weights` for `problem`.
///
/// Unsupported rule/problem pairings (e.g. `ArgmaxAction` on a matching) are
/// rejected rather than given an ad-hoc meaning.
pub fn apply_rule(rule: &DecisionRule, problem: &Problem, weights: &[f64]) -> Result<FeasibleSet> {
    if weights.len() != problem.m() {
        return Err(Error::DimensionMismatch {
            expected: problem.m(),
            actual: weights.len(),
        });
    }
    ensure_finite(weights)?;

    if let RuleKind::Fixed { set } = &rule.kind {
        if !problem.is_feasible(set) {
            return Err(Error::InfeasibleFixedSet {
                rule_id: rule.id.clone(),
                problem: problem.to_string(),
            });
        }
        return Ok(set.clone());
    }
    if let RuleKind::ThresholdGreedy { threshold } = &rule.kind {
        if !(0.0..=1.0).contains(threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
    }

    let unsupported = || Error::UnsupportedRule {
        rule_id: rule.id.clone(),
        problem: problem.to_string(),
    };

    match (&rule.kind, problem.kind()) {
        (RuleKind::ExactOpt, ProblemKind::Matching { nodes }) => {
            exact_max_weight_matching(*nodes, weights)
        }
        (RuleKind::Greedy, ProblemKind::Matching { nodes }) => greedy_matching(*nodes, weights),
        (RuleKind::ThresholdGreedy { threshold }, ProblemKind::Matching { nodes }) => {
            matching::greedy_matching_thresholded(*nodes, weights, *threshold)
        }
        (RuleKind::ExactOpt | RuleKind::Greedy, ProblemKind::MatroidBase { matroid }) => {
            matroid_greedy_base(matroid, weights)
        }
        (RuleKind::ThresholdGreedy { threshold }, ProblemKind::MatroidBase { matroid }) => {
            matroid::matroid_greedy_thresholded(matroid, weights, *threshold)
        }
        (RuleKind::ExactOpt | RuleKind::ArgmaxAction, ProblemKind::BestAction { .. }) => {
            Ok(FeasibleSet::singleton(argmax_lowest(weights)))
        }
        (RuleKind::ArgmaxAction, _) => Err(unsupported()),
        (RuleKind::Greedy | RuleKind::ThresholdGreedy { .. }, ProblemKind::BestAction { .. }) => {
            Err(unsupported())
        }
        (RuleKind::Fixed { .. }, _) => unreachable!("handled above"),
    }
}

fn argmax_lowest(weights: &[f64]) -> usize {
    let mut best = 0;
    for (i, &w) in weights.iter().enumerate().skip(1) {
        if w > weights[best] {
            best = i;
        }
    }
    best
}
