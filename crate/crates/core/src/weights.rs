//! The audited weight class W = W1 ∪ W2.
//!
//! The two halves of W are **not** interchangeable, and the asymmetry is
//! encoded in the type rather than left to call sites:
//!
//! * **W1 (frozen)** — one member per candidate rule `c`. Each evaluates to
//!   the indicator of the set `c` picks on the *original* predictor γ at the
//!   given context. It is a function of the context alone: γ is frozen when
//!   the class is built and the per-context indicators are cached, so later
//!   changes to the calibrated predictor cannot leak in.
//! * **W2 (live)** — a single member for the optimal rule c*. It evaluates to
//!   the indicator of the set c* picks on the *current prediction vector* and
//!   ignores the context.
//!
//! Auditing the frozen members against the live prediction (or vice versa)
//! looks plausible and type-checks in a naive encoding, but it audits the
//! wrong residual correlations and silently voids the end-to-end dominance
//! guarantee. Keep the halves distinct.

use serde::{Deserialize, Serialize};

use crate::combinatorial::{apply_rule, DecisionRule, FeasibleSet, Problem};
use crate::error::{Error, Result};
use crate::prediction::TabularPredictor;

/// A weight function mapping (prediction vector, context) to `{0,1}^m`.
///
/// The support of every output is a feasible set of the underlying problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    id: String,
    kind: WeightKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum WeightKind {
    /// Indicator of `rule` applied to the frozen γ; constant in the prediction
    /// argument. `supports[k]` caches the selection for context `k`.
    Frozen {
        rule: DecisionRule,
        supports: Vec<FeasibleSet>,
    },
    /// Indicator of `rule` applied to the live prediction vector; constant in
    /// the context argument.
    Live {
        rule: DecisionRule,
        problem: Problem,
    },
}

impl WeightFunction {
    /// Builds the W1 member for `rule`, freezing `gamma`'s per-context
    /// selections now.
    pub fn frozen(rule: DecisionRule, gamma: &TabularPredictor, problem: &Problem) -> Result<Self> {
        let supports = (0..gamma.contexts())
            .map(|k| apply_rule(&rule, problem, gamma.row(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightFunction {
            id: format!("W1:{}", rule.id),
            kind: WeightKind::Frozen { rule, supports },
        })
    }

    /// Builds the singleton W2 member for the optimal rule.
    pub fn live_optimal(c_star: DecisionRule, problem: Problem) -> Self {
        WeightFunction {
            id: "W2:cstar".into(),
            kind: WeightKind::Live {
                rule: c_star,
                problem,
            },
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self.kind, WeightKind::Frozen { .. })
    }

    /// Support of the output indicator for (`prediction`, `context`).
    ///
    /// Frozen members ignore `prediction`; the live member ignores `context`.
    pub fn support(&self, prediction: &[f64], context: usize) -> Result<FeasibleSet> {
        match &self.kind {
            WeightKind::Frozen { supports, .. } => {
                supports
                    .get(context)
                    .cloned()
                    .ok_or(Error::DimensionMismatch {
                        expected: supports.len(),
                        actual: context + 1,
                    })
            }
            WeightKind::Live { rule, problem } => apply_rule(rule, problem, prediction),
        }
    }

    /// The full `{0,1}^m` output vector; `dim` must be the problem dimension.
    pub fn indicator(&self, prediction: &[f64], context: usize, dim: usize) -> Result<Vec<f64>> {
        Ok(self.support(prediction, context)?.indicator(dim))
    }
}

/// Evaluates `w` on (`prediction`, `context`) as a `{0,1}^m` vector.
pub fn eval_weight(
    w: &WeightFunction,
    prediction: &[f64],
    context: usize,
    dim: usize,
) -> Result<Vec<f64>> {
    w.indicator(prediction, context, dim)
}

/// Assembles W: one frozen member per rule in `rules` (in order), then the
/// single live member for `c_star`.
pub fn build_weight_class(
    rules: &[DecisionRule],
    c_star: &DecisionRule,
    gamma: &TabularPredictor,
    problem: &Problem,
) -> Result<Vec<WeightFunction>> {
    let mut seen = std::collections::BTreeSet::new();
    for rule in rules {
        if !seen.insert(rule.id.as_str()) {
            return Err(Error::DuplicateRuleId {
                id: rule.id.clone(),
            });
        }
    }
    if gamma.dim() != problem.m() {
        return Err(Error::DimensionMismatch {
            expected: problem.m(),
            actual: gamma.dim(),
        });
    }
    let mut class = Vec::with_capacity(rules.len() + 1);
    for rule in rules {
        class.push(WeightFunction::frozen(rule.clone(), gamma, problem)?);
    }
    class.push(WeightFunction::live_optimal(
        c_star.clone(),
        problem.clone(),
    ));
    Ok(class)
}
