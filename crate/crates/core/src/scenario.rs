//! Generators for test instances: the unbiased-but-misleading two-arm
//! construction, random matching distributions with corrupted predictors, and
//! matroid / rejection variants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorial::{
    apply_rule, default_matching_family, DecisionRule, FeasibleSet, Matroid, Problem,
};
use crate::error::{Error, Result};
use crate::prediction::{ContextAtom, FiniteDistribution, LabelModel, TabularPredictor};

/// A bundled test instance: the task, the data law, the black-box predictor to
/// repair, and the candidate rule family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub problem: Problem,
    pub dist: FiniteDistribution,
    pub gamma: TabularPredictor,
    pub rules: Vec<DecisionRule>,
}

impl Scenario {
    /// Cross-checks dimensions and exercises every rule once on γ so that
    /// configuration mistakes surface before a calibration run.
    pub fn validate(&self) -> Result<()> {
        let m = self.problem.m();
        if self.dist.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: self.dist.dim(),
            });
        }
        if self.gamma.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: self.gamma.dim(),
            });
        }
        if self.gamma.contexts() != self.dist.contexts() {
            return Err(Error::DimensionMismatch {
                expected: self.dist.contexts(),
                actual: self.gamma.contexts(),
            });
        }
        for rule in &self.rules {
            for k in 0..self.gamma.contexts() {
                apply_rule(rule, &self.problem, self.gamma.row(k))?;
            }
        }
        Ok(())
    }
}

/// The two-arm instance where an unbiased predictor misleads the argmax.
///
/// Arm values are (ε², ε); the natural unscaled variant uses values (1, 1/ε)
/// with a 1/ε² prediction spike, which we shrink by ε² so labels and
/// predictions fit in [0, 1]. A continuous context X uniform on [0, 1] only
/// matters through the events {X ≤ ε} and {X > ε}, so the instance keeps two
/// atoms: context A (probability ε) sees γ = (ε², 1), context B (probability
/// 1 − ε) sees γ = (ε², 0). γ's second coordinate is unbiased — ε·1 + (1−ε)·0
/// equals the true mean ε — yet its argmax prefers arm 1 only on A, i.e. with
/// probability ε, while the constant rule "always arm 1" collects ε every
/// time.
pub fn make_counterexample(eps: f64) -> Result<Scenario> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "counterexample needs eps in (0, 0.5), got {eps}"
        )));
    }
    let mean = vec![eps * eps, eps];
    let dist = FiniteDistribution::new(vec![
        ContextAtom {
            p: eps,
            mean: mean.clone(),
            labels: LabelModel::PointMass,
        },
        ContextAtom {
            p: 1.0 - eps,
            mean,
            labels: LabelModel::PointMass,
        },
    ])?;
    let gamma = TabularPredictor::new(vec![vec![eps * eps, 1.0], vec![eps * eps, 0.0]])?;
    Ok(Scenario {
        label: "counterexample".into(),
        problem: Problem::best_action(2)?,
        dist,
        gamma,
        rules: vec![
            DecisionRule::argmax_action(),
            DecisionRule::fixed("fixed-arm-0", FeasibleSet::singleton(0)),
            DecisionRule::fixed("fixed-arm-1", FeasibleSet::singleton(1)),
        ],
    })
}

fn uniform_probabilities(contexts: usize) -> Vec<f64> {
    vec![1.0 / contexts as f64; contexts]
}

fn noisy_predictor(
    rng: &mut ChaCha8Rng,
    means: &[Vec<f64>],
    noise: f64,
) -> Result<TabularPredictor> {
    let table = means
        .iter()
        .map(|mu| {
            mu.iter()
                .map(|&x| {
                    let g: f64 = rng.sample(StandardNormal);
                    (x + noise * g).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    TabularPredictor::new(table)
}

fn random_means(rng: &mut ChaCha8Rng, contexts: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..contexts)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Random matching instance: uniform context probabilities, i.i.d. uniform
/// edge means, and γ = clip(μ + noise·g) with standard normal g.
pub fn make_random_matching_instance(
    seed: u64,
    nodes: usize,
    contexts: usize,
    noise: f64,
) -> Result<Scenario> {
    make_random_matching_instance_with(seed, nodes, contexts, noise, LabelModel::PointMass)
}

/// As [`make_random_matching_instance`] with a chosen label model.
pub fn make_random_matching_instance_with(
    seed: u64,
    nodes: usize,
    contexts: usize,
    noise: f64,
    labels: LabelModel,
) -> Result<Scenario> {
    if nodes > crate::combinatorial::MAX_EXACT_NODES {
        return Err(Error::TooManyNodes {
            nodes,
            limit: crate::combinatorial::MAX_EXACT_NODES,
        });
    }
    if contexts == 0 {
        return Err(Error::InvalidParameter("need at least one context".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid noise {noise}")));
    }
    let problem = Problem::matching(nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = random_means(&mut rng, contexts, problem.m());
    let gamma = noisy_predictor(&mut rng, &means, noise)?;
    let atoms = uniform_probabilities(contexts)
        .into_iter()
        .zip(means)
        .map(|(p, mean)| ContextAtom { p, mean, labels })
        .collect();
    Ok(Scenario {
        label: "random-matching".into(),
        problem,
        dist: FiniteDistribution::new(atoms)?,
        gamma,
        rules: default_matching_family(),
    })
}

/// Uniform-matroid instance with greedy and two fixed bases as candidates.
///
/// For matroid tasks the calibration slack is driven by the rank rather than
/// the full dimension (weight supports have at most `rank` elements), so the
/// harness derives α = ε / rank here.
pub fn make_matroid_instance(
    seed: u64,
    ground: usize,
    rank: usize,
    contexts: usize,
    noise: f64,
) -> Result<Scenario> {
    if contexts == 0 {
        return Err(Error::InvalidParameter("need at least one context".into()));
    }
    let matroid = Matroid::uniform(ground, rank)?;
    let problem = Problem::matroid_base(matroid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = random_means(&mut rng, contexts, ground);
    let gamma = noisy_predictor(&mut rng, &means, noise)?;
    let atoms = uniform_probabilities(contexts)
        .into_iter()
        .zip(means)
        .map(|(p, mean)| ContextAtom {
            p,
            mean,
            labels: LabelModel::PointMass,
        })
        .collect();
    let low_base = FeasibleSet::new((0..rank).collect())?;
    let high_base = FeasibleSet::new((ground - rank..ground).collect())?;
    Ok(Scenario {
        label: "uniform-matroid".into(),
        problem,
        dist: FiniteDistribution::new(atoms)?,
        gamma,
        rules: vec![
            DecisionRule::greedy(),
            DecisionRule::fixed("fixed-base-low", low_base),
            DecisionRule::fixed("fixed-base-high", high_base),
        ],
    })
}

/// Three-action instance modelling prediction with a reject option: actions
/// are "predict yes", "predict no", "reject", with per-context action means
/// supplied by the caller (e.g. 1/0/0.7 when yes is correct).
pub fn make_rejection_instance(
    seed: u64,
    probs: Vec<f64>,
    action_means: Vec<Vec<f64>>,
    noise: f64,
) -> Result<Scenario> {
    if probs.len() != action_means.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            actual: action_means.len(),
        });
    }
    if action_means.iter().any(|row| row.len() != 3) {
        return Err(Error::InvalidParameter(
            "rejection instances need exactly 3 action means per context".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = noisy_predictor(&mut rng, &action_means, noise)?;
    let atoms = probs
        .into_iter()
        .zip(action_means)
        .map(|(p, mean)| ContextAtom {
            p,
            mean,
            labels: LabelModel::PointMass,
        })
        .collect();
    Ok(Scenario {
        label: "rejection".into(),
        problem: Problem::best_action(3)?,
        dist: FiniteDistribution::new(atoms)?,
        gamma,
        rules: vec![
            DecisionRule::argmax_action(),
            DecisionRule::fixed("fixed-yes", FeasibleSet::singleton(0)),
            DecisionRule::fixed("fixed-no", FeasibleSet::singleton(1)),
            DecisionRule::fixed("fixed-reject", FeasibleSet::singleton(2)),
        ],
    })
}
