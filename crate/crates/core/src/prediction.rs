//! Finite-support data model: joint laws of (context, label vector), tabular
//! predictors, exact expected rule values, and the mean-square-error potential.
//!
//! Every expectation the library consumes is linear in the label vector, so a
//! distribution stores per-context conditional means and all "expectations"
//! are exact finite sums — no Monte-Carlo error in exact mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorial::{apply_rule, DecisionRule, Problem};
use crate::error::{Error, Result};

const PROBABILITY_TOL: f64 = 1e-12;

/// How labels are drawn given a context's conditional mean vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LabelModel {
    /// Labels equal the conditional mean with probability one.
    #[default]
    PointMass,
    /// Each coordinate is an independent Bernoulli with the mean as parameter.
    IndependentBernoulli,
}

/// One atom of the context distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextAtom {
    /// Probability of this context.
    pub p: f64,
    /// Conditional mean label vector, entries in `[0, 1]`.
    pub mean: Vec<f64>,
    #[serde(default)]
    pub labels: LabelModel,
}

/// Finite-support joint law of (context, label vector).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ContextAtom>", into = "Vec<ContextAtom>")]
pub struct FiniteDistribution {
    atoms: Vec<ContextAtom>,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<ContextAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no context atoms".into()));
        }
        let m = atoms[0].mean.len();
        if m == 0 {
            return Err(Error::InvalidDistribution("empty mean vectors".into()));
        }
        let mut total = 0.0;
        for (k, atom) in atoms.iter().enumerate() {
            if !(atom.p.is_finite() && atom.p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "context {k} has invalid probability {}",
                    atom.p
                )));
            }
            total += atom.p;
            if atom.mean.len() != m {
                return Err(Error::InvalidDistribution(format!(
                    "context {k} has dimension {} instead of {m}",
                    atom.mean.len()
                )));
            }
            if atom.mean.iter().any(|mu| !(0.0..=1.0).contains(mu)) {
                return Err(Error::InvalidDistribution(format!(
                    "context {k} has a mean outside [0, 1]"
                )));
            }
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FiniteDistribution { atoms })
    }

    /// Number of contexts K.
    pub fn contexts(&self) -> usize {
        self.atoms.len()
    }

    /// Label dimension m.
    pub fn dim(&self) -> usize {
        self.atoms[0].mean.len()
    }

    pub fn prob(&self, context: usize) -> f64 {
        self.atoms[context].p
    }

    pub fn mean(&self, context: usize) -> &[f64] {
        &self.atoms[context].mean
    }

    pub fn label_model(&self, context: usize) -> LabelModel {
        self.atoms[context].labels
    }

    pub fn atoms(&self) -> &[ContextAtom] {
        &self.atoms
    }

    /// Marginal mean label vector Σ_k p_k μ_k.
    pub fn marginal_mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for atom in &self.atoms {
            for (o, mu) in out.iter_mut().zip(&atom.mean) {
                *o += atom.p * mu;
            }
        }
        out
    }
}

impl TryFrom<Vec<ContextAtom>> for FiniteDistribution {
    type Error = Error;

    fn try_from(atoms: Vec<ContextAtom>) -> Result<Self> {
        FiniteDistribution::new(atoms)
    }
}

impl From<FiniteDistribution> for Vec<ContextAtom> {
    fn from(dist: FiniteDistribution) -> Self {
        dist.atoms
    }
}

/// A predictor as an explicit table: one vector in `[0, 1]^m` per context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabularPredictorRepr", into = "TabularPredictorRepr")]
pub struct TabularPredictor {
    table: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TabularPredictorRepr {
    table: Vec<Vec<f64>>,
}

impl TabularPredictor {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::InvalidParameter("empty predictor table".into()));
        }
        let m = table[0].len();
        for (k, row) in table.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter(format!(
                    "predictor entry outside [0, 1] at context {k}"
                )));
            }
        }
        Ok(TabularPredictor { table })
    }

    pub fn contexts(&self) -> usize {
        self.table.len()
    }

    pub fn dim(&self) -> usize {
        self.table[0].len()
    }

    /// Prediction vector for context `k`.
    pub fn row(&self, context: usize) -> &[f64] {
        &self.table[context]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub(crate) fn table_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.table
    }

    pub(crate) fn matches(&self, dist: &FiniteDistribution) -> Result<()> {
        if self.contexts() != dist.contexts() {
            return Err(Error::DimensionMismatch {
                expected: dist.contexts(),
                actual: self.contexts(),
            });
        }
        if self.dim() != dist.dim() {
            return Err(Error::DimensionMismatch {
                expected: dist.dim(),
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<TabularPredictorRepr> for TabularPredictor {
    type Error = Error;

    fn try_from(repr: TabularPredictorRepr) -> Result<Self> {
        TabularPredictor::new(repr.table)
    }
}

impl From<TabularPredictor> for TabularPredictorRepr {
    fn from(p: TabularPredictor) -> Self {
        TabularPredictorRepr { table: p.table }
    }
}

/// One draw from the joint law: a context index and its label vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub context: usize,
    pub labels: Vec<f64>,
}

/// The conditional-mean predictor: table\[k\] = μ_k.
pub fn bayes_predictor(dist: &FiniteDistribution) -> TabularPredictor {
    TabularPredictor {
        table: dist.atoms.iter().map(|a| a.mean.clone()).collect(),
    }
}

/// Exact expected true value collected by `rule` when fed `predictor`'s output:
/// Σ_k p_k Σ_{e ∈ rule(predictor(k))} μ_{k,e}.
pub fn rule_value(
    dist: &FiniteDistribution,
    predictor: &TabularPredictor,
    rule: &DecisionRule,
    problem: &Problem,
) -> Result<f64> {
    predictor.matches(dist)?;
    let mut total = 0.0;
    for (k, atom) in dist.atoms.iter().enumerate() {
        let chosen = apply_rule(rule, problem, predictor.row(k))?;
        total += atom.p * chosen.value(&atom.mean);
    }
    Ok(total)
}

/// Mean square error of `predictor` against the conditional means:
/// Σ_k p_k ‖predictor(k) − μ_k‖².
pub fn mse_potential(dist: &FiniteDistribution, predictor: &TabularPredictor) -> Result<f64> {
    predictor.matches(dist)?;
    let mut total = 0.0;
    for (k, atom) in dist.atoms.iter().enumerate() {
        let sq: f64 = predictor
            .row(k)
            .iter()
            .zip(&atom.mean)
            .map(|(f, mu)| (f - mu) * (f - mu))
            .sum();
        total += atom.p * sq;
    }
    Ok(total)
}

/// Draws `n` i.i.d. samples with a fresh generator seeded by `seed`.
///
/// Identical seeds produce byte-identical output on every platform.
pub fn sample(dist: &FiniteDistribution, seed: u64, n: usize) -> Result<Vec<Sample>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with_rng(dist, &mut rng, n))
}

/// Sampling core reused by callers that manage their own substreams.
pub fn sample_with_rng(dist: &FiniteDistribution, rng: &mut impl Rng, n: usize) -> Vec<Sample> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut context = dist.atoms.len() - 1;
        let mut acc = 0.0;
        for (k, atom) in dist.atoms.iter().enumerate() {
            acc += atom.p;
            if u < acc {
                context = k;
                break;
            }
        }
        let atom = &dist.atoms[context];
        let labels = match atom.labels {
            LabelModel::PointMass => atom.mean.clone(),
            LabelModel::IndependentBernoulli => atom
                .mean
                .iter()
                .map(|&mu| if rng.random::<f64>() < mu { 1.0 } else { 0.0 })
                .collect(),
        };
        out.push(Sample { context, labels });
    }
    out
}

/// Deterministic substream generator for replicate `index` of master `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorial::{edge_index, DecisionRule, FeasibleSet};

    fn single_context(mean: Vec<f64>) -> FiniteDistribution {
        FiniteDistribution::new(vec![ContextAtom {
            p: 1.0,
            mean,
            labels: LabelModel::PointMass,
        }])
        .unwrap()
    }

    fn path_dist_n4() -> FiniteDistribution {
        let mut mean = vec![0.0; 6];
        mean[edge_index(4, 0, 1)] = 0.6;
        mean[edge_index(4, 1, 2)] = 1.0;
        mean[edge_index(4, 2, 3)] = 0.6;
        single_context(mean)
    }

    #[test]
    fn bayes_predictor_copies_conditional_means() {
        let dist = single_context(vec![0.8]);
        let bayes = bayes_predictor(&dist);
        assert_eq!(bayes.row(0), &[0.8]);
        assert_eq!(mse_potential(&dist, &bayes).unwrap(), 0.0);
    }

    #[test]
    fn rule_value_of_empty_fixed_rule_is_zero() {
        let dist = path_dist_n4();
        let problem = Problem::matching(4).unwrap();
        let rule = DecisionRule::fixed("fixed-empty", FeasibleSet::empty());
        let v = rule_value(&dist, &bayes_predictor(&dist), &rule, &problem).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn rule_value_of_exact_opt_on_bayes_matches_the_solver() {
        let dist = path_dist_n4();
        let problem = Problem::matching(4).unwrap();
        let v = rule_value(
            &dist,
            &bayes_predictor(&dist),
            &DecisionRule::exact_opt(),
            &problem,
        )
        .unwrap();
        assert!((v - 1.2).abs() < 1e-15);
    }

    #[test]
    fn mse_potential_examples() {
        let dist = single_context(vec![0.8]);
        let zero = TabularPredictor::new(vec![vec![0.0]]).unwrap();
        assert!((mse_potential(&dist, &zero).unwrap() - 0.64).abs() < 1e-15);

        // Two contexts with squared errors 0.04 and 0.16 weighted half/half.
        let dist = FiniteDistribution::new(vec![
            ContextAtom {
                p: 0.5,
                mean: vec![0.5],
                labels: LabelModel::PointMass,
            },
            ContextAtom {
                p: 0.5,
                mean: vec![0.5],
                labels: LabelModel::PointMass,
            },
        ])
        .unwrap();
        let predictor = TabularPredictor::new(vec![vec![0.7], vec![0.9]]).unwrap();
        assert!((mse_potential(&dist, &predictor).unwrap() - 0.10).abs() < 1e-12);
    }

    #[test]
    fn point_mass_samples_equal_their_context_mean() {
        let dist = path_dist_n4();
        for s in sample(&dist, 7, 32).unwrap() {
            assert_eq!(s.labels, dist.mean(s.context));
        }
    }

    #[test]
    fn zero_samples_is_an_error() {
        let dist = single_context(vec![0.8]);
        assert!(sample(&dist, 1, 0).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let dist = FiniteDistribution::new(vec![
            ContextAtom {
                p: 0.3,
                mean: vec![0.2, 0.9],
                labels: LabelModel::IndependentBernoulli,
            },
            ContextAtom {
                p: 0.7,
                mean: vec![0.6, 0.4],
                labels: LabelModel::IndependentBernoulli,
            },
        ])
        .unwrap();
        assert_eq!(
            sample(&dist, 42, 100).unwrap(),
            sample(&dist, 42, 100).unwrap()
        );
        assert_ne!(
            sample(&dist, 42, 100).unwrap(),
            sample(&dist, 43, 100).unwrap()
        );
    }

    #[test]
    fn empirical_mean_sits_in_the_hoeffding_band() {
        let dist = FiniteDistribution::new(vec![
            ContextAtom {
                p: 0.4,
                mean: vec![0.15, 0.85],
                labels: LabelModel::IndependentBernoulli,
            },
            ContextAtom {
                p: 0.6,
                mean: vec![0.7, 0.3],
                labels: LabelModel::IndependentBernoulli,
            },
        ])
        .unwrap();
        let n = 100_000;
        let samples = sample(&dist, 12345, n).unwrap();
        let mut mean = [0.0; 2];
        for s in &samples {
            for (m, y) in mean.iter_mut().zip(&s.labels) {
                *m += y;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        // 3σ band for [0,1]-valued coordinates: 3 / (2 sqrt N).
        let band = 3.0 / (2.0 * (n as f64).sqrt());
        for (emp, exact) in mean.iter().zip(dist.marginal_mean()) {
            assert!(
                (emp - exact).abs() <= band,
                "empirical {emp} vs exact {exact} outside ±{band}"
            );
        }
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(FiniteDistribution::new(vec![]).is_err());
        assert!(FiniteDistribution::new(vec![ContextAtom {
            p: 0.5,
            mean: vec![0.2],
            labels: LabelModel::PointMass,
        }])
        .is_err());
        assert!(FiniteDistribution::new(vec![ContextAtom {
            p: 1.0,
            mean: vec![1.2],
            labels: LabelModel::PointMass,
        }])
        .is_err());
    }

    #[test]
    fn exact_opt_on_bayes_dominates_every_rule() {
        use rand::SeedableRng;
        let problem = Problem::matching(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let atoms: Vec<ContextAtom> = (0..3)
                .map(|_| ContextAtom {
                    p: 1.0 / 3.0,
                    mean: (0..6).map(|_| rng.random::<f64>()).collect(),
                    labels: LabelModel::PointMass,
                })
                .collect();
            let mut atoms = atoms;
            // renormalize exactly
            let total: f64 = atoms.iter().map(|a| a.p).sum();
            for a in atoms.iter_mut() {
                a.p /= total;
            }
            let dist = FiniteDistribution::new(atoms).unwrap();
            let bayes = bayes_predictor(&dist);
            let best = rule_value(&dist, &bayes, &DecisionRule::exact_opt(), &problem).unwrap();
            for rule in crate::combinatorial::default_matching_family() {
                let v = rule_value(&dist, &bayes, &rule, &problem).unwrap();
                assert!(
                    best >= v - 1e-12,
                    "rule {} beat exact-opt on Bayes",
                    rule.id
                );
            }
        }
    }
}
