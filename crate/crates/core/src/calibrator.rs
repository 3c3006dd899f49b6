//! Boosting-style multicalibration: violation checks, projected ascent,
//! audits, and sample-budget planning.
//!
//! The calibration loop starts from the predictor under repair (not from a
//! constant), repeatedly asks a CHECK oracle for a weight function whose
//! residual correlation is out of tolerance, and nudges every context's
//! prediction by ±η on that weight's support, projected back into the box.
//! Exact CHECK evaluates expectations as finite sums; empirical CHECK replaces
//! them with means over a fresh sample batch per call.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::{
    mse_potential, sample_with_rng, substream, FiniteDistribution, Sample, TabularPredictor,
};
use crate::weights::WeightFunction;

/// Componentwise projection onto `[0, 1]^m`: each entry becomes
/// `min(max(x, 0), 1)`. Idempotent and non-expansive toward box points.
pub fn project_box(v: &[f64]) -> Result<Vec<f64>> {
    for (index, x) in v.iter().enumerate() {
        if x.is_nan() {
            return Err(Error::NonFiniteValue { index });
        }
    }
    Ok(v.iter().map(|&x| x.clamp(0.0, 1.0)).collect())
}

/// A reported multicalibration violation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Position of the weight in the canonical class order.
    pub weight_index: usize,
    pub weight_id: String,
    /// Sign of the correlation, +1 or −1.
    pub b: i8,
    /// Observed normalized correlation (exact or empirical).
    pub z: f64,
}

/// Outcome of one CHECK call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CheckVerdict {
    Calibrated,
    Violation(Violation),
}

/// How CHECK evaluates correlations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CheckMode {
    /// Exact finite sums over the distribution; violation threshold `α`.
    Exact,
    /// Empirical means over a fresh batch per call; violation threshold `α/2`.
    Empirical {
        samples_per_call: usize,
        /// Per-call failure budget the batch size was planned for (recorded
        /// for reporting; the loop itself only consumes `samples_per_call`).
        delta0: f64,
        seed: u64,
    },
}

/// Knobs of the calibration loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Multicalibration slack; CHECK tolerates |z| up to α.
    pub alpha: f64,
    /// Ascent step size; defaults to α/2.
    pub eta: f64,
    /// Iteration cap. In exact mode exceeding it is a hard failure; callers
    /// should set it to at least `iteration_bound(r, m, α)`.
    pub t_max: usize,
    pub mode: CheckMode,
}

impl CalibrationParams {
    pub fn exact(alpha: f64, t_max: usize) -> Result<Self> {
        Self::validate_alpha(alpha)?;
        Ok(CalibrationParams {
            alpha,
            eta: alpha / 2.0,
            t_max,
            mode: CheckMode::Exact,
        })
    }

    pub fn empirical(
        alpha: f64,
        t_max: usize,
        samples_per_call: usize,
        delta0: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::validate_alpha(alpha)?;
        if samples_per_call == 0 {
            return Err(Error::InvalidParameter(
                "empirical mode needs at least one sample per call".into(),
            ));
        }
        Ok(CalibrationParams {
            alpha,
            eta: alpha / 2.0,
            t_max,
            mode: CheckMode::Empirical {
                samples_per_call,
                delta0,
                seed,
            },
        })
    }

    /// Overrides the default step size η = α/2.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid step size {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    fn validate_alpha(alpha: f64) -> Result<()> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(())
    }
}

/// How a calibration run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationStatus {
    Converged,
    IterationCapReached,
}

/// One applied update of the calibration loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iter: usize,
    pub weight_id: String,
    pub b: i8,
    /// Potential φ(γ̂ᵗ) immediately before this update.
    pub potential: f64,
    /// The violating correlation that triggered the update.
    pub z: f64,
}

/// Per-iteration record of a calibration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTrace {
    pub steps: Vec<TraceStep>,
    pub status: CalibrationStatus,
    /// Number of applied updates T.
    pub iterations: usize,
    pub check_calls: usize,
    pub potential_initial: f64,
    pub potential_final: f64,
}

impl CalibrationTrace {
    /// Smallest potential decrease over all applied steps, or `None` when no
    /// step was applied.
    pub fn min_step_decrease(&self) -> Option<f64> {
        if self.steps.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        for pair in self.steps.windows(2) {
            min = min.min(pair[0].potential - pair[1].potential);
        }
        let last = self.steps.last().expect("nonempty");
        min = min.min(last.potential - self.potential_final);
        Some(min)
    }
}

fn exact_correlation(
    dist: &FiniteDistribution,
    predictor: &TabularPredictor,
    w: &WeightFunction,
) -> Result<f64> {
    let m = dist.dim() as f64;
    let mut z = 0.0;
    for k in 0..dist.contexts() {
        let f = predictor.row(k);
        let support = w.support(f, k)?;
        let mu = dist.mean(k);
        let inner: f64 = support.indices().iter().map(|&e| mu[e] - f[e]).sum();
        z += dist.prob(k) * inner;
    }
    Ok(z / m)
}

/// Exact CHECK: scans W in canonical order and reports the first weight whose
/// normalized correlation exceeds α in magnitude.
pub fn check_exact(
    dist: &FiniteDistribution,
    predictor: &TabularPredictor,
    weights: &[WeightFunction],
    alpha: f64,
) -> Result<CheckVerdict> {
    predictor.matches(dist)?;
    for (weight_index, w) in weights.iter().enumerate() {
        let z = exact_correlation(dist, predictor, w)?;
        if z.abs() > alpha {
            return Ok(CheckVerdict::Violation(Violation {
                weight_index,
                weight_id: w.id().to_string(),
                b: if z > 0.0 { 1 } else { -1 },
                z,
            }));
        }
    }
    Ok(CheckVerdict::Calibrated)
}

/// Empirical CHECK: same scan with the expectation replaced by the mean over
/// `samples` and the threshold relaxed to α/2.
pub fn check_empirical(
    samples: &[Sample],
    predictor: &TabularPredictor,
    weights: &[WeightFunction],
    alpha: f64,
) -> Result<CheckVerdict> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "empirical CHECK needs at least one sample".into(),
        ));
    }
    for s in samples {
        if s.labels.len() != predictor.dim() {
            return Err(Error::DimensionMismatch {
                expected: predictor.dim(),
                actual: s.labels.len(),
            });
        }
    }
    let m = predictor.dim() as f64;
    let n = samples.len() as f64;
    for (weight_index, w) in weights.iter().enumerate() {
        // Predictions are per-context, so supports take at most K distinct
        // values per call; precompute them.
        let supports = (0..predictor.contexts())
            .map(|k| w.support(predictor.row(k), k))
            .collect::<Result<Vec<_>>>()?;
        let mut z = 0.0;
        for s in samples {
            let support = supports.get(s.context).ok_or(Error::DimensionMismatch {
                expected: predictor.contexts(),
                actual: s.context + 1,
            })?;
            let f = predictor.row(s.context);
            let inner: f64 = support.indices().iter().map(|&e| s.labels[e] - f[e]).sum();
            z += inner;
        }
        z /= n * m;
        if z.abs() > alpha / 2.0 {
            return Ok(CheckVerdict::Violation(Violation {
                weight_index,
                weight_id: w.id().to_string(),
                b: if z > 0.0 { 1 } else { -1 },
                z,
            }));
        }
    }
    Ok(CheckVerdict::Calibrated)
}

/// Largest normalized correlation magnitude over W; the predictor is
/// (W, α)-multicalibrated iff this does not exceed α.
pub fn audit(
    dist: &FiniteDistribution,
    predictor: &TabularPredictor,
    weights: &[WeightFunction],
) -> Result<f64> {
    predictor.matches(dist)?;
    let mut worst: f64 = 0.0;
    for w in weights {
        worst = worst.max(exact_correlation(dist, predictor, w)?.abs());
    }
    Ok(worst)
}

/// The iterative calibration loop.
///
/// Starts from `gamma` itself, so the run only spends iterations on the
/// directions W actually flags. Returns the calibrated predictor and the full
/// trace. Exhausting `t_max` is a hard error in exact mode (the iteration
/// bound proves convergence, so hitting the cap means the cap was set below
/// the bound or something is broken) and a reported status in empirical mode.
pub fn weighted_mc(
    dist: &FiniteDistribution,
    gamma: &TabularPredictor,
    weights: &[WeightFunction],
    params: &CalibrationParams,
) -> Result<(TabularPredictor, CalibrationTrace)> {
    let mut gamma_hat = gamma.clone();
    let potential_initial = mse_potential(dist, &gamma_hat)?;
    let mut steps = Vec::new();
    let mut iterations = 0usize;
    let mut check_calls = 0usize;

    let status = loop {
        let verdict = match &params.mode {
            CheckMode::Exact => check_exact(dist, &gamma_hat, weights, params.alpha)?,
            CheckMode::Empirical {
                samples_per_call,
                seed,
                ..
            } => {
                let mut rng = substream(*seed, check_calls as u64);
                let batch = sample_with_rng(dist, &mut rng, *samples_per_call);
                check_empirical(&batch, &gamma_hat, weights, params.alpha)?
            }
        };
        check_calls += 1;

        let violation = match verdict {
            CheckVerdict::Calibrated => break CalibrationStatus::Converged,
            CheckVerdict::Violation(v) => v,
        };
        if iterations >= params.t_max {
            break CalibrationStatus::IterationCapReached;
        }

        steps.push(TraceStep {
            iter: iterations,
            weight_id: violation.weight_id.clone(),
            b: violation.b,
            potential: mse_potential(dist, &gamma_hat)?,
            z: violation.z,
        });

        let w = &weights[violation.weight_index];
        let step = params.eta * f64::from(violation.b);
        for k in 0..gamma_hat.contexts() {
            let support = w.support(gamma_hat.row(k), k)?;
            let row = &mut gamma_hat.table_mut()[k];
            for &e in support.indices() {
                row[e] = (row[e] + step).clamp(0.0, 1.0);
            }
        }
        iterations += 1;
    };

    let trace = CalibrationTrace {
        steps,
        status,
        iterations,
        check_calls,
        potential_initial,
        potential_final: mse_potential(dist, &gamma_hat)?,
    };

    if status == CalibrationStatus::IterationCapReached && params.mode == CheckMode::Exact {
        return Err(Error::ExactModeStalled {
            t_max: params.t_max,
            trace: Box::new(trace),
        });
    }
    Ok((gamma_hat, trace))
}

/// Iteration bound of the calibration loop: ⌈4r / (m α²)⌉ for an initial
/// predictor with mean square error `r`.
pub fn iteration_bound(r: f64, m: usize, alpha: f64) -> usize {
    if r <= 0.0 {
        return 0;
    }
    (4.0 * r / (m as f64 * alpha * alpha)).ceil() as usize
}

/// Smallest batch size N with 2·|W|·exp(−N α² / 8) ≤ δ0, i.e. the per-call
/// sample size that lets the empirical CHECK distinguish violations at level
/// α from calibration at level α/2 with failure probability δ0.
pub fn hoeffding_sample_size(w_size: usize, alpha: f64, delta0: f64) -> Result<usize> {
    if w_size == 0 {
        return Err(Error::InvalidParameter("empty weight class".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(delta0 > 0.0 && delta0 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta0 must lie in (0, 1], got {delta0}"
        )));
    }
    let n = (8.0 * (2.0 * w_size as f64 / delta0).ln() / (alpha * alpha)).ceil();
    Ok((n as usize).max(1))
}

/// Planned sampling budget for one calibration run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub t_max: usize,
    pub n_per_call: usize,
    /// Per-call failure budget δ0 = m α² δ / (4 r), capped at δ.
    pub delta0: f64,
    pub total: usize,
}

/// Splits the failure budget δ across the ⌈4r/(mα²)⌉ CHECK calls and sizes
/// each call's batch accordingly; `total` is the worst-case draw count.
pub fn plan_sample_budget(
    w_size: usize,
    r: f64,
    m: usize,
    alpha: f64,
    delta: f64,
) -> Result<SampleBudget> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mean square error must be positive, got {r}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let t_max = iteration_bound(r, m, alpha);
    let delta0 = (m as f64 * alpha * alpha * delta / (4.0 * r)).min(delta);
    let n_per_call = hoeffding_sample_size(w_size, alpha, delta0)?;
    Ok(SampleBudget {
        t_max,
        n_per_call,
        delta0,
        total: t_max * n_per_call,
    })
}
