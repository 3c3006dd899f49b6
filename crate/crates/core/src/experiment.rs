//! Configuration-driven experiment runner: build a scenario, assemble the
//! weight class, calibrate, solve with the optimal rule, and emit
//! machine-readable reports and plot-ready tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrator::{
    audit, iteration_bound, plan_sample_budget, weighted_mc, CalibrationParams, CalibrationStatus,
    CalibrationTrace, SampleBudget,
};
use crate::combinatorial::{DecisionRule, ProblemKind};
use crate::error::{Error, Result};
use crate::prediction::{mse_potential, rule_value, LabelModel};
use crate::scenario::{
    make_counterexample, make_matroid_instance, make_random_matching_instance_with,
    make_rejection_instance, Scenario,
};
use crate::weights::build_weight_class;
use crate::INEQUALITY_TOL;

/// Schema tag stamped into every emitted JSON document.
pub const REPORT_SCHEMA_VERSION: &str = "calibmatch-report/1";

/// Whether CHECK runs on exact expectations or on drawn samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Empirical,
}

/// Scenario selection: a named preset with parameters, or an inline scenario
/// document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    Counterexample {
        eps: f64,
    },
    RandomMatching {
        seed: u64,
        nodes: usize,
        contexts: usize,
        noise: f64,
        #[serde(default)]
        labels: LabelModel,
    },
    UniformMatroid {
        seed: u64,
        ground: usize,
        rank: usize,
        contexts: usize,
        noise: f64,
    },
    Rejection {
        seed: u64,
        noise: f64,
        #[serde(default)]
        probs: Option<Vec<f64>>,
        #[serde(default)]
        means: Option<Vec<Vec<f64>>>,
    },
    Inline {
        scenario: Box<Scenario>,
    },
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario> {
        match self {
            ScenarioSpec::Counterexample { eps } => make_counterexample(*eps),
            ScenarioSpec::RandomMatching {
                seed,
                nodes,
                contexts,
                noise,
                labels,
            } => make_random_matching_instance_with(*seed, *nodes, *contexts, *noise, *labels),
            ScenarioSpec::UniformMatroid {
                seed,
                ground,
                rank,
                contexts,
                noise,
            } => make_matroid_instance(*seed, *ground, *rank, *contexts, *noise),
            ScenarioSpec::Rejection {
                seed,
                noise,
                probs,
                means,
            } => {
                let probs = probs.clone().unwrap_or_else(|| vec![0.5, 0.5]);
                let means = means
                    .clone()
                    .unwrap_or_else(|| vec![vec![1.0, 0.0, 0.7], vec![0.0, 1.0, 0.7]]);
                make_rejection_instance(*seed, probs, means, *noise)
            }
            ScenarioSpec::Inline { scenario } => Ok(scenario.as_ref().clone()),
        }
    }
}

/// One experiment: scenario, target precision, check mode, and output knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    /// End-to-end additive precision ε the run certifies.
    pub eps_target: f64,
    pub mode: Mode,
    /// Overall failure probability budget; required in empirical mode.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Master seed for empirical-mode sampling substreams.
    #[serde(default)]
    pub seed: u64,
    /// Iteration-cap override. Defaults to the iteration bound in exact mode
    /// and twice the bound in empirical mode.
    #[serde(default)]
    pub t_max_override: Option<usize>,
    /// Expert-only: pins α instead of deriving it from `eps_target`. Echoed in
    /// the report so a mismatched premise is visible.
    #[serde(default)]
    pub alpha_override: Option<f64>,
    /// Default ε list for sweeps.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_target > 0.0 && self.eps_target < 1.0) {
            return Err(Error::Config(format!(
                "eps_target must lie in (0, 1), got {}",
                self.eps_target
            )));
        }
        match (self.mode, self.delta) {
            (Mode::Empirical, None) => {
                return Err(Error::Config("empirical mode requires delta".into()))
            }
            (Mode::Empirical, Some(d)) if !(d > 0.0 && d < 1.0) => {
                return Err(Error::Config(format!("delta must lie in (0, 1), got {d}")));
            }
            _ => {}
        }
        if let Some(a) = self.alpha_override {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!(
                    "alpha_override must be positive, got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// α as derived from the target precision: ε/(2m) for matching and
/// best-action tasks, ε/rank for matroid tasks.
pub fn derived_alpha(scenario: &Scenario, eps_target: f64) -> Result<f64> {
    match scenario.problem.kind() {
        ProblemKind::Matching { .. } | ProblemKind::BestAction { .. } => {
            Ok(eps_target / (2.0 * scenario.problem.m() as f64))
        }
        ProblemKind::MatroidBase { matroid } => {
            let rank = matroid.rank();
            if rank == 0 {
                return Err(Error::Config(
                    "cannot derive alpha for a rank-0 matroid".into(),
                ));
            }
            Ok(eps_target / rank as f64)
        }
    }
}

/// Expected true value collected by a rule before and after calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleValueRow {
    pub rule: String,
    pub value_before: f64,
    pub value_after: f64,
}

/// Sampling spend of an empirical run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBudgetUsed {
    pub planned: SampleBudget,
    pub check_calls: usize,
    pub samples_drawn: usize,
}

/// Everything a run certifies, echoing its configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub scenario_label: String,
    pub alpha: f64,
    /// Per-rule values: one row per candidate rule, then the optimal rule.
    pub rule_values: Vec<RuleValueRow>,
    /// Largest pre-calibration value over the candidate family.
    pub max_value_before: f64,
    /// Value of the optimal rule on the calibrated predictor.
    pub value_after: f64,
    pub iterations: usize,
    pub status: CalibrationStatus,
    pub potential_initial: f64,
    pub potential_final: f64,
    pub audit_final: f64,
    pub sample_budget: Option<SampleBudgetUsed>,
    /// max_value_before ≤ eps_target + value_after (within tolerance).
    pub guarantee_holds: bool,
    pub config: ExperimentConfig,
    pub trace: CalibrationTrace,
}

/// Runs the full pipeline for one configuration. Deterministic given the
/// config (including its seed).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let scenario = config.scenario.build()?;
    scenario.validate()?;
    let problem = &scenario.problem;
    let m = problem.m();

    let alpha = match config.alpha_override {
        Some(a) => a,
        None => derived_alpha(&scenario, config.eps_target)?,
    };
    let c_star = DecisionRule::exact_opt();
    let weights = build_weight_class(&scenario.rules, &c_star, &scenario.gamma, problem)?;
    let r = mse_potential(&scenario.dist, &scenario.gamma)?;
    let bound = iteration_bound(r, m, alpha);

    let (params, planned) = match config.mode {
        Mode::Exact => {
            let t_max = config.t_max_override.unwrap_or(bound);
            (CalibrationParams::exact(alpha, t_max)?, None)
        }
        Mode::Empirical => {
            let delta = config.delta.expect("validated above");
            let budget = if r > 0.0 {
                plan_sample_budget(weights.len(), r, m, alpha, delta)?
            } else {
                // Already at zero error: a single check at the full budget.
                SampleBudget {
                    t_max: 0,
                    n_per_call: crate::calibrator::hoeffding_sample_size(
                        weights.len(),
                        alpha,
                        delta,
                    )?,
                    delta0: delta,
                    total: 0,
                }
            };
            let t_max = config.t_max_override.unwrap_or(2 * budget.t_max);
            (
                CalibrationParams::empirical(
                    alpha,
                    t_max,
                    budget.n_per_call,
                    budget.delta0,
                    config.seed,
                )?,
                Some(budget),
            )
        }
    };

    let (gamma_hat, trace) = weighted_mc(&scenario.dist, &scenario.gamma, &weights, &params)?;

    let mut rule_values = Vec::with_capacity(scenario.rules.len() + 1);
    let mut max_value_before = f64::NEG_INFINITY;
    for rule in &scenario.rules {
        let value_before = rule_value(&scenario.dist, &scenario.gamma, rule, problem)?;
        let value_after = rule_value(&scenario.dist, &gamma_hat, rule, problem)?;
        max_value_before = max_value_before.max(value_before);
        rule_values.push(RuleValueRow {
            rule: rule.id.clone(),
            value_before,
            value_after,
        });
    }
    let value_after = rule_value(&scenario.dist, &gamma_hat, &c_star, problem)?;
    rule_values.push(RuleValueRow {
        rule: "cstar".into(),
        value_before: rule_value(&scenario.dist, &scenario.gamma, &c_star, problem)?,
        value_after,
    });

    let sample_budget = planned.map(|planned| SampleBudgetUsed {
        planned,
        check_calls: trace.check_calls,
        samples_drawn: trace.check_calls * planned.n_per_call,
    });

    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION.into(),
        scenario_label: scenario.label.clone(),
        alpha,
        max_value_before,
        value_after,
        iterations: trace.iterations,
        status: trace.status,
        potential_initial: trace.potential_initial,
        potential_final: trace.potential_final,
        audit_final: audit(&scenario.dist, &gamma_hat, &weights)?,
        sample_budget,
        guarantee_holds: max_value_before <= config.eps_target + value_after + INEQUALITY_TOL,
        rule_values,
        config: config.clone(),
        trace,
    })
}

/// One aggregated line of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub max_before: f64,
    pub after: f64,
    pub iterations: usize,
    pub potential_initial: f64,
    pub potential_final: f64,
    pub audit_final: f64,
}

/// Sweep result; `aborted` flags a member run's hard failure, with the rows
/// completed so far kept as partial results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<Report>,
    pub aborted: Option<String>,
}

/// Runs `base` once per ε in `eps_list`, in order.
pub fn sweep(base: &ExperimentConfig, eps_list: &[f64]) -> Result<SweepOutcome> {
    if eps_list.is_empty() {
        return Err(Error::Config("sweep needs a nonempty epsilon list".into()));
    }
    let mut outcome = SweepOutcome {
        rows: Vec::new(),
        reports: Vec::new(),
        aborted: None,
    };
    for &eps in eps_list {
        let mut config = base.clone();
        config.eps_target = eps;
        match run_experiment(&config) {
            Ok(report) => {
                outcome.rows.push(SweepRow {
                    epsilon: eps,
                    max_before: report.max_value_before,
                    after: report.value_after,
                    iterations: report.iterations,
                    potential_initial: report.potential_initial,
                    potential_final: report.potential_final,
                    audit_final: report.audit_final,
                });
                outcome.reports.push(report);
            }
            Err(e) => {
                outcome.aborted = Some(format!("run for epsilon {eps} failed: {e}"));
                break;
            }
        }
    }
    Ok(outcome)
}

/// Emitted file family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    /// `report.json`: the full document.
    Json,
    /// `values.csv` and `trace.csv`: plot-ready tables.
    Csv,
}

/// Prints a float with 17 significant digits so it round-trips exactly.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `report` into `dir` in the requested format and returns the paths.
pub fn emit_report(report: &Report, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match format {
        ReportFormat::Json => {
            let path = dir.join("report.json");
            let mut doc = serde_json::to_string_pretty(report)?;
            doc.push('\n');
            write_file(&path, &doc)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let values = dir.join("values.csv");
            let mut out = String::from("rule,value_before,value_after\n");
            for row in &report.rule_values {
                out.push_str(&format!(
                    "{},{},{}\n",
                    row.rule,
                    fmt_float(row.value_before),
                    fmt_float(row.value_after)
                ));
            }
            write_file(&values, &out)?;

            let trace = dir.join("trace.csv");
            write_trace_csv(&report.trace, &trace)?;
            Ok(vec![values, trace])
        }
    }
}

/// Writes the per-iteration trace table to `path`.
pub fn write_trace_csv(trace: &CalibrationTrace, path: &Path) -> Result<()> {
    let mut out = String::from("iter,weight_id,b,potential,z\n");
    for step in &trace.steps {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            step.iter,
            step.weight_id,
            step.b,
            fmt_float(step.potential),
            fmt_float(step.z)
        ));
    }
    write_file(path, &out)
}

/// Writes the aggregated sweep table to `path`.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut out = String::from(
        "epsilon,max_before,after,iterations,potential_initial,potential_final,audit_final\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_float(row.epsilon),
            fmt_float(row.max_before),
            fmt_float(row.after),
            row.iterations,
            fmt_float(row.potential_initial),
            fmt_float(row.potential_final),
            fmt_float(row.audit_final)
        ));
    }
    write_file(path, &out)
}
