//! Post-processing an arbitrary edge-weight predictor into a multicalibrated
//! one, so that a single optimal combinatorial solver run on the calibrated
//! predictions dominates every decision rule in a fixed family applied to the
//! original predictions.
//!
//! The library works on finite-support distributions, where every expectation
//! is an exact finite sum; the dominance guarantee, the per-iteration
//! potential decrease, the iteration bound, and the sampling budgets can all
//! be verified without Monte-Carlo error. The crate is organized around six
//! pieces:
//!
//! * [`combinatorial`] — problems, feasible sets, decision rules, and the
//!   deterministic solvers (exact matching, greedy variants, matroid greedy,
//!   argmax).
//! * [`prediction`] — finite-support distributions, tabular predictors, exact
//!   expected rule values, and the mean-square-error potential.
//! * [`weights`] — the audited weight class W1 ∪ W2 with its frozen/live
//!   asymmetry.
//! * [`calibrator`] — the projected-ascent calibration loop with exact and
//!   empirical CHECK oracles, audits, and budget planning.
//! * [`scenario`] — instance generators, including the unbiased-but-misleading
//!   two-arm construction.
//! * [`experiment`] — the config-driven runner behind the CLI.

pub mod calibrator;
pub mod combinatorial;
pub mod error;
pub mod experiment;
pub mod prediction;
pub mod scenario;
pub mod weights;

pub use calibrator::{
    audit, check_empirical, check_exact, hoeffding_sample_size, iteration_bound,
    plan_sample_budget, project_box, weighted_mc, CalibrationParams, CalibrationStatus,
    CalibrationTrace, CheckMode, CheckVerdict, SampleBudget, TraceStep, Violation,
};
pub use combinatorial::{
    apply_rule, default_matching_family, edge_count, edge_endpoints, edge_index,
    exact_max_weight_matching, greedy_matching, matroid_greedy_base, star_graph_embed,
    DecisionRule, FeasibleSet, Matroid, MatroidKind, Problem, ProblemKind, RuleKind,
    MAX_EXACT_NODES,
};
pub use error::{Error, Result};
pub use experiment::{
    derived_alpha, emit_report, run_experiment, sweep, write_sweep_csv, write_trace_csv,
    ExperimentConfig, Mode, Report, ReportFormat, RuleValueRow, SampleBudgetUsed, ScenarioSpec,
    SweepOutcome, SweepRow, REPORT_SCHEMA_VERSION,
};
pub use prediction::{
    bayes_predictor, mse_potential, rule_value, sample, sample_with_rng, substream, ContextAtom,
    FiniteDistribution, LabelModel, Sample, TabularPredictor,
};
pub use scenario::{
    make_counterexample, make_matroid_instance, make_random_matching_instance,
    make_random_matching_instance_with, make_rejection_instance, Scenario,
};
pub use weights::{build_weight_class, eval_weight, WeightFunction};

/// Comparison slack used wherever a proved inequality is asserted on doubles.
pub const INEQUALITY_TOL: f64 = 1e-9;
