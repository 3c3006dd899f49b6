//! Instance builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use calibmatch::{
    build_weight_class, make_random_matching_instance, DecisionRule, Scenario, WeightFunction,
};

pub fn random_weights(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random::<f64>()).collect()
}

/// A mid-size calibration workload: 4-node matching, 8 contexts, noisy γ.
pub fn matching_workload() -> (Scenario, Vec<WeightFunction>) {
    let scenario = make_random_matching_instance(17, 4, 8, 0.3).expect("valid instance");
    let weights = build_weight_class(
        &scenario.rules,
        &DecisionRule::exact_opt(),
        &scenario.gamma,
        &scenario.problem,
    )
    .expect("valid weight class");
    (scenario, weights)
}
