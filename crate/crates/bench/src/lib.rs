//! Fixtures shared by the criterion benchmarks in `benches/`.

use maxrel::catalog::{self, MaintenanceParams};
use maxrel::random::random_model;
use maxrel::{ModelSpec, Scalar, StationaryPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn maintenance<T: Scalar>() -> ModelSpec<T> {
    catalog::maintenance(&MaintenanceParams::regime_a()).expect("catalog model is valid")
}

/// The maintenance policy that uses action `c` in both deteriorated states.
pub fn maintenance_keep_policy(model: &ModelSpec<f64>) -> StationaryPolicy {
    let names = [("(1,2)", "c"), ("(2,1)", "c")]
        .into_iter()
        .map(|(s, a)| (s.to_string(), a.to_string()))
        .collect();
    StationaryPolicy::from_names(model, &names).expect("catalog policy is valid")
}

/// `count` random models from a fixed seed.
pub fn random_models(count: usize, seed: u64) -> Vec<ModelSpec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_model(&mut rng)).collect()
}
