//! Random model generators for property tests, benchmarks and the cross-check suites.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::model::{ModelBuilder, ModelSpec, StateId, StationaryPolicy};

/// Shape knobs for [`random_model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModelConfig {
    pub min_states: usize,
    pub max_states: usize,
    pub max_failed: usize,
    pub max_actions: usize,
    /// Symmetric Dirichlet concentration for each transition row.
    pub concentration: f64,
    /// Entries below this are zeroed before renormalising, which creates sparsity.
    pub sparsity_cutoff: f64,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig {
            min_states: 3,
            max_states: 6,
            max_failed: 2,
            max_actions: 3,
            concentration: 0.1,
            sparsity_cutoff: 0.05,
        }
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn dirichlet_row<R: Rng + ?Sized>(rng: &mut R, n: usize, cfg: &RandomModelConfig) -> Vec<f64> {
    let gamma = Gamma::new(cfg.concentration, 1.0).expect("positive concentration");
    loop {
        let raw: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 || total.is_nan() {
            continue;
        }
        let cut: Vec<f64> = raw
            .iter()
            .map(|v| {
                if v / total < cfg.sparsity_cutoff {
                    0.0
                } else {
                    *v
                }
            })
            .collect();
        let kept: f64 = cut.iter().sum();
        if kept > 0.0 {
            return cut.into_iter().map(|v| v / kept).collect();
        }
    }
}

/// States `s0..`, the first one or two failed, actions drawn from `a0..` with Dirichlet rows.
pub fn random_model_with<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomModelConfig) -> ModelSpec<f64> {
    let n = rng.random_range(cfg.min_states..=cfg.max_states);
    let n_failed = rng.random_range(1..=cfg.max_failed.min(n - 1));
    let states = names("s", n);
    let actions = names("a", cfg.max_actions);
    let mut builder = ModelBuilder::new(states.clone());
    for s in &states[..n_failed] {
        builder = builder.failed(s);
    }
    for s in &states {
        let k = rng.random_range(1..=cfg.max_actions);
        for a in &actions[..k] {
            let row = dirichlet_row(rng, n, cfg);
            let entries: Vec<(String, f64)> = states
                .iter()
                .cloned()
                .zip(row)
                .filter(|(_, p)| *p > 0.0)
                .collect();
            builder = builder.action(s, a, entries);
        }
    }
    builder.build().expect("generator produces valid models")
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R) -> ModelSpec<f64> {
    random_model_with(rng, &RandomModelConfig::default())
}

/// Like [`random_model`] but with small-denominator rational rows.
pub fn random_rational_model<R: Rng + ?Sized>(rng: &mut R) -> ModelSpec<BigRational> {
    let cfg = RandomModelConfig::default();
    let n = rng.random_range(cfg.min_states..=cfg.max_states);
    let n_failed = rng.random_range(1..=cfg.max_failed.min(n - 1));
    let states = names("s", n);
    let actions = names("a", cfg.max_actions);
    let mut builder = ModelBuilder::new(states.clone());
    for s in &states[..n_failed] {
        builder = builder.failed(s);
    }
    for s in &states {
        let k = rng.random_range(1..=cfg.max_actions);
        for a in &actions[..k] {
            let weights: Vec<i64> = loop {
                let w: Vec<i64> = (0..n)
                    .map(|_| {
                        if rng.random_bool(0.5) {
                            0
                        } else {
                            rng.random_range(1..=4)
                        }
                    })
                    .collect();
                if w.iter().any(|&x| x > 0) {
                    break w;
                }
            };
            let total: i64 = weights.iter().sum();
            let entries: Vec<(String, BigRational)> = states
                .iter()
                .cloned()
                .zip(weights)
                .filter(|(_, w)| *w > 0)
                .map(|(name, w)| (name, BigRational::new(BigInt::from(w), BigInt::from(total))))
                .collect();
            builder = builder.action(s, a, entries);
        }
    }
    builder.build().expect("generator produces valid models")
}

/// A uniformly random stationary policy.
pub fn random_policy<T: crate::scalar::Scalar, R: Rng + ?Sized>(
    model: &ModelSpec<T>,
    rng: &mut R,
) -> StationaryPolicy {
    let choice = model
        .states()
        .map(|i: StateId| {
            let acts = model.actions(i);
            acts[rng.random_range(0..acts.len())]
        })
        .collect();
    StationaryPolicy::new(model, choice).expect("actions are admissible")
}
