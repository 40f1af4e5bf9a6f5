//! Independent ground truth: value iteration on the plain optimality equation, exhaustive search
//! over stationary policies, and seeded Monte-Carlo simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluate::{evaluate_policy_pes, geometric_tail, EvalOptions, FailureVector};
use crate::model::{ModelSpec, PolicyIter, StateId, StationaryPolicy};
use crate::scalar::{max_abs_diff, Scalar};

/// Name of the generator behind [`simulate_survival`], recorded in reports.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64(seed), stream = trial index";

/// Agreement threshold between oracles and the solver.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Stopping gap for value iteration.
    pub vi_tol: f64,
    pub vi_max_iters: usize,
    /// Settings for the per-policy evaluations of the exhaustive search.
    pub eval: EvalOptions,
    pub enum_cap: usize,
    /// Slack when checking that one policy is minimal in every state (float mode only).
    pub match_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            vi_tol: 1e-12,
            vi_max_iters: 200_000,
            eval: EvalOptions::default(),
            enum_cap: crate::absorbing::DEFAULT_ENUM_CAP,
            match_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub q: FailureVector<f64>,
    pub iterations: usize,
    /// Sup-norm size of the final step.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub q_star_vi: FailureVector<f64>,
    pub best_policy_enum: Option<StationaryPolicy>,
    pub q_star_enum: Option<FailureVector<T>>,
    pub iterations_used: usize,
    pub residual_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub state: StateId,
    pub horizon: usize,
    pub trials: usize,
    pub hit_count: usize,
    pub estimate: f64,
    /// Normal-approximation 95% half-width, `1.96 sqrt(p (1 - p) / n)`.
    pub half_width_95: f64,
}

impl SimulationEstimate {
    pub fn standard_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

fn bellman_step(model: &ModelSpec<f64>, x: &[f64]) -> Vec<f64> {
    model
        .states()
        .map(|i| {
            if model.is_failed(i) {
                return 1.0;
            }
            model
                .actions(i)
                .iter()
                .map(|&a| {
                    let row = model.row(i, a).expect("admissible");
                    row.iter().zip(x).map(|(p, xj)| p * xj).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn failed_indicator(model: &ModelSpec<f64>) -> Vec<f64> {
    model
        .states()
        .map(|i| if model.is_failed(i) { 1.0 } else { 0.0 })
        .collect()
}

/// Value iteration from zero on `x_i = min_a [p(B|i,a) + sum_{j in B^c} p(j|i,a) x_j]`.
///
/// Iterates increase monotonically to the minimal nonnegative solution, which is `q*`. Stops once
/// the last step and its geometric tail estimate are both within `tol`.
pub fn value_iterate_oe(
    model: &ModelSpec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<ValueIteration> {
    let mut x = failed_indicator(model);
    let (mut gap, mut prev_gap) = (0.0, f64::INFINITY);
    for iter in 1..=max_iters {
        let next = bellman_step(model, &x);
        gap = max_abs_diff(&next, &x);
        x = next;
        if gap <= tol && geometric_tail(gap, prev_gap) <= tol {
            return Ok(ValueIteration {
                q: FailureVector::new(x),
                iterations: iter,
                gap,
            });
        }
        prev_gap = gap;
    }
    Err(Error::NotConverged {
        iters: max_iters,
        gap,
    })
}

/// The `horizon`-th value iterate: `min` over policies of `P_i(τ_B <= horizon)`.
pub fn min_hitting_within(model: &ModelSpec<f64>, horizon: usize) -> FailureVector<f64> {
    let mut x = failed_indicator(model);
    for _ in 0..horizon {
        x = bellman_step(model, &x);
    }
    FailureVector::new(x)
}

/// Evaluates every stationary policy and returns one that is minimal in every state.
///
/// Ties go to the lexicographically first policy.
pub fn enumerate_and_minimize<T: Scalar>(
    model: &ModelSpec<T>,
    opts: &OracleOptions,
) -> Result<(StationaryPolicy, FailureVector<T>)> {
    let policies: Vec<StationaryPolicy> = PolicyIter::all(model, opts.enum_cap)?.collect();
    let values = policies
        .par_iter()
        .map(|g| evaluate_policy_pes(model, g, &opts.eval))
        .collect::<Result<Vec<_>>>()?;

    let n = model.n_states();
    let mut minimum: Vec<T> = values[0].values().to_vec();
    for q in &values[1..] {
        for (m, v) in minimum.iter_mut().zip(q.values()) {
            if v < m {
                *m = v.clone();
            }
        }
    }
    let slack = T::tolerance(opts.match_tol);
    let attains =
        |q: &FailureVector<T>, i: usize| q.values()[i] <= minimum[i].clone() + slack.clone();
    if let Some(k) = values.iter().position(|q| (0..n).all(|i| attains(q, i))) {
        return Ok((policies[k].clone(), values[k].clone()));
    }

    // Report two states whose minima no single policy attains together.
    let describe = |i: usize| {
        let k = values
            .iter()
            .position(|q| attains(q, i))
            .expect("minimum is attained");
        let choices: Vec<String> = policies[k]
            .to_names(model)
            .into_iter()
            .map(|(s, a)| format!("{s}:{a}"))
            .collect();
        format!(
            "best at {} is [{}]",
            model.state_name(StateId(i)),
            choices.join(" ")
        )
    };
    let first = (0..n)
        .find(|&i| {
            !values
                .iter()
                .any(|q| attains(q, i) && (0..n).all(|j| attains(q, j)))
        })
        .unwrap_or(0);
    let k = values
        .iter()
        .position(|q| attains(q, first))
        .expect("minimum is attained");
    let second = (0..n).find(|&j| !attains(&values[k], j)).unwrap_or(first);
    Err(Error::NoUniformMinimizer(describe(first), describe(second)))
}

/// Runs value iteration and, when the policy space is small enough, exhaustive search.
pub fn run_oracles<T: Scalar>(
    model: &ModelSpec<T>,
    opts: &OracleOptions,
) -> Result<OracleResult<T>> {
    let float_model = model.to_float();
    let vi = value_iterate_oe(&float_model, opts.vi_tol, opts.vi_max_iters)?;
    let (best_policy_enum, q_star_enum) = match enumerate_and_minimize(model, opts) {
        Ok((g, q)) => (Some(g), Some(q)),
        Err(Error::TooManyPolicies { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(OracleResult {
        q_star_vi: vi.q,
        best_policy_enum,
        q_star_enum,
        iterations_used: vi.iterations,
        residual_gap: vi.gap,
    })
}

/// Estimates `P_state^policy(τ_B <= horizon)` from `trials` simulated trajectories.
///
/// Trial `k` draws from its own ChaCha8 stream `k` under `seed`, so results do not depend on how
/// trials are scheduled and trajectories for different horizons share their prefixes. The
/// estimate is biased low as an estimate of `P(τ_B < ∞)`.
pub fn simulate_survival<T: Scalar>(
    model: &ModelSpec<T>,
    policy: &StationaryPolicy,
    state: StateId,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<SimulationEstimate> {
    if policy.fingerprint() != model.fingerprint() {
        return Err(Error::ModelMismatch);
    }
    if state.0 >= model.n_states() {
        return Err(Error::UnknownStateOrAction(format!("state {state}")));
    }
    let cumulative: Vec<Vec<f64>> = model
        .states()
        .map(|i| {
            let mut acc = 0.0;
            model
                .policy_row(policy, i)
                .iter()
                .map(|p| {
                    acc += p.to_f64();
                    acc
                })
                .collect()
        })
        .collect();

    let hits_in = |trial: usize| -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut current = state.0;
        if model.is_failed(StateId(current)) {
            return true;
        }
        for _ in 0..horizon {
            let row = &cumulative[current];
            let u: f64 = rng.random::<f64>() * row[row.len() - 1];
            current = row.iter().position(|&c| u < c).unwrap_or_else(|| {
                // u landed on the total mass: take the last state carrying mass
                row.iter()
                    .enumerate()
                    .rev()
                    .find(|(j, c)| *j == 0 || **c > row[j - 1])
                    .map(|(j, _)| j)
                    .unwrap_or(0)
            });
            if model.is_failed(StateId(current)) {
                return true;
            }
        }
        false
    };

    let hit_count = (0..trials).into_par_iter().filter(|&k| hits_in(k)).count();
    let estimate = if trials == 0 {
        0.0
    } else {
        hit_count as f64 / trials as f64
    };
    let half_width_95 = if trials == 0 {
        0.0
    } else {
        1.96 * (estimate * (1.0 - estimate) / trials as f64).sqrt()
    };
    Ok(SimulationEstimate {
        state,
        horizon,
        trials,
        hit_count,
        estimate,
        half_width_95,
    })
}
