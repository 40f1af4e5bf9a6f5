//! Policy evaluation.
//!
//! For policies of the restricted class the failure probabilities on `G*` are the unique solution
//! of `x = V + P x`, where `P` is the kernel restricted to `G*` and `V` the one-step failure mass;
//! they are 0 on `F*` and 1 on `B`. Any other stationary policy is evaluated as the minimal
//! nonnegative solution of the policy equation, by monotone iteration from zero.

use std::collections::HashSet;

use crate::absorbing::{membership_test, AbsorbingAnalysis};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::model::{ModelSpec, StateId, StateSet, StationaryPolicy};
use crate::scalar::{max_abs_diff, Scalar};

/// Failure probabilities `q(i)` over every state. `1 - q(i)` is the reliability.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureVector<T> {
    q: Vec<T>,
}

impl<T: Scalar> FailureVector<T> {
    pub fn new(q: Vec<T>) -> Self {
        FailureVector { q }
    }

    pub fn get(&self, i: StateId) -> &T {
        &self.q[i.0]
    }

    pub fn values(&self) -> &[T] {
        &self.q
    }

    pub fn into_values(self) -> Vec<T> {
        self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn reliability(&self) -> Vec<T> {
        self.q.iter().map(|x| T::one() - x.clone()).collect()
    }

    /// Sup-norm distance to `other`.
    pub fn max_gap(&self, other: &FailureVector<T>) -> T {
        max_abs_diff(&self.q, &other.q)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.q.iter().map(Scalar::to_f64).collect()
    }
}

/// The linear system `(I - P) x = V` over `G*` for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem<T> {
    /// `p(j | i, g(i))` for `i, j` in `G*`.
    pub p_gstar: Vec<Vec<T>>,
    /// `p(B | i, g(i))` for `i` in `G*`.
    pub v_b: Vec<T>,
    /// Position `k` of the system corresponds to state `index_map[k]`.
    pub index_map: Vec<StateId>,
}

/// Tolerances and limits for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Bound on `||(I - P) x - V||_inf` after a float solve.
    pub solve_tol: f64,
    pub pivot_tol: f64,
    /// Float solutions within this distance of `[0, 1]` are clamped into it.
    pub clamp_tol: f64,
    /// Stopping gap for fixed-point iteration.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            solve_tol: 1e-10,
            pivot_tol: 1e-12,
            clamp_tol: 1e-9,
            tol: 1e-12,
            max_iters: 100_000,
        }
    }
}

pub fn build_reduced_system<T: Scalar>(
    model: &ModelSpec<T>,
    analysis: &AbsorbingAnalysis,
    policy: &StationaryPolicy,
) -> Result<ReducedSystem<T>> {
    if analysis.fingerprint() != model.fingerprint() {
        return Err(Error::ModelMismatch);
    }
    if !membership_test(analysis, policy)? {
        let offender = analysis
            .f_star
            .ones()
            .map(StateId)
            .find(|&i| !analysis.restricted(i).contains(&policy.action(i)))
            .expect("membership failed on some state of F*");
        return Err(Error::PolicyOutsideClass(
            model.state_name(offender).to_string(),
        ));
    }
    if analysis.g_star.is_clear() {
        return Err(Error::EmptyGStar);
    }
    let index_map: Vec<StateId> = analysis.g_star.ones().map(StateId).collect();
    let mut p_gstar = Vec::with_capacity(index_map.len());
    let mut v_b = Vec::with_capacity(index_map.len());
    for &i in &index_map {
        let row = model.policy_row(policy, i);
        p_gstar.push(index_map.iter().map(|j| row[j.0].clone()).collect());
        v_b.push(ModelSpec::mass(row, model.failed()));
    }
    Ok(ReducedSystem {
        p_gstar,
        v_b,
        index_map,
    })
}

/// `||(I - P) x - V||_inf`.
pub fn reduced_residual<T: Scalar>(system: &ReducedSystem<T>, x: &[T]) -> T {
    let mut worst = T::zero();
    for (k, row) in system.p_gstar.iter().enumerate() {
        let px = row
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (p, xj)| acc + p.clone() * xj.clone());
        let r = (x[k].clone() - px - system.v_b[k].clone()).abs();
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Solves the reduced system. Values are aligned with `system.index_map`.
pub fn solve_reduced<T: Scalar>(system: &ReducedSystem<T>, opts: &EvalOptions) -> Result<Vec<T>> {
    let n = system.v_b.len();
    let a: Vec<Vec<T>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let p = system.p_gstar[r][c].clone();
                    if r == c {
                        T::one() - p
                    } else {
                        -p
                    }
                })
                .collect()
        })
        .collect();
    let mut x = solve_dense(a, system.v_b.clone(), opts.pivot_tol)?;

    let residual = reduced_residual(system, &x);
    if residual > T::tolerance(opts.solve_tol) {
        return Err(Error::ResidualTooLarge {
            residual: residual.to_f64(),
            tol: opts.solve_tol,
        });
    }

    let clamp = T::tolerance(opts.clamp_tol);
    for (k, v) in x.iter_mut().enumerate() {
        if *v < -clamp.clone() || *v > T::one() + clamp.clone() {
            return Err(Error::OutOfRangeSolution {
                index: k,
                value: v.to_f64(),
            });
        }
        if *v < T::zero() {
            *v = T::zero();
        } else if *v > T::one() {
            *v = T::one();
        }
    }
    Ok(x)
}

/// Full failure vector: 1 on `B`, 0 on `F*`, the solved values on `G*`.
pub fn assemble_failure_vector<T: Scalar>(
    model: &ModelSpec<T>,
    analysis: &AbsorbingAnalysis,
    solved: &[(StateId, T)],
) -> Result<FailureVector<T>> {
    let expected = analysis.g_star.count_ones(..);
    let distinct: HashSet<StateId> = solved.iter().map(|(i, _)| *i).collect();
    if solved.len() != expected
        || distinct.len() != expected
        || !distinct.iter().all(|i| analysis.in_g_star(*i))
    {
        return Err(Error::CoverageMismatch {
            expected,
            got: solved.len(),
        });
    }
    let mut q: Vec<T> = model
        .states()
        .map(|i| {
            if model.is_failed(i) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    for (i, v) in solved {
        q[i.0] = v.clone();
    }
    Ok(FailureVector::new(q))
}

/// Evaluates a policy of the restricted class through the reduced system, handling `G* = ∅`.
pub fn evaluate_in_class<T: Scalar>(
    model: &ModelSpec<T>,
    analysis: &AbsorbingAnalysis,
    policy: &StationaryPolicy,
    opts: &EvalOptions,
) -> Result<FailureVector<T>> {
    match build_reduced_system(model, analysis, policy) {
        Ok(system) => {
            let x = solve_reduced(&system, opts)?;
            let solved: Vec<_> = system.index_map.iter().copied().zip(x).collect();
            assemble_failure_vector(model, analysis, &solved)
        }
        Err(Error::EmptyGStar) => assemble_failure_vector(model, analysis, &[]),
        Err(e) => Err(e),
    }
}

/// One application of `x -> p(B|i,g(i)) + sum_{j in B^c} p(j|i,g(i)) x_j`, with `x = 1` on `B`.
fn policy_step<T: Scalar>(model: &ModelSpec<T>, policy: &StationaryPolicy, x: &[T]) -> Vec<T> {
    model
        .states()
        .map(|i| {
            if model.is_failed(i) {
                T::one()
            } else {
                model
                    .policy_row(policy, i)
                    .iter()
                    .zip(x)
                    .filter(|(p, _)| !p.is_zero())
                    .fold(T::zero(), |acc, (p, xj)| acc + p.clone() * xj.clone())
            }
        })
        .collect()
}

fn indicator<T: Scalar>(model: &ModelSpec<T>) -> Vec<T> {
    model
        .states()
        .map(|i| {
            if model.is_failed(i) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// `P_i^g(τ_B <= horizon)` for every state: the `horizon`-th iterate from zero.
pub fn hitting_within<T: Scalar>(
    model: &ModelSpec<T>,
    policy: &StationaryPolicy,
    horizon: usize,
) -> FailureVector<T> {
    let mut x = indicator(model);
    for _ in 0..horizon {
        x = policy_step(model, policy, &x);
    }
    FailureVector::new(x)
}

/// Estimated distance to the limit of a geometrically converging iteration whose last two steps
/// had sup-norm sizes `prev_gap` and `gap`.
pub(crate) fn geometric_tail(gap: f64, prev_gap: f64) -> f64 {
    if gap == 0.0 {
        return 0.0;
    }
    let ratio = gap / prev_gap;
    if ratio < 1.0 {
        gap * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// Iterates the policy equation from `start` (forced to 1 on `B`) until successive iterates are
/// within `tol` in sup-norm and the geometric tail estimate is also within `tol`, or until they
/// are exactly equal in exact mode. Returns the limit and the number of steps taken.
pub fn iterate_policy_equation<T: Scalar>(
    model: &ModelSpec<T>,
    policy: &StationaryPolicy,
    start: &[T],
    tol: f64,
    max_iters: usize,
) -> Result<(FailureVector<T>, usize)> {
    if policy.fingerprint() != model.fingerprint() {
        return Err(Error::ModelMismatch);
    }
    let tol = T::tolerance(tol);
    let mut x: Vec<T> = model
        .states()
        .map(|i| {
            if model.is_failed(i) {
                T::one()
            } else {
                start[i.0].clone()
            }
        })
        .collect();
    let (mut gap, mut prev_gap) = (T::zero(), f64::INFINITY);
    for iter in 1..=max_iters {
        let next = policy_step(model, policy, &x);
        gap = max_abs_diff(&next, &x);
        x = next;
        let g = gap.to_f64();
        if gap <= tol && (T::is_exact() || geometric_tail(g, prev_gap) <= tol.to_f64()) {
            return Ok((FailureVector::new(x), iter));
        }
        prev_gap = g;
    }
    Err(Error::NotConverged {
        iters: max_iters,
        gap: gap.to_f64(),
    })
}

/// Minimal nonnegative solution of the policy equation for any stationary policy.
///
/// Float mode iterates from zero until the step falls below `opts.tol`. Exact mode iterates the
/// support of the iterates until it stalls, which happens within `|B^c| + 1` steps, and then solves
/// the policy equation exactly on that support; outside it every iterate is zero.
pub fn evaluate_policy_pes<T: Scalar>(
    model: &ModelSpec<T>,
    policy: &StationaryPolicy,
    opts: &EvalOptions,
) -> Result<FailureVector<T>> {
    if !T::is_exact() {
        let zeros = vec![T::zero(); model.n_states()];
        return iterate_policy_equation(model, policy, &zeros, opts.tol, opts.max_iters)
            .map(|(q, _)| q);
    }
    if policy.fingerprint() != model.fingerprint() {
        return Err(Error::ModelMismatch);
    }

    // support of x^(n) over B^c, starting from x^(0) = 0
    let mut support = StateSet::with_capacity(model.n_states());
    loop {
        let mut reach = model.failed().clone();
        reach.union_with(&support);
        let mut next = StateSet::with_capacity(model.n_states());
        for i in model.survivors() {
            if ModelSpec::reaches(model.policy_row(policy, i), &reach) {
                next.insert(i.0);
            }
        }
        if next == support {
            break;
        }
        support = next;
    }

    let idx: Vec<StateId> = support.ones().map(StateId).collect();
    let a: Vec<Vec<T>> = idx
        .iter()
        .map(|&i| {
            let row = model.policy_row(policy, i);
            idx.iter()
                .map(|&j| {
                    let p = row[j.0].clone();
                    if i == j {
                        T::one() - p
                    } else {
                        -p
                    }
                })
                .collect()
        })
        .collect();
    let v: Vec<T> = idx
        .iter()
        .map(|&i| ModelSpec::mass(model.policy_row(policy, i), model.failed()))
        .collect();
    let x = solve_dense(a, v, opts.pivot_tol)?;
    let mut q = indicator(model);
    for (i, value) in idx.into_iter().zip(x) {
        q[i.0] = value;
    }
    Ok(FailureVector::new(q))
}
