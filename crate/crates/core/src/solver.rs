//! Policy iteration over the restricted class `Π(F*)`.
//!
//! Each round evaluates the current policy through the reduced system on `G*`, then switches every
//! state of `G*` that has a strictly better action to its best one. The failure vectors decrease
//! monotonically and no policy repeats, so the loop ends after at most `|Π(F*)|` evaluations. The
//! returned vector is certified by the optimality equation restricted to `G*`, whose solution is
//! unique.

use serde::Serialize;

use crate::absorbing::{compute_largest_absorbing, membership_test, AbsorbingAnalysis};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_in_class, EvalOptions, FailureVector};
use crate::model::{ModelSpec, StateId, StateSet, StationaryPolicy};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub eval: EvalOptions,
    /// Minimum decrease for an action to count as a strict improvement (float mode only).
    pub improve_eps: f64,
    /// Bound on the improved optimality equation residual of the result (float mode only).
    pub oe_tol: f64,
    pub max_policy_iters: usize,
    /// Starting policy; must belong to the restricted class. Defaults to the smallest actions.
    pub initial_policy: Option<StationaryPolicy>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eval: EvalOptions::default(),
            improve_eps: 1e-12,
            oe_tol: 1e-8,
            max_policy_iters: 1_000,
            initial_policy: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    DegenerateFStarEmpty,
    DegenerateGStarEmpty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iteration<T> {
    pub policy: StationaryPolicy,
    pub q: FailureVector<T>,
    /// States whose action the following improvement step changed.
    pub improved_states: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub analysis: AbsorbingAnalysis,
    pub iterations: Vec<Iteration<T>>,
    pub final_policy: StationaryPolicy,
    pub q_star: FailureVector<T>,
    pub termination: Termination,
    pub oe_residual: T,
}

impl<T: Scalar> SolveReport<T> {
    /// `R* = 1 - q*`.
    pub fn r_star(&self) -> Vec<T> {
        self.q_star.reliability()
    }
}

/// `p(B | i, a) + sum_{j in set} p(j | i, a) q_j` for one kernel row.
fn lookahead<T: Scalar>(model: &ModelSpec<T>, row: &[T], set: &StateSet, q: &[T]) -> T {
    set.ones()
        .fold(ModelSpec::mass(row, model.failed()), |acc, j| {
            acc + row[j].clone() * q[j].clone()
        })
}

/// One improvement step: in every state of `G*` pick the action with the smallest lookahead among
/// those beating the current value by more than `improve_eps`; ties go to the smallest action.
pub fn improve_policy<T: Scalar>(
    model: &ModelSpec<T>,
    analysis: &AbsorbingAnalysis,
    policy: &StationaryPolicy,
    q: &FailureVector<T>,
    improve_eps: f64,
) -> Result<(StationaryPolicy, Vec<StateId>)> {
    if analysis.fingerprint() != model.fingerprint() || policy.fingerprint() != model.fingerprint()
    {
        return Err(Error::ModelMismatch);
    }
    let eps = T::tolerance(improve_eps);
    let mut next = policy.clone();
    let mut improved = Vec::new();
    for i in analysis.g_star.ones().map(StateId) {
        let current = q.get(i).clone();
        let mut best: Option<(T, _)> = None;
        for &a in analysis.restricted(i) {
            let w = lookahead(
                model,
                model.row(i, a).expect("admissible"),
                &analysis.g_star,
                q.values(),
            );
            if current.clone() - w.clone() <= eps {
                continue;
            }
            if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
                best = Some((w, a));
            }
        }
        if let Some((_, a)) = best {
            if a != policy.action(i) {
                next = next.with_action(i, a);
                improved.push(i);
            }
        }
    }
    Ok((next, improved))
}

/// `max_{i in G*} |q_i - min_{a in A(i)} [p(B|i,a) + sum_{j in G*} p(j|i,a) q_j]|`.
pub fn check_improved_oe<T: Scalar>(
    model: &ModelSpec<T>,
    analysis: &AbsorbingAnalysis,
    q: &FailureVector<T>,
) -> T {
    oe_residual(model, &analysis.g_star, &analysis.g_star, q)
}

/// `max_{i in B^c} |q_i - min_{a in A(i)} [p(B|i,a) + sum_{j in B^c} p(j|i,a) q_j]|`.
///
/// A zero residual does not certify optimality: the plain equation has non-minimal solutions.
pub fn check_plain_oe<T: Scalar>(model: &ModelSpec<T>, q: &FailureVector<T>) -> T {
    let survivors = model.survivor_set();
    oe_residual(model, &survivors, &survivors, q)
}

fn oe_residual<T: Scalar>(
    model: &ModelSpec<T>,
    rows: &StateSet,
    support: &StateSet,
    q: &FailureVector<T>,
) -> T {
    let mut worst = T::zero();
    for i in rows.ones().map(StateId) {
        let best = model
            .actions(i)
            .iter()
            .map(|&a| {
                lookahead(
                    model,
                    model.row(i, a).expect("admissible"),
                    support,
                    q.values(),
                )
            })
            .reduce(|x, y| if y < x { y } else { x })
            .expect("nonempty action set");
        let r = (q.get(i).clone() - best).abs();
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Computes the minimal failure probability and an optimal stationary policy.
pub fn solve<T: Scalar>(model: &ModelSpec<T>, opts: &SolveOptions) -> Result<SolveReport<T>> {
    let analysis = compute_largest_absorbing(model);

    if analysis.f_star.is_clear() {
        let q_star = FailureVector::new(vec![T::one(); model.n_states()]);
        return Ok(SolveReport {
            oe_residual: check_improved_oe(model, &analysis, &q_star),
            final_policy: StationaryPolicy::first(model),
            analysis,
            iterations: Vec::new(),
            q_star,
            termination: Termination::DegenerateFStarEmpty,
        });
    }
    if analysis.g_star.is_clear() {
        let q_star = FailureVector::new(
            model
                .states()
                .map(|i| {
                    if model.is_failed(i) {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect(),
        );
        return Ok(SolveReport {
            oe_residual: T::zero(),
            final_policy: analysis.first_policy(model)?,
            analysis,
            iterations: Vec::new(),
            q_star,
            termination: Termination::DegenerateGStarEmpty,
        });
    }

    let mut policy = match &opts.initial_policy {
        Some(p) => {
            if !membership_test(&analysis, p)? {
                let offender = analysis
                    .f_star
                    .ones()
                    .map(StateId)
                    .find(|&i| !analysis.restricted(i).contains(&p.action(i)))
                    .expect("membership failed on some state of F*");
                return Err(Error::PolicyOutsideClass(
                    model.state_name(offender).to_string(),
                ));
            }
            p.clone()
        }
        None => analysis.first_policy(model)?,
    };

    let budget = analysis
        .restricted_policy_count()
        .max(opts.max_policy_iters);
    let mut iterations: Vec<Iteration<T>> = Vec::new();
    loop {
        let q = evaluate_in_class(model, &analysis, &policy, &opts.eval)?;
        let (next, improved_states) =
            improve_policy(model, &analysis, &policy, &q, opts.improve_eps)?;
        let done = improved_states.is_empty();
        iterations.push(Iteration {
            policy: policy.clone(),
            q,
            improved_states,
        });
        if done {
            break;
        }
        if iterations.len() >= budget {
            return Err(Error::IterationBudgetExceeded(budget));
        }
        policy = next;
    }

    let last = iterations.last().expect("at least one evaluation");
    let q_star = last.q.clone();
    let oe_residual = check_improved_oe(model, &analysis, &q_star);
    if oe_residual > T::tolerance(opts.oe_tol) {
        return Err(Error::CertificateFailed {
            residual: oe_residual.to_f64(),
            tol: opts.oe_tol,
        });
    }
    Ok(SolveReport {
        analysis,
        final_policy: last.policy.clone(),
        iterations,
        q_star,
        termination: Termination::Converged,
        oe_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, MaintenanceParams};
    use crate::evaluate::evaluate_policy_pes;
    use crate::model::ModelBuilder;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn named_policy<T: Scalar>(model: &ModelSpec<T>, a12: &str, a21: &str) -> StationaryPolicy {
        let names = [
            ("(1,2)".to_string(), a12.to_string()),
            ("(2,1)".to_string(), a21.to_string()),
        ]
        .into_iter()
        .collect();
        StationaryPolicy::from_names(model, &names).unwrap()
    }

    #[test]
    fn improvement_regime_a_keeps_f1() {
        let m = catalog::maintenance::<f64>(&MaintenanceParams::regime_a()).unwrap();
        let an = compute_largest_absorbing(&m);
        let c_both = named_policy(&m, "c", "c");
        let q = evaluate_in_class(&m, &an, &c_both, &EvalOptions::default()).unwrap();
        let (next, improved) = improve_policy(&m, &an, &c_both, &q, 1e-12).unwrap();
        assert_eq!(next, c_both);
        assert!(improved.is_empty());
    }

    #[test]
    fn improvement_regime_b_moves_to_f3() {
        let m = catalog::maintenance::<f64>(&MaintenanceParams::regime_b()).unwrap();
        let an = compute_largest_absorbing(&m);
        let c_both = named_policy(&m, "c", "c");
        let q = evaluate_in_class(&m, &an, &c_both, &EvalOptions::default()).unwrap();
        let (next, improved) = improve_policy(&m, &an, &c_both, &q, 1e-12).unwrap();
        assert_eq!(next, named_policy(&m, "d", "d"));
        assert_eq!(improved.len(), 2);
    }

    #[test]
    fn singleton_actions_never_change() {
        let m = ModelBuilder::<f64>::new(["f", "a", "b"])
            .failed("f")
            .action("f", "x", [("f", 1.0)])
            .action("a", "x", [("f", 0.1), ("b", 0.9)])
            .action("b", "x", [("b", 1.0)])
            .build()
            .unwrap();
        let an = compute_largest_absorbing(&m);
        let g = an.first_policy(&m).unwrap();
        let q = evaluate_in_class(&m, &an, &g, &EvalOptions::default()).unwrap();
        let (next, improved) = improve_policy(&m, &an, &g, &q, 1e-12).unwrap();
        assert_eq!(next, g);
        assert!(improved.is_empty());
    }

    #[test]
    fn keep_or_fail_is_degenerate() {
        let m = catalog::keep_or_fail::<BigRational>();
        let rep = solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(rep.termination, Termination::DegenerateGStarEmpty);
        assert!(rep.q_star.values()[1].is_zero() && rep.q_star.values()[2].is_zero());
        let c = m.action_id("c").unwrap();
        assert_eq!(rep.final_policy.action(StateId(1)), c);
        assert_eq!(rep.final_policy.action(StateId(2)), c);
    }

    #[test]
    fn f_star_empty_is_degenerate() {
        let m = ModelBuilder::<f64>::new(["f", "a"])
            .failed("f")
            .action("f", "x", [("f", 1.0)])
            .action("a", "x", [("f", 0.1), ("a", 0.9)])
            .action("a", "y", [("f", 0.9), ("a", 0.1)])
            .build()
            .unwrap();
        let rep = solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(rep.termination, Termination::DegenerateFStarEmpty);
        assert_eq!(rep.q_star.values(), [1.0, 1.0]);
        assert!(rep.oe_residual < 1e-15);
    }

    #[test]
    fn plain_oe_trap() {
        let m = catalog::keep_or_fail::<f64>();
        let d = m.action_id("d").unwrap();
        let always_d = StationaryPolicy::new(&m, vec![d; 3]).unwrap();
        let q = evaluate_policy_pes(&m, &always_d, &EvalOptions::default()).unwrap();
        assert_eq!(check_plain_oe(&m, &q), 0.0);
        let zero = FailureVector::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(check_plain_oe(&m, &zero), 0.0);
        // c is a self-loop, so any vector in [0, 1] solves it; values above 1 do not
        let above = FailureVector::new(vec![1.0, 2.0, 0.0]);
        assert_eq!(check_plain_oe(&m, &above), 1.0);
    }

    #[test]
    fn improved_oe_rejects_all_ones() {
        let m = catalog::maintenance::<f64>(&MaintenanceParams::regime_a()).unwrap();
        let an = compute_largest_absorbing(&m);
        let ones = FailureVector::new(vec![1.0; m.n_states()]);
        assert!(check_improved_oe(&m, &an, &ones) > 0.1);
        let rep = solve(&m, &SolveOptions::default()).unwrap();
        assert!(check_improved_oe(&m, &an, &rep.q_star) <= 1e-8);
    }

    #[test]
    fn initial_policy_outside_class_is_rejected() {
        let m = catalog::keep_or_fail_with_transient::<f64>();
        let d = m.action_id("d").unwrap();
        let e = m.action_id("e").unwrap();
        let g = StationaryPolicy::new(&m, vec![d, d, d, e]).unwrap();
        let opts = SolveOptions {
            initial_policy: Some(g),
            ..SolveOptions::default()
        };
        assert_eq!(solve(&m, &opts).unwrap_err().code(), "PolicyOutsideClass");
    }
}
