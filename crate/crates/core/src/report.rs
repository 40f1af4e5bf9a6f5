//! JSON reports. Maps keyed by state name follow the model's state order, floats are written as
//! shortest round-trip numbers and rationals as `"n/d"` strings, so equal inputs give equal bytes.

use serde_json::{json, Map, Value};

use crate::absorbing::AbsorbingAnalysis;
use crate::error::Error;
use crate::evaluate::FailureVector;
use crate::model::{ModelSpec, StateId, StateSet, StationaryPolicy};
use crate::oracle::{OracleResult, SimulationEstimate, RNG_NAME};
use crate::scalar::Scalar;
use crate::solver::SolveReport;

pub fn scalar_json<T: Scalar>(x: &T) -> Value {
    if T::is_exact() {
        Value::String(x.render())
    } else {
        let v = x.to_f64();
        serde_json::Number::from_f64(v)
            .map(Value::Number)
            .unwrap_or(Value::String(x.render()))
    }
}

fn names<T: Scalar>(model: &ModelSpec<T>, set: &StateSet) -> Value {
    set.ones()
        .map(|j| Value::from(model.state_name(StateId(j))))
        .collect()
}

pub fn vector_json<T: Scalar>(model: &ModelSpec<T>, values: &[T]) -> Value {
    let map: Map<String, Value> = model
        .states()
        .map(|i| (model.state_name(i).to_string(), scalar_json(&values[i.0])))
        .collect();
    Value::Object(map)
}

pub fn failure_vector_json<T: Scalar>(model: &ModelSpec<T>, q: &FailureVector<T>) -> Value {
    vector_json(model, q.values())
}

pub fn policy_json<T: Scalar>(model: &ModelSpec<T>, policy: &StationaryPolicy) -> Value {
    let map: Map<String, Value> = policy
        .to_names(model)
        .into_iter()
        .map(|(s, a)| (s, Value::String(a)))
        .collect();
    Value::Object(map)
}

pub fn analysis_json<T: Scalar>(model: &ModelSpec<T>, analysis: &AbsorbingAnalysis) -> Value {
    let restricted: Map<String, Value> = model
        .states()
        .map(|i| {
            let acts: Value = analysis
                .restricted(i)
                .iter()
                .map(|&a| Value::from(model.action_name(a)))
                .collect();
            (model.state_name(i).to_string(), acts)
        })
        .collect();
    json!({
        "layers": analysis.layers.iter().map(|l| names(model, l)).collect::<Vec<_>>(),
        "n_star": analysis.n_star,
        "f_star": names(model, &analysis.f_star),
        "g_star": names(model, &analysis.g_star),
        "restricted_actions": restricted,
    })
}

pub fn solve_json<T: Scalar>(
    model: &ModelSpec<T>,
    report: &SolveReport<T>,
    wall_time_ms: f64,
) -> Value {
    let iterations: Vec<Value> = report
        .iterations
        .iter()
        .map(|it| {
            json!({
                "policy": policy_json(model, &it.policy),
                "q": failure_vector_json(model, &it.q),
                "improved_states": it
                    .improved_states
                    .iter()
                    .map(|&i| Value::from(model.state_name(i)))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "analysis": analysis_json(model, &report.analysis),
        "iterations": iterations,
        "final_policy": policy_json(model, &report.final_policy),
        "q_star": failure_vector_json(model, &report.q_star),
        "r_star": vector_json(model, &report.r_star()),
        "termination": report.termination,
        "oe_residual": scalar_json(&report.oe_residual),
        "wall_time_ms": wall_time_ms,
    })
}

/// `in_class` records whether the policy belongs to the restricted class; otherwise the vector
/// came from the minimal-solution iteration and `warning` says so.
pub fn evaluate_json<T: Scalar>(
    model: &ModelSpec<T>,
    policy: &StationaryPolicy,
    q: &FailureVector<T>,
    in_class: bool,
) -> Value {
    let mut out = json!({
        "policy": policy_json(model, policy),
        "in_class": in_class,
        "method": if in_class { "reduced_system" } else { "minimal_solution_iteration" },
        "q": failure_vector_json(model, q),
        "r": vector_json(model, &q.reliability()),
    });
    if !in_class {
        out["warning"] = Value::from(
            "policy leaves the largest absorbing set; its failure vector solves the policy equation only as its minimal solution",
        );
    }
    out
}

pub fn oracle_json<T: Scalar>(
    model: &ModelSpec<T>,
    oracle: &OracleResult<T>,
    solver_q: &FailureVector<T>,
    tol: f64,
    agree: bool,
) -> Value {
    let solver_f: Vec<f64> = solver_q.to_f64();
    let vi_gap = oracle.q_star_vi.max_gap(&FailureVector::new(solver_f));
    let enum_gap = oracle
        .q_star_enum
        .as_ref()
        .map(|q| q.max_gap(solver_q).to_f64());
    json!({
        "oracle": {
            "value_iteration": {
                "q": failure_vector_json(&model.to_float(), &oracle.q_star_vi),
                "iterations": oracle.iterations_used,
                "final_gap": oracle.residual_gap,
                "max_gap_to_solver": vi_gap,
            },
            "enumeration": match (&oracle.best_policy_enum, &oracle.q_star_enum) {
                (Some(g), Some(q)) => json!({
                    "best_policy": policy_json(model, g),
                    "q": failure_vector_json(model, q),
                    "max_gap_to_solver": enum_gap,
                }),
                _ => Value::Null,
            },
            "solver_q_star": failure_vector_json(model, solver_q),
            "tolerance": tol,
            "agree": agree,
        }
    })
}

pub fn simulation_json<T: Scalar>(
    model: &ModelSpec<T>,
    est: &SimulationEstimate,
    seed: u64,
) -> Value {
    json!({
        "state": model.state_name(est.state),
        "horizon": est.horizon,
        "trials": est.trials,
        "hit_count": est.hit_count,
        "estimate": est.estimate,
        "half_width_95": est.half_width_95,
        "seed": seed,
        "rng": RNG_NAME,
    })
}

pub fn validate_json<T: Scalar>(model: &ModelSpec<T>) -> Value {
    json!({
        "states": model.n_states(),
        "failed": model.failed().count_ones(..),
        "state_action_pairs": model.n_pairs(),
        "arithmetic": model.mode().as_str(),
    })
}

pub fn error_json(err: &Error) -> Value {
    json!({ "error": { "code": err.code(), "message": err.to_string() } })
}
