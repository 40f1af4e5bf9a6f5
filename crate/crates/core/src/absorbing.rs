//! Largest absorbing set of the failure-free region and the policy class that attains it.
//!
//! Layers are peeled off the complement of the failed set: `U_1` holds the states in which every
//! action reaches `B` with positive probability, `U_n` the remaining states in which every action
//! reaches `B ∪ U_1 ∪ ... ∪ U_{n-1}`. Whatever survives the peeling is `F*`, the set of states from
//! which failure can be avoided forever. The same peeling applied to a single policy gives its
//! absorbing set `F(g)`.

use crate::error::{Error, Result};
use crate::model::{ActionId, ModelSpec, PolicyIter, StateId, StateSet, StationaryPolicy};
use crate::scalar::Scalar;

/// Default ceiling for materializing a policy class.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingAnalysis {
    /// `U_1, ..., U_{N*}`; the last layer may be empty.
    pub layers: Vec<StateSet>,
    pub n_star: usize,
    pub f_star: StateSet,
    pub g_star: StateSet,
    /// `A*(i)`: the full action set on `B ∪ G*`, the actions that never leave `F*` on `F*`.
    pub restricted_actions: Vec<Vec<ActionId>>,
    fingerprint: u64,
}

impl AbsorbingAnalysis {
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn in_f_star(&self, i: StateId) -> bool {
        self.f_star.contains(i.0)
    }

    pub fn in_g_star(&self, i: StateId) -> bool {
        self.g_star.contains(i.0)
    }

    pub fn restricted(&self, i: StateId) -> &[ActionId] {
        &self.restricted_actions[i.0]
    }

    /// `|Π(F*)|`, saturating at `usize::MAX`.
    pub fn restricted_policy_count(&self) -> usize {
        self.restricted_actions
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
            .unwrap_or(usize::MAX)
    }

    /// The restricted policy choosing the smallest allowed action in every state.
    pub fn first_policy<T: Scalar>(&self, model: &ModelSpec<T>) -> Result<StationaryPolicy> {
        self.check_model(model)?;
        StationaryPolicy::new(
            model,
            self.restricted_actions.iter().map(|a| a[0]).collect(),
        )
    }

    fn check_model<T: Scalar>(&self, model: &ModelSpec<T>) -> Result<()> {
        if model.fingerprint() == self.fingerprint {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }
}

/// Layers `G_1(g), ..., G_{N_g}(g)` and the absorbing set `F(g)` of one stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyAbsorption {
    pub g_layers: Vec<StateSet>,
    pub n_g: usize,
    pub f_of_g: StateSet,
}

/// Peels layers off `B^c` until a round adds nothing or nothing is left.
///
/// `joins(i, covered, frontier)` decides whether state `i` enters the next layer, given the union
/// of `B` and all earlier layers and the most recent layer alone (`B` in the first round).
fn peel<F>(n: usize, failed: &StateSet, mut joins: F) -> (Vec<StateSet>, StateSet)
where
    F: FnMut(usize, &StateSet, &StateSet) -> bool,
{
    let mut covered = failed.clone();
    let mut frontier = failed.clone();
    let mut remaining = failed.clone();
    remaining.toggle_range(..);
    let mut layers = Vec::new();
    loop {
        let mut layer = StateSet::with_capacity(n);
        for i in remaining.ones() {
            if joins(i, &covered, &frontier) {
                layer.insert(i);
            }
        }
        remaining.difference_with(&layer);
        covered.union_with(&layer);
        let done = layer.is_clear() || remaining.is_clear();
        frontier = layer.clone();
        layers.push(layer);
        if done {
            return (layers, remaining);
        }
    }
}

/// Computes `F*`, `G*`, the layers and the restricted action sets.
pub fn compute_largest_absorbing<T: Scalar>(model: &ModelSpec<T>) -> AbsorbingAnalysis {
    let n = model.n_states();
    let (layers, f_star) = peel(n, model.failed(), |i, covered, _| {
        model
            .actions(StateId(i))
            .iter()
            .all(|&a| ModelSpec::reaches(model.row(StateId(i), a).expect("admissible"), covered))
    });
    let n_star = layers.len();

    let mut g_star = model.survivor_set();
    g_star.difference_with(&f_star);

    // Everything outside F* is B plus all layers, so the allowed actions on F* are exactly those
    // putting no mass outside F*.
    let mut outside = f_star.clone();
    outside.toggle_range(..);
    let restricted_actions = model
        .states()
        .map(|i| {
            if f_star.contains(i.0) {
                model
                    .actions(i)
                    .iter()
                    .copied()
                    .filter(|&a| {
                        !ModelSpec::reaches(model.row(i, a).expect("admissible"), &outside)
                    })
                    .collect()
            } else {
                model.actions(i).to_vec()
            }
        })
        .collect();

    AbsorbingAnalysis {
        layers,
        n_star,
        f_star,
        g_star,
        restricted_actions,
        fingerprint: model.fingerprint(),
    }
}

/// Whether `policy` only uses restricted actions, i.e. whether `F(policy) = F*`.
pub fn membership_test(analysis: &AbsorbingAnalysis, policy: &StationaryPolicy) -> Result<bool> {
    if policy.fingerprint() != analysis.fingerprint {
        return Err(Error::ModelMismatch);
    }
    Ok(analysis
        .f_star
        .ones()
        .all(|i| analysis.restricted_actions[i].contains(&policy.action(StateId(i)))))
}

/// The absorbing set `F(g)` of an arbitrary stationary policy.
pub fn absorbing_set_of_policy<T: Scalar>(
    model: &ModelSpec<T>,
    policy: &StationaryPolicy,
) -> Result<PolicyAbsorption> {
    if policy.fingerprint() != model.fingerprint() {
        return Err(Error::ModelMismatch);
    }
    let (g_layers, f_of_g) = peel(model.n_states(), model.failed(), |i, _, frontier| {
        ModelSpec::reaches(model.policy_row(policy, StateId(i)), frontier)
    });
    Ok(PolicyAbsorption {
        n_g: g_layers.len(),
        g_layers,
        f_of_g,
    })
}

/// Every policy of the restricted class, in lexicographic order of action indices.
pub fn enumerate_restricted_policies<T: Scalar>(
    analysis: &AbsorbingAnalysis,
    model: &ModelSpec<T>,
    cap: usize,
) -> Result<PolicyIter> {
    analysis.check_model(model)?;
    let count = analysis.restricted_policy_count();
    if count > cap {
        let count = if count == usize::MAX {
            "more than usize::MAX".into()
        } else {
            count.to_string()
        };
        return Err(Error::TooManyPolicies { count, cap });
    }
    Ok(PolicyIter::new(
        analysis.restricted_actions.clone(),
        model.fingerprint(),
    ))
}
