//! Controlled Markov systems: states, the failed set, admissible actions and the transition kernel.
//!
//! A model is the tuple `(S, B, A(i), p(.|i,a))`. States and actions are named in files and
//! addressed by dense indices everywhere else. Actions live in one global list; `A(i)` is the
//! sorted list of action indices admissible in state `i`, and the kernel holds one dense row over
//! `S` for every admissible pair.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use fixedbitset::FixedBitSet;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::{ArithmeticMode, Scalar};

/// Allowed deviation of a float-mode kernel row sum from 1.
pub const DEFAULT_ROW_SUM_TOL: f64 = 1e-9;

/// Bitset over dense state indices.
pub type StateSet = FixedBitSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A validated controlled Markov system. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T> {
    state_names: Vec<String>,
    action_names: Vec<String>,
    failed: StateSet,
    actions: Vec<Vec<ActionId>>,
    row_offsets: Vec<usize>,
    rows: Vec<Vec<T>>,
    fingerprint: u64,
}

impl<T: Scalar> ModelSpec<T> {
    pub fn mode(&self) -> ArithmeticMode {
        T::MODE
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    /// Number of admissible state-action pairs, `|K|`.
    pub fn n_pairs(&self) -> usize {
        self.rows.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.n_states()).map(StateId)
    }

    /// States outside the failed set, in index order.
    pub fn survivors(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|i| !self.is_failed(*i))
    }

    pub fn failed(&self) -> &StateSet {
        &self.failed
    }

    pub fn is_failed(&self, i: StateId) -> bool {
        self.failed.contains(i.0)
    }

    /// The complement of the failed set.
    pub fn survivor_set(&self) -> StateSet {
        let mut set = self.failed.clone();
        set.toggle_range(..);
        set
    }

    pub fn actions(&self, i: StateId) -> &[ActionId] {
        &self.actions[i.0]
    }

    pub fn state_name(&self, i: StateId) -> &str {
        &self.state_names[i.0]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.action_names[a.0]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|s| s == name).map(StateId)
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_names
            .iter()
            .position(|s| s == name)
            .map(ActionId)
    }

    /// The kernel row `p(. | i, a)`, or `None` when `a` is not admissible in `i`.
    pub fn row(&self, i: StateId, a: ActionId) -> Option<&[T]> {
        let slot = self.actions[i.0].binary_search(&a).ok()?;
        Some(&self.rows[self.row_offsets[i.0] + slot])
    }

    /// The row selected by `policy` in state `i`.
    pub fn policy_row(&self, policy: &StationaryPolicy, i: StateId) -> &[T] {
        self.row(i, policy.action(i))
            .expect("policy actions are admissible by construction")
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// `p(set | i, a)` for the given row.
    pub fn mass(row: &[T], set: &StateSet) -> T {
        set.ones().fold(T::zero(), |acc, j| acc + row[j].clone())
    }

    /// Whether the row puts strictly positive mass on some state of `set`.
    ///
    /// Stored values are compared against exact zero: structural zeros are zeros.
    pub fn reaches(row: &[T], set: &StateSet) -> bool {
        set.ones().any(|j| row[j] > T::zero())
    }

    /// Converts every probability to `f64`, keeping the structure.
    pub fn to_float(&self) -> ModelSpec<f64> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(Scalar::to_f64).collect())
            .collect();
        ModelSpec::from_parts(
            self.state_names.clone(),
            self.action_names.clone(),
            self.failed.clone(),
            self.actions.clone(),
            rows,
        )
    }

    fn from_parts(
        state_names: Vec<String>,
        action_names: Vec<String>,
        failed: StateSet,
        actions: Vec<Vec<ActionId>>,
        rows: Vec<Vec<T>>,
    ) -> Self {
        let mut row_offsets = Vec::with_capacity(actions.len());
        let mut offset = 0;
        for acts in &actions {
            row_offsets.push(offset);
            offset += acts.len();
        }
        let mut hasher = DefaultHasher::new();
        T::MODE.hash(&mut hasher);
        state_names.hash(&mut hasher);
        action_names.hash(&mut hasher);
        failed.ones().collect::<Vec<_>>().hash(&mut hasher);
        actions.hash(&mut hasher);
        for row in &rows {
            for p in row {
                p.hash_value(&mut hasher);
            }
        }
        let fingerprint = hasher.finish();
        ModelSpec {
            state_names,
            action_names,
            failed,
            actions,
            row_offsets,
            rows,
            fingerprint,
        }
    }

    /// Serializes back into the file representation. Zero entries are omitted.
    pub fn to_raw(&self) -> RawModel {
        let mut actions = BTreeMap::new();
        let mut transitions = BTreeMap::new();
        for i in self.states() {
            let names: Vec<String> = self
                .actions(i)
                .iter()
                .map(|a| self.action_name(*a).to_string())
                .collect();
            for &a in self.actions(i) {
                let row = self.row(i, a).expect("admissible");
                let entries = row
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(j, p)| (self.state_names[j].clone(), scalar_to_json(p)))
                    .collect();
                transitions.insert(
                    format!("{}|{}", self.state_name(i), self.action_name(a)),
                    entries,
                );
            }
            actions.insert(self.state_name(i).to_string(), names);
        }
        RawModel {
            description: None,
            states: self.state_names.clone(),
            failed: self
                .failed
                .ones()
                .map(|j| self.state_names[j].clone())
                .collect(),
            actions,
            transitions,
            arithmetic: Some(T::MODE),
        }
    }
}

fn scalar_to_json<T: Scalar>(p: &T) -> Value {
    match T::MODE {
        ArithmeticMode::Float => serde_json::Number::from_f64(p.to_f64())
            .map(Value::Number)
            .unwrap_or(Value::Null),
        ArithmeticMode::Exact => Value::String(p.render()),
    }
}

/// A kernel row by names: state, action and the targets with their probabilities.
type NamedRow<T> = (String, String, Vec<(String, T)>);

/// Incremental construction of a [`ModelSpec`] by name.
///
/// Each call to [`ModelBuilder::action`] declares an admissible action and its kernel row;
/// omitted targets have probability zero.
#[derive(Debug, Clone)]
pub struct ModelBuilder<T> {
    states: Vec<String>,
    failed: Vec<String>,
    declared: Vec<(String, String)>,
    rows: Vec<NamedRow<T>>,
}

impl<T: Scalar> ModelBuilder<T> {
    pub fn new<I, S>(states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ModelBuilder {
            states: states.into_iter().map(Into::into).collect(),
            failed: Vec::new(),
            declared: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn failed(mut self, state: impl Into<String>) -> Self {
        self.failed.push(state.into());
        self
    }

    pub fn action<S: Into<String>>(
        mut self,
        state: impl Into<String>,
        action: impl Into<String>,
        row: impl IntoIterator<Item = (S, T)>,
    ) -> Self {
        let state = state.into();
        let action = action.into();
        self.declared.push((state.clone(), action.clone()));
        let row = row.into_iter().map(|(s, p)| (s.into(), p)).collect();
        self.rows.push((state, action, row));
        self
    }

    pub fn build(self) -> Result<ModelSpec<T>> {
        self.build_with_tol(DEFAULT_ROW_SUM_TOL)
    }

    pub fn build_with_tol(self, row_sum_tol: f64) -> Result<ModelSpec<T>> {
        let mut per_state: Vec<Vec<String>> = vec![Vec::new(); self.states.len()];
        let index: HashMap<&str, usize> = self
            .states
            .iter()
            .enumerate()
            .map(|(k, s)| (s.as_str(), k))
            .collect();
        for (state, action) in &self.declared {
            let k = *index
                .get(state.as_str())
                .ok_or_else(|| Error::UnknownStateOrAction(format!("state `{state}`")))?;
            if per_state[k].contains(action) {
                return Err(Error::DuplicateName(format!("{state}|{action}")));
            }
            per_state[k].push(action.clone());
        }
        assemble(self.states, self.failed, per_state, self.rows, row_sum_tol)
    }
}

/// Shared validation path for builders and parsed files.
fn assemble<T: Scalar>(
    states: Vec<String>,
    failed: Vec<String>,
    declared: Vec<Vec<String>>,
    rows: Vec<NamedRow<T>>,
    row_sum_tol: f64,
) -> Result<ModelSpec<T>> {
    let n = states.len();
    let mut state_index = HashMap::with_capacity(n);
    for (k, name) in states.iter().enumerate() {
        check_name(name)?;
        if state_index.insert(name.as_str(), k).is_some() {
            return Err(Error::DuplicateName(name.clone()));
        }
    }
    let lookup_state = |name: &str| {
        state_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownStateOrAction(format!("state `{name}`")))
    };

    let mut failed_set = StateSet::with_capacity(n);
    for name in &failed {
        failed_set.insert(lookup_state(name)?);
    }
    if failed_set.is_clear() {
        return Err(Error::EmptyFailureSet);
    }
    if failed_set.count_ones(..) == n {
        return Err(Error::FailureSetIsAllStates);
    }

    // Global action list in order of first appearance.
    let mut action_names: Vec<String> = Vec::new();
    let mut action_index: HashMap<String, usize> = HashMap::new();
    let mut actions: Vec<Vec<ActionId>> = Vec::with_capacity(n);
    for (k, names) in declared.iter().enumerate() {
        if names.is_empty() {
            return Err(Error::EmptyActionSet(states[k].clone()));
        }
        let mut ids = Vec::with_capacity(names.len());
        let mut seen = HashSet::new();
        for name in names {
            check_name(name)?;
            if !seen.insert(name) {
                return Err(Error::DuplicateName(format!("{}|{}", states[k], name)));
            }
            let id = *action_index.entry(name.clone()).or_insert_with(|| {
                action_names.push(name.clone());
                action_names.len() - 1
            });
            ids.push(ActionId(id));
        }
        ids.sort();
        actions.push(ids);
    }

    let mut table: HashMap<(usize, ActionId), Vec<T>> = HashMap::with_capacity(rows.len());
    for (state, action, entries) in rows {
        let i = lookup_state(&state)?;
        let a = action_index
            .get(&action)
            .map(|&id| ActionId(id))
            .filter(|a| actions[i].contains(a))
            .ok_or_else(|| {
                Error::UnknownStateOrAction(format!(
                    "action `{action}` is not admissible in `{state}`"
                ))
            })?;
        let mut row = vec![T::zero(); n];
        let mut seen = HashSet::new();
        for (target, p) in entries {
            let j = lookup_state(&target)?;
            if !seen.insert(j) {
                return Err(Error::DuplicateName(format!(
                    "{state}|{action} -> {target}"
                )));
            }
            if p < T::zero() {
                return Err(Error::NegativeProbability {
                    state,
                    action,
                    target,
                });
            }
            row[j] = p;
        }
        let sum = row.iter().fold(T::zero(), |acc, p| acc + p.clone());
        if (sum.clone() - T::one()).abs() > T::tolerance(row_sum_tol) {
            return Err(Error::BadRowSum {
                state,
                action,
                sum: sum.render(),
            });
        }
        if table.insert((i, a), row).is_some() {
            return Err(Error::DuplicateName(format!("{state}|{action}")));
        }
    }

    let mut kernel = Vec::with_capacity(table.len());
    for (i, acts) in actions.iter().enumerate() {
        for &a in acts {
            let row = table.remove(&(i, a)).ok_or_else(|| Error::MissingRow {
                state: states[i].clone(),
                action: action_names[a.0].clone(),
            })?;
            kernel.push(row);
        }
    }

    Ok(ModelSpec::from_parts(
        states,
        action_names,
        failed_set,
        actions,
        kernel,
    ))
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains('|') {
        Err(Error::InvalidName(name.to_string()))
    } else {
        Ok(())
    }
}

/// The on-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: Vec<String>,
    pub failed: Vec<String>,
    pub actions: BTreeMap<String, Vec<String>>,
    /// `"state|action"` to a sparse row of target state to probability.
    pub transitions: BTreeMap<String, BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<ArithmeticMode>,
}

impl RawModel {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }

    pub fn mode(&self) -> ArithmeticMode {
        self.arithmetic.unwrap_or_default()
    }
}

/// Validates a parsed model document into a [`ModelSpec`] over the scalar type `T`.
///
/// Rows are not renormalized; float rows must sum to 1 within `row_sum_tol`, exact rows exactly.
pub fn validate_model<T: Scalar>(raw: &RawModel, row_sum_tol: f64) -> Result<ModelSpec<T>> {
    for state in raw.actions.keys() {
        if !raw.states.contains(state) {
            return Err(Error::UnknownStateOrAction(format!(
                "state `{state}` in actions"
            )));
        }
    }
    let declared = raw
        .states
        .iter()
        .map(|s| raw.actions.get(s).cloned().unwrap_or_default())
        .collect();
    let mut rows = Vec::with_capacity(raw.transitions.len());
    for (key, entries) in &raw.transitions {
        let (state, action) = key.split_once('|').ok_or_else(|| {
            Error::UnknownStateOrAction(format!("transition key `{key}` is not `state|action`"))
        })?;
        let mut row = Vec::with_capacity(entries.len());
        for (target, value) in entries {
            let text = match value {
                Value::Number(n) => n.to_string(),
                Value::String(s) => s.clone(),
                other => return Err(Error::BadProbability(other.to_string())),
            };
            let p = T::parse_literal(&text).ok_or(Error::BadProbability(text))?;
            row.push((target.clone(), p));
        }
        rows.push((state.to_string(), action.to_string(), row));
    }
    assemble(
        raw.states.clone(),
        raw.failed.clone(),
        declared,
        rows,
        row_sum_tol,
    )
}

/// A model in whichever arithmetic mode its document selected.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Float(ModelSpec<f64>),
    Exact(ModelSpec<BigRational>),
}

impl AnyModel {
    /// Validates `raw` in its declared mode, or in exact mode when `force_exact` is set.
    pub fn from_raw(raw: &RawModel, force_exact: bool, row_sum_tol: f64) -> Result<Self> {
        if force_exact || raw.mode() == ArithmeticMode::Exact {
            validate_model(raw, row_sum_tol).map(AnyModel::Exact)
        } else {
            validate_model(raw, row_sum_tol).map(AnyModel::Float)
        }
    }
}

/// A deterministic stationary policy: one admissible action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StationaryPolicy {
    choice: Vec<ActionId>,
    fingerprint: u64,
}

impl StationaryPolicy {
    pub fn new<T: Scalar>(model: &ModelSpec<T>, choice: Vec<ActionId>) -> Result<Self> {
        if choice.len() != model.n_states() {
            return Err(Error::InvalidPolicy(format!(
                "{} choices for {} states",
                choice.len(),
                model.n_states()
            )));
        }
        for (i, a) in choice.iter().enumerate() {
            if model.actions(StateId(i)).binary_search(a).is_err() {
                return Err(Error::InvalidPolicy(format!(
                    "action {a} is not admissible in `{}`",
                    model.state_name(StateId(i))
                )));
            }
        }
        Ok(StationaryPolicy {
            choice,
            fingerprint: model.fingerprint(),
        })
    }

    /// The policy choosing the smallest admissible action everywhere.
    pub fn first<T: Scalar>(model: &ModelSpec<T>) -> Self {
        StationaryPolicy {
            choice: model.states().map(|i| model.actions(i)[0]).collect(),
            fingerprint: model.fingerprint(),
        }
    }

    /// Builds a policy from state-name to action-name pairs.
    ///
    /// States may be omitted when they are failed or have a single admissible action; they then
    /// take their smallest admissible action.
    pub fn from_names<T: Scalar>(
        model: &ModelSpec<T>,
        names: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut choice: Vec<Option<ActionId>> = vec![None; model.n_states()];
        for (state, action) in names {
            let i = model
                .state_id(state)
                .ok_or_else(|| Error::UnknownStateOrAction(format!("state `{state}`")))?;
            let a = model
                .action_id(action)
                .filter(|a| model.actions(i).contains(a))
                .ok_or_else(|| {
                    Error::UnknownStateOrAction(format!(
                        "action `{action}` is not admissible in `{state}`"
                    ))
                })?;
            choice[i.0] = Some(a);
        }
        let choice = model
            .states()
            .map(|i| match choice[i.0] {
                Some(a) => Ok(a),
                None if model.is_failed(i) || model.actions(i).len() == 1 => {
                    Ok(model.actions(i)[0])
                }
                None => Err(Error::InvalidPolicy(format!(
                    "no action given for `{}`",
                    model.state_name(i)
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        StationaryPolicy::new(model, choice)
    }

    pub fn action(&self, i: StateId) -> ActionId {
        self.choice[i.0]
    }

    pub fn choices(&self) -> &[ActionId] {
        &self.choice
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Returns a copy with `i` switched to `a`. `a` must be admissible in `i`.
    pub(crate) fn with_action(&self, i: StateId, a: ActionId) -> Self {
        let mut next = self.clone();
        next.choice[i.0] = a;
        next
    }

    pub fn to_names<T: Scalar>(&self, model: &ModelSpec<T>) -> Vec<(String, String)> {
        model
            .states()
            .map(|i| {
                (
                    model.state_name(i).to_string(),
                    model.action_name(self.action(i)).to_string(),
                )
            })
            .collect()
    }
}

/// `|Π|`, the number of deterministic stationary policies, `∏ |A(i)|`.
pub fn policy_space_size<T: Scalar>(model: &ModelSpec<T>) -> Result<usize> {
    model
        .states()
        .try_fold(1usize, |acc, i| acc.checked_mul(model.actions(i).len()))
        .ok_or(Error::Overflow)
}

/// Odometer over a Cartesian product of per-state action sets.
///
/// Yields policies in lexicographic order of action indices, state 0 most significant.
#[derive(Debug, Clone)]
pub struct PolicyIter {
    options: Vec<Vec<ActionId>>,
    cursor: Option<Vec<usize>>,
    fingerprint: u64,
}

impl PolicyIter {
    pub(crate) fn new(options: Vec<Vec<ActionId>>, fingerprint: u64) -> Self {
        let cursor = if options.iter().all(|o| !o.is_empty()) {
            Some(vec![0; options.len()])
        } else {
            None
        };
        PolicyIter {
            options,
            cursor,
            fingerprint,
        }
    }

    /// Every stationary policy of `model`, refusing when there are more than `cap`.
    pub fn all<T: Scalar>(model: &ModelSpec<T>, cap: usize) -> Result<Self> {
        let count = policy_space_size(model).map_err(|_| Error::TooManyPolicies {
            count: "more than usize::MAX".into(),
            cap,
        })?;
        if count > cap {
            return Err(Error::TooManyPolicies {
                count: count.to_string(),
                cap,
            });
        }
        let options = model.states().map(|i| model.actions(i).to_vec()).collect();
        Ok(PolicyIter::new(options, model.fingerprint()))
    }
}

impl Iterator for PolicyIter {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<StationaryPolicy> {
        let cursor = self.cursor.as_mut()?;
        let policy = StationaryPolicy {
            choice: cursor
                .iter()
                .zip(&self.options)
                .map(|(&k, opts)| opts[k])
                .collect(),
            fingerprint: self.fingerprint,
        };
        let mut pos = cursor.len();
        loop {
            if pos == 0 {
                self.cursor = None;
                break;
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < self.options[pos].len() {
                break;
            }
            cursor[pos] = 0;
        }
        Some(policy)
    }
}
