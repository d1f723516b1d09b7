//! Resource-bounded concurrent game structures.
//!
//! A [`Model`] holds a finite set of agents, resource types, states and
//! actions, a per-agent availability function, a partial cost function
//! mapping `(state, agent, action)` to a resource vector, and a deterministic
//! outcome function over joint actions. Models are immutable once built;
//! construction goes through [`ModelBuilder`], which resolves names and
//! reports every violated constraint instead of stopping at the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Index of an agent within a model, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(usize);

/// Index of a state within a model, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(usize);

/// Index of an action in the global action catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(usize);

/// Index of a resource type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(usize);

macro_rules! id_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn new(index: usize) -> Self {
                Self(index)
            }

            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_impls!(AgentId);
id_impls!(StateId);
id_impls!(ActionId);
id_impls!(ResourceId);

/// Fixed-length vector of non-negative resource quantities, one entry per
/// declared resource type.
///
/// The derived `Ord` is lexicographic and exists so vectors can key ordered
/// maps; the semantic comparison is the componentwise [`fits_within`].
///
/// [`fits_within`]: ResourceVector::fits_within
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceVector(Vec<u64>);

impl ResourceVector {
    pub fn new(quantities: Vec<u64>) -> Self {
        Self(quantities)
    }

    pub fn zero(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, resource: ResourceId) -> u64 {
        self.0[resource.index()]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&q| q == 0)
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    /// Componentwise `self <= bound`.
    pub fn fits_within(&self, bound: &ResourceVector) -> bool {
        debug_assert_eq!(self.len(), bound.len());
        self.0.iter().zip(&bound.0).all(|(a, b)| a <= b)
    }

    /// Index of the first component where `self` exceeds `bound`, if any.
    pub fn first_excess(&self, bound: &ResourceVector) -> Option<ResourceId> {
        self.0
            .iter()
            .zip(&bound.0)
            .position(|(a, b)| a > b)
            .map(ResourceId)
    }

    pub fn add_assign(&mut self, other: &ResourceVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn plus(&self, other: &ResourceVector) -> ResourceVector {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    /// Componentwise difference; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &ResourceVector) -> Option<ResourceVector> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<u64>>>()
            .map(ResourceVector)
    }

    pub fn bump(&mut self, resource: ResourceId, amount: u64) {
        self.0[resource.index()] += amount;
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "]")
    }
}

/// One action per agent, in agent-index order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointAction(Vec<ActionId>);

impl JointAction {
    pub fn new(choices: Vec<ActionId>) -> Self {
        Self(choices)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn choice(&self, agent: AgentId) -> ActionId {
        self.0[agent.index()]
    }

    pub fn choices(&self) -> &[ActionId] {
        &self.0
    }
}

/// Errors raised by model validation and by single-step semantic queries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model declares no agents")]
    NoAgents,
    #[error("model declares no states")]
    NoStates,
    #[error("model declares no actions")]
    NoActions,
    #[error("no state is marked initial")]
    NoInitialState,
    #[error("duplicate {kind} `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("agent `{agent}` has no available action at state `{state}`")]
    EmptyAvailability { state: String, agent: String },
    #[error("availability of `{agent}` at `{state}` declared more than once")]
    DuplicateAvailability { state: String, agent: String },
    #[error("no outcome declared at state `{state}` for joint action ({joint})")]
    MissingOutcome { state: String, joint: String },
    #[error("outcome at state `{state}` for ({joint}) declared more than once")]
    DuplicateOutcome { state: String, joint: String },
    #[error("outcome at state `{state}` for ({joint}) targets undeclared state `{target}`")]
    DanglingTarget {
        state: String,
        joint: String,
        target: String,
    },
    #[error("outcome at state `{state}` uses action `{action}` not available to `{agent}`")]
    OutcomeOutsideAvailability {
        state: String,
        agent: String,
        action: String,
    },
    #[error("cost declared at `{state}` for `{agent}`/`{action}` outside its availability")]
    CostOutsideAvailability {
        state: String,
        agent: String,
        action: String,
    },
    #[error(
        "cost vector for `{state}`/`{agent}`/`{action}` has {got} entries, expected {expected}"
    )]
    CostArityMismatch {
        state: String,
        agent: String,
        action: String,
        expected: usize,
        got: usize,
    },
    #[error("cost for `{state}`/`{agent}`/`{action}` declared more than once")]
    DuplicateCost {
        state: String,
        agent: String,
        action: String,
    },
    #[error("restricted state `{state}` declares no legal joint action")]
    EmptyRestriction { state: String },
    #[error("action `{action}` of `{agent}` at restricted state `{state}` occurs in no legal joint action")]
    UnusedAvailability {
        state: String,
        agent: String,
        action: String,
    },
    #[error("unknown state id {0}")]
    UnknownState(usize),
    #[error("joint action has arity {got}, model has {expected} agents")]
    ArityMismatch { expected: usize, got: usize },
    #[error("action `{action}` is not available to `{agent}` at `{state}`")]
    IllegalAction {
        state: String,
        agent: String,
        action: String,
    },
    #[error("joint action ({joint}) is not legal at `{state}`")]
    IllegalJointAction { state: String, joint: String },
}

/// Non-fatal observations from validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelWarning {
    /// No cost entry for an available action; it defaults to the zero vector.
    UndeclaredCost {
        state: String,
        agent: String,
        action: String,
    },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::UndeclaredCost {
                state,
                agent,
                action,
            } => write!(
                f,
                "no cost declared for `{state}`/`{agent}`/`{action}`; defaulting to zero"
            ),
        }
    }
}

/// Everything that went wrong while validating a candidate model.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<ModelError>,
    pub warnings: Vec<ModelWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct AvailEntry {
    state: String,
    agent: String,
    actions: Vec<String>,
}

#[derive(Debug, Clone)]
struct CostEntry {
    state: String,
    agent: String,
    action: String,
    vector: Vec<u64>,
}

#[derive(Debug, Clone)]
struct OutcomeEntry {
    state: String,
    joint: Vec<String>,
    target: String,
}

/// Accumulates a raw model description and validates it into a [`Model`].
///
/// All entry methods take names; nothing is resolved until [`build`], which
/// reports every violated constraint at once.
///
/// [`build`]: ModelBuilder::build
#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    agents: Vec<String>,
    resources: Vec<String>,
    states: Vec<(String, bool)>,
    actions: Vec<String>,
    avail: Vec<AvailEntry>,
    costs: Vec<CostEntry>,
    outcomes: Vec<OutcomeEntry>,
    restricted: Vec<String>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn agent(&mut self, name: &str) -> &mut Self {
        self.agents.push(name.to_string());
        self
    }

    pub fn resource(&mut self, name: &str) -> &mut Self {
        self.resources.push(name.to_string());
        self
    }

    pub fn state(&mut self, name: &str, initial: bool) -> &mut Self {
        self.states.push((name.to_string(), initial));
        self
    }

    pub fn action(&mut self, name: &str) -> &mut Self {
        self.actions.push(name.to_string());
        self
    }

    pub fn avail<'a>(
        &mut self,
        state: &str,
        agent: &str,
        actions: impl IntoIterator<Item = &'a str>,
    ) -> &mut Self {
        self.avail.push(AvailEntry {
            state: state.to_string(),
            agent: agent.to_string(),
            actions: actions.into_iter().map(str::to_string).collect(),
        });
        self
    }

    pub fn cost(
        &mut self,
        state: &str,
        agent: &str,
        action: &str,
        vector: impl IntoIterator<Item = u64>,
    ) -> &mut Self {
        self.costs.push(CostEntry {
            state: state.to_string(),
            agent: agent.to_string(),
            action: action.to_string(),
            vector: vector.into_iter().collect(),
        });
        self
    }

    pub fn outcome<'a>(
        &mut self,
        state: &str,
        joint: impl IntoIterator<Item = &'a str>,
        target: &str,
    ) -> &mut Self {
        self.outcomes.push(OutcomeEntry {
            state: state.to_string(),
            joint: joint.into_iter().map(str::to_string).collect(),
            target: target.to_string(),
        });
        self
    }

    /// Marks a state as having an explicit legal joint-action set: only the
    /// joint actions with a declared outcome are playable there. Used by the
    /// regimentation transform, whose joint-action bans are not always
    /// expressible agent by agent.
    pub fn restrict(&mut self, state: &str) -> &mut Self {
        self.restricted.push(state.to_string());
        self
    }

    /// Validates the accumulated description. On success the warnings list
    /// the cost entries that defaulted to zero.
    pub fn build(&self) -> Result<(Model, Vec<ModelWarning>), ValidationReport> {
        let mut report = ValidationReport::default();

        if self.agents.is_empty() {
            report.errors.push(ModelError::NoAgents);
        }
        if self.states.is_empty() {
            report.errors.push(ModelError::NoStates);
        }
        if self.actions.is_empty() {
            report.errors.push(ModelError::NoActions);
        }

        let agent_ix = intern("agent", &self.agents, &mut report);
        // Resources are referenced by index only; interning just checks for
        // duplicate names.
        intern("resource", &self.resources, &mut report);
        let state_names: Vec<String> = self.states.iter().map(|(n, _)| n.clone()).collect();
        let state_ix = intern("state", &state_names, &mut report);
        let action_ix = intern("action", &self.actions, &mut report);

        let initial: Vec<StateId> = self
            .states
            .iter()
            .enumerate()
            .filter(|(_, (_, init))| *init)
            .map(|(i, _)| StateId(i))
            .collect();
        if initial.is_empty() && !self.states.is_empty() {
            report.errors.push(ModelError::NoInitialState);
        }

        if !report.errors.is_empty() {
            // Identifier-level problems make the rest unreliable; stop here.
            return Err(report);
        }

        let n_agents = self.agents.len();
        let n_states = self.states.len();
        let n_resources = self.resources.len();

        // Availability: d(q, a) must be declared non-empty for every pair.
        let mut availability: Vec<Vec<Vec<ActionId>>> = vec![vec![Vec::new(); n_agents]; n_states];
        let mut avail_seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        for entry in &self.avail {
            let (Some(&q), Some(&a)) = (state_ix.get(&entry.state), agent_ix.get(&entry.agent))
            else {
                push_unknowns(&entry.state, &state_ix, "state", &mut report);
                push_unknowns(&entry.agent, &agent_ix, "agent", &mut report);
                continue;
            };
            if !avail_seen.insert((q, a)) {
                report.errors.push(ModelError::DuplicateAvailability {
                    state: entry.state.clone(),
                    agent: entry.agent.clone(),
                });
                continue;
            }
            let mut set = BTreeSet::new();
            for act in &entry.actions {
                match action_ix.get(act) {
                    Some(&id) => {
                        set.insert(ActionId(id));
                    }
                    None => report.errors.push(ModelError::UnknownName {
                        kind: "action",
                        name: act.clone(),
                    }),
                }
            }
            availability[q][a] = set.into_iter().collect();
        }
        for (q, per_agent) in availability.iter().enumerate() {
            for (a, set) in per_agent.iter().enumerate() {
                if set.is_empty() {
                    report.errors.push(ModelError::EmptyAvailability {
                        state: state_names[q].clone(),
                        agent: self.agents[a].clone(),
                    });
                }
            }
        }

        // Costs: inside availability, correct arity, declared once.
        let mut costs: BTreeMap<(StateId, AgentId, ActionId), ResourceVector> = BTreeMap::new();
        for entry in &self.costs {
            let (Some(&q), Some(&a), Some(&act)) = (
                state_ix.get(&entry.state),
                agent_ix.get(&entry.agent),
                action_ix.get(&entry.action),
            ) else {
                push_unknowns(&entry.state, &state_ix, "state", &mut report);
                push_unknowns(&entry.agent, &agent_ix, "agent", &mut report);
                push_unknowns(&entry.action, &action_ix, "action", &mut report);
                continue;
            };
            if entry.vector.len() != n_resources {
                report.errors.push(ModelError::CostArityMismatch {
                    state: entry.state.clone(),
                    agent: entry.agent.clone(),
                    action: entry.action.clone(),
                    expected: n_resources,
                    got: entry.vector.len(),
                });
                continue;
            }
            if !availability[q][a].contains(&ActionId(act)) {
                report.errors.push(ModelError::CostOutsideAvailability {
                    state: entry.state.clone(),
                    agent: entry.agent.clone(),
                    action: entry.action.clone(),
                });
                continue;
            }
            let key = (StateId(q), AgentId(a), ActionId(act));
            if costs
                .insert(key, ResourceVector::new(entry.vector.clone()))
                .is_some()
            {
                report.errors.push(ModelError::DuplicateCost {
                    state: entry.state.clone(),
                    agent: entry.agent.clone(),
                    action: entry.action.clone(),
                });
            }
        }

        // Outcomes: collect declared entries, then check totality per state.
        let restricted_set: BTreeSet<usize> = self
            .restricted
            .iter()
            .filter_map(|name| {
                let found = state_ix.get(name).copied();
                if found.is_none() {
                    report.errors.push(ModelError::UnknownName {
                        kind: "state",
                        name: name.clone(),
                    });
                }
                found
            })
            .collect();

        let mut declared: Vec<BTreeMap<JointAction, StateId>> = vec![BTreeMap::new(); n_states];
        for entry in &self.outcomes {
            let Some(&q) = state_ix.get(&entry.state) else {
                report.errors.push(ModelError::UnknownName {
                    kind: "state",
                    name: entry.state.clone(),
                });
                continue;
            };
            if entry.joint.len() != n_agents {
                report.errors.push(ModelError::ArityMismatch {
                    expected: n_agents,
                    got: entry.joint.len(),
                });
                continue;
            }
            let mut choices = Vec::with_capacity(n_agents);
            let mut ok = true;
            for (a, act_name) in entry.joint.iter().enumerate() {
                let Some(&act) = action_ix.get(act_name) else {
                    report.errors.push(ModelError::UnknownName {
                        kind: "action",
                        name: act_name.clone(),
                    });
                    ok = false;
                    continue;
                };
                if !availability[q][a].contains(&ActionId(act)) {
                    report.errors.push(ModelError::OutcomeOutsideAvailability {
                        state: entry.state.clone(),
                        agent: self.agents[a].clone(),
                        action: act_name.clone(),
                    });
                    ok = false;
                }
                choices.push(ActionId(act));
            }
            if !ok {
                continue;
            }
            let target = match state_ix.get(&entry.target) {
                Some(&t) => StateId(t),
                None => {
                    report.errors.push(ModelError::DanglingTarget {
                        state: entry.state.clone(),
                        joint: entry.joint.join(","),
                        target: entry.target.clone(),
                    });
                    continue;
                }
            };
            let joint = JointAction::new(choices);
            if declared[q].insert(joint, target).is_some() {
                report.errors.push(ModelError::DuplicateOutcome {
                    state: entry.state.clone(),
                    joint: entry.joint.join(","),
                });
            }
        }

        let mut legal: Vec<Vec<JointAction>> = Vec::with_capacity(n_states);
        let mut outcomes: Vec<Vec<StateId>> = Vec::with_capacity(n_states);
        let mut restricted_flags: Vec<bool> = Vec::with_capacity(n_states);
        for q in 0..n_states {
            if restricted_set.contains(&q) {
                // Legal set is exactly the declared entries; every available
                // action must still occur in some legal joint action.
                if declared[q].is_empty() {
                    report.errors.push(ModelError::EmptyRestriction {
                        state: state_names[q].clone(),
                    });
                }
                for (a, set) in availability[q].iter().enumerate() {
                    for &act in set {
                        let used = declared[q].keys().any(|j| j.choice(AgentId(a)) == act);
                        if !used {
                            report.errors.push(ModelError::UnusedAvailability {
                                state: state_names[q].clone(),
                                agent: self.agents[a].clone(),
                                action: self.actions[act.index()].clone(),
                            });
                        }
                    }
                }
                let (l, o): (Vec<_>, Vec<_>) =
                    declared[q].iter().map(|(j, t)| (j.clone(), *t)).unzip();
                legal.push(l);
                outcomes.push(o);
                restricted_flags.push(true);
            } else {
                // Unrestricted: outcome must be total on the product of the
                // availability sets.
                let mut l = Vec::new();
                let mut o = Vec::new();
                for joint in product_of(&availability[q]) {
                    match declared[q].get(&joint) {
                        Some(&t) => {
                            l.push(joint);
                            o.push(t);
                        }
                        None => {
                            report.errors.push(ModelError::MissingOutcome {
                                state: state_names[q].clone(),
                                joint: render_joint(&joint, &self.actions),
                            });
                        }
                    }
                }
                legal.push(l);
                outcomes.push(o);
                restricted_flags.push(false);
            }
        }

        let mut warnings = Vec::new();
        for q in 0..n_states {
            for (a, actions) in availability[q].iter().enumerate() {
                for &act in actions {
                    if !costs.contains_key(&(StateId(q), AgentId(a), act)) {
                        warnings.push(ModelWarning::UndeclaredCost {
                            state: state_names[q].clone(),
                            agent: self.agents[a].clone(),
                            action: self.actions[act.index()].clone(),
                        });
                    }
                }
            }
        }

        if !report.errors.is_empty() {
            report.warnings = warnings;
            return Err(report);
        }

        let model = Model {
            agent_names: self.agents.clone(),
            resource_names: self.resources.clone(),
            state_names,
            action_names: self.actions.clone(),
            availability,
            legal,
            outcomes,
            restricted: restricted_flags,
            costs,
            initial,
        };
        debug_assert!(model.verify_invariants().is_empty());
        Ok((model, warnings))
    }
}

fn intern(
    kind: &'static str,
    names: &[String],
    report: &mut ValidationReport,
) -> BTreeMap<String, usize> {
    let mut map = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        if map.insert(name.clone(), i).is_some() {
            report.errors.push(ModelError::DuplicateName {
                kind,
                name: name.clone(),
            });
        }
    }
    map
}

fn push_unknowns(
    name: &str,
    ix: &BTreeMap<String, usize>,
    kind: &'static str,
    report: &mut ValidationReport,
) {
    if !ix.contains_key(name) {
        report.errors.push(ModelError::UnknownName {
            kind,
            name: name.to_string(),
        });
    }
}

fn render_joint(joint: &JointAction, action_names: &[String]) -> String {
    joint
        .choices()
        .iter()
        .map(|a| match action_names.get(a.index()) {
            Some(name) => name.clone(),
            None => format!("#{}", a.index()),
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn product_of(per_agent: &[Vec<ActionId>]) -> Vec<JointAction> {
    let mut out = vec![Vec::new()];
    for set in per_agent {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for prefix in &out {
            for &act in set {
                let mut choice = prefix.clone();
                choice.push(act);
                next.push(choice);
            }
        }
        out = next;
    }
    out.into_iter().map(JointAction::new).collect()
}

/// A validated resource-bounded concurrent game structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    agent_names: Vec<String>,
    resource_names: Vec<String>,
    state_names: Vec<String>,
    action_names: Vec<String>,
    /// `[state][agent]` -> sorted available actions (always non-empty).
    availability: Vec<Vec<Vec<ActionId>>>,
    /// `[state]` -> sorted legal joint actions. Equals the full product of
    /// the availability sets unless the state is restricted.
    legal: Vec<Vec<JointAction>>,
    /// Aligned with `legal`.
    outcomes: Vec<Vec<StateId>>,
    restricted: Vec<bool>,
    costs: BTreeMap<(StateId, AgentId, ActionId), ResourceVector>,
    initial: Vec<StateId>,
}

impl Model {
    pub fn agent_count(&self) -> usize {
        self.agent_names.len()
    }

    pub fn resource_count(&self) -> usize {
        self.resource_names.len()
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn action_count(&self) -> usize {
        self.action_names.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agent_count()).map(AgentId)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_count()).map(StateId)
    }

    pub fn resources(&self) -> impl Iterator<Item = ResourceId> {
        (0..self.resource_count()).map(ResourceId)
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agent_names[a.index()]
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q.index()]
    }

    pub fn action_name(&self, act: ActionId) -> &str {
        &self.action_names[act.index()]
    }

    pub fn resource_name(&self, r: ResourceId) -> &str {
        &self.resource_names[r.index()]
    }

    pub fn agent(&self, name: &str) -> Option<AgentId> {
        self.agent_names.iter().position(|n| n == name).map(AgentId)
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|n| n == name).map(StateId)
    }

    pub fn action(&self, name: &str) -> Option<ActionId> {
        self.action_names
            .iter()
            .position(|n| n == name)
            .map(ActionId)
    }

    pub fn resource(&self, name: &str) -> Option<ResourceId> {
        self.resource_names
            .iter()
            .position(|n| n == name)
            .map(ResourceId)
    }

    pub fn initial_states(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_restricted(&self, q: StateId) -> bool {
        self.restricted[q.index()]
    }

    /// Available actions of `agent` at `q` (the `d` function).
    pub fn available(&self, q: StateId, agent: AgentId) -> &[ActionId] {
        &self.availability[q.index()][agent.index()]
    }

    fn check_state(&self, q: StateId) -> Result<(), ModelError> {
        if q.index() < self.state_count() {
            Ok(())
        } else {
            Err(ModelError::UnknownState(q.index()))
        }
    }

    /// All legal joint actions at `q`, sorted by action indices.
    pub fn joint_actions(&self, q: StateId) -> Result<&[JointAction], ModelError> {
        self.check_state(q)?;
        Ok(&self.legal[q.index()])
    }

    fn legal_rank(&self, q: StateId, joint: &JointAction) -> Result<usize, ModelError> {
        self.check_state(q)?;
        if joint.arity() != self.agent_count() {
            return Err(ModelError::ArityMismatch {
                expected: self.agent_count(),
                got: joint.arity(),
            });
        }
        self.legal[q.index()]
            .binary_search(joint)
            .map_err(|_| ModelError::IllegalJointAction {
                state: self.state_name(q).to_string(),
                joint: render_joint(joint, &self.action_names),
            })
    }

    /// The deterministic outcome `o(q, joint)`.
    pub fn step(&self, q: StateId, joint: &JointAction) -> Result<StateId, ModelError> {
        let rank = self.legal_rank(q, joint)?;
        Ok(self.outcomes[q.index()][rank])
    }

    /// Cost vector of `agent` playing `action` at `q`; the zero vector when
    /// no cost was declared.
    pub fn action_cost(
        &self,
        q: StateId,
        agent: AgentId,
        action: ActionId,
    ) -> Result<ResourceVector, ModelError> {
        self.check_state(q)?;
        if !self.availability[q.index()][agent.index()].contains(&action) {
            return Err(ModelError::IllegalAction {
                state: self.state_name(q).to_string(),
                agent: self.agent_name(agent).to_string(),
                action: self.action_name(action).to_string(),
            });
        }
        Ok(self
            .costs
            .get(&(q, agent, action))
            .cloned()
            .unwrap_or_else(|| ResourceVector::zero(self.resource_count())))
    }

    /// The declared cost entry, if any. Distinguishes an explicit zero vector
    /// from an entry defaulted by partiality.
    pub fn declared_cost(
        &self,
        q: StateId,
        agent: AgentId,
        action: ActionId,
    ) -> Option<&ResourceVector> {
        self.costs.get(&(q, agent, action))
    }

    pub fn declared_costs(
        &self,
    ) -> impl Iterator<Item = (StateId, AgentId, ActionId, &ResourceVector)> {
        self.costs.iter().map(|((q, a, act), v)| (*q, *a, *act, v))
    }

    /// Summed cost of a joint action over the given group of agents.
    pub fn joint_cost(
        &self,
        q: StateId,
        joint: &JointAction,
        group: &BTreeSet<AgentId>,
    ) -> Result<ResourceVector, ModelError> {
        let mut total = ResourceVector::zero(self.resource_count());
        for &a in group {
            total.add_assign(&self.action_cost(q, a, joint.choice(a))?);
        }
        Ok(total)
    }

    /// Least fixpoint of the initial states under `step`.
    pub fn reachable_states(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = self.initial.iter().copied().collect();
        let mut frontier: Vec<StateId> = self.initial.clone();
        while let Some(q) = frontier.pop() {
            for &target in &self.outcomes[q.index()] {
                if seen.insert(target) {
                    frontier.push(target);
                }
            }
        }
        seen
    }

    /// Re-checks every structural invariant. Empty on a valid model; used to
    /// validate transform outputs.
    pub fn verify_invariants(&self) -> Vec<ModelError> {
        let mut errors = Vec::new();
        if self.agent_names.is_empty() {
            errors.push(ModelError::NoAgents);
        }
        if self.state_names.is_empty() {
            errors.push(ModelError::NoStates);
        }
        if self.initial.is_empty() {
            errors.push(ModelError::NoInitialState);
        }
        for q in self.states() {
            for a in self.agents() {
                if self.available(q, a).is_empty() {
                    errors.push(ModelError::EmptyAvailability {
                        state: self.state_name(q).to_string(),
                        agent: self.agent_name(a).to_string(),
                    });
                }
                for &act in self.available(q, a) {
                    let used = self.legal[q.index()].iter().any(|j| j.choice(a) == act);
                    if !used {
                        errors.push(ModelError::UnusedAvailability {
                            state: self.state_name(q).to_string(),
                            agent: self.agent_name(a).to_string(),
                            action: self.action_name(act).to_string(),
                        });
                    }
                }
            }
            if self.legal[q.index()].is_empty() {
                errors.push(ModelError::EmptyRestriction {
                    state: self.state_name(q).to_string(),
                });
            }
            if !self.restricted[q.index()] {
                let product = product_of(&self.availability[q.index()]);
                if product.len() != self.legal[q.index()].len() {
                    for joint in &product {
                        if self.legal[q.index()].binary_search(joint).is_err() {
                            errors.push(ModelError::MissingOutcome {
                                state: self.state_name(q).to_string(),
                                joint: render_joint(joint, &self.action_names),
                            });
                        }
                    }
                }
            }
            for (joint, &target) in self.legal[q.index()].iter().zip(&self.outcomes[q.index()]) {
                if target.index() >= self.state_count() {
                    errors.push(ModelError::DanglingTarget {
                        state: self.state_name(q).to_string(),
                        joint: render_joint(joint, &self.action_names),
                        target: format!("#{}", target.index()),
                    });
                }
            }
        }
        for ((q, a, act), v) in &self.costs {
            if v.len() != self.resource_count() {
                errors.push(ModelError::CostArityMismatch {
                    state: self.state_name(*q).to_string(),
                    agent: self.agent_name(*a).to_string(),
                    action: self.action_name(*act).to_string(),
                    expected: self.resource_count(),
                    got: v.len(),
                });
            }
            if !self.availability[q.index()][a.index()].contains(act) {
                errors.push(ModelError::CostOutsideAvailability {
                    state: self.state_name(*q).to_string(),
                    agent: self.agent_name(*a).to_string(),
                    action: self.action_name(*act).to_string(),
                });
            }
        }
        errors
    }

    /// Renders a joint action with agent names: `A:send,B:recv`.
    pub fn render_joint_action(&self, joint: &JointAction) -> String {
        joint
            .choices()
            .iter()
            .enumerate()
            .map(|(i, act)| {
                let agent = self.agent_names.get(i).map(String::as_str).unwrap_or("?");
                let action = match self.action_names.get(act.index()) {
                    Some(name) => name.clone(),
                    None => format!("#{}", act.index()),
                };
                format!("{agent}:{action}")
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Inserts or replaces a declared cost entry. The action must be
    /// available at the state; callers uphold that.
    pub(crate) fn override_cost(
        &mut self,
        q: StateId,
        agent: AgentId,
        action: ActionId,
        vector: ResourceVector,
    ) {
        debug_assert!(self.availability[q.index()][agent.index()].contains(&action));
        debug_assert_eq!(vector.len(), self.resource_count());
        self.costs.insert((q, agent, action), vector);
    }

    /// Builds the same model with the legal joint-action set of each state
    /// shrunk to `keep(q, joint)`, dropping states that become unreachable.
    /// Returns `None` if an initial state keeps no joint action.
    pub(crate) fn restrict_joint_actions(
        &self,
        keep: impl Fn(StateId, &JointAction) -> bool,
    ) -> Option<Model> {
        let mut kept: Vec<Vec<usize>> = Vec::with_capacity(self.state_count());
        for q in self.states() {
            let ranks: Vec<usize> = (0..self.legal[q.index()].len())
                .filter(|&r| keep(q, &self.legal[q.index()][r]))
                .collect();
            kept.push(ranks);
        }
        for &q in &self.initial {
            if kept[q.index()].is_empty() {
                return None;
            }
        }

        // Reachability under the kept transitions only.
        let mut seen: BTreeSet<StateId> = self.initial.iter().copied().collect();
        let mut frontier: Vec<StateId> = self.initial.clone();
        while let Some(q) = frontier.pop() {
            for &r in &kept[q.index()] {
                let t = self.outcomes[q.index()][r];
                if seen.insert(t) {
                    frontier.push(t);
                }
            }
        }

        let mut remap: BTreeMap<StateId, StateId> = BTreeMap::new();
        for (new_ix, &old) in seen.iter().enumerate() {
            remap.insert(old, StateId(new_ix));
        }

        let mut state_names = Vec::with_capacity(seen.len());
        let mut availability = Vec::with_capacity(seen.len());
        let mut legal = Vec::with_capacity(seen.len());
        let mut outcomes = Vec::with_capacity(seen.len());
        let mut restricted = Vec::with_capacity(seen.len());
        let mut costs = BTreeMap::new();
        for &old in &seen {
            state_names.push(self.state_names[old.index()].clone());
            let joints: Vec<JointAction> = kept[old.index()]
                .iter()
                .map(|&r| self.legal[old.index()][r].clone())
                .collect();
            let targets: Vec<StateId> = kept[old.index()]
                .iter()
                .map(|&r| remap[&self.outcomes[old.index()][r]])
                .collect();
            // Availability becomes the per-agent projection of the kept set.
            let mut avail: Vec<Vec<ActionId>> = Vec::with_capacity(self.agent_count());
            for a in self.agents() {
                let set: BTreeSet<ActionId> = joints.iter().map(|j| j.choice(a)).collect();
                avail.push(set.into_iter().collect());
            }
            let full = product_of(&avail);
            let is_restricted = full.len() != joints.len();
            let new_q = remap[&old];
            for a in self.agents() {
                for &act in &avail[a.index()] {
                    if let Some(v) = self.costs.get(&(old, a, act)) {
                        costs.insert((new_q, a, act), v.clone());
                    }
                }
            }
            availability.push(avail);
            legal.push(joints);
            outcomes.push(targets);
            restricted.push(is_restricted);
        }

        Some(Model {
            agent_names: self.agent_names.clone(),
            resource_names: self.resource_names.clone(),
            state_names,
            action_names: self.action_names.clone(),
            availability,
            legal,
            outcomes,
            restricted,
            costs,
            initial: self.initial.iter().map(|q| remap[q]).collect(),
        })
    }
}
