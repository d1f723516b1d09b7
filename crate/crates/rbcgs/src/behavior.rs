//! Finite representations of infinite behaviors.
//!
//! Infinite runs are represented as [`Lasso`]s: a finite stem followed by a
//! non-empty cycle. Deterministic models under memoryless strategies produce
//! exactly such eventually-periodic runs, and the monitor semantics in
//! [`crate::norms`] is decidable on them. Non-periodic runs are outside the
//! representable set.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    ActionId, AgentId, JointAction, Model, ModelError, ResourceId, ResourceVector, StateId,
};

/// One transition of a run: the state it leaves and the joint action taken.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Step {
    pub source: StateId,
    pub action: JointAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("strategy profile assigns no action to `{agent}` at `{state}`")]
    IncompleteProfile { agent: String, state: String },
    #[error("lasso cycle must be non-empty")]
    EmptyCycle,
    #[error("enumeration bound must be at least 1")]
    ZeroBound,
}

/// A finite prefix of a run, anchored at an explicit start state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    start: StateId,
    steps: Vec<Step>,
    end: StateId,
}

impl Trace {
    pub fn starting_at(start: StateId) -> Self {
        Self {
            start,
            steps: Vec::new(),
            end: start,
        }
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn end(&self) -> StateId {
        self.end
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Returns this trace with one appended step; the new step's source is
    /// the current end state.
    pub fn extended(&self, m: &Model, action: JointAction) -> Result<Trace, BehaviorError> {
        let target = m.step(self.end, &action)?;
        let mut steps = self.steps.clone();
        steps.push(Step {
            source: self.end,
            action,
        });
        Ok(Trace {
            start: self.start,
            steps,
            end: target,
        })
    }

    /// The visited state sequence, length `len() + 1`.
    pub fn visited(&self) -> Vec<StateId> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.start);
        out.extend(self.steps.iter().skip(1).map(|s| s.source));
        if !self.steps.is_empty() {
            out.push(self.end);
        }
        debug_assert_eq!(out.len(), self.steps.len() + 1);
        out
    }

    pub fn concat(&self, m: &Model, other: &Trace) -> Result<Trace, BehaviorError> {
        let mut t = self.clone();
        for step in &other.steps {
            t = t.extended(m, step.action.clone())?;
        }
        Ok(t)
    }
}

/// A stem plus a non-empty repeating cycle; the finite form of an
/// eventually-periodic infinite run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    stem: Trace,
    cycle: Vec<Step>,
}

impl Lasso {
    /// Builds a lasso, checking that the cycle is non-empty, starts at the
    /// stem's end, and closes back on itself.
    pub fn new(m: &Model, stem: Trace, cycle: Vec<Step>) -> Result<Lasso, BehaviorError> {
        if cycle.is_empty() {
            return Err(BehaviorError::EmptyCycle);
        }
        let mut at = stem.end();
        for step in &cycle {
            if step.source != at {
                return Err(ModelError::IllegalJointAction {
                    state: m.state_name(step.source).to_string(),
                    joint: m.render_joint_action(&step.action),
                }
                .into());
            }
            at = m.step(step.source, &step.action)?;
        }
        if at != cycle[0].source {
            return Err(ModelError::IllegalJointAction {
                state: m.state_name(at).to_string(),
                joint: m.render_joint_action(&cycle[0].action),
            }
            .into());
        }
        Ok(Lasso { stem, cycle })
    }

    pub fn stem(&self) -> &Trace {
        &self.stem
    }

    pub fn cycle(&self) -> &[Step] {
        &self.cycle
    }

    pub fn total_len(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    /// The step at unrolled position `i` (stem first, then the cycle
    /// repeating forever).
    pub fn step_at(&self, i: usize) -> &Step {
        if i < self.stem.len() {
            &self.stem.steps()[i]
        } else {
            &self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }

    /// Unrolls the cycle `rounds` times into a plain trace.
    pub fn unrolled(&self, m: &Model, rounds: usize) -> Result<Trace, BehaviorError> {
        let mut t = self.stem.clone();
        for _ in 0..rounds {
            for step in &self.cycle {
                t = t.extended(m, step.action.clone())?;
            }
        }
        Ok(t)
    }
}

/// Per-agent resource endowments. Agents without an entry are unconstrained.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Budget {
    endowments: BTreeMap<AgentId, ResourceVector>,
}

impl Budget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, agent: AgentId, endowment: ResourceVector) -> Self {
        self.endowments.insert(agent, endowment);
        self
    }

    pub fn endowment(&self, agent: AgentId) -> Option<&ResourceVector> {
        self.endowments.get(&agent)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.endowments.keys().copied()
    }
}

/// Outcome of a prefix-feasibility check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// Earliest step at which some agent's cumulative cost first exceeds its
    /// endowment, with the smallest offending resource index.
    Exceeded {
        step: usize,
        agent: AgentId,
        resource: ResourceId,
    },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Componentwise sum of `action_cost` over the trace's steps, restricted to
/// the given group of agents.
pub fn cumulative_cost(
    m: &Model,
    trace: &Trace,
    group: &BTreeSet<AgentId>,
) -> Result<ResourceVector, BehaviorError> {
    let mut total = ResourceVector::zero(m.resource_count());
    for step in trace.steps() {
        total.add_assign(&m.joint_cost(step.source, &step.action, group)?);
    }
    Ok(total)
}

/// Checks that every prefix of the trace keeps every budgeted agent's
/// cumulative cost within its endowment.
pub fn feasible_under_budget(
    m: &Model,
    trace: &Trace,
    budget: &Budget,
) -> Result<Feasibility, BehaviorError> {
    let mut spent: BTreeMap<AgentId, ResourceVector> = budget
        .agents()
        .map(|a| (a, ResourceVector::zero(m.resource_count())))
        .collect();
    for (i, step) in trace.steps().iter().enumerate() {
        for (&agent, total) in spent.iter_mut() {
            total.add_assign(&m.action_cost(step.source, agent, step.action.choice(agent))?);
            let endowment = budget.endowment(agent).expect("budgeted agent");
            if let Some(resource) = endowment_excess(total, endowment) {
                return Ok(Feasibility::Exceeded {
                    step: i,
                    agent,
                    resource,
                });
            }
        }
    }
    Ok(Feasibility::Feasible)
}

fn endowment_excess(total: &ResourceVector, endowment: &ResourceVector) -> Option<ResourceId> {
    total.first_excess(endowment)
}

/// A memoryless joint strategy: one action per (agent, state) pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrategyProfile {
    choices: BTreeMap<(AgentId, StateId), ActionId>,
}

impl StrategyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, agent: AgentId, state: StateId, action: ActionId) -> &mut Self {
        self.choices.insert((agent, state), action);
        self
    }

    pub fn choice(&self, agent: AgentId, state: StateId) -> Option<ActionId> {
        self.choices.get(&(agent, state)).copied()
    }
}

/// Follows a memoryless joint profile from `start` until a state repeats;
/// since the outcome function is deterministic this yields the unique
/// eventually-periodic run the profile induces.
pub fn lasso_from_strategy(
    m: &Model,
    profile: &StrategyProfile,
    start: StateId,
) -> Result<Lasso, BehaviorError> {
    let mut visited_at: BTreeMap<StateId, usize> = BTreeMap::new();
    let mut steps: Vec<Step> = Vec::new();
    let mut at = start;
    loop {
        if let Some(&first) = visited_at.get(&at) {
            let mut stem = Trace::starting_at(start);
            for step in &steps[..first] {
                stem = stem.extended(m, step.action.clone())?;
            }
            let cycle = steps[first..].to_vec();
            return Lasso::new(m, stem, cycle);
        }
        visited_at.insert(at, steps.len());
        let mut choices = Vec::with_capacity(m.agent_count());
        for agent in m.agents() {
            let action =
                profile
                    .choice(agent, at)
                    .ok_or_else(|| BehaviorError::IncompleteProfile {
                        agent: m.agent_name(agent).to_string(),
                        state: m.state_name(at).to_string(),
                    })?;
            choices.push(action);
        }
        let joint = JointAction::new(choices);
        let next = m.step(at, &joint)?;
        steps.push(Step {
            source: at,
            action: joint,
        });
        at = next;
    }
}

/// Enumerates every lasso from `start` with `stem + cycle` length at most
/// `max_total_len`, each exactly once, ordered by stem length first and then
/// lexicographically by the joint-action index sequence.
pub fn enumerate_lassos(
    m: &Model,
    start: StateId,
    max_total_len: usize,
) -> Result<Vec<Lasso>, BehaviorError> {
    if max_total_len == 0 {
        return Err(BehaviorError::ZeroBound);
    }
    m.joint_actions(start)?;

    let mut out = Vec::new();
    for stem_len in 0..max_total_len {
        let mut stem_ranks = Vec::with_capacity(stem_len);
        enumerate_stems(m, start, stem_len, max_total_len, &mut stem_ranks, &mut out);
    }
    Ok(out)
}

fn enumerate_stems(
    m: &Model,
    at: StateId,
    remaining: usize,
    max_total_len: usize,
    stem: &mut Vec<(StateId, usize)>,
    out: &mut Vec<Lasso>,
) {
    if remaining == 0 {
        let mut cycle = Vec::new();
        let max_cycle = max_total_len - stem.len();
        enumerate_cycles(m, at, at, max_cycle, stem, &mut cycle, out);
        return;
    }
    let joints = m.joint_actions(at).expect("state in range");
    for (rank, joint) in joints.iter().enumerate() {
        let next = m.step(at, joint).expect("legal joint action");
        stem.push((at, rank));
        enumerate_stems(m, next, remaining - 1, max_total_len, stem, out);
        stem.pop();
    }
}

fn enumerate_cycles(
    m: &Model,
    anchor: StateId,
    at: StateId,
    remaining: usize,
    stem: &mut Vec<(StateId, usize)>,
    cycle: &mut Vec<(StateId, usize)>,
    out: &mut Vec<Lasso>,
) {
    if !cycle.is_empty() && at == anchor {
        out.push(materialize(m, stem, cycle));
    }
    if remaining == 0 {
        return;
    }
    let joints = m.joint_actions(at).expect("state in range");
    for (rank, joint) in joints.iter().enumerate() {
        let next = m.step(at, joint).expect("legal joint action");
        cycle.push((at, rank));
        enumerate_cycles(m, anchor, next, remaining - 1, stem, cycle, out);
        cycle.pop();
    }
}

fn materialize(m: &Model, stem: &[(StateId, usize)], cycle: &[(StateId, usize)]) -> Lasso {
    let start = stem.first().or_else(|| cycle.first()).expect("non-empty").0;
    let mut trace = Trace::starting_at(start);
    for &(q, rank) in stem {
        let action = m.joint_actions(q).expect("state")[rank].clone();
        trace = trace.extended(m, action).expect("enumerated step");
    }
    let cycle_steps: Vec<Step> = cycle
        .iter()
        .map(|&(q, rank)| Step {
            source: q,
            action: m.joint_actions(q).expect("state")[rank].clone(),
        })
        .collect();
    Lasso::new(m, trace, cycle_steps).expect("enumerated cycle closes")
}

/// Renders a trace in the dump format: one `<state> --(a:act,..)--> <state>`
/// line per step.
pub fn render_trace(m: &Model, trace: &Trace) -> String {
    let mut text = String::new();
    if trace.is_empty() {
        let _ = writeln!(text, "{}", m.state_name(trace.start()));
        return text;
    }
    let mut at = trace.start();
    for step in trace.steps() {
        let target = m.step(step.source, &step.action).expect("valid trace");
        let _ = writeln!(
            text,
            "{} --({})--> {}",
            m.state_name(at),
            m.render_joint_action(&step.action),
            m.state_name(target)
        );
        at = target;
    }
    text
}

/// Renders a lasso: the stem lines, then `repeat:`, then the cycle lines.
pub fn render_lasso(m: &Model, lasso: &Lasso) -> String {
    let mut text = String::new();
    for step in lasso.stem().steps() {
        let target = m.step(step.source, &step.action).expect("valid lasso");
        let _ = writeln!(
            text,
            "{} --({})--> {}",
            m.state_name(step.source),
            m.render_joint_action(&step.action),
            m.state_name(target)
        );
    }
    let _ = writeln!(text, "repeat:");
    for step in lasso.cycle() {
        let target = m.step(step.source, &step.action).expect("valid lasso");
        let _ = writeln!(
            text,
            "{} --({})--> {}",
            m.state_name(step.source),
            m.render_joint_action(&step.action),
            m.state_name(target)
        );
    }
    text
}
