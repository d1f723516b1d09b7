//! Resource-bounded coalition model checking.
//!
//! [`check`] answers whether a coalition, spending at most a shared budget
//! vector, can enforce a Next / Eventually / Globally / Until target against
//! every opponent choice. Only coalition members' action costs count against
//! the budget; opponents act for free from the checker's perspective.
//!
//! The engine evaluates a dense table of configurations `(state, remaining
//! budget <= b)` — a least fixpoint for Next / Eventually / Until and a
//! greatest fixpoint for Globally — so `configs_explored` is exactly
//! `|Q| * prod(b_i + 1)` for the fixpoint operators, matching the checker's
//! configuration bound. Evaluation order never affects results or counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::model::{ActionId, AgentId, Model, ModelError, ResourceVector, StateId};
use crate::norms::{MonitorStatus, NormError, NormMonitor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("budget has {got} entries, model declares {expected} resources")]
    BudgetDimensionMismatch { expected: usize, got: usize },
    #[error("unknown state id {0}")]
    UnknownState(usize),
    #[error("unknown agent id {0}")]
    UnknownAgent(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Coord(#[from] Box<crate::coordination::CoordError>),
}

/// The flat temporal operator of a query, with its target state sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemporalOp {
    /// The next state lies in `goal`.
    Next { goal: BTreeSet<StateId> },
    /// Some reached state lies in `goal`.
    Eventually { goal: BTreeSet<StateId> },
    /// Every reached state stays in `safe`.
    Globally { safe: BTreeSet<StateId> },
    /// Stay in `hold` until reaching `goal`; costs are charged for every
    /// step up to and including the one entering `goal`.
    Until {
        hold: BTreeSet<StateId>,
        goal: BTreeSet<StateId>,
    },
}

impl TemporalOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            TemporalOp::Next { .. } => "X",
            TemporalOp::Eventually { .. } => "F",
            TemporalOp::Globally { .. } => "G",
            TemporalOp::Until { .. } => "U",
        }
    }
}

/// Can `coalition`, within `budget`, enforce `operator` from `start`?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionQuery {
    /// Empty coalition turns the query into a pure inevitability check.
    pub coalition: BTreeSet<AgentId>,
    /// Shared budget vector, one entry per resource.
    pub budget: ResourceVector,
    pub operator: TemporalOp,
    pub start: StateId,
}

/// A winning coalition strategy: for each winning configuration, the member
/// action assignment to play there.
pub type WitnessStrategy = BTreeMap<(StateId, ResourceVector), Vec<(AgentId, ActionId)>>;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub holds: bool,
    /// Present iff the query holds and the coalition is non-empty.
    pub witness_strategy: Option<WitnessStrategy>,
    /// Distinct `(state, budget)` configurations the engine evaluated;
    /// bounded by `|Q| * prod(b_i + 1)`.
    pub configs_explored: u64,
}

/// One coalition move at a state: a member action tuple, its summed cost,
/// and the outcomes over all legal opponent completions.
#[derive(Debug, Clone)]
struct CoalitionMove {
    assignment: Vec<(AgentId, ActionId)>,
    cost: ResourceVector,
    targets: Vec<StateId>,
}

fn coalition_moves(
    m: &Model,
    q: StateId,
    coalition: &BTreeSet<AgentId>,
) -> Result<Vec<CoalitionMove>, VerifyError> {
    let mut grouped: BTreeMap<Vec<ActionId>, BTreeSet<StateId>> = BTreeMap::new();
    for joint in m.joint_actions(q)? {
        let projection: Vec<ActionId> = coalition.iter().map(|&a| joint.choice(a)).collect();
        grouped
            .entry(projection)
            .or_default()
            .insert(m.step(q, joint)?);
    }
    let mut moves = Vec::with_capacity(grouped.len());
    for (projection, targets) in grouped {
        let mut cost = ResourceVector::zero(m.resource_count());
        let mut assignment = Vec::with_capacity(projection.len());
        for (&agent, &action) in coalition.iter().zip(&projection) {
            cost.add_assign(&m.action_cost(q, agent, action)?);
            assignment.push((agent, action));
        }
        moves.push(CoalitionMove {
            assignment,
            cost,
            targets: targets.into_iter().collect(),
        });
    }
    Ok(moves)
}

/// Mixed-radix addressing of budget vectors `0 <= beta <= bound`.
#[derive(Debug, Clone)]
struct BudgetLattice {
    bound: Vec<u64>,
    strides: Vec<u64>,
    points: u64,
}

impl BudgetLattice {
    fn new(bound: &ResourceVector) -> Self {
        let bound: Vec<u64> = bound.entries().to_vec();
        let mut strides = vec![0u64; bound.len()];
        let mut points = 1u64;
        for (i, b) in bound.iter().enumerate().rev() {
            strides[i] = points;
            points = points.saturating_mul(b + 1);
        }
        Self {
            bound,
            strides,
            points,
        }
    }

    fn points(&self) -> u64 {
        self.points
    }

    fn rank(&self, beta: &ResourceVector) -> usize {
        debug_assert!(beta.entries().iter().zip(&self.bound).all(|(v, b)| v <= b));
        beta.entries()
            .iter()
            .zip(&self.strides)
            .map(|(v, s)| v * s)
            .sum::<u64>() as usize
    }

    fn vector(&self, mut rank: u64) -> ResourceVector {
        let mut out = vec![0u64; self.bound.len()];
        for (i, s) in self.strides.iter().enumerate() {
            if *s > 0 {
                out[i] = rank / s;
                rank %= s;
            }
        }
        ResourceVector::new(out)
    }
}

struct Table {
    win: Vec<bool>,
    moves: BTreeMap<usize, Vec<(AgentId, ActionId)>>,
    lattice: BudgetLattice,
    configs: u64,
}

impl Table {
    fn config(&self, q: StateId, beta: &ResourceVector) -> usize {
        q.index() * self.lattice.points() as usize + self.lattice.rank(beta)
    }

    fn holds_at(&self, q: StateId, beta: &ResourceVector) -> bool {
        self.win[self.config(q, beta)]
    }
}

fn least_fixpoint(
    m: &Model,
    coalition: &BTreeSet<AgentId>,
    budget: &ResourceVector,
    hold: Option<&BTreeSet<StateId>>,
    goal: &BTreeSet<StateId>,
) -> Result<Table, VerifyError> {
    let lattice = BudgetLattice::new(budget);
    let points = lattice.points() as usize;
    let n = m.state_count();
    let mut win = vec![false; n * points];
    let mut moves: BTreeMap<usize, Vec<(AgentId, ActionId)>> = BTreeMap::new();

    for q in m.states() {
        if goal.contains(&q) {
            for r in 0..points {
                win[q.index() * points + r] = true;
            }
        }
    }

    let per_state: Vec<Vec<CoalitionMove>> = m
        .states()
        .map(|q| coalition_moves(m, q, coalition))
        .collect::<Result<_, _>>()?;

    loop {
        let mut changed = false;
        for q in m.states() {
            if goal.contains(&q) {
                continue;
            }
            if let Some(hold) = hold {
                if !hold.contains(&q) {
                    continue;
                }
            }
            for r in 0..points {
                let config = q.index() * points + r;
                if win[config] {
                    continue;
                }
                let beta = lattice.vector(r as u64);
                for mv in &per_state[q.index()] {
                    let Some(remaining) = beta.checked_sub(&mv.cost) else {
                        continue;
                    };
                    let rem_rank = lattice.rank(&remaining);
                    if mv
                        .targets
                        .iter()
                        .all(|t| win[t.index() * points + rem_rank])
                    {
                        win[config] = true;
                        moves.insert(config, mv.assignment.clone());
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    Ok(Table {
        win,
        moves,
        lattice,
        configs: (n * points) as u64,
    })
}

fn greatest_fixpoint(
    m: &Model,
    coalition: &BTreeSet<AgentId>,
    budget: &ResourceVector,
    safe: &BTreeSet<StateId>,
) -> Result<Table, VerifyError> {
    let lattice = BudgetLattice::new(budget);
    let points = lattice.points() as usize;
    let n = m.state_count();
    let mut win = vec![false; n * points];
    for q in m.states() {
        if safe.contains(&q) {
            for r in 0..points {
                win[q.index() * points + r] = true;
            }
        }
    }

    let per_state: Vec<Vec<CoalitionMove>> = m
        .states()
        .map(|q| coalition_moves(m, q, coalition))
        .collect::<Result<_, _>>()?;

    loop {
        let mut changed = false;
        for q in m.states() {
            for r in 0..points {
                let config = q.index() * points + r;
                if !win[config] {
                    continue;
                }
                let beta = lattice.vector(r as u64);
                let sustainable = per_state[q.index()].iter().any(|mv| {
                    let Some(remaining) = beta.checked_sub(&mv.cost) else {
                        return false;
                    };
                    let rem_rank = lattice.rank(&remaining);
                    mv.targets
                        .iter()
                        .all(|t| win[t.index() * points + rem_rank])
                });
                if !sustainable {
                    win[config] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Record one sustaining move per surviving configuration.
    let mut moves: BTreeMap<usize, Vec<(AgentId, ActionId)>> = BTreeMap::new();
    for q in m.states() {
        for r in 0..points {
            let config = q.index() * points + r;
            if !win[config] {
                continue;
            }
            let beta = lattice.vector(r as u64);
            let chosen = per_state[q.index()]
                .iter()
                .find(|mv| match beta.checked_sub(&mv.cost) {
                    Some(remaining) => {
                        let rem_rank = lattice.rank(&remaining);
                        mv.targets
                            .iter()
                            .all(|t| win[t.index() * points + rem_rank])
                    }
                    None => false,
                });
            if let Some(mv) = chosen {
                moves.insert(config, mv.assignment.clone());
            }
        }
    }

    Ok(Table {
        win,
        moves,
        lattice,
        configs: (n * points) as u64,
    })
}

fn validate_query(m: &Model, query: &CoalitionQuery) -> Result<(), VerifyError> {
    if query.budget.len() != m.resource_count() {
        return Err(VerifyError::BudgetDimensionMismatch {
            expected: m.resource_count(),
            got: query.budget.len(),
        });
    }
    if query.start.index() >= m.state_count() {
        return Err(VerifyError::UnknownState(query.start.index()));
    }
    for &a in &query.coalition {
        if a.index() >= m.agent_count() {
            return Err(VerifyError::UnknownAgent(a.index()));
        }
    }
    let sets: Vec<&BTreeSet<StateId>> = match &query.operator {
        TemporalOp::Next { goal } | TemporalOp::Eventually { goal } => vec![goal],
        TemporalOp::Globally { safe } => vec![safe],
        TemporalOp::Until { hold, goal } => vec![hold, goal],
    };
    for set in sets {
        for q in set {
            if q.index() >= m.state_count() {
                return Err(VerifyError::UnknownState(q.index()));
            }
        }
    }
    Ok(())
}

/// Decides the query. See the module docs for the semantics and the
/// configuration accounting.
pub fn check(m: &Model, query: &CoalitionQuery) -> Result<CheckResult, VerifyError> {
    validate_query(m, query)?;
    match &query.operator {
        TemporalOp::Next { goal } => check_next(m, query, goal),
        TemporalOp::Eventually { goal } => {
            let table = least_fixpoint(m, &query.coalition, &query.budget, None, goal)?;
            Ok(result_from(query, table))
        }
        TemporalOp::Until { hold, goal } => {
            let table = least_fixpoint(m, &query.coalition, &query.budget, Some(hold), goal)?;
            Ok(result_from(query, table))
        }
        TemporalOp::Globally { safe } => {
            let table = greatest_fixpoint(m, &query.coalition, &query.budget, safe)?;
            Ok(result_from(query, table))
        }
    }
}

fn check_next(
    m: &Model,
    query: &CoalitionQuery,
    goal: &BTreeSet<StateId>,
) -> Result<CheckResult, VerifyError> {
    let mut touched: BTreeSet<(StateId, ResourceVector)> = BTreeSet::new();
    touched.insert((query.start, query.budget.clone()));
    let mut witness = None;
    let mut holds = false;
    for mv in coalition_moves(m, query.start, &query.coalition)? {
        let Some(remaining) = query.budget.checked_sub(&mv.cost) else {
            continue;
        };
        for t in &mv.targets {
            touched.insert((*t, remaining.clone()));
        }
        if !holds && mv.targets.iter().all(|t| goal.contains(t)) {
            holds = true;
            if !query.coalition.is_empty() {
                let mut w = WitnessStrategy::new();
                w.insert((query.start, query.budget.clone()), mv.assignment.clone());
                witness = Some(w);
            }
        }
    }
    Ok(CheckResult {
        holds,
        witness_strategy: witness,
        configs_explored: touched.len() as u64,
    })
}

fn result_from(query: &CoalitionQuery, table: Table) -> CheckResult {
    let holds = table.holds_at(query.start, &query.budget);
    let witness = if holds && !query.coalition.is_empty() {
        let points = table.lattice.points() as usize;
        let mut w = WitnessStrategy::new();
        for (&config, assignment) in &table.moves {
            let q = StateId::new(config / points);
            let beta = table.lattice.vector((config % points) as u64);
            w.insert((q, beta), assignment.clone());
        }
        Some(w)
    } else {
        None
    };
    CheckResult {
        holds,
        witness_strategy: witness,
        configs_explored: table.configs,
    }
}

/// Runs the fixpoint once and reads off `holds` for several start states;
/// the winning table does not depend on the start. The combined result holds
/// iff every start holds.
pub fn check_many(
    m: &Model,
    coalition: &BTreeSet<AgentId>,
    budget: &ResourceVector,
    operator: &TemporalOp,
    starts: &[StateId],
) -> Result<(Vec<(StateId, bool)>, CheckResult), VerifyError> {
    let Some(&first) = starts.first() else {
        return Ok((
            Vec::new(),
            CheckResult {
                holds: true,
                witness_strategy: None,
                configs_explored: 0,
            },
        ));
    };
    let query = CoalitionQuery {
        coalition: coalition.clone(),
        budget: budget.clone(),
        operator: operator.clone(),
        start: first,
    };
    validate_query(m, &query)?;
    let table = match operator {
        TemporalOp::Next { .. } => {
            // Next has no shared table; evaluate per start.
            let mut per_start = Vec::new();
            let mut configs = 0;
            let mut witness = None;
            for &q in starts {
                let q_query = CoalitionQuery {
                    start: q,
                    ..query.clone()
                };
                let r = check(m, &q_query)?;
                per_start.push((q, r.holds));
                configs += r.configs_explored;
                if let Some(w) = r.witness_strategy {
                    witness.get_or_insert_with(WitnessStrategy::new).extend(w);
                }
            }
            let all_hold = per_start.iter().all(|(_, h)| *h);
            return Ok((
                per_start,
                CheckResult {
                    holds: all_hold,
                    witness_strategy: if all_hold { witness } else { None },
                    configs_explored: configs,
                },
            ));
        }
        TemporalOp::Eventually { goal } => least_fixpoint(m, coalition, budget, None, goal)?,
        TemporalOp::Until { hold, goal } => least_fixpoint(m, coalition, budget, Some(hold), goal)?,
        TemporalOp::Globally { safe } => greatest_fixpoint(m, coalition, budget, safe)?,
    };
    let per_start: Vec<(StateId, bool)> = starts
        .iter()
        .map(|&q| (q, table.holds_at(q, budget)))
        .collect();
    let all_hold = per_start.iter().all(|(_, h)| *h);
    let mut result = result_from(&query, table);
    result.holds = all_hold;
    if !all_hold {
        result.witness_strategy = None;
    }
    Ok((per_start, result))
}

/// Frames norm enforceability as a Globally query on the model x monitor
/// product: the coalition must keep the run outside every violation state,
/// from every initial product state.
pub fn check_norm_enforceable(
    m: &Model,
    mon: &NormMonitor,
    coalition: &BTreeSet<AgentId>,
    budget: &ResourceVector,
) -> Result<CheckResult, VerifyError> {
    let px = crate::coordination::product_expansion(m, mon).map_err(Box::new)?;
    let safe: BTreeSet<StateId> = px
        .model
        .states()
        .filter(|p| {
            let (_, ms) = px.origin[p.index()];
            mon.status(ms) != MonitorStatus::Violation
        })
        .collect();
    let starts: Vec<StateId> = px.model.initial_states().to_vec();
    let (_, result) = check_many(
        &px.model,
        coalition,
        budget,
        &TemporalOp::Globally { safe },
        &starts,
    )?;
    Ok(result)
}

/// Instrumentation record for one check run.
#[derive(Debug, Clone)]
pub struct ProbeRecord {
    pub operator: &'static str,
    pub holds: bool,
    pub states: usize,
    /// Total legal joint actions over all states.
    pub transitions: usize,
    pub budget_points: u64,
    pub configs_explored: u64,
    /// `configs_explored <= states * budget_points`.
    pub within_bound: bool,
    pub wall_time: Duration,
}

/// Runs the check with instrumentation: configuration count, model size,
/// budget lattice size, and wall time, asserting the configuration bound.
pub fn complexity_probe(m: &Model, query: &CoalitionQuery) -> Result<ProbeRecord, VerifyError> {
    let start = std::time::Instant::now();
    let result = check(m, query)?;
    let wall_time = start.elapsed();
    let transitions: usize = m
        .states()
        .map(|q| m.joint_actions(q).map(|j| j.len()).unwrap_or(0))
        .sum();
    let budget_points = BudgetLattice::new(&query.budget).points();
    let bound = m.state_count() as u64 * budget_points;
    Ok(ProbeRecord {
        operator: query.operator.symbol(),
        holds: result.holds,
        states: m.state_count(),
        transitions,
        budget_points,
        configs_explored: result.configs_explored,
        within_bound: result.configs_explored <= bound,
        wall_time,
    })
}

/// Replays a witness strategy against every opponent completion, checking
/// that the operator is satisfied and the budget never goes negative.
/// Exhaustive, so only suitable at desk scale.
pub fn replay_witness(
    m: &Model,
    query: &CoalitionQuery,
    witness: &WitnessStrategy,
) -> Result<bool, VerifyError> {
    validate_query(m, query)?;
    match &query.operator {
        TemporalOp::Next { goal } => {
            let Some(assignment) = witness.get(&(query.start, query.budget.clone())) else {
                return Ok(false);
            };
            let mv = apply_assignment(m, query.start, &query.coalition, assignment)?;
            if query.budget.checked_sub(&mv.cost).is_none() {
                return Ok(false);
            }
            Ok(mv.targets.iter().all(|t| goal.contains(t)))
        }
        TemporalOp::Eventually { goal } => replay_reach(m, query, witness, None, goal),
        TemporalOp::Until { hold, goal } => replay_reach(m, query, witness, Some(hold), goal),
        TemporalOp::Globally { safe } => {
            // Closure check: every configuration reachable under the witness
            // stays safe and keeps an affordable recorded move.
            let mut seen: BTreeSet<(StateId, ResourceVector)> = BTreeSet::new();
            let mut stack = vec![(query.start, query.budget.clone())];
            while let Some((q, beta)) = stack.pop() {
                if !seen.insert((q, beta.clone())) {
                    continue;
                }
                if !safe.contains(&q) {
                    return Ok(false);
                }
                let Some(assignment) = witness.get(&(q, beta.clone())) else {
                    return Ok(false);
                };
                let mv = apply_assignment(m, q, &query.coalition, assignment)?;
                let Some(remaining) = beta.checked_sub(&mv.cost) else {
                    return Ok(false);
                };
                for t in mv.targets {
                    stack.push((t, remaining.clone()));
                }
            }
            Ok(true)
        }
    }
}

fn replay_reach(
    m: &Model,
    query: &CoalitionQuery,
    witness: &WitnessStrategy,
    hold: Option<&BTreeSet<StateId>>,
    goal: &BTreeSet<StateId>,
) -> Result<bool, VerifyError> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        m: &Model,
        coalition: &BTreeSet<AgentId>,
        witness: &WitnessStrategy,
        hold: Option<&BTreeSet<StateId>>,
        goal: &BTreeSet<StateId>,
        q: StateId,
        beta: &ResourceVector,
        path: &mut BTreeSet<(StateId, ResourceVector)>,
    ) -> Result<bool, VerifyError> {
        if goal.contains(&q) {
            return Ok(true);
        }
        if let Some(hold) = hold {
            if !hold.contains(&q) {
                return Ok(false);
            }
        }
        let key = (q, beta.clone());
        if !path.insert(key.clone()) {
            // Revisiting a configuration means this branch never reaches the
            // goal.
            return Ok(false);
        }
        let ok = (|| -> Result<bool, VerifyError> {
            let Some(assignment) = witness.get(&key) else {
                return Ok(false);
            };
            let mv = apply_assignment(m, q, coalition, assignment)?;
            let Some(remaining) = beta.checked_sub(&mv.cost) else {
                return Ok(false);
            };
            for t in &mv.targets {
                if !go(m, coalition, witness, hold, goal, *t, &remaining, path)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })();
        path.remove(&key);
        ok
    }
    let mut path = BTreeSet::new();
    go(
        m,
        &query.coalition,
        witness,
        hold,
        goal,
        query.start,
        &query.budget,
        &mut path,
    )
}

fn apply_assignment(
    m: &Model,
    q: StateId,
    coalition: &BTreeSet<AgentId>,
    assignment: &[(AgentId, ActionId)],
) -> Result<CoalitionMove, VerifyError> {
    let projection: Vec<ActionId> = assignment.iter().map(|&(_, act)| act).collect();
    for mv in coalition_moves(m, q, coalition)? {
        let mv_projection: Vec<ActionId> = mv.assignment.iter().map(|&(_, act)| act).collect();
        if mv_projection == projection {
            return Ok(mv);
        }
    }
    Err(VerifyError::Model(ModelError::IllegalJointAction {
        state: m.state_name(q).to_string(),
        joint: assignment
            .iter()
            .map(|&(a, act)| format!("{}:{}", m.agent_name(a), m.action_name(act)))
            .collect::<Vec<_>>()
            .join(","),
    }))
}

/// Where in the query text a parse problem sits (byte offset).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryParseError {
    pub offset: usize,
    pub message: String,
    pub expected: Option<String>,
}

impl fmt::Display for QueryParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message)?;
        if let Some(e) = &self.expected {
            write!(f, " (expected {e})")?;
        }
        Ok(())
    }
}

impl std::error::Error for QueryParseError {}

struct QueryCursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> QueryCursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), QueryParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(
                format!("found `{}`", self.peek_word()),
                Some(format!("`{token}`")),
            ))
        }
    }

    fn peek_word(&self) -> String {
        self.rest().trim_start().chars().take(8).collect()
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        if !rest
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        {
            return None;
        }
        let end = rest
            .char_indices()
            .take_while(|(_, c)| c.is_ascii_alphanumeric() || *c == '_')
            .last()
            .map(|(i, c)| i + c.len_utf8())?;
        self.pos += end;
        Some(&rest[..end])
    }

    fn number(&mut self) -> Result<u64, QueryParseError> {
        self.skip_ws();
        let digits: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .collect();
        if digits.is_empty() {
            return Err(self.error(
                format!("found `{}`", self.peek_word()),
                Some("a number".into()),
            ));
        }
        self.pos += digits.len();
        digits
            .parse()
            .map_err(|_| self.error("number out of range".into(), None))
    }

    fn error(&self, message: String, expected: Option<String>) -> QueryParseError {
        QueryParseError {
            offset: self.pos,
            message,
            expected,
        }
    }
}

/// Parses the CLI query syntax, e.g. `<<K:A,B budget=[3,2]>> F {q2}`,
/// `<<A>> G {q0,q1}`, `<<>> {q0} U {q1}`. The optional `name:` before the
/// member list labels the coalition and is otherwise ignored; an empty
/// member list is the empty coalition; a missing budget means all zeroes.
pub fn parse_query(
    m: &Model,
    text: &str,
    start: StateId,
) -> Result<CoalitionQuery, QueryParseError> {
    let mut c = QueryCursor::new(text);
    c.expect("<<")?;

    let mut members: Vec<(usize, String)> = Vec::new();
    let mut budget: Option<ResourceVector> = None;

    loop {
        c.skip_ws();
        if c.rest().starts_with(">>") {
            break;
        }
        let offset = c.pos;
        if let Some(word) = c.ident() {
            if word == "budget" {
                c.expect("=")?;
                budget = Some(parse_vector(&mut c)?);
                continue;
            }
            // `label:` prefix naming the coalition.
            if members.is_empty() && budget.is_none() && c.eat(":") {
                continue;
            }
            members.push((offset, word.to_string()));
            c.eat(",");
            continue;
        }
        return Err(c.error(
            format!("found `{}`", c.peek_word()),
            Some("a coalition member, `budget=[..]`, or `>>`".into()),
        ));
    }
    c.expect(">>")?;

    let mut coalition = BTreeSet::new();
    for (offset, name) in &members {
        match m.agent(name) {
            Some(a) => {
                coalition.insert(a);
            }
            None => {
                return Err(QueryParseError {
                    offset: *offset,
                    message: format!("unknown agent `{name}`"),
                    expected: None,
                })
            }
        }
    }
    let budget = budget.unwrap_or_else(|| ResourceVector::zero(m.resource_count()));

    c.skip_ws();
    let operator = if c.eat("X") {
        TemporalOp::Next {
            goal: parse_state_set(m, &mut c)?,
        }
    } else if c.eat("F") {
        TemporalOp::Eventually {
            goal: parse_state_set(m, &mut c)?,
        }
    } else if c.eat("G") {
        TemporalOp::Globally {
            safe: parse_state_set(m, &mut c)?,
        }
    } else if c.rest().starts_with('{') {
        let hold = parse_state_set(m, &mut c)?;
        c.expect("U")?;
        let goal = parse_state_set(m, &mut c)?;
        TemporalOp::Until { hold, goal }
    } else {
        return Err(c.error(
            format!("found `{}`", c.peek_word()),
            Some("`X`, `F`, `G`, or `{..} U {..}`".into()),
        ));
    };

    c.skip_ws();
    if !c.rest().is_empty() {
        return Err(c.error(
            format!("trailing input `{}`", c.peek_word()),
            Some("end of query".into()),
        ));
    }

    Ok(CoalitionQuery {
        coalition,
        budget,
        operator,
        start,
    })
}

fn parse_vector(c: &mut QueryCursor) -> Result<ResourceVector, QueryParseError> {
    c.expect("[")?;
    let mut entries = Vec::new();
    loop {
        entries.push(c.number()?);
        if c.eat(",") {
            continue;
        }
        c.expect("]")?;
        break;
    }
    Ok(ResourceVector::new(entries))
}

fn parse_state_set(m: &Model, c: &mut QueryCursor) -> Result<BTreeSet<StateId>, QueryParseError> {
    c.expect("{")?;
    let mut set = BTreeSet::new();
    loop {
        c.skip_ws();
        if c.eat("}") {
            break;
        }
        let offset = c.pos;
        let Some(name) = c.ident() else {
            return Err(c.error(
                format!("found `{}`", c.peek_word()),
                Some("a state name or `}`".into()),
            ));
        };
        match m.state(name) {
            Some(state) => {
                set.insert(state);
            }
            None => {
                return Err(QueryParseError {
                    offset,
                    message: format!("unknown state `{name}`"),
                    expected: None,
                })
            }
        }
        c.eat(",");
    }
    Ok(set)
}

/// Renders a joint action assignment for the witness table.
pub fn render_assignment(m: &Model, assignment: &[(AgentId, ActionId)]) -> String {
    if assignment.is_empty() {
        return "-".to_string();
    }
    assignment
        .iter()
        .map(|&(a, act)| format!("{}:{}", m.agent_name(a), m.action_name(act)))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    fn pay_to_move() -> Model {
        // q0 -> q1 via `go` costing 1 money; `stay` is free.
        let mut b = ModelBuilder::new();
        b.agent("A")
            .resource("money")
            .state("q0", true)
            .state("q1", false)
            .action("go")
            .action("stay")
            .avail("q0", "A", ["go", "stay"])
            .avail("q1", "A", ["stay"])
            .cost("q0", "A", "go", [1])
            .outcome("q0", ["go"], "q1")
            .outcome("q0", ["stay"], "q0")
            .outcome("q1", ["stay"], "q1");
        b.build().unwrap().0
    }

    fn q(m: &Model, name: &str) -> StateId {
        m.state(name).unwrap()
    }

    fn coalition(m: &Model, names: &[&str]) -> BTreeSet<AgentId> {
        names.iter().map(|n| m.agent(n).unwrap()).collect()
    }

    fn set(m: &Model, names: &[&str]) -> BTreeSet<StateId> {
        names.iter().map(|n| q(m, n)).collect()
    }

    #[test]
    fn eventually_all_states_holds_with_zero_budget() {
        let m = pay_to_move();
        let query = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![0]),
            operator: TemporalOp::Eventually {
                goal: set(&m, &["q0", "q1"]),
            },
            start: q(&m, "q0"),
        };
        assert!(check(&m, &query).unwrap().holds);
    }

    #[test]
    fn reaching_q1_needs_one_money() {
        let m = pay_to_move();
        let goal = set(&m, &["q1"]);
        let with_budget = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![1]),
            operator: TemporalOp::Eventually { goal: goal.clone() },
            start: q(&m, "q0"),
        };
        let r = check(&m, &with_budget).unwrap();
        assert!(r.holds);
        let witness = r.witness_strategy.expect("witness for a held query");
        assert!(replay_witness(&m, &with_budget, &witness).unwrap());

        let broke = CoalitionQuery {
            budget: ResourceVector::new(vec![0]),
            ..with_budget
        };
        assert!(!check(&m, &broke).unwrap().holds);
    }

    #[test]
    fn globally_holds_on_zero_cost_cycles_only() {
        let m = pay_to_move();
        // Staying at q0 is free: G {q0} holds on zero budget.
        let stay_safe = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![0]),
            operator: TemporalOp::Globally {
                safe: set(&m, &["q0"]),
            },
            start: q(&m, "q0"),
        };
        assert!(check(&m, &stay_safe).unwrap().holds);

        // A model whose only loop costs money cannot sustain G.
        let mut b = ModelBuilder::new();
        b.agent("A")
            .resource("money")
            .state("q0", true)
            .action("burn")
            .avail("q0", "A", ["burn"])
            .cost("q0", "A", "burn", [1])
            .outcome("q0", ["burn"], "q0");
        let burner = b.build().unwrap().0;
        let never = CoalitionQuery {
            coalition: coalition(&burner, &["A"]),
            budget: ResourceVector::new(vec![3]),
            operator: TemporalOp::Globally {
                safe: set(&burner, &["q0"]),
            },
            start: q(&burner, "q0"),
        };
        assert!(!check(&burner, &never).unwrap().holds);
    }

    #[test]
    fn until_charges_the_entering_step() {
        let m = pay_to_move();
        let query = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![1]),
            operator: TemporalOp::Until {
                hold: set(&m, &["q0"]),
                goal: set(&m, &["q1"]),
            },
            start: q(&m, "q0"),
        };
        assert!(check(&m, &query).unwrap().holds);
        let broke = CoalitionQuery {
            budget: ResourceVector::new(vec![0]),
            ..query
        };
        assert!(!check(&m, &broke).unwrap().holds);
    }

    #[test]
    fn next_requires_a_forcing_move() {
        let m = pay_to_move();
        let query = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![1]),
            operator: TemporalOp::Next {
                goal: set(&m, &["q1"]),
            },
            start: q(&m, "q0"),
        };
        let r = check(&m, &query).unwrap();
        assert!(r.holds);
        assert!(replay_witness(&m, &query, &r.witness_strategy.unwrap()).unwrap());

        let broke = CoalitionQuery {
            budget: ResourceVector::new(vec![0]),
            ..query
        };
        assert!(!check(&m, &broke).unwrap().holds);
    }

    fn opponent_model() -> Model {
        // B can divert unless A pays to lock the path: at q0, if A plays
        // `lock` (cost 1) the outcome is q1 regardless of B; if A plays
        // `free`, B chooses between q1 and q2.
        let mut b = ModelBuilder::new();
        b.agent("A")
            .agent("B")
            .resource("money")
            .state("q0", true)
            .state("q1", false)
            .state("q2", false)
            .action("lock")
            .action("free")
            .action("left")
            .action("right")
            .avail("q0", "A", ["lock", "free"])
            .avail("q0", "B", ["left", "right"])
            .avail("q1", "A", ["free"])
            .avail("q1", "B", ["left"])
            .avail("q2", "A", ["free"])
            .avail("q2", "B", ["left"])
            .cost("q0", "A", "lock", [1])
            .outcome("q0", ["lock", "left"], "q1")
            .outcome("q0", ["lock", "right"], "q1")
            .outcome("q0", ["free", "left"], "q1")
            .outcome("q0", ["free", "right"], "q2")
            .outcome("q1", ["free", "left"], "q1")
            .outcome("q2", ["free", "left"], "q2");
        b.build().unwrap().0
    }

    #[test]
    fn opponents_are_quantified_universally() {
        let m = opponent_model();
        let goal = set(&m, &["q1"]);
        let paid = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![1]),
            operator: TemporalOp::Eventually { goal: goal.clone() },
            start: q(&m, "q0"),
        };
        let r = check(&m, &paid).unwrap();
        assert!(r.holds);
        assert!(replay_witness(&m, &paid, &r.witness_strategy.unwrap()).unwrap());

        // Without money A cannot lock, and B can forever pick `right`.
        let broke = CoalitionQuery {
            budget: ResourceVector::new(vec![0]),
            ..paid
        };
        assert!(!check(&m, &broke).unwrap().holds);

        // The empty coalition cannot force it even with budget.
        let nobody = CoalitionQuery {
            coalition: BTreeSet::new(),
            budget: ResourceVector::new(vec![1]),
            operator: TemporalOp::Eventually { goal },
            start: q(&m, "q0"),
        };
        let r = check(&m, &nobody).unwrap();
        assert!(!r.holds);
        assert!(r.witness_strategy.is_none());
    }

    #[test]
    fn budget_dimension_mismatch_is_rejected() {
        let m = pay_to_move();
        let query = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![1, 2]),
            operator: TemporalOp::Eventually {
                goal: set(&m, &["q1"]),
            },
            start: q(&m, "q0"),
        };
        assert!(matches!(
            check(&m, &query),
            Err(VerifyError::BudgetDimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn configs_stay_within_the_bound_and_are_deterministic() {
        let m = opponent_model();
        let query = CoalitionQuery {
            coalition: coalition(&m, &["A"]),
            budget: ResourceVector::new(vec![2]),
            operator: TemporalOp::Eventually {
                goal: set(&m, &["q1"]),
            },
            start: q(&m, "q0"),
        };
        let probe = complexity_probe(&m, &query).unwrap();
        assert!(probe.within_bound);
        assert_eq!(probe.budget_points, 3);
        let again = check(&m, &query).unwrap();
        assert_eq!(again.configs_explored, probe.configs_explored);
        assert_eq!(again.holds, probe.holds);
    }

    #[test]
    fn norm_enforceability_runs_on_the_product() {
        let m = pay_to_move();
        let mon = crate::norms::universal_ok(m.agent_count());
        let r = check_norm_enforceable(&m, &mon, &BTreeSet::new(), &ResourceVector::new(vec![0]))
            .unwrap();
        assert!(r.holds);

        let bad_q1 = crate::norms::state_norm(&m, &[q(&m, "q1")]).unwrap();
        // Nobody steering: violation stays possible.
        let r =
            check_norm_enforceable(&m, &bad_q1, &BTreeSet::new(), &ResourceVector::new(vec![0]))
                .unwrap();
        assert!(!r.holds);
        // A avoids q1 for free by staying.
        let r = check_norm_enforceable(
            &m,
            &bad_q1,
            &coalition(&m, &["A"]),
            &ResourceVector::new(vec![0]),
        )
        .unwrap();
        assert!(r.holds);
    }

    #[test]
    fn some_norms_cannot_be_enforced_at_any_price() {
        // B alone decides whether the run enters the bad state; no budget
        // lets A prevent it.
        let mut b = ModelBuilder::new();
        b.agent("A")
            .agent("B")
            .resource("money")
            .state("q0", true)
            .state("qgood", false)
            .state("qbad", false)
            .action("noop")
            .action("left")
            .action("right")
            .avail("q0", "A", ["noop"])
            .avail("q0", "B", ["left", "right"])
            .avail("qgood", "A", ["noop"])
            .avail("qgood", "B", ["left"])
            .avail("qbad", "A", ["noop"])
            .avail("qbad", "B", ["left"])
            .outcome("q0", ["noop", "left"], "qgood")
            .outcome("q0", ["noop", "right"], "qbad")
            .outcome("qgood", ["noop", "left"], "qgood")
            .outcome("qbad", ["noop", "left"], "qbad");
        let m = b.build().unwrap().0;
        let mon = crate::norms::state_norm(&m, &[q(&m, "qbad")]).unwrap();
        for budget in [0u64, 3, 9] {
            let r = check_norm_enforceable(
                &m,
                &mon,
                &coalition(&m, &["A"]),
                &ResourceVector::new(vec![budget]),
            )
            .unwrap();
            assert!(!r.holds, "spending {budget} cannot stop B");
        }
        // B itself can keep the run safe for free.
        let r = check_norm_enforceable(
            &m,
            &mon,
            &coalition(&m, &["B"]),
            &ResourceVector::new(vec![0]),
        )
        .unwrap();
        assert!(r.holds);
    }

    #[test]
    fn check_many_aggregates_over_start_states() {
        // Two initial states; only one can reach q1 at all.
        let mut b = ModelBuilder::new();
        b.agent("A")
            .resource("money")
            .state("q0", true)
            .state("stuck", true)
            .state("q1", false)
            .action("go")
            .action("stay")
            .avail("q0", "A", ["go", "stay"])
            .avail("stuck", "A", ["stay"])
            .avail("q1", "A", ["stay"])
            .outcome("q0", ["go"], "q1")
            .outcome("q0", ["stay"], "q0")
            .outcome("stuck", ["stay"], "stuck")
            .outcome("q1", ["stay"], "q1");
        let m = b.build().unwrap().0;
        let goal = set(&m, &["q1"]);
        let starts = m.initial_states().to_vec();
        let (per_start, combined) = check_many(
            &m,
            &coalition(&m, &["A"]),
            &ResourceVector::new(vec![0]),
            &TemporalOp::Eventually { goal },
            &starts,
        )
        .unwrap();
        let by_name: Vec<(&str, bool)> = per_start
            .iter()
            .map(|(q, h)| (m.state_name(*q), *h))
            .collect();
        assert!(by_name.contains(&("q0", true)));
        assert!(by_name.contains(&("stuck", false)));
        assert!(!combined.holds);
        assert!(combined.witness_strategy.is_none());
    }

    #[test]
    fn regimented_models_need_no_coalition_to_stay_compliant() {
        // Ban `go` at q0, regiment, then ask whether compliance is simply
        // inevitable in the output: it is, with nobody steering.
        let m = pay_to_move();
        let mon = crate::norms::action_norm(
            &m,
            &[(q(&m, "q0"), m.agent("A").unwrap(), m.action("go").unwrap())],
        )
        .unwrap();
        let reg = crate::coordination::regiment(&m, &mon, false).unwrap();
        let lifted = reg.product.lifted_violation_norm().unwrap();
        let r = check_norm_enforceable(
            &reg.product.model,
            &lifted,
            &BTreeSet::new(),
            &ResourceVector::new(vec![0]),
        )
        .unwrap();
        assert!(r.holds);
    }

    #[test]
    fn query_parser_accepts_the_cli_surface() {
        let m = opponent_model();
        let q0 = q(&m, "q0");

        let parsed = parse_query(&m, "<<A budget=[1]>> F {q1}", q0).unwrap();
        assert_eq!(parsed.coalition, coalition(&m, &["A"]));
        assert_eq!(parsed.budget, ResourceVector::new(vec![1]));
        assert!(matches!(parsed.operator, TemporalOp::Eventually { .. }));

        let parsed = parse_query(&m, "<<K:A,B budget=[2]>> G {q0,q1}", q0).unwrap();
        assert_eq!(parsed.coalition, coalition(&m, &["A", "B"]));

        let parsed = parse_query(&m, "<<>> {q0} U {q1}", q0).unwrap();
        assert!(parsed.coalition.is_empty());
        assert!(matches!(parsed.operator, TemporalOp::Until { .. }));

        let parsed = parse_query(&m, "<<A>> X {q1}", q0).unwrap();
        assert_eq!(parsed.budget, ResourceVector::zero(1));

        let err = parse_query(&m, "<<A>> F {nowhere}", q0).unwrap_err();
        assert!(err.message.contains("unknown state"));

        let err = parse_query(&m, "<<A>> Z {q1}", q0).unwrap_err();
        assert!(err.expected.is_some());
    }
}
