//! Norm enforcement transforms and their audits.
//!
//! All three transforms operate on the model x monitor product, because
//! forbidding or pricing "actions that lead to a bad behavior" is history
//! dependent in general. Product states are `(base state, monitor state)`
//! pairs; when the monitor is memoryless (plain state or action norms) the
//! product collapses back to an availability update of the base model.
//!
//! - [`regiment`] removes exactly the joint actions that enter the attractor
//!   of the violation states — the least restrictive pruning that makes
//!   violations unreachable.
//! - [`sanction`] leaves the transition structure untouched and adds the
//!   sanction value to the money cost of the action components that trigger
//!   a violation.
//! - [`repair_extend`] rewrites a monitor so that a violation opens a
//!   bounded window of pending states; playing the designated repair action
//!   inside the window returns the monitor to its pre-violation state.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::behavior::{enumerate_lassos, BehaviorError, Step, Trace};
use crate::model::{
    ActionId, AgentId, Model, ModelBuilder, ModelError, ResourceId, ResourceVector, StateId,
};
use crate::norms::{
    classify_lasso, exists_violation, state_norm, ActionPattern, MonitorRule, MonitorState,
    MonitorStateId, MonitorStatus, NormError, NormMonitor,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoordError {
    #[error("norm is unenforceable: every behavior from initial state `{state}` violates it")]
    NormUnenforceable { state: String },
    #[error("regimentation deadlocks reachable states: {}", states.join(", "))]
    DeadlockIntroduced { states: Vec<String> },
    #[error("invalid policy: {detail}")]
    InvalidPolicy { detail: String },
    #[error("repair action costs {declared} money at `{state}`/`{agent}`, below the compensation value {required}")]
    RepairCostTooLow {
        state: String,
        agent: String,
        required: u64,
        declared: u64,
    },
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

/// Who pays when a step triggers a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attribution {
    /// Charge the agents whose action components the violated rule
    /// constrains; if the rule constrains none, charge everyone.
    #[default]
    TriggeringAgent,
    /// Charge every agent on every violating step.
    Collective,
}

/// Sanctioning parameters: which resource is money and how much a violation
/// costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SanctionPolicy {
    pub money_resource: ResourceId,
    pub sanction_value: u64,
    pub attribution: Attribution,
}

impl SanctionPolicy {
    pub fn new(money_resource: ResourceId, sanction_value: u64) -> Result<Self, CoordError> {
        if sanction_value == 0 {
            return Err(CoordError::InvalidPolicy {
                detail: "sanction value sv must be at least 1".to_string(),
            });
        }
        Ok(Self {
            money_resource,
            sanction_value,
            attribution: Attribution::default(),
        })
    }

    pub fn with_attribution(mut self, attribution: Attribution) -> Self {
        self.attribution = attribution;
        self
    }
}

/// Reparation parameters: compensation value, the sanction it undercuts, the
/// repair window in steps, and the action whose play counts as paying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReparationPolicy {
    pub compensation_value: u64,
    pub sanction_value: u64,
    pub window: usize,
    pub repair_action: ActionId,
    pub money_resource: ResourceId,
}

impl ReparationPolicy {
    pub fn new(
        compensation_value: u64,
        sanction_value: u64,
        window: usize,
        repair_action: ActionId,
        money_resource: ResourceId,
    ) -> Result<Self, CoordError> {
        if compensation_value == 0 {
            return Err(CoordError::InvalidPolicy {
                detail: "compensation value cv must be at least 1".to_string(),
            });
        }
        if compensation_value >= sanction_value {
            return Err(CoordError::InvalidPolicy {
                detail: format!(
                    "compensation value cv={compensation_value} must be lower than the sanction value sv={sanction_value}"
                ),
            });
        }
        if window == 0 {
            return Err(CoordError::InvalidPolicy {
                detail: "repair window w must be at least 1".to_string(),
            });
        }
        Ok(Self {
            compensation_value,
            sanction_value,
            window,
            repair_action,
            money_resource,
        })
    }
}

/// Checks that wherever the repair action is available its declared money
/// cost covers the compensation value, so playing it really pays `cv`.
pub fn validate_repair_funding(m: &Model, policy: &ReparationPolicy) -> Result<(), CoordError> {
    for q in m.states() {
        for a in m.agents() {
            if !m.available(q, a).contains(&policy.repair_action) {
                continue;
            }
            let declared = m
                .declared_cost(q, a, policy.repair_action)
                .map(|v| v.get(policy.money_resource))
                .unwrap_or(0);
            if declared < policy.compensation_value {
                return Err(CoordError::RepairCostTooLow {
                    state: m.state_name(q).to_string(),
                    agent: m.agent_name(a).to_string(),
                    required: policy.compensation_value,
                    declared,
                });
            }
        }
    }
    Ok(())
}

/// The model x monitor product: a model over `(state, monitor state)` pairs
/// whose runs track the monitor alongside the game.
#[derive(Debug, Clone)]
pub struct ProductExpansion {
    pub model: Model,
    /// Product state -> (base state, monitor state).
    pub origin: Vec<(StateId, MonitorStateId)>,
    /// Product states whose monitor component has violation status.
    pub violation_states: Vec<StateId>,
    /// Product states whose monitor component has pending-repair status.
    pub pending_states: Vec<StateId>,
    index: BTreeMap<(StateId, MonitorStateId), StateId>,
}

impl ProductExpansion {
    pub fn find(&self, base: StateId, monitor: MonitorStateId) -> Option<StateId> {
        self.index.get(&(base, monitor)).copied()
    }

    /// The norm "never visit a violation product state", stated over the
    /// product model itself. Classifying product runs against it is
    /// equivalent to classifying their base projections against the original
    /// monitor.
    pub fn lifted_violation_norm(&self) -> Result<NormMonitor, NormError> {
        state_norm(&self.model, &self.violation_states)
    }
}

/// Builds the reachable product of a model and a monitor.
pub fn product_expansion(m: &Model, mon: &NormMonitor) -> Result<ProductExpansion, CoordError> {
    mon.validate_against(m)?;

    let mut order: Vec<(StateId, MonitorStateId)> = Vec::new();
    let mut seen: BTreeMap<(StateId, MonitorStateId), usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &q0 in m.initial_states() {
        let node = (q0, mon.initial());
        if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(node) {
            e.insert(order.len());
            order.push(node);
            queue.push_back(node);
        }
    }
    while let Some((q, ms)) = queue.pop_front() {
        for joint in m.joint_actions(q)? {
            let node = (m.step(q, joint)?, mon.delta(ms, q, joint));
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(node) {
                e.insert(order.len());
                order.push(node);
                queue.push_back(node);
            }
        }
    }

    // Unique display names for product states.
    let mut names: Vec<String> = Vec::with_capacity(order.len());
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for &(q, ms) in &order {
        let mut name = format!("{}__{}", m.state_name(q), mon.state_name(ms));
        let mut k = 2;
        while !taken.insert(name.clone()) {
            name = format!("{}__{}_{k}", m.state_name(q), mon.state_name(ms));
            k += 1;
        }
        names.push(name);
    }

    let initial_nodes: BTreeSet<(StateId, MonitorStateId)> = m
        .initial_states()
        .iter()
        .map(|&q0| (q0, mon.initial()))
        .collect();

    let mut b = ModelBuilder::new();
    for a in m.agents() {
        b.agent(m.agent_name(a));
    }
    for r in m.resources() {
        b.resource(m.resource_name(r));
    }
    for (ix, node) in order.iter().enumerate() {
        b.state(&names[ix], initial_nodes.contains(node));
    }
    for act in 0..m.action_count() {
        b.action(m.action_name(ActionId::new(act)));
    }
    for (ix, &(q, ms)) in order.iter().enumerate() {
        for a in m.agents() {
            let actions: Vec<&str> = m
                .available(q, a)
                .iter()
                .map(|&act| m.action_name(act))
                .collect();
            b.avail(&names[ix], m.agent_name(a), actions);
            for &act in m.available(q, a) {
                if let Some(v) = m.declared_cost(q, a, act) {
                    b.cost(
                        &names[ix],
                        m.agent_name(a),
                        m.action_name(act),
                        v.entries().iter().copied(),
                    );
                }
            }
        }
        if m.is_restricted(q) {
            b.restrict(&names[ix]);
        }
        for joint in m.joint_actions(q)? {
            let target = (m.step(q, joint)?, mon.delta(ms, q, joint));
            let target_ix = seen[&target];
            let labels: Vec<&str> = joint
                .choices()
                .iter()
                .map(|&act| m.action_name(act))
                .collect();
            b.outcome(&names[ix], labels, &names[target_ix]);
        }
    }

    let (model, _warnings) = b.build().map_err(|report| CoordError::InvalidPolicy {
        detail: format!("product construction failed: {report}"),
    })?;

    let mut index = BTreeMap::new();
    let mut violation_states = Vec::new();
    let mut pending_states = Vec::new();
    for (ix, &(q, ms)) in order.iter().enumerate() {
        let pid = StateId::new(ix);
        index.insert((q, ms), pid);
        match mon.status(ms) {
            MonitorStatus::Violation => violation_states.push(pid),
            MonitorStatus::PendingRepair => pending_states.push(pid),
            MonitorStatus::Ok => {}
        }
    }

    Ok(ProductExpansion {
        model,
        origin: order,
        violation_states,
        pending_states,
        index,
    })
}

/// One removed transition, rendered with display names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedEdge {
    pub state: String,
    pub action: String,
}

#[derive(Debug, Clone, Default)]
pub struct RegimentationReport {
    pub pruned: Vec<PrunedEdge>,
    pub deadlocked_states: Vec<String>,
    /// Pruning restricts the action space, so bounded-horizon censuses of
    /// compliant behavior may shrink even though no compliant infinite
    /// behavior is semantically removed.
    pub lost_compliant_behaviors_flag: bool,
}

#[derive(Debug, Clone)]
pub struct Regimented {
    pub product: ProductExpansion,
    pub report: RegimentationReport,
}

/// Computes the set of product states from which reaching a violation state
/// is unavoidable (or already happened).
fn violation_attractor(px: &ProductExpansion) -> Vec<bool> {
    let n = px.model.state_count();
    let mut attr = vec![false; n];
    for &p in &px.violation_states {
        attr[p.index()] = true;
    }
    loop {
        let mut changed = false;
        for p in px.model.states() {
            if attr[p.index()] {
                continue;
            }
            let joints = px.model.joint_actions(p).expect("product state");
            let doomed = joints.iter().all(|j| {
                let t = px.model.step(p, j).expect("product step");
                attr[t.index()]
            });
            if doomed {
                attr[p.index()] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    attr
}

/// Restricts the product so that no remaining transition enters the
/// violation attractor, making violations unreachable. Fails with
/// [`CoordError::NormUnenforceable`] when some initial state is already
/// inside the attractor.
pub fn regiment(
    m: &Model,
    mon: &NormMonitor,
    allow_deadlock: bool,
) -> Result<Regimented, CoordError> {
    let px = product_expansion(m, mon)?;
    let attr = violation_attractor(&px);

    for &q0 in px.model.initial_states() {
        if attr[q0.index()] {
            return Err(CoordError::NormUnenforceable {
                state: px.model.state_name(q0).to_string(),
            });
        }
    }

    let mut pruned = Vec::new();
    for p in px.model.states() {
        if attr[p.index()] {
            continue;
        }
        for joint in px.model.joint_actions(p)? {
            let t = px.model.step(p, joint)?;
            if attr[t.index()] {
                pruned.push(PrunedEdge {
                    state: px.model.state_name(p).to_string(),
                    action: px.model.render_joint_action(joint),
                });
            }
        }
    }

    let restricted = px
        .model
        .restrict_joint_actions(|p, joint| {
            let t = px.model.step(p, joint).expect("product step");
            !attr[t.index()]
        })
        .ok_or_else(|| CoordError::NormUnenforceable {
            state: px
                .model
                .initial_states()
                .first()
                .map(|&q| px.model.state_name(q).to_string())
                .unwrap_or_default(),
        })?;

    let deadlocked: Vec<String> = restricted
        .states()
        .filter(|&p| restricted.joint_actions(p).is_ok_and(|j| j.is_empty()))
        .map(|p| restricted.state_name(p).to_string())
        .collect();
    if !deadlocked.is_empty() && !allow_deadlock {
        return Err(CoordError::DeadlockIntroduced { states: deadlocked });
    }

    // Re-index the product metadata against the restricted state space.
    let mut origin = Vec::with_capacity(restricted.state_count());
    let mut index = BTreeMap::new();
    let mut violation_states = Vec::new();
    let mut pending_states = Vec::new();
    for p in restricted.states() {
        let old = px
            .model
            .state(restricted.state_name(p))
            .expect("restricted state exists in product");
        let node = px.origin[old.index()];
        origin.push(node);
        index.insert(node, p);
        if px.violation_states.contains(&old) {
            violation_states.push(p);
        }
        if px.pending_states.contains(&old) {
            pending_states.push(p);
        }
    }

    let lost_flag = !pruned.is_empty();
    Ok(Regimented {
        product: ProductExpansion {
            model: restricted,
            origin,
            violation_states,
            pending_states,
            index,
        },
        report: RegimentationReport {
            pruned,
            deadlocked_states: deadlocked,
            lost_compliant_behaviors_flag: lost_flag,
        },
    })
}

/// A sanctioned product model plus the cost entries it touched.
#[derive(Debug, Clone)]
pub struct Sanctioned {
    pub product: ProductExpansion,
    pub policy: SanctionPolicy,
    /// Cost entries that received the sanction, in the product model's ids.
    pub charged: Vec<(StateId, AgentId, ActionId)>,
}

/// Adds the sanction value to the money cost of every action component that
/// triggers a monitor violation. The transition structure is untouched; each
/// touched cost entry grows by exactly `sv` in the money component.
pub fn sanction(
    m: &Model,
    mon: &NormMonitor,
    policy: SanctionPolicy,
) -> Result<Sanctioned, CoordError> {
    if policy.money_resource.index() >= m.resource_count() {
        return Err(CoordError::InvalidPolicy {
            detail: format!(
                "money resource index {} out of range ({} resources)",
                policy.money_resource,
                m.resource_count()
            ),
        });
    }
    let px = product_expansion(m, mon)?;

    let mut charged: BTreeSet<(StateId, AgentId, ActionId)> = BTreeSet::new();
    for p in px.model.states() {
        let (q, ms) = px.origin[p.index()];
        if mon.status(ms) == MonitorStatus::Violation {
            continue;
        }
        for joint in px.model.joint_actions(p)? {
            let ms2 = mon.delta(ms, q, joint);
            if mon.status(ms2) != MonitorStatus::Violation {
                continue;
            }
            let blamed: Vec<AgentId> = match policy.attribution {
                Attribution::Collective => px.model.agents().collect(),
                Attribution::TriggeringAgent => {
                    let constrained = mon
                        .matching_rule(ms, q, joint)
                        .map(|r| r.action.constrained_agents())
                        .unwrap_or_default();
                    if constrained.is_empty() {
                        px.model.agents().collect()
                    } else {
                        constrained
                    }
                }
            };
            for a in blamed {
                charged.insert((p, a, joint.choice(a)));
            }
        }
    }

    let mut model = px.model.clone();
    for &(p, a, act) in &charged {
        let mut cost = model
            .declared_cost(p, a, act)
            .cloned()
            .unwrap_or_else(|| ResourceVector::zero(model.resource_count()));
        cost.bump(policy.money_resource, policy.sanction_value);
        model.override_cost(p, a, act, cost);
    }

    Ok(Sanctioned {
        product: ProductExpansion {
            model,
            origin: px.origin,
            violation_states: px.violation_states,
            pending_states: px.pending_states,
            index: px.index,
        },
        policy,
        charged: charged.into_iter().collect(),
    })
}

/// Extends a monitor with repair windows: entering what used to be a
/// violation now opens a chain of `w` pending states; a step whose joint
/// action includes the repair action returns the monitor to the state it
/// violated from, and exhausting the window lands in an absorbing violation.
pub fn repair_extend(
    mon: &NormMonitor,
    policy: &ReparationPolicy,
) -> Result<NormMonitor, CoordError> {
    if mon.has_pending_states() {
        return Err(CoordError::InvalidPolicy {
            detail: "monitor already carries repair windows".to_string(),
        });
    }
    if mon.status(mon.initial()) == MonitorStatus::Violation {
        // Degenerate norm rejecting everything at position 0: no step ever
        // enters the violation, so there is nothing to repair.
        return Ok(mon.clone());
    }
    let arity = mon.arity();
    let w = policy.window;

    let live: Vec<MonitorStateId> = mon
        .monitor_states()
        .filter(|&ms| mon.status(ms) != MonitorStatus::Violation)
        .collect();
    // Only states from which some rule can actually violate need a repair
    // chain.
    let chainable: BTreeSet<MonitorStateId> = live
        .iter()
        .copied()
        .filter(|&ms| {
            mon.rules().iter().any(|r| {
                r.from.map_or(true, |f| f == ms)
                    && mon.status(r.target) == MonitorStatus::Violation
            })
        })
        .collect();
    if chainable.is_empty() {
        // Nothing ever violates; the norm is already as tolerant as it gets.
        return Ok(mon.clone());
    }

    let mut states: Vec<MonitorState> = Vec::new();
    let mut remap: BTreeMap<MonitorStateId, MonitorStateId> = BTreeMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for &ms in &live {
        remap.insert(ms, MonitorStateId::new(states.len()));
        taken.insert(mon.state_name(ms).to_string());
        states.push(MonitorState {
            name: mon.state_name(ms).to_string(),
            status: mon.status(ms),
        });
    }
    let unique = |taken: &mut BTreeSet<String>, base: String| {
        let mut name = base.clone();
        let mut k = 2;
        while !taken.insert(name.clone()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        name
    };
    // One pending chain per state that can violate.
    let mut pending: BTreeMap<(MonitorStateId, usize), MonitorStateId> = BTreeMap::new();
    for &ms in &chainable {
        for k in 1..=w {
            let name = unique(&mut taken, format!("{}__r{k}", mon.state_name(ms)));
            pending.insert((ms, k), MonitorStateId::new(states.len()));
            states.push(MonitorState {
                name,
                status: MonitorStatus::PendingRepair,
            });
        }
    }
    let violated_name = mon
        .monitor_states()
        .find(|&ms| mon.status(ms) == MonitorStatus::Violation)
        .map(|ms| mon.state_name(ms).to_string())
        .unwrap_or_else(|| "violated".to_string());
    let violated = MonitorStateId::new(states.len());
    states.push(MonitorState {
        name: unique(&mut taken, violated_name),
        status: MonitorStatus::Violation,
    });

    // Specialize every original rule per live source state, rerouting
    // violating targets into that state's pending chain. Specialization keeps
    // first-match order and stops global rules from leaking into the pending
    // states.
    let mut rules: Vec<MonitorRule> = Vec::new();
    for rule in mon.rules() {
        let sources: Vec<MonitorStateId> = match rule.from {
            Some(ms) => {
                if mon.status(ms) == MonitorStatus::Violation {
                    continue;
                }
                vec![ms]
            }
            None => live.clone(),
        };
        for ms in sources {
            let target = if mon.status(rule.target) == MonitorStatus::Violation {
                pending[&(ms, 1)]
            } else {
                remap[&rule.target]
            };
            rules.push(MonitorRule {
                from: Some(remap[&ms]),
                source: rule.source,
                action: rule.action.clone(),
                target,
            });
        }
    }
    // Pending-chain rules: repair returns to the pre-violation state, other
    // steps advance the window, the last window step drops into violation.
    for &ms in &chainable {
        for k in 1..=w {
            let here = pending[&(ms, k)];
            for agent in 0..arity {
                rules.push(MonitorRule {
                    from: Some(here),
                    source: None,
                    action: ActionPattern::single(arity, AgentId::new(agent), policy.repair_action),
                    target: remap[&ms],
                });
            }
            rules.push(MonitorRule {
                from: Some(here),
                source: None,
                action: ActionPattern::wildcard(arity),
                target: if k < w {
                    pending[&(ms, k + 1)]
                } else {
                    violated
                },
            });
        }
    }

    Ok(NormMonitor::new(
        &format!("{}__repair", mon.name()),
        states,
        remap[&mon.initial()],
        rules,
        arity,
    )?)
}

/// Counts the lassos from every initial state with total length within the
/// bound that the monitor classifies as compliant.
pub fn compliant_census(m: &Model, mon: &NormMonitor, bound: usize) -> Result<usize, CoordError> {
    let mut count = 0;
    for &q0 in m.initial_states() {
        for lasso in enumerate_lassos(m, q0, bound)? {
            if classify_lasso(m, mon, &lasso)?.is_compliant() {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Counts every lasso from every initial state within the bound.
pub fn lasso_census(m: &Model, bound: usize) -> Result<usize, CoordError> {
    let mut count = 0;
    for &q0 in m.initial_states() {
        count += enumerate_lassos(m, q0, bound)?.len();
    }
    Ok(count)
}

/// Output of one enforcement transform, for auditing.
#[derive(Debug, Clone)]
pub enum TransformOutcome {
    Regimented(Regimented),
    Sanctioned(Sanctioned),
    Repaired {
        monitor: NormMonitor,
        policy: ReparationPolicy,
    },
}

/// Audit of a transform against the original system.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub mode: &'static str,
    pub violation_before: bool,
    pub violation_after: bool,
    pub census_bound: usize,
    pub compliant_before: usize,
    pub compliant_after: usize,
    /// Mode-specific measurements, in render order.
    pub extras: Vec<(String, String)>,
}

/// Measures what a transform did: whether violations remain reachable, how
/// the bounded compliant-lasso census moved, and mode-specific figures (cost
/// uplift for sanctions, repair-window statistics for reparation).
pub fn enforcement_audit(
    m: &Model,
    mon: &NormMonitor,
    outcome: &TransformOutcome,
    census_bound: usize,
) -> Result<AuditReport, CoordError> {
    let violation_before = exists_violation(m, mon)?.is_some();
    let compliant_before = compliant_census(m, mon, census_bound)?;

    match outcome {
        TransformOutcome::Regimented(reg) => {
            let lifted = reg.product.lifted_violation_norm()?;
            let violation_after = exists_violation(&reg.product.model, &lifted)?.is_some();
            let compliant_after = lasso_census(&reg.product.model, census_bound)?;
            Ok(AuditReport {
                mode: "regiment",
                violation_before,
                violation_after,
                census_bound,
                compliant_before,
                compliant_after,
                extras: vec![
                    ("pruned_edges".into(), reg.report.pruned.len().to_string()),
                    (
                        "deadlocked_states".into(),
                        reg.report.deadlocked_states.len().to_string(),
                    ),
                    (
                        "compliant_lassos_lost".into(),
                        compliant_before.saturating_sub(compliant_after).to_string(),
                    ),
                ],
            })
        }
        TransformOutcome::Sanctioned(s) => {
            let lifted = s.product.lifted_violation_norm()?;
            let violation_after = exists_violation(&s.product.model, &lifted)?.is_some();
            let mut extras = vec![
                ("entries_touched".into(), s.charged.len().to_string()),
                ("sv".into(), s.policy.sanction_value.to_string()),
                (
                    "money_resource".into(),
                    m.resource_name(s.policy.money_resource).to_string(),
                ),
            ];
            if let Some(extra) = sanction_witness_uplift(m, mon, s)? {
                extras.push(("witness_extra_money_cost".into(), extra.to_string()));
            }
            Ok(AuditReport {
                mode: "sanction",
                violation_before,
                violation_after,
                census_bound,
                compliant_before,
                // Sanctioning preserves the transition structure, so the
                // compliant behavior set is unchanged by construction.
                compliant_after: compliant_before,
                extras,
            })
        }
        TransformOutcome::Repaired { monitor, policy } => {
            let violation_after = exists_violation(m, monitor)?.is_some();
            let compliant_after = compliant_census(m, monitor, census_bound)?;
            Ok(AuditReport {
                mode: "repair",
                violation_before,
                violation_after,
                census_bound,
                compliant_before,
                compliant_after,
                extras: vec![
                    ("w".into(), policy.window.to_string()),
                    ("cv".into(), policy.compensation_value.to_string()),
                    ("sv".into(), policy.sanction_value.to_string()),
                    (
                        "repaired_lassos".into(),
                        compliant_after.saturating_sub(compliant_before).to_string(),
                    ),
                ],
            })
        }
    }
}

/// Extra money the violating witness behavior pays under the sanctioned
/// costs, summed over all agents for one pass (stem plus one cycle round).
fn sanction_witness_uplift(
    m: &Model,
    mon: &NormMonitor,
    s: &Sanctioned,
) -> Result<Option<u64>, CoordError> {
    let Some(witness) = exists_violation(m, mon)? else {
        return Ok(None);
    };
    let money = s.policy.money_resource;
    let mut base_total = 0u64;
    let mut sanctioned_total = 0u64;
    let mut ms = mon.initial();
    let mut one_pass: Vec<Step> = witness.stem().steps().to_vec();
    one_pass.extend_from_slice(witness.cycle());
    for step in one_pass {
        let p = s
            .product
            .find(step.source, ms)
            .expect("witness stays inside the reachable product");
        for a in m.agents() {
            let act = step.action.choice(a);
            base_total += m.action_cost(step.source, a, act)?.get(money);
            sanctioned_total += s.product.model.action_cost(p, a, act)?.get(money);
        }
        ms = mon.delta(ms, step.source, &step.action);
    }
    Ok(Some(sanctioned_total - base_total))
}

/// Maps a trace of a product model back to the base model it expanded.
pub fn project_trace(
    px: &ProductExpansion,
    base: &Model,
    trace: &Trace,
) -> Result<Trace, CoordError> {
    let (q0, _) = px.origin[trace.start().index()];
    let mut out = Trace::starting_at(q0);
    for step in trace.steps() {
        out = out.extended(base, step.action.clone())?;
    }
    Ok(out)
}
