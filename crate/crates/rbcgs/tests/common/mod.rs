//! Shared test support: a deterministic PRNG, random model and monitor
//! generators, and independent oracles the integration suites check the
//! engines against. Oracles deliberately re-implement semantics step by
//! step rather than calling the code paths under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rbcgs::behavior::Lasso;
use rbcgs::model::{ActionId, AgentId, JointAction, Model, ModelBuilder, ResourceVector, StateId};
use rbcgs::norms::{
    ActionPattern, MonitorRule, MonitorState, MonitorStateId, MonitorStatus, NormMonitor, Verdict,
};
use rbcgs::verify::TemporalOp;

/// SplitMix64: tiny, seedable, identical on every platform.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

pub struct GenCaps {
    pub max_states: u64,
    pub max_agents: u64,
    pub max_actions: u64,
    pub max_resources: u64,
    /// Upper bound on the joint-action count per state, to keep exhaustive
    /// enumeration cheap.
    pub joint_cap: u64,
}

impl GenCaps {
    pub fn desk() -> Self {
        GenCaps {
            max_states: 6,
            max_agents: 3,
            max_actions: 3,
            max_resources: 2,
            joint_cap: 4,
        }
    }

    pub fn verifier() -> Self {
        GenCaps {
            max_states: 4,
            max_agents: 2,
            max_actions: 2,
            max_resources: 2,
            joint_cap: 4,
        }
    }
}

/// Draws a random valid model within the caps. Availability subsets are
/// sized so the joint-action product per state stays within `joint_cap`;
/// roughly half the cost entries are left undeclared to exercise the
/// zero-cost default.
pub fn gen_model(rng: &mut Rng, caps: &GenCaps) -> Model {
    let n_agents = 1 + rng.below(caps.max_agents) as usize;
    let n_actions = 1 + rng.below(caps.max_actions) as usize;
    let n_states = 1 + rng.below(caps.max_states) as usize;
    let n_resources = 1 + rng.below(caps.max_resources) as usize;

    let agents: Vec<String> = (0..n_agents).map(|i| format!("a{i}")).collect();
    let actions: Vec<String> = (0..n_actions).map(|i| format!("act{i}")).collect();
    let states: Vec<String> = (0..n_states).map(|i| format!("q{i}")).collect();

    let mut b = ModelBuilder::new();
    for a in &agents {
        b.agent(a);
    }
    for r in 0..n_resources {
        b.resource(&format!("r{r}"));
    }
    let definite_initial = rng.below(n_states as u64) as usize;
    for (i, q) in states.iter().enumerate() {
        b.state(q, i == definite_initial || rng.chance(1, 4));
    }
    for act in &actions {
        b.action(act);
    }

    for q in &states {
        let mut product = 1u64;
        let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(n_agents);
        for a in &agents {
            let room = (caps.joint_cap / product).max(1);
            let max_size = (n_actions as u64).min(room).max(1);
            let size = 1 + rng.below(max_size);
            product *= size;
            let mut set = BTreeSet::new();
            while (set.len() as u64) < size {
                set.insert(rng.below(n_actions as u64) as usize);
            }
            let set: Vec<usize> = set.into_iter().collect();
            b.avail(q, a, set.iter().map(|&i| actions[i].as_str()));
            chosen.push(set);
        }
        for (ai, a) in agents.iter().enumerate() {
            for &act in &chosen[ai] {
                if rng.chance(1, 2) {
                    let vector: Vec<u64> = (0..n_resources).map(|_| rng.below(3)).collect();
                    b.cost(q, a, &actions[act], vector);
                }
            }
        }
        // Outcomes total on the availability product.
        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for set in &chosen {
            let mut next = Vec::new();
            for prefix in &combos {
                for &act in set {
                    let mut joint = prefix.clone();
                    joint.push(act);
                    next.push(joint);
                }
            }
            combos = next;
        }
        for joint in combos {
            let target = rng.below(n_states as u64) as usize;
            b.outcome(
                q,
                joint.iter().map(|&i| actions[i].as_str()),
                &states[target],
            );
        }
    }

    b.build().expect("generator emits valid models").0
}

/// Random bad-state subset (possibly empty).
pub fn gen_bad_states(rng: &mut Rng, m: &Model) -> Vec<StateId> {
    m.states().filter(|_| rng.chance(1, 3)).collect()
}

/// Random banned `(state, agent, action)` triples, all inside availability.
pub fn gen_bad_triples(rng: &mut Rng, m: &Model) -> Vec<(StateId, AgentId, ActionId)> {
    let mut out = Vec::new();
    for q in m.states() {
        for a in m.agents() {
            for &act in m.available(q, a) {
                if rng.chance(1, 6) {
                    out.push((q, a, act));
                }
            }
        }
    }
    out
}

/// Random monitor: a state norm, an action norm, or a 3-state rule monitor
/// with random specific rules in front of per-state defaults.
pub fn gen_monitor(rng: &mut Rng, m: &Model) -> NormMonitor {
    match rng.below(3) {
        0 => rbcgs::norms::state_norm(m, &gen_bad_states(rng, m)).expect("states in range"),
        1 => rbcgs::norms::action_norm(m, &gen_bad_triples(rng, m)).expect("triples legal"),
        _ => {
            let arity = m.agent_count();
            let s0 = MonitorStateId::new(0);
            let s1 = MonitorStateId::new(1);
            let bad = MonitorStateId::new(2);
            let states = vec![
                MonitorState {
                    name: "s0".into(),
                    status: MonitorStatus::Ok,
                },
                MonitorState {
                    name: "s1".into(),
                    status: MonitorStatus::Ok,
                },
                MonitorState {
                    name: "bad".into(),
                    status: MonitorStatus::Violation,
                },
            ];
            let mut rules = Vec::new();
            for _ in 0..(1 + rng.below(3)) {
                let from = if rng.chance(1, 2) { s0 } else { s1 };
                let source = if rng.chance(1, 2) {
                    Some(StateId::new(rng.below(m.state_count() as u64) as usize))
                } else {
                    None
                };
                let slots: Vec<Option<ActionId>> = (0..arity)
                    .map(|_| {
                        if rng.chance(1, 2) {
                            Some(ActionId::new(rng.below(m.action_count() as u64) as usize))
                        } else {
                            None
                        }
                    })
                    .collect();
                let target = match rng.below(3) {
                    0 => s0,
                    1 => s1,
                    _ => bad,
                };
                rules.push(MonitorRule {
                    from: Some(from),
                    source,
                    action: ActionPattern::new(slots),
                    target,
                });
            }
            rules.push(MonitorRule {
                from: Some(s0),
                source: None,
                action: ActionPattern::wildcard(arity),
                target: s0,
            });
            rules.push(MonitorRule {
                from: Some(s1),
                source: None,
                action: ActionPattern::wildcard(arity),
                target: s1,
            });
            NormMonitor::new("random_rules", states, s0, rules, arity).expect("well-formed")
        }
    }
}

/// Independent monitor transition: a naive first-match rule scan that does
/// not go through `NormMonitor::delta`.
fn oracle_delta(
    mon: &NormMonitor,
    ms: MonitorStateId,
    source: StateId,
    action: &JointAction,
) -> MonitorStateId {
    if mon.status(ms) == MonitorStatus::Violation {
        return ms;
    }
    for rule in mon.rules() {
        if let Some(from) = rule.from {
            if from != ms {
                continue;
            }
        }
        if let Some(want) = rule.source {
            if want != source {
                continue;
            }
        }
        let slots = rule.action.slots();
        if slots.len() != action.arity() {
            continue;
        }
        let matched = slots
            .iter()
            .zip(action.choices())
            .all(|(pat, act)| pat.is_none_or(|p| p == *act));
        if matched {
            return rule.target;
        }
    }
    ms
}

/// Brute-force classification: unroll the stem plus `monitor states + 1`
/// cycle rounds and simulate step by step.
pub fn oracle_classify(mon: &NormMonitor, lasso: &Lasso) -> Verdict {
    let mut ms = mon.initial();
    if mon.status(ms) == MonitorStatus::Violation {
        return Verdict::Violating { position: 0 };
    }
    let total = lasso.stem().len() + (mon.state_count() + 1) * lasso.cycle().len();
    for i in 0..total {
        let step = lasso.step_at(i);
        ms = oracle_delta(mon, ms, step.source, &step.action);
        if mon.status(ms) == MonitorStatus::Violation {
            return Verdict::Violating { position: i };
        }
    }
    Verdict::Compliant
}

/// All coalition action tuples at `q`, enumerated from the availability
/// sets directly.
fn oracle_moves(m: &Model, q: StateId, coalition: &[AgentId]) -> Vec<Vec<ActionId>> {
    let mut out = vec![Vec::new()];
    for &a in coalition {
        let mut next = Vec::new();
        for prefix in &out {
            for &act in m.available(q, a) {
                let mut tuple = prefix.clone();
                tuple.push(act);
                next.push(tuple);
            }
        }
        out = next;
    }
    out
}

/// Joint actions compatible with a coalition tuple.
fn oracle_completions(
    m: &Model,
    q: StateId,
    coalition: &[AgentId],
    tuple: &[ActionId],
) -> Vec<JointAction> {
    m.joint_actions(q)
        .expect("state in range")
        .iter()
        .filter(|joint| {
            coalition
                .iter()
                .zip(tuple)
                .all(|(&a, &act)| joint.choice(a) == act)
        })
        .cloned()
        .collect()
}

fn tuple_cost(m: &Model, q: StateId, coalition: &[AgentId], tuple: &[ActionId]) -> Vec<u64> {
    let mut total = vec![0u64; m.resource_count()];
    for (&a, &act) in coalition.iter().zip(tuple) {
        let cost = m.action_cost(q, a, act).expect("available action");
        for (t, c) in total.iter_mut().zip(cost.entries()) {
            *t += c;
        }
    }
    total
}

fn sub_budget(beta: &[u64], cost: &[u64]) -> Option<Vec<u64>> {
    beta.iter()
        .zip(cost)
        .map(|(b, c)| b.checked_sub(*c))
        .collect()
}

type Memo = BTreeMap<(StateId, Vec<u64>, usize), bool>;

/// Depth-bounded AND-OR search over budget-annotated strategies. The depth
/// bound `|Q| * prod(b_i + 1)` covers every attractor rank, so the answer
/// equals the unbounded game.
pub fn oracle_check(
    m: &Model,
    coalition: &[AgentId],
    budget: &[u64],
    op: &TemporalOp,
    start: StateId,
) -> bool {
    let depth: usize =
        m.state_count() * budget.iter().map(|b| (*b + 1) as usize).product::<usize>() + 1;
    let mut memo = Memo::new();
    match op {
        TemporalOp::Next { goal } => {
            for tuple in oracle_moves(m, start, coalition) {
                if sub_budget(budget, &tuple_cost(m, start, coalition, &tuple)).is_none() {
                    continue;
                }
                let all_in = oracle_completions(m, start, coalition, &tuple)
                    .iter()
                    .all(|joint| goal.contains(&m.step(start, joint).expect("legal")));
                if all_in {
                    return true;
                }
            }
            false
        }
        TemporalOp::Eventually { goal } => {
            oracle_reach(m, coalition, start, budget, depth, None, goal, &mut memo)
        }
        TemporalOp::Until { hold, goal } => oracle_reach(
            m,
            coalition,
            start,
            budget,
            depth,
            Some(hold),
            goal,
            &mut memo,
        ),
        TemporalOp::Globally { safe } => {
            oracle_maintain(m, coalition, start, budget, depth, safe, &mut memo)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn oracle_reach(
    m: &Model,
    coalition: &[AgentId],
    q: StateId,
    beta: &[u64],
    depth: usize,
    hold: Option<&BTreeSet<StateId>>,
    goal: &BTreeSet<StateId>,
    memo: &mut Memo,
) -> bool {
    if goal.contains(&q) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    if let Some(hold) = hold {
        if !hold.contains(&q) {
            return false;
        }
    }
    let key = (q, beta.to_vec(), depth);
    if let Some(&cached) = memo.get(&key) {
        return cached;
    }
    let mut won = false;
    for tuple in oracle_moves(m, q, coalition) {
        let Some(remaining) = sub_budget(beta, &tuple_cost(m, q, coalition, &tuple)) else {
            continue;
        };
        let all = oracle_completions(m, q, coalition, &tuple)
            .iter()
            .all(|joint| {
                let target = m.step(q, joint).expect("legal");
                oracle_reach(
                    m,
                    coalition,
                    target,
                    &remaining,
                    depth - 1,
                    hold,
                    goal,
                    memo,
                )
            });
        if all {
            won = true;
            break;
        }
    }
    memo.insert(key, won);
    won
}

fn oracle_maintain(
    m: &Model,
    coalition: &[AgentId],
    q: StateId,
    beta: &[u64],
    depth: usize,
    safe: &BTreeSet<StateId>,
    memo: &mut Memo,
) -> bool {
    if !safe.contains(&q) {
        return false;
    }
    if depth == 0 {
        return true;
    }
    let key = (q, beta.to_vec(), depth);
    if let Some(&cached) = memo.get(&key) {
        return cached;
    }
    let mut won = false;
    for tuple in oracle_moves(m, q, coalition) {
        let Some(remaining) = sub_budget(beta, &tuple_cost(m, q, coalition, &tuple)) else {
            continue;
        };
        let all = oracle_completions(m, q, coalition, &tuple)
            .iter()
            .all(|joint| {
                let target = m.step(q, joint).expect("legal");
                oracle_maintain(m, coalition, target, &remaining, depth - 1, safe, memo)
            });
        if all {
            won = true;
            break;
        }
    }
    memo.insert(key, won);
    won
}

/// Random subset of states, possibly empty.
pub fn gen_state_set(rng: &mut Rng, m: &Model) -> BTreeSet<StateId> {
    m.states().filter(|_| rng.chance(1, 2)).collect()
}

/// Random budget with each entry below the cap.
pub fn gen_budget(rng: &mut Rng, m: &Model, cap: u64) -> ResourceVector {
    ResourceVector::new(
        (0..m.resource_count())
            .map(|_| rng.below(cap + 1))
            .collect(),
    )
}

/// Random coalition, possibly empty.
pub fn gen_coalition(rng: &mut Rng, m: &Model) -> BTreeSet<AgentId> {
    m.agents().filter(|_| rng.chance(1, 2)).collect()
}

pub fn gen_operator(rng: &mut Rng, m: &Model) -> TemporalOp {
    match rng.below(4) {
        0 => TemporalOp::Next {
            goal: gen_state_set(rng, m),
        },
        1 => TemporalOp::Eventually {
            goal: gen_state_set(rng, m),
        },
        2 => TemporalOp::Globally {
            safe: gen_state_set(rng, m),
        },
        _ => TemporalOp::Until {
            hold: gen_state_set(rng, m),
            goal: gen_state_set(rng, m),
        },
    }
}
