//! Lowering: name resolution plus semantic validation, turning a parsed
//! document into a validated model, monitors, and policies. Every diagnostic
//! points at the offending source span; all problems are reported in one
//! pass.

use std::collections::BTreeMap;

use super::{
    Diagnostic, DocActionPattern, DocStatus, Document, Name, NormDecl, PolicyDecl, SourceSpan,
};
use crate::coordination::{Attribution, ReparationPolicy, SanctionPolicy};
use crate::model::{ActionId, Model, ModelBuilder, ModelError, ModelWarning, ResourceId, StateId};
use crate::norms::{
    ActionPattern, MonitorRule, MonitorState, MonitorStateId, MonitorStatus, NormMonitor,
};

/// Enforcement parameters a document may declare; at most one of each kind.
#[derive(Debug, Clone, Default)]
pub struct Policies {
    pub sanction: Option<SanctionPolicy>,
    pub repair: Option<ReparationPolicy>,
}

#[derive(Debug, Clone)]
pub struct Lowered {
    pub model: Model,
    pub monitors: Vec<NormMonitor>,
    pub policies: Policies,
    /// Non-fatal findings, e.g. cost entries defaulting to zero.
    pub warnings: Vec<Diagnostic>,
}

struct Scope {
    agents: BTreeMap<String, usize>,
    resources: BTreeMap<String, usize>,
    states: BTreeMap<String, usize>,
    actions: BTreeMap<String, usize>,
}

/// Resolves and validates a document. On failure the list contains every
/// error found, each with its span.
pub fn lower(doc: &Document) -> Result<Lowered, Vec<Diagnostic>> {
    let mut diags: Vec<Diagnostic> = Vec::new();

    let scope = Scope {
        agents: declare(&doc.agents, "agent", &mut diags),
        resources: declare(&doc.resources, "resource", &mut diags),
        states: declare_states(doc, &mut diags),
        actions: declare(&doc.actions, "action", &mut diags),
    };

    resolve_references(doc, &scope, &mut diags);

    // Monitors and policies do not need the built model, so they are
    // resolved up front: one run reports name, norm, policy, and structural
    // problems together.
    let n_agents = doc.agents.len();
    let mut monitors = Vec::new();
    let mut norm_names: BTreeMap<String, ()> = BTreeMap::new();
    for norm in &doc.norms {
        if norm_names.insert(norm.name.text.clone(), ()).is_some() {
            diags.push(Diagnostic::error(
                norm.name.span.clone(),
                format!("duplicate norm `{}`", norm.name.as_str()),
                None,
            ));
            continue;
        }
        if let Some(mon) = lower_norm(norm, &scope, n_agents, &mut diags) {
            monitors.push(mon);
        }
    }
    let policies = lower_policies(doc, &scope, &mut diags);

    if diags.iter().any(Diagnostic::is_error) {
        // Unresolved names make structural validation meaningless; stop
        // before the builder to avoid cascades.
        return Err(diags);
    }

    // Structural validation through the model builder.
    let mut builder = ModelBuilder::new();
    for a in &doc.agents {
        builder.agent(a.as_str());
    }
    for r in &doc.resources {
        builder.resource(r.as_str());
    }
    for s in &doc.states {
        builder.state(s.name.as_str(), s.initial);
    }
    for a in &doc.actions {
        builder.action(a.as_str());
    }
    for a in &doc.avail {
        builder.avail(
            a.state.as_str(),
            a.agent.as_str(),
            a.actions.iter().map(Name::as_str),
        );
    }
    for c in &doc.costs {
        builder.cost(
            c.state.as_str(),
            c.agent.as_str(),
            c.action.as_str(),
            c.vector.iter().copied(),
        );
    }
    for o in &doc.outcomes {
        builder.outcome(
            o.state.as_str(),
            o.joint.iter().map(Name::as_str),
            o.target.as_str(),
        );
    }
    for r in &doc.restricts {
        builder.restrict(r.as_str());
    }

    let mut warnings: Vec<Diagnostic> = Vec::new();
    let model = match builder.build() {
        Ok((model, model_warnings)) => {
            for w in model_warnings {
                warnings.push(warning_diag(doc, &w));
            }
            Some(model)
        }
        Err(report) => {
            for e in &report.errors {
                diags.push(Diagnostic::error(
                    span_for_model_error(doc, e),
                    e.to_string(),
                    None,
                ));
            }
            None
        }
    };

    if diags.iter().any(Diagnostic::is_error) {
        return Err(diags);
    }
    let model = model.expect("builder errors imply error diagnostics");

    Ok(Lowered {
        model,
        monitors,
        policies,
        warnings,
    })
}

fn declare(names: &[Name], kind: &str, diags: &mut Vec<Diagnostic>) -> BTreeMap<String, usize> {
    let mut map = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        check_reserved(name, kind, diags);
        if map.insert(name.text.clone(), i).is_some() {
            diags.push(Diagnostic::error(
                name.span.clone(),
                format!("duplicate {kind} `{}`", name.as_str()),
                None,
            ));
        }
    }
    map
}

fn declare_states(doc: &Document, diags: &mut Vec<Diagnostic>) -> BTreeMap<String, usize> {
    let mut map = BTreeMap::new();
    for (i, s) in doc.states.iter().enumerate() {
        check_reserved(&s.name, "state", diags);
        if map.insert(s.name.text.clone(), i).is_some() {
            diags.push(Diagnostic::error(
                s.name.span.clone(),
                format!("duplicate state `{}`", s.name.as_str()),
                None,
            ));
        }
    }
    map
}

fn check_reserved(name: &Name, kind: &str, diags: &mut Vec<Diagnostic>) {
    if name.as_str() == "_" {
        diags.push(Diagnostic::error(
            name.span.clone(),
            format!("`_` is the wildcard and cannot be declared as a {kind}"),
            None,
        ));
    }
}

fn check_ref(name: &Name, map: &BTreeMap<String, usize>, kind: &str, diags: &mut Vec<Diagnostic>) {
    if !map.contains_key(name.as_str()) {
        diags.push(Diagnostic::error(
            name.span.clone(),
            format!("unknown {kind} `{}`", name.as_str()),
            None,
        ));
    }
}

fn resolve_references(doc: &Document, scope: &Scope, diags: &mut Vec<Diagnostic>) {
    for a in &doc.avail {
        check_ref(&a.state, &scope.states, "state", diags);
        check_ref(&a.agent, &scope.agents, "agent", diags);
        for act in &a.actions {
            check_ref(act, &scope.actions, "action", diags);
        }
    }
    for c in &doc.costs {
        check_ref(&c.state, &scope.states, "state", diags);
        check_ref(&c.agent, &scope.agents, "agent", diags);
        check_ref(&c.action, &scope.actions, "action", diags);
    }
    for o in &doc.outcomes {
        check_ref(&o.state, &scope.states, "state", diags);
        for act in &o.joint {
            check_ref(act, &scope.actions, "action", diags);
        }
        check_ref(&o.target, &scope.states, "state", diags);
    }
    for r in &doc.restricts {
        check_ref(r, &scope.states, "state", diags);
    }
    for p in &doc.policies {
        match p {
            PolicyDecl::Sanction { resource, mode, .. } => {
                check_ref(resource, &scope.resources, "resource", diags);
                if let Some(mode) = mode {
                    if !matches!(mode.as_str(), "triggering" | "collective") {
                        diags.push(Diagnostic::error(
                            mode.span.clone(),
                            format!("unknown sanction mode `{}`", mode.as_str()),
                            Some("`triggering` or `collective`".to_string()),
                        ));
                    }
                }
            }
            PolicyDecl::Repair { action, money, .. } => {
                check_ref(action, &scope.actions, "action", diags);
                if let Some(money) = money {
                    check_ref(money, &scope.resources, "resource", diags);
                }
            }
        }
    }
}

fn lower_norm(
    norm: &NormDecl,
    scope: &Scope,
    n_agents: usize,
    diags: &mut Vec<Diagnostic>,
) -> Option<NormMonitor> {
    let before = diags.len();
    let mut monitor_states: BTreeMap<String, usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut initial = None;
    for (i, s) in norm.states.iter().enumerate() {
        check_reserved(&s.name, "monitor state", diags);
        if monitor_states.insert(s.name.text.clone(), i).is_some() {
            diags.push(Diagnostic::error(
                s.name.span.clone(),
                format!("duplicate monitor state `{}`", s.name.as_str()),
                None,
            ));
            continue;
        }
        states.push(MonitorState {
            name: s.name.text.clone(),
            status: match s.status {
                DocStatus::Ok => MonitorStatus::Ok,
                DocStatus::Violation => MonitorStatus::Violation,
                DocStatus::Pending => MonitorStatus::PendingRepair,
            },
        });
        if s.initial {
            if initial.is_some() {
                diags.push(Diagnostic::error(
                    s.name.span.clone(),
                    format!(
                        "norm `{}` marks more than one state `init`",
                        norm.name.as_str()
                    ),
                    None,
                ));
            }
            initial = Some(i);
        }
    }
    let Some(initial) = initial else {
        diags.push(Diagnostic::error(
            norm.name.span.clone(),
            format!("norm `{}` has no `init` state", norm.name.as_str()),
            None,
        ));
        return None;
    };

    let mut rules = Vec::new();
    for rule in &norm.rules {
        let from = match &rule.from {
            None => None,
            Some(name) => match monitor_states.get(name.as_str()) {
                Some(&ix) => Some(MonitorStateId::new(ix)),
                None => {
                    diags.push(Diagnostic::error(
                        name.span.clone(),
                        format!("unknown monitor state `{}`", name.as_str()),
                        None,
                    ));
                    continue;
                }
            },
        };
        let source = match &rule.state_pattern {
            None => None,
            Some(name) => match scope.states.get(name.as_str()) {
                Some(&ix) => Some(StateId::new(ix)),
                None => {
                    diags.push(Diagnostic::error(
                        name.span.clone(),
                        format!("unknown state `{}`", name.as_str()),
                        None,
                    ));
                    continue;
                }
            },
        };
        let action = match &rule.action_pattern {
            DocActionPattern::Wildcard => ActionPattern::wildcard(n_agents),
            DocActionPattern::PerAgent(slots) => {
                if slots.len() != n_agents {
                    diags.push(Diagnostic::error(
                        rule.span.clone(),
                        format!(
                            "action pattern has {} slots, the model has {} agents",
                            slots.len(),
                            n_agents
                        ),
                        None,
                    ));
                    continue;
                }
                let mut resolved = Vec::with_capacity(slots.len());
                let mut ok = true;
                for slot in slots {
                    match slot {
                        None => resolved.push(None),
                        Some(name) => match scope.actions.get(name.as_str()) {
                            Some(&ix) => resolved.push(Some(ActionId::new(ix))),
                            None => {
                                diags.push(Diagnostic::error(
                                    name.span.clone(),
                                    format!("unknown action `{}`", name.as_str()),
                                    None,
                                ));
                                ok = false;
                            }
                        },
                    }
                }
                if !ok {
                    continue;
                }
                ActionPattern::new(resolved)
            }
        };
        let target = match monitor_states.get(rule.target.as_str()) {
            Some(&ix) => MonitorStateId::new(ix),
            None => {
                diags.push(Diagnostic::error(
                    rule.target.span.clone(),
                    format!("unknown monitor state `{}`", rule.target.as_str()),
                    None,
                ));
                continue;
            }
        };
        rules.push(MonitorRule {
            from,
            source,
            action,
            target,
        });
    }

    if diags.len() > before {
        return None;
    }

    match NormMonitor::new(
        norm.name.as_str(),
        states,
        MonitorStateId::new(initial),
        rules,
        n_agents,
    ) {
        Ok(mon) => Some(mon),
        Err(e) => {
            diags.push(Diagnostic::error(
                norm.name.span.clone(),
                format!("norm `{}`: {e}", norm.name.as_str()),
                None,
            ));
            None
        }
    }
}

fn lower_policies(doc: &Document, scope: &Scope, diags: &mut Vec<Diagnostic>) -> Policies {
    let mut policies = Policies::default();
    for p in &doc.policies {
        match p {
            PolicyDecl::Sanction {
                resource,
                sv,
                mode,
                span,
            } => {
                if policies.sanction.is_some() {
                    diags.push(Diagnostic::error(
                        span.clone(),
                        "duplicate sanction policy".to_string(),
                        None,
                    ));
                    continue;
                }
                let Some(&res) = scope.resources.get(resource.as_str()) else {
                    continue; // already reported by resolution
                };
                match SanctionPolicy::new(ResourceId::new(res), *sv) {
                    Ok(policy) => {
                        let policy = match mode.as_ref().map(Name::as_str) {
                            Some("collective") => policy.with_attribution(Attribution::Collective),
                            _ => policy,
                        };
                        policies.sanction = Some(policy);
                    }
                    Err(e) => {
                        diags.push(Diagnostic::error(span.clone(), e.to_string(), None));
                    }
                }
            }
            PolicyDecl::Repair {
                cv,
                sv,
                w,
                action,
                money,
                span,
            } => {
                if policies.repair.is_some() {
                    diags.push(Diagnostic::error(
                        span.clone(),
                        "duplicate repair policy".to_string(),
                        None,
                    ));
                    continue;
                }
                let Some(&act) = scope.actions.get(action.as_str()) else {
                    continue;
                };
                let money_ix = match money {
                    Some(name) => match scope.resources.get(name.as_str()) {
                        Some(&ix) => ix,
                        None => continue,
                    },
                    None => {
                        if doc.resources.is_empty() {
                            diags.push(Diagnostic::error(
                                span.clone(),
                                "repair policy needs a money resource, but the document declares none"
                                    .to_string(),
                                None,
                            ));
                            continue;
                        }
                        0
                    }
                };
                match ReparationPolicy::new(
                    *cv,
                    *sv,
                    *w as usize,
                    ActionId::new(act),
                    ResourceId::new(money_ix),
                ) {
                    Ok(policy) => policies.repair = Some(policy),
                    Err(e) => {
                        diags.push(Diagnostic::error(span.clone(), e.to_string(), None));
                    }
                }
            }
        }
    }
    policies
}

fn warning_diag(doc: &Document, w: &ModelWarning) -> Diagnostic {
    match w {
        ModelWarning::UndeclaredCost {
            state,
            agent,
            action: _,
        } => {
            let span = doc
                .avail
                .iter()
                .find(|a| a.state.as_str() == state && a.agent.as_str() == agent)
                .map(|a| a.state.span.clone())
                .unwrap_or_else(|| doc_start(doc));
            Diagnostic::warning(span, w.to_string())
        }
    }
}

fn doc_start(doc: &Document) -> SourceSpan {
    SourceSpan {
        file: doc.file.clone(),
        line: 1,
        column: 1,
        length: 0,
    }
}

/// Picks the most relevant span for a builder-level validation error.
fn span_for_model_error(doc: &Document, e: &ModelError) -> SourceSpan {
    let state_span = |name: &str| {
        doc.states
            .iter()
            .find(|s| s.name.as_str() == name)
            .map(|s| s.name.span.clone())
    };
    let avail_span = |state: &str, agent: &str| {
        doc.avail
            .iter()
            .find(|a| a.state.as_str() == state && a.agent.as_str() == agent)
            .map(|a| a.state.span.clone())
    };
    let cost_span = |state: &str, agent: &str, action: &str| {
        doc.costs
            .iter()
            .find(|c| {
                c.state.as_str() == state
                    && c.agent.as_str() == agent
                    && c.action.as_str() == action
            })
            .map(|c| c.state.span.clone())
    };
    match e {
        ModelError::EmptyAvailability { state, agent } => avail_span(state, agent)
            .or_else(|| state_span(state))
            .unwrap_or_else(|| doc_start(doc)),
        ModelError::DuplicateAvailability { state, agent } => doc
            .avail
            .iter()
            .filter(|a| a.state.as_str() == state && a.agent.as_str() == agent)
            .map(|a| a.state.span.clone())
            .next_back()
            .unwrap_or_else(|| doc_start(doc)),
        ModelError::MissingOutcome { state, .. } | ModelError::EmptyRestriction { state } => {
            state_span(state).unwrap_or_else(|| doc_start(doc))
        }
        ModelError::DuplicateOutcome { state, joint }
        | ModelError::DanglingTarget { state, joint, .. } => doc
            .outcomes
            .iter()
            .filter(|o| {
                o.state.as_str() == state
                    && o.joint
                        .iter()
                        .map(Name::as_str)
                        .collect::<Vec<_>>()
                        .join(",")
                        == *joint
            })
            .map(|o| o.state.span.clone())
            .next_back()
            .unwrap_or_else(|| doc_start(doc)),
        ModelError::OutcomeOutsideAvailability { state, action, .. } => doc
            .outcomes
            .iter()
            .find(|o| o.state.as_str() == state && o.joint.iter().any(|n| n.as_str() == action))
            .map(|o| o.state.span.clone())
            .unwrap_or_else(|| doc_start(doc)),
        ModelError::CostOutsideAvailability {
            state,
            agent,
            action,
        }
        | ModelError::CostArityMismatch {
            state,
            agent,
            action,
            ..
        }
        | ModelError::DuplicateCost {
            state,
            agent,
            action,
        } => cost_span(state, agent, action).unwrap_or_else(|| doc_start(doc)),
        ModelError::UnusedAvailability { state, agent, .. } => {
            avail_span(state, agent).unwrap_or_else(|| doc_start(doc))
        }
        _ => doc_start(doc),
    }
}
