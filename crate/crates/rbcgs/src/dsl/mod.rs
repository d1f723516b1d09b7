//! The `.iss` text format: parser, serializer, and lowering to validated
//! models, monitors, and policies.
//!
//! A document declares the game structure section by section, then norm
//! monitors and enforcement policies:
//!
//! ```text
//! agents A B C;
//! resources money steam water;
//! states q0* q1;
//! actions send recv noop;
//! avail q0 A {send,noop};
//! cost q0 A send = [2,1,0];
//! outcome q0 (send,recv,noop) -> q1;
//! norm N1 {
//!   state s0 ok init;
//!   state bad violation;
//!   on q1 / (_,recv,_) -> bad;
//!   on _ / _ -> s0;
//! }
//! policy sanction money sv=5;
//! policy repair cv=2 sv=5 w=1 action=pay;
//! ```
//!
//! Section order is free and sections may repeat; duplicate definitions are
//! rejected at lowering. Identifiers are `[A-Za-z_][A-Za-z0-9_]*`; a `*`
//! suffix marks a state initial. Norm rules are first-match-wins; `_` is a
//! wildcard; an optional leading `in <monitor-state>` scopes a rule to one
//! monitor state, otherwise it applies from every state. A `restrict q;`
//! statement declares that only the joint actions with an outcome entry are
//! legal at `q` — the serialized form of a regimented model whose bans are
//! not expressible agent by agent.
//!
//! Every diagnostic carries a 1-based [`SourceSpan`]. [`serialize`] emits a
//! canonical form: `parse(serialize(d))` is structurally identical to `d`
//! (see [`Document::canonical`]) and serializing is a byte-level fixed
//! point.

mod lex;
mod lower;
mod parse;

pub use lower::{lower, Lowered, Policies};
pub use parse::parse;

use std::fmt;
use std::fmt::Write as _;

use crate::model::Model;
use crate::norms::{ActionPattern, MonitorStatus, NormMonitor};

/// A location in an input file; line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    /// Span for generated documents that have no source text.
    pub fn synthetic() -> Self {
        SourceSpan {
            file: "<generated>".to_string(),
            line: 1,
            column: 1,
            length: 0,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: SourceSpan,
    pub message: String,
    /// What the parser was looking for, when that is meaningful.
    pub expected: Option<String>,
}

impl Diagnostic {
    pub fn error(span: SourceSpan, message: String, expected: Option<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span,
            message,
            expected,
        }
    }

    pub fn warning(span: SourceSpan, message: String) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            span,
            message,
            expected: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {kind}: {}", self.span, self.message)?;
        if let Some(e) = &self.expected {
            write!(f, " (expected {e})")?;
        }
        Ok(())
    }
}

/// An identifier occurrence with its span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub span: SourceSpan,
}

impl Name {
    pub fn new(text: impl Into<String>, span: SourceSpan) -> Self {
        Name {
            text: text.into(),
            span,
        }
    }

    pub fn synthetic(text: impl Into<String>) -> Self {
        Name::new(text, SourceSpan::synthetic())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: Name,
    pub initial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailDecl {
    pub state: Name,
    pub agent: Name,
    pub actions: Vec<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostDecl {
    pub state: Name,
    pub agent: Name,
    pub action: Name,
    pub vector: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeDecl {
    pub state: Name,
    pub joint: Vec<Name>,
    pub target: Name,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocStatus {
    Ok,
    Violation,
    Pending,
}

impl DocStatus {
    pub fn keyword(self) -> &'static str {
        match self {
            DocStatus::Ok => "ok",
            DocStatus::Violation => "violation",
            DocStatus::Pending => "pending",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormStateDecl {
    pub name: Name,
    pub status: DocStatus,
    pub initial: bool,
}

/// `_` or a per-agent list of action names / wildcards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DocActionPattern {
    Wildcard,
    PerAgent(Vec<Option<Name>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormRuleDecl {
    /// `in <state>` scope; `None` applies from every monitor state.
    pub from: Option<Name>,
    /// `None` is the `_` wildcard.
    pub state_pattern: Option<Name>,
    pub action_pattern: DocActionPattern,
    pub target: Name,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormDecl {
    pub name: Name,
    pub states: Vec<NormStateDecl>,
    pub rules: Vec<NormRuleDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyDecl {
    Sanction {
        resource: Name,
        sv: u64,
        /// `triggering` (default) or `collective`.
        mode: Option<Name>,
        span: SourceSpan,
    },
    Repair {
        cv: u64,
        sv: u64,
        w: u64,
        action: Name,
        /// Money resource; defaults to the first declared resource.
        money: Option<Name>,
        span: SourceSpan,
    },
}

impl PolicyDecl {
    pub fn span(&self) -> &SourceSpan {
        match self {
            PolicyDecl::Sanction { span, .. } | PolicyDecl::Repair { span, .. } => span,
        }
    }
}

/// A parsed `.iss` document: purely syntactic, with names unresolved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub file: String,
    pub agents: Vec<Name>,
    pub resources: Vec<Name>,
    pub states: Vec<StateDecl>,
    pub actions: Vec<Name>,
    pub avail: Vec<AvailDecl>,
    pub costs: Vec<CostDecl>,
    pub outcomes: Vec<OutcomeDecl>,
    pub restricts: Vec<Name>,
    pub norms: Vec<NormDecl>,
    pub policies: Vec<PolicyDecl>,
}

impl Document {
    /// Structural normal form: spans erased, order-insensitive sections
    /// sorted. Declaration order of agents, resources, states, and actions
    /// is semantic (it fixes indices) and is preserved, as is norm rule
    /// order (first-match-wins).
    pub fn canonical(&self) -> Document {
        fn strip(n: &Name) -> Name {
            Name::new(n.text.clone(), SourceSpan::default())
        }
        let mut doc = Document {
            file: String::new(),
            agents: self.agents.iter().map(strip).collect(),
            resources: self.resources.iter().map(strip).collect(),
            states: self
                .states
                .iter()
                .map(|s| StateDecl {
                    name: strip(&s.name),
                    initial: s.initial,
                })
                .collect(),
            actions: self.actions.iter().map(strip).collect(),
            avail: self
                .avail
                .iter()
                .map(|a| AvailDecl {
                    state: strip(&a.state),
                    agent: strip(&a.agent),
                    actions: a.actions.iter().map(strip).collect(),
                })
                .collect(),
            costs: self
                .costs
                .iter()
                .map(|c| CostDecl {
                    state: strip(&c.state),
                    agent: strip(&c.agent),
                    action: strip(&c.action),
                    vector: c.vector.clone(),
                })
                .collect(),
            outcomes: self
                .outcomes
                .iter()
                .map(|o| OutcomeDecl {
                    state: strip(&o.state),
                    joint: o.joint.iter().map(strip).collect(),
                    target: strip(&o.target),
                })
                .collect(),
            restricts: self.restricts.iter().map(strip).collect(),
            norms: self
                .norms
                .iter()
                .map(|n| NormDecl {
                    name: strip(&n.name),
                    states: n
                        .states
                        .iter()
                        .map(|s| NormStateDecl {
                            name: strip(&s.name),
                            status: s.status,
                            initial: s.initial,
                        })
                        .collect(),
                    rules: n
                        .rules
                        .iter()
                        .map(|r| NormRuleDecl {
                            from: r.from.as_ref().map(strip),
                            state_pattern: r.state_pattern.as_ref().map(strip),
                            action_pattern: match &r.action_pattern {
                                DocActionPattern::Wildcard => DocActionPattern::Wildcard,
                                DocActionPattern::PerAgent(slots) => DocActionPattern::PerAgent(
                                    slots.iter().map(|s| s.as_ref().map(strip)).collect(),
                                ),
                            },
                            target: strip(&r.target),
                            span: SourceSpan::default(),
                        })
                        .collect(),
                })
                .collect(),
            policies: self
                .policies
                .iter()
                .map(|p| match p {
                    PolicyDecl::Sanction {
                        resource, sv, mode, ..
                    } => PolicyDecl::Sanction {
                        resource: strip(resource),
                        sv: *sv,
                        mode: mode.as_ref().map(strip),
                        span: SourceSpan::default(),
                    },
                    PolicyDecl::Repair {
                        cv,
                        sv,
                        w,
                        action,
                        money,
                        ..
                    } => PolicyDecl::Repair {
                        cv: *cv,
                        sv: *sv,
                        w: *w,
                        action: strip(action),
                        money: money.as_ref().map(strip),
                        span: SourceSpan::default(),
                    },
                })
                .collect(),
        };
        // Entry sections are order-free.
        doc.avail
            .sort_by(|a, b| (&a.state.text, &a.agent.text).cmp(&(&b.state.text, &b.agent.text)));
        for a in &mut doc.avail {
            a.actions.sort_by(|x, y| x.text.cmp(&y.text));
        }
        doc.costs.sort_by(|a, b| {
            (&a.state.text, &a.agent.text, &a.action.text).cmp(&(
                &b.state.text,
                &b.agent.text,
                &b.action.text,
            ))
        });
        doc.outcomes.sort_by(|a, b| {
            let ja: Vec<&str> = a.joint.iter().map(Name::as_str).collect();
            let jb: Vec<&str> = b.joint.iter().map(Name::as_str).collect();
            (&a.state.text, ja).cmp(&(&b.state.text, jb))
        });
        doc.restricts.sort_by(|a, b| a.text.cmp(&b.text));
        doc
    }
}

/// Renders a document in canonical formatting: fixed section order, sorted
/// entries, one statement per line, LF line endings. Deterministic, and a
/// fixed point under `parse` followed by `serialize`.
pub fn serialize(doc: &Document) -> String {
    let doc = doc.canonical();
    let mut out = String::new();

    let names =
        |list: &[Name]| -> String { list.iter().map(Name::as_str).collect::<Vec<_>>().join(" ") };

    if !doc.agents.is_empty() {
        let _ = writeln!(out, "agents {};", names(&doc.agents));
    }
    if !doc.resources.is_empty() {
        let _ = writeln!(out, "resources {};", names(&doc.resources));
    }
    if !doc.states.is_empty() {
        let rendered: Vec<String> = doc
            .states
            .iter()
            .map(|s| {
                if s.initial {
                    format!("{}*", s.name.as_str())
                } else {
                    s.name.as_str().to_string()
                }
            })
            .collect();
        let _ = writeln!(out, "states {};", rendered.join(" "));
    }
    if !doc.actions.is_empty() {
        let _ = writeln!(out, "actions {};", names(&doc.actions));
    }
    for a in &doc.avail {
        let list: Vec<&str> = a.actions.iter().map(Name::as_str).collect();
        let _ = writeln!(
            out,
            "avail {} {} {{{}}};",
            a.state.as_str(),
            a.agent.as_str(),
            list.join(",")
        );
    }
    for c in &doc.costs {
        let vector: Vec<String> = c.vector.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "cost {} {} {} = [{}];",
            c.state.as_str(),
            c.agent.as_str(),
            c.action.as_str(),
            vector.join(",")
        );
    }
    for o in &doc.outcomes {
        let joint: Vec<&str> = o.joint.iter().map(Name::as_str).collect();
        let _ = writeln!(
            out,
            "outcome {} ({}) -> {};",
            o.state.as_str(),
            joint.join(","),
            o.target.as_str()
        );
    }
    for r in &doc.restricts {
        let _ = writeln!(out, "restrict {};", r.as_str());
    }
    for norm in &doc.norms {
        let _ = writeln!(out, "norm {} {{", norm.name.as_str());
        for s in &norm.states {
            let init = if s.initial { " init" } else { "" };
            let _ = writeln!(
                out,
                "  state {} {}{init};",
                s.name.as_str(),
                s.status.keyword()
            );
        }
        for r in &norm.rules {
            let mut line = String::from("  ");
            if let Some(from) = &r.from {
                let _ = write!(line, "in {} ", from.as_str());
            }
            let state_pat = r.state_pattern.as_ref().map(Name::as_str).unwrap_or("_");
            let action_pat = match &r.action_pattern {
                DocActionPattern::Wildcard => "_".to_string(),
                DocActionPattern::PerAgent(slots) => {
                    let rendered: Vec<&str> = slots
                        .iter()
                        .map(|s| s.as_ref().map(Name::as_str).unwrap_or("_"))
                        .collect();
                    format!("({})", rendered.join(","))
                }
            };
            let _ = write!(
                line,
                "on {state_pat} / {action_pat} -> {}",
                r.target.as_str()
            );
            let _ = writeln!(out, "{line};");
        }
        let _ = writeln!(out, "}}");
    }
    for p in &doc.policies {
        match p {
            PolicyDecl::Sanction {
                resource, sv, mode, ..
            } => {
                let mode = mode
                    .as_ref()
                    .map(|m| format!(" mode={}", m.as_str()))
                    .unwrap_or_default();
                let _ = writeln!(out, "policy sanction {} sv={sv}{mode};", resource.as_str());
            }
            PolicyDecl::Repair {
                cv,
                sv,
                w,
                action,
                money,
                ..
            } => {
                let money = money
                    .as_ref()
                    .map(|m| format!(" money={}", m.as_str()))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "policy repair cv={cv} sv={sv} w={w} action={}{money};",
                    action.as_str()
                );
            }
        }
    }
    out
}

/// Rebuilds a document from a validated model (no norm or policy blocks;
/// push those separately). Spans are synthetic.
pub fn document_from_model(m: &Model) -> Document {
    let mut doc = Document {
        file: "<generated>".to_string(),
        ..Document::default()
    };
    for a in m.agents() {
        doc.agents.push(Name::synthetic(m.agent_name(a)));
    }
    for r in m.resources() {
        doc.resources.push(Name::synthetic(m.resource_name(r)));
    }
    for q in m.states() {
        doc.states.push(StateDecl {
            name: Name::synthetic(m.state_name(q)),
            initial: m.initial_states().contains(&q),
        });
    }
    for act in 0..m.action_count() {
        doc.actions.push(Name::synthetic(
            m.action_name(crate::model::ActionId::new(act)),
        ));
    }
    for q in m.states() {
        for a in m.agents() {
            doc.avail.push(AvailDecl {
                state: Name::synthetic(m.state_name(q)),
                agent: Name::synthetic(m.agent_name(a)),
                actions: m
                    .available(q, a)
                    .iter()
                    .map(|&act| Name::synthetic(m.action_name(act)))
                    .collect(),
            });
        }
        for joint in m.joint_actions(q).expect("state in range") {
            let target = m.step(q, joint).expect("legal joint action");
            doc.outcomes.push(OutcomeDecl {
                state: Name::synthetic(m.state_name(q)),
                joint: joint
                    .choices()
                    .iter()
                    .map(|&act| Name::synthetic(m.action_name(act)))
                    .collect(),
                target: Name::synthetic(m.state_name(target)),
            });
        }
        if m.is_restricted(q) {
            doc.restricts.push(Name::synthetic(m.state_name(q)));
        }
    }
    for (q, a, act, v) in m.declared_costs() {
        doc.costs.push(CostDecl {
            state: Name::synthetic(m.state_name(q)),
            agent: Name::synthetic(m.agent_name(a)),
            action: Name::synthetic(m.action_name(act)),
            vector: v.entries().to_vec(),
        });
    }
    doc
}

/// Rebuilds a norm block from a monitor, against the model that names its
/// states and actions.
pub fn norm_decl_from_monitor(m: &Model, mon: &NormMonitor) -> NormDecl {
    let states = mon
        .monitor_states()
        .map(|ms| NormStateDecl {
            name: Name::synthetic(mon.state_name(ms)),
            status: match mon.status(ms) {
                MonitorStatus::Ok => DocStatus::Ok,
                MonitorStatus::Violation => DocStatus::Violation,
                MonitorStatus::PendingRepair => DocStatus::Pending,
            },
            initial: ms == mon.initial(),
        })
        .collect();
    let rules = mon
        .rules()
        .iter()
        .map(|r| NormRuleDecl {
            from: r.from.map(|ms| Name::synthetic(mon.state_name(ms))),
            state_pattern: r.source.map(|q| Name::synthetic(m.state_name(q))),
            action_pattern: doc_pattern(m, &r.action),
            target: Name::synthetic(mon.state_name(r.target)),
            span: SourceSpan::synthetic(),
        })
        .collect();
    NormDecl {
        name: Name::synthetic(mon.name()),
        states,
        rules,
    }
}

fn doc_pattern(m: &Model, pattern: &ActionPattern) -> DocActionPattern {
    if pattern.is_wildcard() {
        DocActionPattern::Wildcard
    } else {
        DocActionPattern::PerAgent(
            pattern
                .slots()
                .iter()
                .map(|slot| slot.map(|act| Name::synthetic(m.action_name(act))))
                .collect(),
        )
    }
}
