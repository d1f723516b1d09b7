//! Recursive-descent parser for `.iss` documents.
//!
//! Statement-level error recovery: on a syntax error the parser records a
//! diagnostic and skips to the next `;` (or past the current block), so one
//! run reports every malformed statement.

use super::lex::{lex, Tok, Token};
use super::{
    AvailDecl, CostDecl, Diagnostic, DocActionPattern, DocStatus, Document, Name, NormDecl,
    NormRuleDecl, NormStateDecl, OutcomeDecl, PolicyDecl, SourceSpan, StateDecl,
};

/// Parses a document, returning every syntax diagnostic at once on failure.
pub fn parse(file: &str, text: &str) -> Result<Document, Vec<Diagnostic>> {
    let tokens = lex(file, text)?;
    let mut p = Parser {
        file: file.to_string(),
        tokens,
        pos: 0,
        diagnostics: Vec::new(),
    };
    let doc = p.document();
    if p.diagnostics.iter().any(Diagnostic::is_error) {
        Err(p.diagnostics)
    } else {
        Ok(doc)
    }
}

struct Parser {
    file: String,
    tokens: Vec<Token>,
    pos: usize,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_span(&self) -> SourceSpan {
        self.tokens
            .last()
            .map(|t| t.span.clone())
            .unwrap_or_else(|| SourceSpan {
                file: self.file.clone(),
                line: 1,
                column: 1,
                length: 0,
            })
    }

    fn here(&self) -> SourceSpan {
        self.peek()
            .map(|t| t.span.clone())
            .unwrap_or_else(|| self.eof_span())
    }

    fn error_here(&mut self, message: impl Into<String>, expected: &str) {
        let span = self.here();
        self.diagnostics.push(Diagnostic::error(
            span,
            message.into(),
            Some(expected.to_string()),
        ));
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("found {}", t.tok.describe()),
            None => "found end of input".to_string(),
        }
    }

    fn expect_tok(&mut self, want: &Tok, expected: &str) -> bool {
        if self.peek().map(|t| &t.tok) == Some(want) {
            self.pos += 1;
            true
        } else {
            let msg = self.found();
            self.error_here(msg, expected);
            false
        }
    }

    fn ident(&mut self, expected: &str) -> Option<Name> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(_), ..
            }) => {
                let t = self.next().unwrap();
                let Tok::Ident(s) = t.tok else { unreachable!() };
                Some(Name::new(s, t.span))
            }
            _ => {
                let msg = self.found();
                self.error_here(msg, expected);
                None
            }
        }
    }

    fn int(&mut self, expected: &str) -> Option<u64> {
        match self.peek() {
            Some(Token {
                tok: Tok::Int(_), ..
            }) => {
                let t = self.next().unwrap();
                let Tok::Int(n) = t.tok else { unreachable!() };
                Some(n)
            }
            _ => {
                let msg = self.found();
                self.error_here(msg, expected);
                None
            }
        }
    }

    /// Skips past the next `;`, or past the matching `}` if a block opens
    /// first. Used for statement-level recovery.
    fn synchronize(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.next() {
            match t.tok {
                Tok::Semi if depth == 0 => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth <= 1 {
                        return;
                    }
                    depth -= 1;
                }
                _ => {}
            }
        }
    }

    fn document(&mut self) -> Document {
        let mut doc = Document {
            file: self.file.clone(),
            ..Document::default()
        };
        while self.peek().is_some() {
            let before = self.pos;
            self.statement(&mut doc);
            if self.pos == before {
                // Defensive: never loop without progress.
                self.synchronize();
            }
        }
        doc
    }

    fn statement(&mut self, doc: &mut Document) {
        let Some(keyword) = self.ident(
            "a section keyword: agents, resources, states, actions, avail, cost, outcome, restrict, norm, or policy",
        ) else {
            self.synchronize();
            return;
        };
        match keyword.as_str() {
            "agents" => self.name_list(&mut doc.agents),
            "resources" => self.name_list(&mut doc.resources),
            "actions" => self.name_list(&mut doc.actions),
            "states" => self.state_list(doc),
            "avail" => self.avail_stmt(doc),
            "cost" => self.cost_stmt(doc),
            "outcome" => self.outcome_stmt(doc),
            "restrict" => self.restrict_stmt(doc),
            "norm" => self.norm_block(doc),
            "policy" => self.policy_stmt(doc),
            other => {
                self.diagnostics.push(Diagnostic::error(
                    keyword.span.clone(),
                    format!("unknown section keyword `{other}`"),
                    Some("agents, resources, states, actions, avail, cost, outcome, restrict, norm, or policy".to_string()),
                ));
                self.synchronize();
            }
        }
    }

    fn name_list(&mut self, into: &mut Vec<Name>) {
        let mut any = false;
        loop {
            match self.peek() {
                Some(Token {
                    tok: Tok::Ident(_), ..
                }) => {
                    into.push(self.ident("a name").unwrap());
                    any = true;
                }
                Some(Token { tok: Tok::Semi, .. }) => {
                    self.pos += 1;
                    if !any {
                        self.error_here(
                            "empty declaration list".to_string(),
                            "at least one name before `;`",
                        );
                    }
                    return;
                }
                _ => {
                    let msg = self.found();
                    self.error_here(msg, "a name or `;`");
                    self.synchronize();
                    return;
                }
            }
        }
    }

    fn state_list(&mut self, doc: &mut Document) {
        let mut any = false;
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Ident(_)) => {
                    let name = self.ident("a state name").unwrap();
                    let initial = if self.peek().map(|t| &t.tok) == Some(&Tok::Star) {
                        self.pos += 1;
                        true
                    } else {
                        false
                    };
                    doc.states.push(StateDecl { name, initial });
                    any = true;
                }
                Some(Tok::Semi) => {
                    self.pos += 1;
                    if !any {
                        self.error_here("empty state list".to_string(), "at least one state");
                    }
                    return;
                }
                _ => {
                    let msg = self.found();
                    self.error_here(msg, "a state name or `;`");
                    self.synchronize();
                    return;
                }
            }
        }
    }

    fn avail_stmt(&mut self, doc: &mut Document) {
        let (Some(state), Some(agent)) = (self.ident("a state name"), self.ident("an agent name"))
        else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::LBrace, "`{`") {
            self.synchronize();
            return;
        }
        let mut actions = Vec::new();
        loop {
            let Some(action) = self.ident("an action name") else {
                self.synchronize();
                return;
            };
            actions.push(action);
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    let msg = self.found();
                    self.error_here(msg, "`,` or `}`");
                    self.synchronize();
                    return;
                }
            }
        }
        if !self.expect_tok(&Tok::Semi, "`;`") {
            self.synchronize();
            return;
        }
        doc.avail.push(AvailDecl {
            state,
            agent,
            actions,
        });
    }

    fn cost_stmt(&mut self, doc: &mut Document) {
        let (Some(state), Some(agent), Some(action)) = (
            self.ident("a state name"),
            self.ident("an agent name"),
            self.ident("an action name"),
        ) else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::Eq, "`=`") {
            self.synchronize();
            return;
        }
        let Some(vector) = self.vector() else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::Semi, "`;`") {
            self.synchronize();
            return;
        }
        doc.costs.push(CostDecl {
            state,
            agent,
            action,
            vector,
        });
    }

    fn vector(&mut self) -> Option<Vec<u64>> {
        if !self.expect_tok(&Tok::LBracket, "`[`") {
            return None;
        }
        let mut out = Vec::new();
        loop {
            out.push(self.int("a quantity")?);
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    return Some(out);
                }
                _ => {
                    let msg = self.found();
                    self.error_here(msg, "`,` or `]`");
                    return None;
                }
            }
        }
    }

    fn outcome_stmt(&mut self, doc: &mut Document) {
        let Some(state) = self.ident("a state name") else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::LParen, "`(`") {
            self.synchronize();
            return;
        }
        let mut joint = Vec::new();
        loop {
            let Some(action) = self.ident("an action name") else {
                self.synchronize();
                return;
            };
            joint.push(action);
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::RParen) => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    let msg = self.found();
                    self.error_here(msg, "`,` or `)`");
                    self.synchronize();
                    return;
                }
            }
        }
        if !self.expect_tok(&Tok::Arrow, "`->`") {
            self.synchronize();
            return;
        }
        let Some(target) = self.ident("a target state name") else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::Semi, "`;`") {
            self.synchronize();
            return;
        }
        doc.outcomes.push(OutcomeDecl {
            state,
            joint,
            target,
        });
    }

    fn restrict_stmt(&mut self, doc: &mut Document) {
        let Some(state) = self.ident("a state name") else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::Semi, "`;`") {
            self.synchronize();
            return;
        }
        doc.restricts.push(state);
    }

    fn norm_block(&mut self, doc: &mut Document) {
        let Some(name) = self.ident("a norm name") else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::LBrace, "`{`") {
            self.synchronize();
            return;
        }
        let mut norm = NormDecl {
            name,
            states: Vec::new(),
            rules: Vec::new(),
        };
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Ident(word)) => match word.as_str() {
                    "state" => {
                        self.pos += 1;
                        self.norm_state_item(&mut norm);
                    }
                    "in" | "on" => {
                        self.norm_rule_item(&mut norm);
                    }
                    _ => {
                        let msg = self.found();
                        self.error_here(msg, "`state`, `on`, `in`, or `}`");
                        self.synchronize();
                    }
                },
                _ => {
                    let msg = self.found();
                    self.error_here(msg, "`state`, `on`, `in`, or `}`");
                    self.synchronize();
                    return;
                }
            }
        }
        doc.norms.push(norm);
    }

    fn norm_state_item(&mut self, norm: &mut NormDecl) {
        let Some(name) = self.ident("a monitor state name") else {
            self.synchronize();
            return;
        };
        let Some(status_word) = self.ident("`ok`, `violation`, or `pending`") else {
            self.synchronize();
            return;
        };
        let status = match status_word.as_str() {
            "ok" => DocStatus::Ok,
            "violation" => DocStatus::Violation,
            "pending" => DocStatus::Pending,
            other => {
                self.diagnostics.push(Diagnostic::error(
                    status_word.span.clone(),
                    format!("unknown monitor status `{other}`"),
                    Some("`ok`, `violation`, or `pending`".to_string()),
                ));
                self.synchronize();
                return;
            }
        };
        let mut initial = false;
        if let Some(Token {
            tok: Tok::Ident(word),
            ..
        }) = self.peek()
        {
            if word == "init" {
                self.pos += 1;
                initial = true;
            }
        }
        if !self.expect_tok(&Tok::Semi, "`;`") {
            self.synchronize();
            return;
        }
        norm.states.push(NormStateDecl {
            name,
            status,
            initial,
        });
    }

    fn norm_rule_item(&mut self, norm: &mut NormDecl) {
        let span = self.here();
        let mut from = None;
        if let Some(Token {
            tok: Tok::Ident(word),
            ..
        }) = self.peek()
        {
            if word == "in" {
                self.pos += 1;
                let Some(state) = self.ident("a monitor state name") else {
                    self.synchronize();
                    return;
                };
                from = Some(state);
            }
        }
        match self.ident("`on`") {
            Some(on) if on.as_str() == "on" => {}
            _ => {
                self.synchronize();
                return;
            }
        }
        let Some(state_word) = self.ident("a state name or `_`") else {
            self.synchronize();
            return;
        };
        let state_pattern = if state_word.as_str() == "_" {
            None
        } else {
            Some(state_word)
        };
        if !self.expect_tok(&Tok::Slash, "`/`") {
            self.synchronize();
            return;
        }
        let action_pattern = match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Ident(word)) if word == "_" => {
                self.pos += 1;
                DocActionPattern::Wildcard
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let mut slots = Vec::new();
                loop {
                    let Some(entry) = self.ident("an action name or `_`") else {
                        self.synchronize();
                        return;
                    };
                    slots.push(if entry.as_str() == "_" {
                        None
                    } else {
                        Some(entry)
                    });
                    match self.peek().map(|t| t.tok.clone()) {
                        Some(Tok::Comma) => {
                            self.pos += 1;
                        }
                        Some(Tok::RParen) => {
                            self.pos += 1;
                            break;
                        }
                        _ => {
                            let msg = self.found();
                            self.error_here(msg, "`,` or `)`");
                            self.synchronize();
                            return;
                        }
                    }
                }
                DocActionPattern::PerAgent(slots)
            }
            _ => {
                let msg = self.found();
                self.error_here(msg, "`_` or `(`");
                self.synchronize();
                return;
            }
        };
        if !self.expect_tok(&Tok::Arrow, "`->`") {
            self.synchronize();
            return;
        }
        let Some(target) = self.ident("a monitor state name") else {
            self.synchronize();
            return;
        };
        if !self.expect_tok(&Tok::Semi, "`;`") {
            self.synchronize();
            return;
        }
        norm.rules.push(NormRuleDecl {
            from,
            state_pattern,
            action_pattern,
            target,
            span,
        });
    }

    fn policy_stmt(&mut self, doc: &mut Document) {
        let span = self.here();
        let Some(kind) = self.ident("`sanction` or `repair`") else {
            self.synchronize();
            return;
        };
        match kind.as_str() {
            "sanction" => {
                let Some(resource) = self.ident("a resource name") else {
                    self.synchronize();
                    return;
                };
                let mut sv = None;
                let mut mode = None;
                loop {
                    match self.peek().map(|t| t.tok.clone()) {
                        Some(Tok::Semi) => {
                            self.pos += 1;
                            break;
                        }
                        Some(Tok::Ident(key)) => {
                            self.pos += 1;
                            if !self.expect_tok(&Tok::Eq, "`=`") {
                                self.synchronize();
                                return;
                            }
                            match key.as_str() {
                                "sv" => sv = self.int("a sanction value"),
                                "mode" => mode = self.ident("`triggering` or `collective`"),
                                other => {
                                    self.error_here(
                                        format!("unknown sanction parameter `{other}`"),
                                        "`sv` or `mode`",
                                    );
                                    self.synchronize();
                                    return;
                                }
                            }
                        }
                        _ => {
                            let msg = self.found();
                            self.error_here(msg, "`sv=..`, `mode=..`, or `;`");
                            self.synchronize();
                            return;
                        }
                    }
                }
                let Some(sv) = sv else {
                    self.diagnostics.push(Diagnostic::error(
                        span,
                        "sanction policy is missing `sv=..`".to_string(),
                        None,
                    ));
                    return;
                };
                doc.policies.push(PolicyDecl::Sanction {
                    resource,
                    sv,
                    mode,
                    span,
                });
            }
            "repair" => {
                let mut cv = None;
                let mut sv = None;
                let mut w = None;
                let mut action = None;
                let mut money = None;
                loop {
                    match self.peek().map(|t| t.tok.clone()) {
                        Some(Tok::Semi) => {
                            self.pos += 1;
                            break;
                        }
                        Some(Tok::Ident(key)) => {
                            self.pos += 1;
                            if !self.expect_tok(&Tok::Eq, "`=`") {
                                self.synchronize();
                                return;
                            }
                            match key.as_str() {
                                "cv" => cv = self.int("a compensation value"),
                                "sv" => sv = self.int("a sanction value"),
                                "w" => w = self.int("a window length"),
                                "action" => action = self.ident("an action name"),
                                "money" => money = self.ident("a resource name"),
                                other => {
                                    self.error_here(
                                        format!("unknown repair parameter `{other}`"),
                                        "`cv`, `sv`, `w`, `action`, or `money`",
                                    );
                                    self.synchronize();
                                    return;
                                }
                            }
                        }
                        _ => {
                            let msg = self.found();
                            self.error_here(
                                msg,
                                "`cv=..`, `sv=..`, `w=..`, `action=..`, `money=..`, or `;`",
                            );
                            self.synchronize();
                            return;
                        }
                    }
                }
                let (Some(cv), Some(sv), Some(w), Some(action)) = (cv, sv, w, action) else {
                    self.diagnostics.push(Diagnostic::error(
                        span,
                        "repair policy needs all of `cv=..`, `sv=..`, `w=..`, and `action=..`"
                            .to_string(),
                        None,
                    ));
                    return;
                };
                doc.policies.push(PolicyDecl::Repair {
                    cv,
                    sv,
                    w,
                    action,
                    money,
                    span,
                });
            }
            other => {
                self.diagnostics.push(Diagnostic::error(
                    kind.span.clone(),
                    format!("unknown policy kind `{other}`"),
                    Some("`sanction` or `repair`".to_string()),
                ));
                self.synchronize();
            }
        }
    }
}
