//! The `iss` command-line pipeline: validate, simulate, enforce, verify,
//! audit.
//!
//! Exit codes: 0 success, 1 domain failure (diagnostics, unenforceable
//! norms, bad policies), 2 I/O or usage problems. Output comes in two
//! formats: `human` (styled when the terminal supports it; `ISS_COLOR=0`
//! disables styling) and `records` (line-delimited `key=value`, no colors,
//! no timings, byte-identical across runs with the same seed).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::behavior::{
    cumulative_cost, enumerate_lassos, lasso_from_strategy, render_lasso, Lasso, StrategyProfile,
};
use crate::coordination::{
    enforcement_audit, regiment, repair_extend, sanction, validate_repair_funding, Attribution,
    AuditReport, CoordError, ReparationPolicy, SanctionPolicy, TransformOutcome,
};
use crate::dsl::{
    document_from_model, lower, norm_decl_from_monitor, parse, serialize, Diagnostic, Document,
    Lowered, Name, PolicyDecl, SourceSpan,
};
use crate::model::{Model, ResourceId, StateId};
use crate::norms::{classify_lasso, NormMonitor, Verdict};
use crate::verify::{check_many, complexity_probe, parse_query, render_assignment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Human,
    Records,
}

#[derive(Debug, Parser)]
#[command(
    name = "iss",
    version,
    about = "Model, verify, and enforce norms on resource-bounded concurrent games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, lower, and validate a document.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        /// Recorded in the output; all exploration orders are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run behaviors and classify them against the document's norms.
    Simulate {
        path: PathBuf,
        /// Memoryless strategy file: one `agent state action` per line.
        #[arg(long, conflicts_with = "enumerate")]
        strategy: Option<PathBuf>,
        /// Enumerate every lasso with stem+cycle length up to this bound.
        #[arg(long)]
        enumerate: Option<usize>,
        /// Start state (defaults to every initial state).
        #[arg(long)]
        from: Option<String>,
        /// Restrict to one norm by name.
        #[arg(long)]
        norm: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply an enforcement transform and emit the transformed document.
    Enforce {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: EnforceMode,
        /// Norm to enforce (defaults to the document's only norm).
        #[arg(long)]
        norm: Option<String>,
        /// Sanction value; overrides the document's sanction policy.
        #[arg(long)]
        sv: Option<u64>,
        /// Money resource name; overrides the document policy.
        #[arg(long)]
        money: Option<String>,
        /// Compensation value for repair mode.
        #[arg(long)]
        cv: Option<u64>,
        /// Repair window in steps.
        #[arg(long)]
        w: Option<usize>,
        /// Repair action name.
        #[arg(long)]
        action: Option<String>,
        /// Sanction attribution: triggering (default) or collective.
        #[arg(long)]
        attribution: Option<String>,
        /// Keep deadlocked states in the regimented output instead of
        /// failing.
        #[arg(long, default_value_t = false)]
        allow_deadlock: bool,
        /// Lasso length bound for the audit censuses.
        #[arg(long, default_value_t = 4)]
        census: usize,
        /// Write the transformed document here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a resource-bounded coalition query.
    Verify {
        path: PathBuf,
        /// Query, e.g. `<<K:A,B budget=[3,2,0,0]>> F {q2}`.
        query: String,
        /// Start state (defaults to every initial state).
        #[arg(long)]
        from: Option<String>,
        /// Print the witness strategy table when the query holds.
        #[arg(long, default_value_t = false)]
        witness: bool,
        /// Print the instrumentation record.
        #[arg(long, default_value_t = false)]
        probe: bool,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply a transform and report only its audit.
    Audit {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: EnforceMode,
        #[arg(long)]
        norm: Option<String>,
        #[arg(long)]
        sv: Option<u64>,
        #[arg(long)]
        money: Option<String>,
        #[arg(long)]
        cv: Option<u64>,
        #[arg(long)]
        w: Option<usize>,
        #[arg(long)]
        action: Option<String>,
        #[arg(long)]
        attribution: Option<String>,
        #[arg(long, default_value_t = false)]
        allow_deadlock: bool,
        #[arg(long, default_value_t = 4)]
        census: usize,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnforceMode {
    Regiment,
    Sanction,
    Repair,
}

/// Rendering context: where output goes and whether to style it.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub color: bool,
}

impl Console<'_> {
    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn good(&self, text: &str) -> String {
        self.paint("32", text)
    }

    fn bad(&self, text: &str) -> String {
        self.paint("31", text)
    }
}

/// Entry point shared by the binary and the tests.
pub fn run(cli: &Cli, console: &mut Console) -> i32 {
    let code = match &cli.command {
        Command::Validate { path, format, seed } => cmd_validate(path, *format, *seed, console),
        Command::Simulate {
            path,
            strategy,
            enumerate,
            from,
            norm,
            format,
            seed,
        } => cmd_simulate(
            path,
            strategy.as_deref(),
            *enumerate,
            from.as_deref(),
            norm.as_deref(),
            *format,
            *seed,
            console,
        ),
        Command::Enforce {
            path,
            mode,
            norm,
            sv,
            money,
            cv,
            w,
            action,
            attribution,
            allow_deadlock,
            census,
            output,
            format,
            seed,
        } => cmd_enforce(
            path,
            EnforceArgs {
                mode: *mode,
                norm: norm.clone(),
                sv: *sv,
                money: money.clone(),
                cv: *cv,
                w: *w,
                action: action.clone(),
                attribution: attribution.clone(),
                allow_deadlock: *allow_deadlock,
                census: *census,
            },
            output.as_deref(),
            *format,
            *seed,
            true,
            console,
        ),
        Command::Verify {
            path,
            query,
            from,
            witness,
            probe,
            format,
            seed,
        } => cmd_verify(
            path,
            query,
            from.as_deref(),
            *witness,
            *probe,
            *format,
            *seed,
            console,
        ),
        Command::Audit {
            path,
            mode,
            norm,
            sv,
            money,
            cv,
            w,
            action,
            attribution,
            allow_deadlock,
            census,
            format,
            seed,
        } => cmd_enforce(
            path,
            EnforceArgs {
                mode: *mode,
                norm: norm.clone(),
                sv: *sv,
                money: money.clone(),
                cv: *cv,
                w: *w,
                action: action.clone(),
                attribution: attribution.clone(),
                allow_deadlock: *allow_deadlock,
                census: *census,
            },
            None,
            *format,
            *seed,
            false,
            console,
        ),
    };
    code.unwrap_or_else(|failure| {
        let _ = writeln!(console.err, "{}", failure.message);
        failure.code
    })
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn io(message: String) -> Self {
        Failure {
            code: EXIT_IO,
            message,
        }
    }

    fn domain(message: String) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message,
        }
    }
}

impl From<CoordError> for Failure {
    fn from(e: CoordError) -> Self {
        Failure::domain(format!("error: {e}"))
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("error: cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(Document, Lowered), Failure> {
    let text = read_input(path)?;
    let file = path.display().to_string();
    let doc = parse(&file, &text).map_err(|diags| Failure::domain(render_diags(&diags)))?;
    let lowered = lower(&doc).map_err(|diags| Failure::domain(render_diags(&diags)))?;
    Ok((doc, lowered))
}

fn render_diags(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(Diagnostic::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmd_validate(
    path: &Path,
    format: OutputFormat,
    seed: u64,
    console: &mut Console,
) -> Result<i32, Failure> {
    let (doc, lowered) = load(path)?;
    match format {
        OutputFormat::Human => {
            let ok = console.good("ok");
            let _ = writeln!(
                console.out,
                "{}: {} agents, {} resources, {} states, {} actions, {} norms",
                ok,
                lowered.model.agent_count(),
                lowered.model.resource_count(),
                lowered.model.state_count(),
                lowered.model.action_count(),
                lowered.monitors.len()
            );
            render_warnings_human(&lowered.warnings, console);
        }
        OutputFormat::Records => {
            let _ = writeln!(console.out, "command=validate");
            let _ = writeln!(console.out, "seed={seed}");
            let _ = writeln!(console.out, "file={}", doc.file);
            let _ = writeln!(console.out, "status=ok");
            let _ = writeln!(console.out, "agents={}", lowered.model.agent_count());
            let _ = writeln!(console.out, "resources={}", lowered.model.resource_count());
            let _ = writeln!(console.out, "states={}", lowered.model.state_count());
            let _ = writeln!(console.out, "actions={}", lowered.model.action_count());
            let _ = writeln!(console.out, "norms={}", lowered.monitors.len());
            let _ = writeln!(console.out, "warnings={}", lowered.warnings.len());
        }
    }
    Ok(EXIT_OK)
}

fn render_warnings_human(warnings: &[Diagnostic], console: &mut Console) {
    const SHOWN: usize = 5;
    for w in warnings.iter().take(SHOWN) {
        let _ = writeln!(console.err, "{w}");
    }
    if warnings.len() > SHOWN {
        let _ = writeln!(
            console.err,
            "({} more warnings suppressed)",
            warnings.len() - SHOWN
        );
    }
}

fn resolve_starts(m: &Model, from: Option<&str>) -> Result<Vec<StateId>, Failure> {
    match from {
        None => Ok(m.initial_states().to_vec()),
        Some(name) => m
            .state(name)
            .map(|q| vec![q])
            .ok_or_else(|| Failure::domain(format!("error: unknown state `{name}`"))),
    }
}

fn select_monitors(lowered: &Lowered, norm: Option<&str>) -> Result<Vec<NormMonitor>, Failure> {
    match norm {
        None => Ok(lowered.monitors.clone()),
        Some(name) => lowered
            .monitors
            .iter()
            .find(|m| m.name() == name)
            .cloned()
            .map(|m| vec![m])
            .ok_or_else(|| Failure::domain(format!("error: no norm named `{name}`"))),
    }
}

fn parse_strategy_file(m: &Model, path: &Path) -> Result<StrategyProfile, Failure> {
    let text = read_input(path)?;
    let mut profile = StrategyProfile::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [agent, state, action] = parts.as_slice() else {
            return Err(Failure::domain(format!(
                "error: {}:{}: expected `agent state action`",
                path.display(),
                lineno + 1
            )));
        };
        let a = m.agent(agent).ok_or_else(|| {
            Failure::domain(format!(
                "error: {}:{}: unknown agent `{agent}`",
                path.display(),
                lineno + 1
            ))
        })?;
        let q = m.state(state).ok_or_else(|| {
            Failure::domain(format!(
                "error: {}:{}: unknown state `{state}`",
                path.display(),
                lineno + 1
            ))
        })?;
        let act = m.action(action).ok_or_else(|| {
            Failure::domain(format!(
                "error: {}:{}: unknown action `{action}`",
                path.display(),
                lineno + 1
            ))
        })?;
        profile.assign(a, q, act);
    }
    Ok(profile)
}

/// Single-line lasso rendering for records output.
fn compact_lasso(m: &Model, lasso: &Lasso) -> String {
    let step = |s: &crate::behavior::Step| {
        let target = m.step(s.source, &s.action).expect("valid lasso");
        format!(
            "{}--({})-->{}",
            m.state_name(s.source),
            m.render_joint_action(&s.action),
            m.state_name(target)
        )
    };
    let stem: Vec<String> = lasso.stem().steps().iter().map(step).collect();
    let cycle: Vec<String> = lasso.cycle().iter().map(step).collect();
    format!("{}|{}", stem.join(";"), cycle.join(";"))
}

fn render_verdict(v: &Verdict, console: &Console) -> String {
    match v {
        Verdict::Compliant => console.good("COMPLIANT"),
        Verdict::Violating { position } => {
            format!("{} at step {position}", console.bad("VIOLATING"))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    strategy: Option<&Path>,
    enumerate: Option<usize>,
    from: Option<&str>,
    norm: Option<&str>,
    format: OutputFormat,
    seed: u64,
    console: &mut Console,
) -> Result<i32, Failure> {
    let (_, lowered) = load(path)?;
    let m = &lowered.model;
    let monitors = select_monitors(&lowered, norm)?;
    let starts = resolve_starts(m, from)?;

    let mut lassos: Vec<Lasso> = Vec::new();
    match (strategy, enumerate) {
        (Some(file), None) => {
            let profile = parse_strategy_file(m, file)?;
            for &q0 in &starts {
                lassos.push(
                    lasso_from_strategy(m, &profile, q0)
                        .map_err(|e| Failure::domain(format!("error: {e}")))?,
                );
            }
        }
        (None, Some(bound)) => {
            for &q0 in &starts {
                lassos.extend(
                    enumerate_lassos(m, q0, bound)
                        .map_err(|e| Failure::domain(format!("error: {e}")))?,
                );
            }
        }
        _ => {
            return Err(Failure::io(
                "usage: simulate needs exactly one of --strategy <file> or --enumerate <len>"
                    .to_string(),
            ))
        }
    }

    if format == OutputFormat::Records {
        let _ = writeln!(console.out, "command=simulate");
        let _ = writeln!(console.out, "seed={seed}");
        let _ = writeln!(console.out, "lassos={}", lassos.len());
    }
    for (ix, lasso) in lassos.iter().enumerate() {
        let one_pass = lasso
            .unrolled(m, 1)
            .map_err(|e| Failure::domain(format!("error: {e}")))?;
        match format {
            OutputFormat::Human => {
                let _ = writeln!(
                    console.out,
                    "lasso {ix} (stem {}, cycle {}):",
                    lasso.stem().len(),
                    lasso.cycle().len()
                );
                let _ = write!(console.out, "{}", render_lasso(m, lasso));
                for mon in &monitors {
                    let verdict = classify_lasso(m, mon, lasso)
                        .map_err(|e| Failure::domain(format!("error: {e}")))?;
                    let rendered = render_verdict(&verdict, console);
                    let _ = writeln!(console.out, "  norm {}: {}", mon.name(), rendered);
                }
                for a in m.agents() {
                    let group: BTreeSet<_> = [a].into_iter().collect();
                    let cost = cumulative_cost(m, &one_pass, &group)
                        .map_err(|e| Failure::domain(format!("error: {e}")))?;
                    let _ = writeln!(
                        console.out,
                        "  cost {} (stem + one cycle pass): {cost}",
                        m.agent_name(a)
                    );
                }
            }
            OutputFormat::Records => {
                let _ = writeln!(
                    console.out,
                    "lasso.{ix}.shape=stem{}.cycle{}",
                    lasso.stem().len(),
                    lasso.cycle().len()
                );
                let _ = writeln!(console.out, "lasso.{ix}.run={}", compact_lasso(m, lasso));
                for mon in &monitors {
                    let verdict = classify_lasso(m, mon, lasso)
                        .map_err(|e| Failure::domain(format!("error: {e}")))?;
                    let rendered = match verdict {
                        Verdict::Compliant => "COMPLIANT".to_string(),
                        Verdict::Violating { position } => format!("VIOLATING@{position}"),
                    };
                    let _ = writeln!(console.out, "lasso.{ix}.norm.{}={rendered}", mon.name());
                }
                for a in m.agents() {
                    let group: BTreeSet<_> = [a].into_iter().collect();
                    let cost = cumulative_cost(m, &one_pass, &group)
                        .map_err(|e| Failure::domain(format!("error: {e}")))?;
                    let _ = writeln!(console.out, "lasso.{ix}.cost.{}={cost}", m.agent_name(a));
                }
            }
        }
    }
    Ok(EXIT_OK)
}

struct EnforceArgs {
    mode: EnforceMode,
    norm: Option<String>,
    sv: Option<u64>,
    money: Option<String>,
    cv: Option<u64>,
    w: Option<usize>,
    action: Option<String>,
    attribution: Option<String>,
    allow_deadlock: bool,
    census: usize,
}

fn pick_norm(lowered: &Lowered, wanted: Option<&str>) -> Result<NormMonitor, Failure> {
    match wanted {
        Some(name) => lowered
            .monitors
            .iter()
            .find(|m| m.name() == name)
            .cloned()
            .ok_or_else(|| Failure::domain(format!("error: no norm named `{name}`"))),
        None => match lowered.monitors.as_slice() {
            [only] => Ok(only.clone()),
            [] => Err(Failure::domain(
                "error: the document declares no norm".to_string(),
            )),
            _ => Err(Failure::domain(
                "error: several norms declared; pick one with --norm".to_string(),
            )),
        },
    }
}

fn sanction_policy_from(
    m: &Model,
    lowered: &Lowered,
    args: &EnforceArgs,
) -> Result<SanctionPolicy, Failure> {
    let base = lowered.policies.sanction;
    let money = match &args.money {
        Some(name) => Some(
            m.resource(name)
                .ok_or_else(|| Failure::domain(format!("error: unknown resource `{name}`")))?,
        ),
        None => base.map(|p| p.money_resource),
    };
    let sv = args.sv.or(base.map(|p| p.sanction_value));
    let (Some(money), Some(sv)) = (money, sv) else {
        return Err(Failure::domain(
            "error: sanction needs `--sv` and `--money` (or a `policy sanction` block)".to_string(),
        ));
    };
    let mut policy = SanctionPolicy::new(money, sv)?;
    policy.attribution = match args.attribution.as_deref() {
        None => base.map(|p| p.attribution).unwrap_or_default(),
        Some("triggering") => Attribution::TriggeringAgent,
        Some("collective") => Attribution::Collective,
        Some(other) => {
            return Err(Failure::domain(format!(
                "error: unknown attribution `{other}` (use triggering or collective)"
            )))
        }
    };
    Ok(policy)
}

fn repair_policy_from(
    m: &Model,
    lowered: &Lowered,
    args: &EnforceArgs,
) -> Result<ReparationPolicy, Failure> {
    let base = lowered.policies.repair;
    let cv = args.cv.or(base.map(|p| p.compensation_value));
    let sv = args.sv.or(base.map(|p| p.sanction_value));
    let w = args.w.or(base.map(|p| p.window));
    let action = match &args.action {
        Some(name) => Some(
            m.action(name)
                .ok_or_else(|| Failure::domain(format!("error: unknown action `{name}`")))?,
        ),
        None => base.map(|p| p.repair_action),
    };
    let money = match &args.money {
        Some(name) => Some(
            m.resource(name)
                .ok_or_else(|| Failure::domain(format!("error: unknown resource `{name}`")))?,
        ),
        None => base
            .map(|p| p.money_resource)
            .or_else(|| (m.resource_count() > 0).then(|| ResourceId::new(0))),
    };
    let (Some(cv), Some(sv), Some(w), Some(action), Some(money)) = (cv, sv, w, action, money)
    else {
        return Err(Failure::domain(
            "error: repair needs `--cv`, `--sv`, `--w`, and `--action` (or a `policy repair` block)"
                .to_string(),
        ));
    };
    Ok(ReparationPolicy::new(cv, sv, w, action, money)?)
}

fn policy_decls(m: &Model, lowered: &Lowered) -> Vec<PolicyDecl> {
    let mut out = Vec::new();
    if let Some(p) = lowered.policies.sanction {
        out.push(PolicyDecl::Sanction {
            resource: Name::synthetic(m.resource_name(p.money_resource)),
            sv: p.sanction_value,
            mode: match p.attribution {
                Attribution::TriggeringAgent => None,
                Attribution::Collective => Some(Name::synthetic("collective")),
            },
            span: SourceSpan::synthetic(),
        });
    }
    if let Some(p) = lowered.policies.repair {
        out.push(PolicyDecl::Repair {
            cv: p.compensation_value,
            sv: p.sanction_value,
            w: p.window as u64,
            action: Name::synthetic(m.action_name(p.repair_action)),
            money: Some(Name::synthetic(m.resource_name(p.money_resource))),
            span: SourceSpan::synthetic(),
        });
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_enforce(
    path: &Path,
    args: EnforceArgs,
    output: Option<&Path>,
    format: OutputFormat,
    seed: u64,
    emit_document: bool,
    console: &mut Console,
) -> Result<i32, Failure> {
    let (_, lowered) = load(path)?;
    let m = &lowered.model;
    let mon = pick_norm(&lowered, args.norm.as_deref())?;

    let (outcome, document) = match args.mode {
        EnforceMode::Regiment => {
            let reg = regiment(m, &mon, args.allow_deadlock)?;
            let lifted = reg
                .product
                .lifted_violation_norm()
                .map_err(|e| Failure::domain(format!("error: {e}")))?
                .renamed(&format!("{}__lifted", mon.name()));
            let mut doc = document_from_model(&reg.product.model);
            doc.norms
                .push(norm_decl_from_monitor(&reg.product.model, &lifted));
            doc.policies = policy_decls(&reg.product.model, &lowered);
            (TransformOutcome::Regimented(reg), doc)
        }
        EnforceMode::Sanction => {
            let policy = sanction_policy_from(m, &lowered, &args)?;
            let s = sanction(m, &mon, policy)?;
            let lifted = s
                .product
                .lifted_violation_norm()
                .map_err(|e| Failure::domain(format!("error: {e}")))?
                .renamed(&format!("{}__lifted", mon.name()));
            let mut doc = document_from_model(&s.product.model);
            doc.norms
                .push(norm_decl_from_monitor(&s.product.model, &lifted));
            doc.policies = policy_decls(&s.product.model, &lowered);
            (TransformOutcome::Sanctioned(s), doc)
        }
        EnforceMode::Repair => {
            let policy = repair_policy_from(m, &lowered, &args)?;
            validate_repair_funding(m, &policy)?;
            let extended = repair_extend(&mon, &policy)?;
            let mut doc = document_from_model(m);
            for other in &lowered.monitors {
                if other.name() == mon.name() {
                    doc.norms.push(norm_decl_from_monitor(m, &extended));
                } else {
                    doc.norms.push(norm_decl_from_monitor(m, other));
                }
            }
            doc.policies = policy_decls(m, &lowered);
            (
                TransformOutcome::Repaired {
                    monitor: extended,
                    policy,
                },
                doc,
            )
        }
    };

    let audit = enforcement_audit(m, &mon, &outcome, args.census)?;

    if emit_document {
        let text = serialize(&document);
        match output {
            Some(file) => {
                std::fs::write(file, &text).map_err(|e| {
                    Failure::io(format!("error: cannot write {}: {e}", file.display()))
                })?;
                let color = console.color;
                write_audit(&audit, format, seed, console.out, color);
            }
            None => {
                let _ = write!(console.out, "{text}");
                let color = console.color;
                write_audit(&audit, format, seed, console.err, color);
            }
        }
    } else {
        let color = console.color;
        write_audit(&audit, format, seed, console.out, color);
    }
    Ok(EXIT_OK)
}

fn write_audit(
    audit: &AuditReport,
    format: OutputFormat,
    seed: u64,
    out: &mut dyn Write,
    color: bool,
) {
    match format {
        OutputFormat::Human => {
            let yesno = |b: bool| {
                let text = if b { "yes" } else { "no" };
                if !color {
                    return text.to_string();
                }
                if b {
                    format!("\x1b[31m{text}\x1b[0m")
                } else {
                    format!("\x1b[32m{text}\x1b[0m")
                }
            };
            let _ = writeln!(out, "audit ({}):", audit.mode);
            let _ = writeln!(
                out,
                "  violation possible before: {}",
                yesno(audit.violation_before)
            );
            let _ = writeln!(
                out,
                "  violation possible after:  {}",
                yesno(audit.violation_after)
            );
            let _ = writeln!(
                out,
                "  compliant lassos (len <= {}): {} -> {}",
                audit.census_bound, audit.compliant_before, audit.compliant_after
            );
            for (k, v) in &audit.extras {
                let _ = writeln!(out, "  {k}: {v}");
            }
        }
        OutputFormat::Records => {
            let _ = writeln!(out, "command=audit");
            let _ = writeln!(out, "seed={seed}");
            let _ = writeln!(out, "mode={}", audit.mode);
            let _ = writeln!(out, "violation_before={}", audit.violation_before);
            let _ = writeln!(out, "violation_after={}", audit.violation_after);
            let _ = writeln!(out, "census_bound={}", audit.census_bound);
            let _ = writeln!(out, "compliant_before={}", audit.compliant_before);
            let _ = writeln!(out, "compliant_after={}", audit.compliant_after);
            for (k, v) in &audit.extras {
                let _ = writeln!(out, "{k}={v}");
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    path: &Path,
    query_text: &str,
    from: Option<&str>,
    witness: bool,
    probe: bool,
    format: OutputFormat,
    seed: u64,
    console: &mut Console,
) -> Result<i32, Failure> {
    let (_, lowered) = load(path)?;
    let m = &lowered.model;
    let starts = resolve_starts(m, from)?;
    let query = parse_query(m, query_text, starts[0]).map_err(|e| {
        let caret = " ".repeat("error: in query: ".len() + e.offset) + "^";
        Failure::domain(format!("error: in query: {query_text}\n{caret}\n{e}"))
    })?;

    let (per_start, result) =
        check_many(m, &query.coalition, &query.budget, &query.operator, &starts)
            .map_err(|e| Failure::domain(format!("error: {e}")))?;

    match format {
        OutputFormat::Human => {
            let verdict = if result.holds {
                console.good("holds")
            } else {
                console.bad("does not hold")
            };
            let _ = writeln!(console.out, "query: {query_text}");
            let _ = writeln!(console.out, "result: {verdict}");
            for (q, h) in &per_start {
                let _ = writeln!(
                    console.out,
                    "  from {}: {}",
                    m.state_name(*q),
                    if *h { "holds" } else { "does not hold" }
                );
            }
            let _ = writeln!(console.out, "configs explored: {}", result.configs_explored);
            if witness {
                match &result.witness_strategy {
                    Some(table) => {
                        let _ = writeln!(console.out, "witness strategy:");
                        for ((q, beta), assignment) in table {
                            let _ = writeln!(
                                console.out,
                                "  at {} with budget {beta}: {}",
                                m.state_name(*q),
                                render_assignment(m, assignment)
                            );
                        }
                    }
                    None => {
                        let _ = writeln!(console.out, "witness strategy: none");
                    }
                }
            }
            if probe {
                let record = complexity_probe(m, &query)
                    .map_err(|e| Failure::domain(format!("error: {e}")))?;
                let _ = writeln!(console.out, "probe:");
                let _ = writeln!(console.out, "  operator: {}", record.operator);
                let _ = writeln!(console.out, "  states: {}", record.states);
                let _ = writeln!(console.out, "  transitions: {}", record.transitions);
                let _ = writeln!(console.out, "  budget points: {}", record.budget_points);
                let _ = writeln!(
                    console.out,
                    "  configs explored: {}",
                    record.configs_explored
                );
                let _ = writeln!(console.out, "  within bound: {}", record.within_bound);
                let _ = writeln!(console.out, "  wall time: {:?}", record.wall_time);
            }
        }
        OutputFormat::Records => {
            let _ = writeln!(console.out, "command=verify");
            let _ = writeln!(console.out, "seed={seed}");
            let _ = writeln!(console.out, "query={query_text}");
            let _ = writeln!(console.out, "holds={}", result.holds);
            let _ = writeln!(console.out, "configs_explored={}", result.configs_explored);
            for (q, h) in &per_start {
                let _ = writeln!(console.out, "start.{}={h}", m.state_name(*q));
            }
            if witness {
                if let Some(table) = &result.witness_strategy {
                    for ((q, beta), assignment) in table {
                        let _ = writeln!(
                            console.out,
                            "witness.{}.{beta}={}",
                            m.state_name(*q),
                            render_assignment(m, assignment)
                        );
                    }
                }
            }
            if probe {
                let record = complexity_probe(m, &query)
                    .map_err(|e| Failure::domain(format!("error: {e}")))?;
                // Wall time is deliberately omitted: records output must be
                // byte-identical across runs.
                let _ = writeln!(console.out, "probe.operator={}", record.operator);
                let _ = writeln!(console.out, "probe.states={}", record.states);
                let _ = writeln!(console.out, "probe.transitions={}", record.transitions);
                let _ = writeln!(console.out, "probe.budget_points={}", record.budget_points);
                let _ = writeln!(
                    console.out,
                    "probe.configs_explored={}",
                    record.configs_explored
                );
                let _ = writeln!(console.out, "probe.within_bound={}", record.within_bound);
            }
        }
    }
    Ok(EXIT_OK)
}
