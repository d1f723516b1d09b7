//! Modeling, verification, and norm enforcement for resource-bounded
//! concurrent game structures.
//!
//! The crate covers the full pipeline for multiagent systems whose actions
//! consume vectors of resources — the shape industrial symbiosis networks
//! take, where firms circulate reusable material and energy under money and
//! capacity limits:
//!
//! - [`model`] — the game structure itself: agents, resources, states,
//!   per-agent action availability, a partial cost function, and a
//!   deterministic joint-action outcome function.
//! - [`behavior`] — runs as lassos (stem + repeating cycle), cumulative
//!   resource accounting, budget feasibility, and bounded lasso enumeration.
//! - [`norms`] — behavioral norms as deterministic safety monitors, with
//!   state- and action-normativity as special cases, lasso classification,
//!   and violation witness search.
//! - [`coordination`] — the three enforcement transforms: regimentation
//!   (prune transitions so violations become unreachable), sanction (make
//!   violating actions cost more money), and reparation (tolerate violations
//!   repaired within a window), plus audits quantifying their effect.
//! - [`verify`] — resource-bounded coalition checking: can a coalition,
//!   within a budget vector, enforce a Next / Eventually / Globally / Until
//!   target against all opponent behavior.
//! - [`dsl`] — the `.iss` text format tying everything together, with
//!   span-carrying diagnostics and a canonical serializer.
//! - [`cli`] — the `iss` command-line pipeline
//!   (`validate | simulate | enforce | verify | audit`).
//!
//! Every example under `examples/` is runnable and exercises one of these
//! capabilities end to end; `examples/scenario_abc.rs` walks the bundled
//! three-firm waste-exchange scenario through the whole pipeline.

pub mod behavior;
pub mod cli;
pub mod coordination;
pub mod dsl;
pub mod model;
pub mod norms;
pub mod verify;

pub use behavior::{
    cumulative_cost, enumerate_lassos, feasible_under_budget, lasso_from_strategy, Budget,
    Feasibility, Lasso, Step, StrategyProfile, Trace,
};
pub use model::{
    ActionId, AgentId, JointAction, Model, ModelBuilder, ModelError, ResourceId, ResourceVector,
    StateId, ValidationReport,
};
pub use norms::{
    action_norm, classify_lasso, exists_violation, state_norm, universal_ok, MonitorStatus,
    NormError, NormMonitor, Verdict,
};
