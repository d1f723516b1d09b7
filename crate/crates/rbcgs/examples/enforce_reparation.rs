//! Reparation: tolerate a violation when the designated repair action is
//! played within the window, enlarging the compliant set.
//!
//! ```bash
//! cargo run -p rbcgs --example enforce_reparation
//! ```

use rbcgs::behavior::{Lasso, Step, Trace};
use rbcgs::coordination::{repair_extend, validate_repair_funding, ReparationPolicy};
use rbcgs::dsl::{lower, parse};
use rbcgs::model::JointAction;
use rbcgs::norms::classify_lasso;

const ABC: &str = include_str!("../scenarios/abc.iss");

fn main() {
    let doc = parse("abc.iss", ABC).expect("scenario parses");
    let lowered = lower(&doc).expect("scenario lowers");
    let m = &lowered.model;
    let mon = &lowered.monitors[0];
    let policy: ReparationPolicy = lowered.policies.repair.expect("scenario declares one");
    validate_repair_funding(m, &policy).expect("pay covers cv wherever available");

    let extended = repair_extend(mon, &policy).unwrap();
    println!(
        "extended monitor: {} states (was {}), window {}",
        extended.state_count(),
        mon.state_count(),
        policy.window
    );

    // A defects right after committing, then pays compensation.
    let q0 = m.state("q0").unwrap();
    let q1 = m.state("q1").unwrap();
    let step = |q, names: [&str; 3]| Step {
        source: q,
        action: JointAction::new(names.map(|n| m.action(n).unwrap()).to_vec()),
    };
    let lasso = Lasso::new(
        m,
        Trace::starting_at(q0),
        vec![
            step(q0, ["offer", "noop", "noop"]),
            step(q1, ["defect", "noop", "noop"]),
            step(q0, ["pay", "noop", "noop"]),
        ],
    )
    .unwrap();

    let original = classify_lasso(m, mon, &lasso).unwrap();
    let repaired = classify_lasso(m, &extended, &lasso).unwrap();
    println!("defect-then-pay under the original norm: {original:?}");
    println!("defect-then-pay under the repair window: {repaired:?}");
    assert!(!original.is_compliant());
    assert!(repaired.is_compliant());

    // Rationality guard: compensation below sanction, always.
    assert!(policy.compensation_value < policy.sanction_value);
}
