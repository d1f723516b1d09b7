//! Sanctioning: keep every behavior possible but make the violating action
//! components cost `sv` more money.
//!
//! ```bash
//! cargo run -p rbcgs --example enforce_sanction
//! ```

use rbcgs::coordination::{enforcement_audit, sanction, SanctionPolicy, TransformOutcome};
use rbcgs::dsl::{lower, parse};

const DUMPBAN: &str = include_str!("../scenarios/dumpban.iss");

fn main() {
    let doc = parse("dumpban.iss", DUMPBAN).expect("fixture parses");
    let lowered = lower(&doc).expect("fixture lowers");
    let m = &lowered.model;
    let mon = &lowered.monitors[0];
    let policy: SanctionPolicy = lowered.policies.sanction.expect("fixture declares one");

    let sanctioned = sanction(m, mon, policy).unwrap();
    println!(
        "sanctioned {} cost entr{}:",
        sanctioned.charged.len(),
        if sanctioned.charged.len() == 1 {
            "y"
        } else {
            "ies"
        }
    );
    for &(p, a, act) in &sanctioned.charged {
        let product = &sanctioned.product.model;
        println!(
            "  {} / {} / {}: now costs {}",
            product.state_name(p),
            product.agent_name(a),
            product.action_name(act),
            product.action_cost(p, a, act).unwrap()
        );
    }

    let audit = enforcement_audit(m, mon, &TransformOutcome::Sanctioned(sanctioned), 4).unwrap();
    println!("violation still possible: {}", audit.violation_after);
    for (k, v) in &audit.extras {
        println!("  {k}: {v}");
    }
    // Sanctions nudge rather than forbid.
    assert!(audit.violation_after);
}
