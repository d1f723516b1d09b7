//! The bundled three-firm waste-exchange scenario, end to end: validate,
//! simulate a defection, then regiment, sanction, and repair.
//!
//! ```bash
//! cargo run -p rbcgs --example scenario_abc
//! ```

use std::collections::BTreeSet;

use rbcgs::behavior::{lasso_from_strategy, render_lasso, StrategyProfile};
use rbcgs::coordination::{enforcement_audit, regiment, repair_extend, sanction, TransformOutcome};
use rbcgs::dsl::{lower, parse};
use rbcgs::model::ResourceVector;
use rbcgs::norms::classify_lasso;
use rbcgs::verify::check_norm_enforceable;

const ABC: &str = include_str!("../scenarios/abc.iss");

fn main() {
    // 1. Validate.
    let doc = parse("abc.iss", ABC).expect("scenario parses");
    let lowered = lower(&doc).expect("scenario validates");
    let m = &lowered.model;
    let mon = &lowered.monitors[0];
    println!(
        "validated: {} firms, {} resources, {} states",
        m.agent_count(),
        m.resource_count(),
        m.state_count()
    );

    // 2. Simulate the defect-before-delivery strategy; the commitment norm
    //    catches it at the defection step.
    let mut profile = StrategyProfile::new();
    for (agent, choices) in [
        (
            "A",
            [
                ("q0", "offer"),
                ("q1", "defect"),
                ("q2", "noop"),
                ("q3", "noop"),
            ],
        ),
        (
            "B",
            [
                ("q0", "noop"),
                ("q1", "recv"),
                ("q2", "noop"),
                ("q3", "noop"),
            ],
        ),
        (
            "C",
            [
                ("q0", "noop"),
                ("q1", "noop"),
                ("q2", "recv"),
                ("q3", "noop"),
            ],
        ),
    ] {
        let a = m.agent(agent).unwrap();
        for (state, action) in choices {
            profile.assign(a, m.state(state).unwrap(), m.action(action).unwrap());
        }
    }
    let run = lasso_from_strategy(m, &profile, m.state("q0").unwrap()).unwrap();
    println!("\ndefect-before-delivery run:");
    print!("{}", render_lasso(m, &run));
    let verdict = classify_lasso(m, mon, &run).unwrap();
    println!("verdict: {verdict:?}");
    assert!(!verdict.is_compliant());

    // 3. Regimentation eliminates violations outright.
    let reg = regiment(m, mon, false).unwrap();
    let audit = enforcement_audit(m, mon, &TransformOutcome::Regimented(reg), 3).unwrap();
    println!(
        "\nregiment: violation possible after = {}",
        audit.violation_after
    );
    assert!(!audit.violation_after);

    // 4. Sanctioning leaves defection possible but 5 money costlier.
    let s = sanction(m, mon, lowered.policies.sanction.unwrap()).unwrap();
    let audit = enforcement_audit(m, mon, &TransformOutcome::Sanctioned(s), 3).unwrap();
    println!(
        "sanction: violation possible after = {}",
        audit.violation_after
    );
    assert!(audit.violation_after);
    for (k, v) in &audit.extras {
        println!("  {k}: {v}");
    }

    // 5. Reparation enlarges the compliant set: defect-then-pay is tolerated.
    let policy = lowered.policies.repair.unwrap();
    let extended = repair_extend(mon, &policy).unwrap();
    let audit = enforcement_audit(
        m,
        mon,
        &TransformOutcome::Repaired {
            monitor: extended,
            policy,
        },
        3,
    )
    .unwrap();
    println!(
        "repair: compliant lassos (len <= 3) {} -> {}",
        audit.compliant_before, audit.compliant_after
    );
    assert!(audit.compliant_after >= audit.compliant_before);

    // 6. Verify: the full coalition keeps the norm for free (defection is
    //    their own choice), but nobody can guarantee it on the firms'
    //    behalf.
    let everyone: BTreeSet<_> = m.agents().collect();
    let zero = ResourceVector::zero(m.resource_count());
    let held = check_norm_enforceable(m, mon, &everyone, &zero).unwrap();
    let unheld = check_norm_enforceable(m, mon, &BTreeSet::new(), &zero).unwrap();
    println!(
        "\nnorm enforceable by all three firms: {} / by nobody: {}",
        held.holds, unheld.holds
    );
    assert!(held.holds);
    assert!(!unheld.holds);
}
