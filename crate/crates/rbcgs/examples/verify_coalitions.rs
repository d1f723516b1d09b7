//! Resource-bounded coalition checking: budgets, witnesses, monotone
//! sweeps, and the complexity probe.
//!
//! ```bash
//! cargo run -p rbcgs --example verify_coalitions
//! ```

use std::collections::BTreeSet;

use rbcgs::dsl::{lower, parse};
use rbcgs::model::ResourceVector;
use rbcgs::verify::{check, complexity_probe, replay_witness, CoalitionQuery, TemporalOp};

const ABC: &str = include_str!("../scenarios/abc.iss");

fn main() {
    let doc = parse("abc.iss", ABC).expect("scenario parses");
    let lowered = lower(&doc).expect("scenario lowers");
    let m = &lowered.model;

    let coalition: BTreeSet<_> = ["A", "B"].iter().map(|n| m.agent(n).unwrap()).collect();
    let goal: BTreeSet<_> = [m.state("q2").unwrap()].into_iter().collect();
    let q0 = m.state("q0").unwrap();

    // Sweep the money budget: the answer is monotone, flipping exactly once.
    println!("can A and B force delivery of steam (reach q2)?");
    let mut last = false;
    for money in 0..=4u64 {
        let query = CoalitionQuery {
            coalition: coalition.clone(),
            budget: ResourceVector::new(vec![money, 2, 0, 0]),
            operator: TemporalOp::Eventually { goal: goal.clone() },
            start: q0,
        };
        let result = check(m, &query).unwrap();
        println!("  money budget {money}: {}", result.holds);
        assert!(result.holds >= last, "budget monotonicity");
        last = result.holds;

        if result.holds {
            let witness = result.witness_strategy.expect("held with a coalition");
            assert!(replay_witness(m, &query, &witness).unwrap());
        }
    }

    // The instrumentation record behind the configuration bound.
    let query = CoalitionQuery {
        coalition,
        budget: ResourceVector::new(vec![3, 2, 0, 0]),
        operator: TemporalOp::Eventually { goal },
        start: q0,
    };
    let probe = complexity_probe(m, &query).unwrap();
    println!(
        "probe: {} states x {} budget points -> {} configs (bound respected: {})",
        probe.states, probe.budget_points, probe.configs_explored, probe.within_bound
    );
}
