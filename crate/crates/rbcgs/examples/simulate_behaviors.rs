//! Traces, strategy-induced lassos, bounded enumeration, and budget
//! feasibility.
//!
//! ```bash
//! cargo run -p rbcgs --example simulate_behaviors
//! ```

use std::collections::BTreeSet;

use rbcgs::behavior::{
    cumulative_cost, enumerate_lassos, feasible_under_budget, lasso_from_strategy, render_lasso,
    Budget, StrategyProfile, Trace,
};
use rbcgs::model::{ModelBuilder, ResourceVector};

fn main() {
    // One firm cycling between producing and reselling; producing burns one
    // unit of fuel.
    let mut b = ModelBuilder::new();
    b.agent("firm")
        .resource("fuel")
        .state("ready", true)
        .state("loaded", false)
        .action("produce")
        .action("sell")
        .action("idle")
        .avail("ready", "firm", ["produce", "idle"])
        .avail("loaded", "firm", ["sell", "idle"])
        .cost("ready", "firm", "produce", [1])
        .outcome("ready", ["produce"], "loaded")
        .outcome("ready", ["idle"], "ready")
        .outcome("loaded", ["sell"], "ready")
        .outcome("loaded", ["idle"], "loaded");
    let m = b.build().expect("valid").0;
    let firm = m.agent("firm").unwrap();
    let ready = m.state("ready").unwrap();

    // A memoryless strategy induces a unique eventually-periodic run.
    let mut profile = StrategyProfile::new();
    profile.assign(firm, ready, m.action("produce").unwrap());
    profile.assign(firm, m.state("loaded").unwrap(), m.action("sell").unwrap());
    let lasso = lasso_from_strategy(&m, &profile, ready).unwrap();
    println!("strategy-induced run:");
    print!("{}", render_lasso(&m, &lasso));

    // Prefix feasibility: two production steps need two fuel.
    let two_rounds = lasso.unrolled(&m, 2).unwrap();
    for fuel in [1u64, 2] {
        let budget = Budget::new().with(firm, ResourceVector::new(vec![fuel]));
        let feasibility = feasible_under_budget(&m, &two_rounds, &budget).unwrap();
        println!("two rounds with {fuel} fuel: {feasibility:?}");
    }

    let group: BTreeSet<_> = [firm].into_iter().collect();
    println!(
        "fuel burned over two rounds: {}",
        cumulative_cost(&m, &two_rounds, &group).unwrap()
    );

    // Bounded enumeration: every lasso with stem + cycle <= 4, canonical
    // order, each exactly once.
    let all = enumerate_lassos(&m, ready, 4).unwrap();
    println!("\nlassos of total length <= 4: {}", all.len());
    let empty_trace = Trace::starting_at(ready);
    assert!(empty_trace.is_empty());
}
