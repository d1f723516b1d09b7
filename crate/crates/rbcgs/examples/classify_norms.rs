//! State and action norms, lasso classification, and violation witnesses.
//!
//! ```bash
//! cargo run -p rbcgs --example classify_norms
//! ```

use rbcgs::behavior::{enumerate_lassos, render_lasso};
use rbcgs::model::ModelBuilder;
use rbcgs::norms::{action_norm, classify_lasso, exists_violation, state_norm};

fn main() {
    // A plant that can run clean, run dirty, or shut down.
    let mut b = ModelBuilder::new();
    b.agent("plant")
        .resource("money")
        .state("running", true)
        .state("polluted", false)
        .action("clean")
        .action("dirty")
        .action("flush")
        .avail("running", "plant", ["clean", "dirty"])
        .avail("polluted", "plant", ["flush"])
        .outcome("running", ["clean"], "running")
        .outcome("running", ["dirty"], "polluted")
        .outcome("polluted", ["flush"], "running");
    let m = b.build().expect("valid").0;
    let running = m.state("running").unwrap();
    let polluted = m.state("polluted").unwrap();

    // State normativity: never visit `polluted`.
    let no_pollution = state_norm(&m, &[polluted]).unwrap();
    // Action normativity: never play `dirty` while running.
    let no_dirty = action_norm(
        &m,
        &[(
            running,
            m.agent("plant").unwrap(),
            m.action("dirty").unwrap(),
        )],
    )
    .unwrap();

    for lasso in enumerate_lassos(&m, running, 3).unwrap() {
        let by_state = classify_lasso(&m, &no_pollution, &lasso).unwrap();
        let by_action = classify_lasso(&m, &no_dirty, &lasso).unwrap();
        // Here the two norms coincide: the only way into `polluted` is the
        // `dirty` action.
        assert_eq!(by_state.is_compliant(), by_action.is_compliant());
    }
    println!("state norm and action norm agree on every lasso of length <= 3");

    // Witness search: the shortest behavior that violates.
    let witness = exists_violation(&m, &no_pollution)
        .unwrap()
        .expect("pollution is reachable");
    println!("violating witness:");
    print!("{}", render_lasso(&m, &witness));
    println!(
        "verdict: {:?}",
        classify_lasso(&m, &no_pollution, &witness).unwrap()
    );
}
