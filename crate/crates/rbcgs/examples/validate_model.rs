//! Build a model programmatically and see what validation reports.
//!
//! ```bash
//! cargo run -p rbcgs --example validate_model
//! ```

use rbcgs::model::ModelBuilder;

fn main() {
    // A well-formed two-state exchange game.
    let mut good = ModelBuilder::new();
    good.agent("producer")
        .agent("consumer")
        .resource("money")
        .resource("material")
        .state("idle", true)
        .state("moving", false)
        .action("ship")
        .action("take")
        .action("wait")
        .avail("idle", "producer", ["ship", "wait"])
        .avail("idle", "consumer", ["wait"])
        .avail("moving", "producer", ["wait"])
        .avail("moving", "consumer", ["take", "wait"])
        .cost("idle", "producer", "ship", [1, 2])
        .cost("moving", "consumer", "take", [1, 0])
        .outcome("idle", ["ship", "wait"], "moving")
        .outcome("idle", ["wait", "wait"], "idle")
        .outcome("moving", ["wait", "take"], "idle")
        .outcome("moving", ["wait", "wait"], "moving");
    let (model, warnings) = good.build().expect("model is well-formed");
    println!(
        "valid model: {} states, {} legal joint actions at `idle`",
        model.state_count(),
        model
            .joint_actions(model.state("idle").unwrap())
            .unwrap()
            .len()
    );
    println!("{} cost entries defaulted to zero:", warnings.len());
    for w in &warnings {
        println!("  {w}");
    }

    // The same game with three deliberate mistakes: validation reports all
    // of them at once.
    let mut bad = ModelBuilder::new();
    bad.agent("producer")
        .agent("consumer")
        .resource("money")
        .state("idle", false) // nothing marked initial
        .action("ship")
        .action("wait")
        .avail("idle", "producer", ["ship", "wait"])
        // consumer has no availability entry at `idle`
        .outcome("idle", ["ship", "wait"], "gone") // dangling target
        .outcome("idle", ["wait", "wait"], "idle");
    let report = bad.build().unwrap_err();
    println!("\ninvalid model: {} errors", report.errors.len());
    for e in &report.errors {
        println!("  error: {e}");
    }
}
