//! The `.iss` text format: parsing with span-carrying diagnostics,
//! lowering, and the canonical serializer.
//!
//! ```bash
//! cargo run -p rbcgs --example parse_documents
//! ```

use rbcgs::dsl::{lower, parse, serialize};

const GOOD: &str = "\
agents plant mill;
resources money heat;
states cold* warm;
actions fire idle vent;
avail cold plant {fire,idle};
avail cold mill {idle};
avail warm plant {idle};
avail warm mill {vent,idle};
cost cold plant fire = [2,1];
outcome cold (fire,idle) -> warm;
outcome cold (idle,idle) -> cold;
outcome warm (idle,vent) -> cold;
outcome warm (idle,idle) -> warm;
norm no_venting {
  state ok ok init;
  state bad violation;
  on warm / (_,vent) -> bad;
  on _ / _ -> ok;
}
";

const BROKEN: &str = "\
agents plant;
resources money;
states cold*;
actions fire;
avail cold plant {fire};
cost cold plant vanish = [1];
outcome cold (fire) -> nowhere;
policy repair cv=9 sv=3 w=1 action=fire;
";

fn main() {
    // A clean document parses, lowers, and reprints canonically.
    let doc = parse("exchange.iss", GOOD).expect("syntax is fine");
    let lowered = lower(&doc).expect("names resolve and the model validates");
    println!(
        "parsed `exchange.iss`: {} states, {} norms, {} warnings",
        lowered.model.state_count(),
        lowered.monitors.len(),
        lowered.warnings.len()
    );
    println!("\ncanonical form:\n{}", serialize(&doc));

    // A broken document reports every problem with file:line:col spans.
    let doc = parse("broken.iss", BROKEN).expect("syntactically fine");
    let diagnostics = lower(&doc).expect_err("three semantic problems");
    println!("diagnostics for `broken.iss`:");
    for d in &diagnostics {
        println!("  {d}");
    }
    assert!(diagnostics.len() >= 3); // unknown action, unknown state, cv >= sv
}
