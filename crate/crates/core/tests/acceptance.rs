//! Acceptance suite: runs every criterion at its pinned tolerance and prints
//! one pass/fail line per criterion. `cargo test -p attn-transport --test
//! acceptance -- --nocapture` shows the lines.

use attn_transport::suite::{criteria, SuiteConfig};

#[test]
fn acceptance_criteria() {
    let config = SuiteConfig::default();
    let mut failures = Vec::new();
    for criterion in criteria::all() {
        let outcome = (criterion.run)(&config);
        let (passed, details) = match outcome {
            Ok(o) => (o.passed, o.details.to_string()),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "{} {}",
            if passed { "PASS" } else { "FAIL" },
            criterion.name
        );
        if !passed && criterion.asserted {
            failures.push(format!("{}: {}", criterion.name, details));
        }
    }
    assert!(
        failures.is_empty(),
        "asserted criteria failed:\n{}",
        failures.join("\n")
    );
}
