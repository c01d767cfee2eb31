//! Runs the acceptance suite and prints one line per criterion.
//!
//! Set CRITFROG_SLOW=1 for the slow tier.

use critfrog::acceptance::{Suite, Tier, Verdict};

/// Criteria that cannot be met at desk scale. They run in full and print
/// their FAIL line; the reasons are in the README.
const KNOWN_INFEASIBLE: &[&str] = &["AC4", "AC9-cfm", "AC9-halfspace", "AC10"];

fn main() {
    let tier = if std::env::var_os("CRITFROG_SLOW").is_some() { Tier::Slow } else { Tier::Fast };
    let report = Suite::new(tier).run(|e| println!("{e}"));
    println!("{}", report.summary_line());
    for e in &report.entries {
        if KNOWN_INFEASIBLE.contains(&e.id) && e.verdict == Verdict::Pass {
            println!("note: {} is listed as infeasible but passed", e.id);
        }
    }
    let unexpected: Vec<String> =
        report.failed().into_iter().filter(|id| !KNOWN_INFEASIBLE.contains(&id.as_str())).collect();
    if unexpected.is_empty() {
        println!("acceptance: no failures outside the known-infeasible set {KNOWN_INFEASIBLE:?}");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
