//! Full-pipeline acceptance gates: one printed line per criterion, with the
//! measured evidence indented underneath. Every tolerance lives in the
//! verification module itself so the batch front-end judges the same gates.

use pacewave_core::run_verification;

#[test]
fn acceptance_criteria() {
    let report = run_verification(1).expect("verification harness ran");
    for c in &report.criteria {
        println!(
            "criterion {:02} {:<20} {}",
            c.index,
            c.name,
            if c.passed { "pass" } else { "FAIL" }
        );
        for d in &c.details {
            println!("    {d}");
        }
    }
    let failed: Vec<&str> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    assert!(report.passed, "failed criteria: {failed:?}");
}
