//! Acceptance criteria at their stated tolerances, one line per criterion.
//! Set `DCE_ACCEPTANCE_JSON=<path>` to also write the machine-readable report.

use dce_core::sweep::{validate_with, Level};

fn main() {
    // `cargo test -- <filter>` passes arguments we do not use
    let level = if std::env::args().any(|a| a == "--quick") {
        Level::Quick
    } else {
        Level::Full
    };
    println!("acceptance ({level:?})");
    let report = validate_with(level, |c| println!("{c}"));
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id.to_string())
        .collect();
    for c in &report.criteria {
        for (k, v) in &c.values {
            println!("    {:>2} {k} = {v:.6e}", c.id);
        }
        for n in &c.notes {
            println!("    {:>2} note: {n}", c.id);
        }
    }
    if let Ok(path) = std::env::var("DCE_ACCEPTANCE_JSON") {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(&path, json).expect("write acceptance report");
    }
    println!(
        "acceptance: {}/{} criteria passed{}",
        report.criteria.len() - failed.len(),
        report.criteria.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", failed.join(", "))
        }
    );
    if !report.passed {
        std::process::exit(1);
    }
}
