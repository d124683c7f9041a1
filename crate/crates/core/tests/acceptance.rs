//! The twelve acceptance criteria. Set `THINFB_FILTER` to run a subset.

use thinfb_core::validation;

#[test]
fn acceptance() {
    let filter = std::env::var("THINFB_FILTER").ok();
    let outcomes = validation::run(filter.as_deref(), |o| {
        println!("{}", o.line());
        for d in &o.details {
            println!("      {d}");
        }
    });
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{} {}", o.id, o.name)).collect();
    println!("{}/{} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
