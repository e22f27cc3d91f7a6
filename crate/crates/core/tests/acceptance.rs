use std::io::Write;

use rfh_core::acceptance::{run_all, DEFAULT_SEED};

#[test]
fn acceptance_criteria() {
    let results = run_all(DEFAULT_SEED);
    // written straight to stderr so the lines survive the harness capture
    let mut err = std::io::stderr().lock();
    for r in &results {
        let _ = writeln!(err, "{r}");
    }
    assert_eq!(results.len(), 10);
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
