//! Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::process::ExitCode;

use lmm_interp::acceptance::{run_all, AcceptanceOptions};

fn main() -> ExitCode {
    let results = run_all(&AcceptanceOptions::default());
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 && results.len() == 10 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
