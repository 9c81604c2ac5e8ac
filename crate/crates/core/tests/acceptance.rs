//! One pass/fail line per acceptance criterion; exits non-zero if any check fails.

use std::process::ExitCode;

use thresh2d::verify::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, title) in CRITERIA {
        match run_criterion(id) {
            Ok(outcome) => {
                println!("{}", outcome.summary_line());
                if !outcome.passed() {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("criterion {id} [FAIL] {title}: error {e}");
                failed += 1;
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        CRITERIA.len() - failed,
        CRITERIA.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
