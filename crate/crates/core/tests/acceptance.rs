//! Runs the twelve acceptance criteria and prints one line per criterion.

use pointhartree::verify::{determinism, run_criterion, CriterionResult, DEFAULT_SEED};
use std::process::ExitCode;

fn main() -> ExitCode {
    let ids: Vec<u8> = (1..=11).collect();
    let first: Vec<CriterionResult> = ids
        .iter()
        .map(|&i| {
            let r = run_criterion(i, DEFAULT_SEED);
            println!("{}", r.line());
            r
        })
        .collect();
    let second: Vec<CriterionResult> = ids.iter().map(|&i| run_criterion(i, DEFAULT_SEED)).collect();
    let twelve = determinism(&first, &second);
    println!("{}", twelve.line());
    let failed: Vec<u8> = first.iter().chain(std::iter::once(&twelve)).filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("acceptance: 12/12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
