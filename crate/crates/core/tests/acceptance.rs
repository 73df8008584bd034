use std::process::ExitCode;

use herald_core::verify::verify;

fn main() -> ExitCode {
    let results = verify();
    for r in &results {
        println!(
            "criterion {:>2} {} {}: {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
