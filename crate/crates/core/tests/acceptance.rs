//! Runs without the libtest harness so the criterion lines always print.

use std::process::ExitCode;

use regtrace::acceptance::{run_criterion, DEFAULT_SEED};

/// Criterion 7 asks for the raw 2-torus Dixmier average to sit within 2% at
/// N = 2^23. The lattice constant puts it 2.02% low (see
/// `torus_raw_gap_is_lattice_constant`), so it is reported as FAIL.
const KNOWN_FAILURES: [usize; 1] = [7];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in 1..=10 {
        let r = run_criterion(id, DEFAULT_SEED).expect("criterion ids are 1..=10");
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    if failed == KNOWN_FAILURES {
        println!("acceptance: {} of 10 pass; failing as documented: {failed:?}", 10 - failed.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome, failing criteria {failed:?} (documented: {KNOWN_FAILURES:?})");
        ExitCode::FAILURE
    }
}
