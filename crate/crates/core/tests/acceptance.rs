//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;

use tqd_core::experiments::Scenario;
use tqd_core::pulses::{FittedPulse, GaussianTerm};
use tqd_core::verify::{run_criterion, CRITERIA};

// Wall-clock ceilings per criterion id.
const TIME_LIMITS: [(u8, f64); 3] = [(1, 120.0), (2, 120.0), (7, 60.0)];

fn doubled_first_amplitude() -> Scenario {
    let reference = FittedPulse::reference();
    let mut terms: Vec<GaussianTerm> = reference.terms().to_vec();
    terms[0].amplitude *= 2.0;
    Scenario { fitted: FittedPulse::new(terms).unwrap(), ..Scenario::default() }
}

fn main() -> ExitCode {
    let scenario = Scenario::default();
    let mut failed = 0;
    for (id, _, _) in CRITERIA {
        let report = run_criterion(id, &scenario);
        let limit = TIME_LIMITS.iter().find(|(i, _)| *i == id).map(|&(_, s)| s);
        let slow = limit.is_some_and(|s| report.seconds >= s);
        if !report.passed() || slow {
            failed += 1;
        }
        println!("{} ({:.2} s)", report.line(), report.seconds);
        if slow {
            println!("FAIL [{}] took {:.1} s, limit {:.0} s", id, report.seconds, limit.unwrap());
        }
    }

    let corrupted = run_criterion(1, &doubled_first_amplitude());
    if corrupted.passed() {
        failed += 1;
        println!("FAIL corrupted pulse was accepted: {}", corrupted.line());
    } else {
        println!("PASS corrupted pulse rejected by criterion 1");
    }

    if failed > 0 {
        println!("acceptance: {failed} failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all passed");
        ExitCode::SUCCESS
    }
}
