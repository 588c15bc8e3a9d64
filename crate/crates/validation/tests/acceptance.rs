//! Runs every acceptance criterion at the default setup and prints one line
//! per criterion. Exits non-zero if any criterion fails.

use std::process::ExitCode;

use sqvac_validation::{all, Setup};

fn main() -> ExitCode {
    let reports = all(&Setup::default());
    let mut failed = 0;
    println!("\nacceptance criteria");
    for r in &reports {
        print!("{}", r.render());
        if !r.pass() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
