//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. `ACCEPT_ONLY=5,8` restricts the run.

use std::process::ExitCode;
use std::time::Instant;

use photosub_cli::accept::{evaluate, CRITERIA};
use photosub_cli::config::RunConfig;

fn main() -> ExitCode {
    let ids: Vec<u8> = match std::env::var("ACCEPT_ONLY") {
        Ok(list) => list.split(',').map(|s| s.trim().parse().expect("criterion number")).collect(),
        Err(_) => CRITERIA.collect(),
    };
    let cfg = RunConfig::default();
    let mut failed = Vec::new();
    for id in ids {
        let start = Instant::now();
        let c = evaluate(id, &cfg);
        println!("{}  [{:.1} s]", c.line(), start.elapsed().as_secs_f64());
        if !c.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
