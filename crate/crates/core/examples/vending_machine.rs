//! The vending machine and its user: the asymmetric rely/guarantee rule
//! and the final bound on the composed system.

use std::time::Instant;

use pcka::dist::format_prob;
use pcka::rg::vending_machine_case_study;
use pcka::simulation::SearchConfig;

fn main() -> Result<(), pcka::error::Error> {
    let start = Instant::now();
    let study = vending_machine_case_study(SearchConfig::default())?;
    for line in study.lines() {
        println!("{line}");
    }
    println!("mass without a second kick: {}", format_prob(&study.safe_mass()));
    println!("verdict: {} ({:.2?})", study.verdict(), start.elapsed());
    Ok(())
}
