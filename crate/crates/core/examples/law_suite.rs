//! A small seeded run of the law suite and of the congruence closures.
//!
//! `cargo run --release --example law_suite -- 20` runs 20 instances per law.

use pcka::laws::congruence::{run_congruences, Closure};
use pcka::laws::{law_registry, random_alphabet, run_suite};
use pcka::simulation::SearchConfig;

fn main() -> Result<(), pcka::error::Error> {
    let count = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let laws: Vec<_> = law_registry().into_iter().filter(|l| l.id != "par-pc-dist").collect();
    let suite = run_suite(&laws, 7, count, &SearchConfig::default())?;
    for report in &suite.reports {
        for line in report.lines() {
            println!("{line}");
        }
    }
    for c in run_congruences(&Closure::ALL, 7, count, &random_alphabet())? {
        println!("{}", c.line(7));
    }
    print!("{}", suite.summary());
    Ok(())
}
