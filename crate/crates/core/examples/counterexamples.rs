//! Laws that do not hold: each claim is refuted on a fixed instance while
//! the converse verifies.

use pcka::laws::{check_catalog_entry, counterexample_catalog};
use pcka::simulation::{CheckResult, SearchConfig};

fn main() -> Result<(), pcka::error::Error> {
    for entry in counterexample_catalog() {
        let r = check_catalog_entry(&entry, &SearchConfig::default())?;
        println!("{}: {}", entry.id, entry.claim);
        println!("  instance {}  vs  {}", entry.fails, entry.holds);
        println!("  claim -> {}, converse -> {}", r.false_direction.verdict(), r.true_direction.verdict());
        if let CheckResult::Refuted { reason, .. } = &r.false_direction {
            println!("  because {reason}");
        }
    }
    Ok(())
}
