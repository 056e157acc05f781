//! Rely/guarantee rules driven by a scenario file.

use pcka::rg::{parse_scenario, run_scenario};
use pcka::simulation::SearchConfig;

const SCENARIO: &str = "\
external req, ack, log
def Client = req . ack
def Server = req . log . ack
rule holds quintuple=1,run,Client,run,run
rule sequential premise1=1,run,req,run,req premise2=run,run,ack,run,ack
rule check name=log-hidden lhs=Client||{req,ack}Server rhs=req.log.ack
";

fn main() -> Result<(), pcka::error::Error> {
    let scenario = parse_scenario(SCENARIO)?;
    for report in run_scenario(&scenario, SearchConfig::default())? {
        for line in report.lines() {
            println!("{line}");
        }
        println!("  => {}", report.verdict());
    }
    Ok(())
}
