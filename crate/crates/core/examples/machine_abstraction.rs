//! The machine `M` below its abstraction `H`: the hand-written relation,
//! its closed repair, a relation found by search, and the forward
//! certificate derived from it.

use pcka::format::{read_automaton, read_relation, write_relation, RelationHeader};
use pcka::simulation::{
    check_forward_certificate, find_simulation, forward_witness_from_sim, verify_simulation, CheckResult, SearchConfig,
};

fn main() -> Result<(), pcka::error::Error> {
    let (_, m) = read_automaton(include_str!("../data/m.aut"))?;
    let (_, h) = read_automaton(include_str!("../data/h.aut"))?;

    for (file, text) in [("m_h.rel", include_str!("../data/m_h.rel")), ("m_h_closed.rel", include_str!("../data/m_h_closed.rel"))] {
        let (_, relation) = read_relation(text, &m, &h)?;
        match verify_simulation(&relation, &m, &h, 6)? {
            CheckResult::Refuted { clause, reason } => {
                println!("{file}: Refuted at {}: {reason}", clause.describe(&m, &h))
            }
            r => println!("{file}: {}", r.verdict()),
        }
    }

    let found = find_simulation(&m, &h, SearchConfig::default())?;
    println!("search: {}", found.verdict());
    if let Some(cert) = found.certificate() {
        let header = RelationHeader {
            name: "S".into(),
            left: "M".into(),
            right: "H".into(),
        };
        print!("{}", write_relation(&header, &cert.relation, &m, &h));
        let forward = forward_witness_from_sim(cert);
        match check_forward_certificate(&forward, &m, &h) {
            Ok(()) => println!("forward certificate: {} obligations re-checked", forward.discharges.len()),
            Err(e) => println!("forward certificate rejected: {e}"),
        }
    }
    Ok(())
}
