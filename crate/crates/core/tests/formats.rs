use std::sync::Arc;

use proptest::prelude::*;

use pcka::alphabet::ActionAlphabet;
use pcka::format::{read_automaton, read_relation, write_automaton, write_relation, RelationHeader};
use pcka::laws::random::TermGen;
use pcka::ops;
use pcka::relation::SimRelation;
use pcka::term::{compile, parse_term};

fn alphabet() -> Arc<ActionAlphabet> {
    Arc::new(ActionAlphabet::new(["a", "b"], ["c"]).unwrap())
}

#[test]
fn bundled_files_round_trip() {
    for text in [include_str!("../data/m.aut"), include_str!("../data/h.aut")] {
        let (name, p) = read_automaton(text).unwrap();
        let written = write_automaton(&name, &p);
        let (_, again) = read_automaton(&written).unwrap();
        assert_eq!(write_automaton(&name, &again), written);
    }
    let (_, m) = read_automaton(include_str!("../data/m.aut")).unwrap();
    let (_, h) = read_automaton(include_str!("../data/h.aut")).unwrap();
    let (header, s) = read_relation(include_str!("../data/m_h_closed.rel"), &m, &h).unwrap();
    assert_eq!((header.left.as_str(), header.right.as_str()), ("M", "H"));
    let (_, again) = read_relation(&write_relation(&header, &s, &m, &h), &m, &h).unwrap();
    assert_eq!(again, s);
}

#[test]
fn errors_carry_positions() {
    let err = read_automaton("automaton X\nexternal a\nstates s0\ninit s0:1\ntrans s0 zz -> s0:1\n").unwrap_err();
    assert!(err.to_string().contains("5:"), "{err}");
    let err = read_automaton("automaton X\nexternal a\nstates s0\ninit s0:1/2\n").unwrap_err();
    assert!(err.to_string().contains("4:"), "{err}");
    let err = parse_term("a . (b", &alphabet()).unwrap_err();
    assert!(err.to_string().contains("1:"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compiled_terms_round_trip(seed in any::<u64>()) {
        let sigma = alphabet();
        let term = TermGen::new(seed, &sigma).term_within(3, 40);
        prop_assert_eq!(&parse_term(&term.to_string(), &sigma).unwrap(), &term);
        let p = ops::reachable(&compile(&term, &sigma).unwrap());
        let written = write_automaton("P", &p);
        let (_, q) = read_automaton(&written).unwrap();
        prop_assert_eq!(q.state_count(), p.state_count());
        prop_assert_eq!(write_automaton("P", &q), written);
    }

    #[test]
    fn identity_relations_round_trip(seed in any::<u64>()) {
        let sigma = alphabet();
        let p = ops::reachable(&compile(&TermGen::new(seed, &sigma).term_within(2, 20), &sigma).unwrap());
        let (_, p) = read_automaton(&write_automaton("P", &p)).unwrap();
        let id = SimRelation::identity(&p);
        let header = RelationHeader { name: "I".into(), left: "P".into(), right: "P".into() };
        let (_, back) = read_relation(&write_relation(&header, &id, &p, &p), &p, &p).unwrap();
        prop_assert_eq!(back, id);
    }
}
