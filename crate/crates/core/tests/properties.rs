use std::sync::Arc;

use proptest::prelude::*;

use pcka::alphabet::ActionAlphabet;
use pcka::automaton::StateId;
use pcka::dist::{flatten, ratio, Dist, DistOfDists};
use pcka::laws::random::TermGen;
use pcka::lift::{check_double_lift, check_lift, double_lift_onto};
use pcka::relation::SimRelation;
use pcka::simulation::{default_horizon, find_simulation, verify_simulation, SearchConfig};
use pcka::term::compile;

fn alphabet() -> Arc<ActionAlphabet> {
    Arc::new(ActionAlphabet::new(["a", "b"], ["c"]).unwrap())
}

/// A weight function over related pairs, given as `(pair index, weight)`.
fn lifting_instance() -> impl Strategy<Value = (SimRelation, Dist, DistOfDists)> {
    let dist = prop::collection::vec((0u64..5, 1i64..5), 1..=4).prop_map(|entries| {
        let total: i64 = entries.iter().map(|(_, w)| w).sum();
        Dist::from_weights(entries.into_iter().map(|(y, w)| (StateId::from_raw(100 + y), ratio(w, total)))).unwrap()
    });
    let relation = prop::collection::vec((0u64..4, dist), 1..8);
    relation
        .prop_flat_map(|pairs| {
            let n = pairs.len();
            (Just(pairs), prop::collection::vec((0..n, 1i64..5), 1..=4))
        })
        .prop_map(|(pairs, picks)| {
            let relation = SimRelation::from_pairs(pairs.iter().map(|(x, d)| (StateId::from_raw(*x), d.clone())));
            let total: i64 = picks.iter().map(|(_, w)| w).sum();
            let mu = Dist::from_weights(picks.iter().map(|(i, w)| (StateId::from_raw(pairs[*i].0), ratio(*w, total)))).unwrap();
            let psi = DistOfDists::from_weights(picks.iter().map(|(i, w)| (pairs[*i].1.clone(), ratio(*w, total)))).unwrap();
            (relation, mu, psi)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn double_lift_flattens_to_a_lift((relation, mu, psi) in lifting_instance()) {
        prop_assert!(check_double_lift(&relation, &mu, &psi).is_some());
        let nu = flatten(&psi);
        let w = check_lift(&relation, &mu, &nu).expect("flattened target is lifted");
        prop_assert!(w.validate(&relation, &mu, &nu));
        let total: pcka::dist::Prob = w.rows.iter().map(|r| r.weight.clone()).sum();
        prop_assert_eq!(total, ratio(1, 1));
        let (onto, _) = double_lift_onto(&relation, &mu, &nu).unwrap();
        prop_assert_eq!(flatten(&onto), nu);
    }

    #[test]
    fn identity_is_a_simulation(seed in any::<u64>()) {
        let sigma = alphabet();
        let p = compile(&TermGen::new(seed, &sigma).term_within(3, 40), &sigma).unwrap();
        let r = verify_simulation(&SimRelation::identity(&p), &p, &p, default_horizon(&p)).unwrap();
        prop_assert!(r.is_verified(), "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_finds_self_simulation(seed in any::<u64>()) {
        let sigma = alphabet();
        let p = compile(&TermGen::new(seed, &sigma).term_within(2, 20), &sigma).unwrap();
        let r = find_simulation(&p, &p, SearchConfig::default()).unwrap();
        prop_assert!(!r.is_refuted(), "{:?}", r);
    }
}
