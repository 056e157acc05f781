//! Support compatibility: for each state `x` of the simulated automaton, the
//! states of the simulating automaton that may appear in the support of a
//! distribution related to `x` by some simulation.
//!
//! Computed as a greatest fixpoint. A state `y` survives for `x` only if,
//! for every transition `x -a-> μ′`, mass at `y` can be driven by a finite
//! weak `a`-move entirely into states compatible with some successor in
//! `supp μ′`, and, when `x` is final, into final states. Every pair of every
//! simulation respects the result, so any obligation that cannot be met
//! within it is refuted outright.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{ProbAutomaton, StateId};
use crate::weak::MoveBuilder;

pub(crate) type Compat = BTreeMap<StateId, BTreeSet<StateId>>;

pub(crate) fn compatibility(p: &ProbAutomaton, states: &BTreeSet<StateId>, builder: &MoveBuilder<'_>) -> Compat {
    let q = builder.automaton();
    let final_attr = builder.attractor(q.finals());
    let mut compat: Compat = states
        .iter()
        .map(|x| {
            let init = if p.is_final(*x) { final_attr.clone() } else { q.states().clone() };
            (*x, init)
        })
        .collect();
    loop {
        let mut changed = false;
        for x in states {
            for t in p.transitions_from(*x) {
                let good: BTreeSet<StateId> = t
                    .target
                    .support()
                    .flat_map(|x2| compat.get(&x2).into_iter().flatten().copied())
                    .collect();
                let allowed = builder.can_reach(&t.action, &good);
                let current = compat.get_mut(x).expect("state");
                let before = current.len();
                current.retain(|y| allowed.contains(y));
                changed |= current.len() != before;
            }
        }
        if !changed {
            return compat;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::ActionAlphabet;
    use crate::ops;
    use std::sync::Arc;

    #[test]
    fn action_is_incompatible_with_deadlock() {
        let sigma = Arc::new(ActionAlphabet::new(["a", "b"], Vec::<&str>::new()).unwrap());
        let a = ops::action("a", &sigma).unwrap();
        let zero = ops::deadlock(&sigma);
        let builder = MoveBuilder::new(&zero);
        let n = compatibility(&a, a.states(), &builder);
        let x0 = a.initial().support().next().unwrap();
        assert!(n[&x0].is_empty());
        let b = ops::action("b", &sigma).unwrap();
        let builder = MoveBuilder::new(&b);
        let n = compatibility(&a, a.states(), &builder);
        assert!(n[&x0].is_empty());
        let builder = MoveBuilder::new(&a);
        let n = compatibility(&a, a.states(), &builder);
        assert!(n[&x0].contains(&x0));
    }
}
