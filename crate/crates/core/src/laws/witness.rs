//! Explicit simulation relations for the laws and for precongruence.
//!
//! Each law constructor builds both sides from the operand automata itself,
//! so that it knows which states are copies of which, and returns the
//! relation the hand proof uses. The relations are then checked by
//! [`verify_simulation`](crate::simulation::verify_simulation) like any
//! other candidate.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{ProbAutomaton, StateId};
use crate::dist::{Dist, Prob};
use crate::error::{Error, Result};
use crate::ops;
use crate::relation::SimRelation;

/// Both sides of a law instance with relations for the directions the
/// construction covers.
#[derive(Debug, Clone)]
pub struct Witnessed {
    pub lhs: ProbAutomaton,
    pub rhs: ProbAutomaton,
    /// A simulation from `lhs` to `rhs`.
    pub forward: SimRelation,
    /// A simulation from `rhs` to `lhs`, for equations.
    pub backward: Option<SimRelation>,
}

/// Operands with pairwise disjoint state spaces; overlapping ones are copied.
fn disjoint<const N: usize>(operands: [&ProbAutomaton; N]) -> [ProbAutomaton; N] {
    let mut seen = BTreeSet::new();
    operands.map(|p| {
        let p = if p.states().is_disjoint(&seen) { p.clone() } else { ops::copy(p).0 };
        seen.extend(p.states().iter().copied());
        p
    })
}

fn points(states: &BTreeSet<StateId>) -> impl Iterator<Item = (StateId, Dist)> + '_ {
    states.iter().map(|x| (*x, Dist::point(*x)))
}

fn copied(map: &BTreeMap<StateId, StateId>) -> impl Iterator<Item = (StateId, Dist)> + '_ {
    map.iter().map(|(x, c)| (*x, Dist::point(*c)))
}

fn root(p: &ProbAutomaton) -> StateId {
    p.initial().is_point().expect("choice and star roots are single states")
}

fn equation(lhs: ProbAutomaton, rhs: ProbAutomaton, forward: SimRelation) -> Witnessed {
    let backward = forward.point_inverse();
    Witnessed {
        lhs,
        rhs,
        forward,
        backward,
    }
}

/// `(P + Q)·R` against `P·R + Q·R_c`: every state of `R` is related to
/// itself and to its copy, everything else to itself.
pub fn right_dist(p: &ProbAutomaton, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Witnessed> {
    let [p, q, r] = disjoint([p, q, r]);
    let (rc, map) = ops::copy(&r);
    let lhs = ops::seq(&ops::plus(&p, &q)?, &r)?;
    let rhs = ops::plus(&ops::seq(&p, &r)?, &ops::seq(&q, &rc)?)?;
    let mut forward: SimRelation = points(p.states()).chain(points(q.states())).chain(points(r.states())).collect();
    forward.extend(&copied(&map).collect());
    forward.insert(root(&lhs), Dist::point(root(&rhs)));
    Ok(equation(lhs, rhs, forward))
}

/// `P·Q + P_c·R ≤ P·(Q + R)`: copies of `P` collapse onto `P` and the fresh
/// root is matched by the initial distribution of `P`.
pub fn left_subdist(p: &ProbAutomaton, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Witnessed> {
    let [p, q, r] = disjoint([p, q, r]);
    let (pc, map) = ops::copy(&p);
    let lhs = ops::plus(&ops::seq(&p, &q)?, &ops::seq(&pc, &r)?)?;
    let rhs = ops::seq(&p, &ops::plus(&q, &r)?)?;
    let mut forward: SimRelation = points(p.states()).chain(points(q.states())).chain(points(r.states())).collect();
    forward.extend(&map.iter().map(|(x, c)| (*c, Dist::point(*x))).collect());
    forward.insert(root(&lhs), p.initial().clone());
    Ok(Witnessed {
        lhs,
        rhs,
        forward,
        backward: None,
    })
}

/// `(P ⊕p Q)·R` against `P·R ⊕p Q·R_c`, with the relation of [`right_dist`].
pub fn pc_dist(p: &ProbAutomaton, prob: &Prob, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Witnessed> {
    let [p, q, r] = disjoint([p, q, r]);
    let (rc, map) = ops::copy(&r);
    let lhs = ops::seq(&ops::pchoice(&p, prob, &q)?, &r)?;
    let rhs = ops::pchoice(&ops::seq(&p, &r)?, prob, &ops::seq(&q, &rc)?)?;
    let mut forward: SimRelation = points(p.states()).chain(points(q.states())).chain(points(r.states())).collect();
    forward.extend(&copied(&map).collect());
    Ok(equation(lhs, rhs, forward))
}

/// `P·(Q ⊕p R) ≤ P·Q ⊕p P_c·R`: the probabilistic choice is carried down
/// as `δx ⊕p δx_c` until `P` terminates.
pub fn pc_supdist(p: &ProbAutomaton, prob: &Prob, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Witnessed> {
    let [p, q, r] = disjoint([p, q, r]);
    let (pc, map) = ops::copy(&p);
    let lhs = ops::seq(&p, &ops::pchoice(&q, prob, &r)?)?;
    let rhs = ops::pchoice(&ops::seq(&p, &q)?, prob, &ops::seq(&pc, &r)?)?;
    let mut forward: SimRelation = points(q.states()).chain(points(r.states())).collect();
    for (x, c) in &map {
        forward.insert(*x, Dist::point(*x).mix(prob, &Dist::point(*c)));
    }
    Ok(Witnessed {
        lhs,
        rhs,
        forward,
        backward: None,
    })
}

/// `P*` against `1 + P·P*`, where the right side holds two copies of `P`:
/// the unrolled one and the one under the star.
pub fn star_unfold(p: &ProbAutomaton) -> Result<Witnessed> {
    let lhs = ops::star(p);
    let (first, m1) = ops::copy(p);
    let (second, m2) = ops::copy(p);
    let one = ops::skip(p.shared_alphabet());
    let inner = ops::star(&second);
    let rhs = ops::plus(&one, &ops::seq(&first, &inner)?)?;
    let (v, v_rhs, u) = (root(&lhs), root(&inner), root(&rhs));
    let mut forward: SimRelation = copied(&m1).chain(copied(&m2)).collect();
    forward.insert(v, Dist::point(v_rhs));
    forward.insert(v, Dist::point(u));
    let mut backward = forward.point_inverse().expect("point relation");
    backward.insert(root(&one), Dist::point(v));
    Ok(Witnessed {
        lhs,
        rhs,
        forward,
        backward: Some(backward),
    })
}

/// `(P ‖ Q)·(P′ ‖ Q′) ≤ P·P′ ‖ Q·Q′` through the injection of product
/// states.
pub fn interchange(
    p: &ProbAutomaton,
    q: &ProbAutomaton,
    p2: &ProbAutomaton,
    q2: &ProbAutomaton,
    frame: &BTreeSet<String>,
) -> Result<Witnessed> {
    let [p, q, p2, q2] = disjoint([p, q, p2, q2]);
    let lhs = ops::seq(&ops::par(&p, frame, &q)?, &ops::par(&p2, frame, &q2)?)?;
    let rhs = ops::par(&ops::seq(&p, &p2)?, frame, &ops::seq(&q, &q2)?)?;
    let table = ops::pair_table(&rhs);
    let forward = lhs
        .provenance_map()
        .iter()
        .map(|(s, origin)| match origin {
            crate::Origin::Pair(x, y) => Ok((*s, Dist::point(table[&(*x, *y)]))),
            _ => Err(Error::Witness(format!("state {s} of the sequenced product is not a pair"))),
        })
        .collect::<Result<SimRelation>>()?;
    Ok(Witnessed {
        lhs,
        rhs,
        forward,
        backward: None,
    })
}

/// Closure of a simulation `S: P → Q` under an operator context.
#[derive(Debug, Clone)]
pub struct Congruence {
    pub lhs: ProbAutomaton,
    pub rhs: ProbAutomaton,
    pub relation: SimRelation,
}

fn check_context(p: &ProbAutomaton, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<()> {
    if !r.states().is_disjoint(p.states()) || !r.states().is_disjoint(q.states()) {
        return Err(Error::Witness("the context automaton shares states with the related pair".into()));
    }
    Ok(())
}

/// `P + R ≤ Q + R`.
pub fn plus_congruence(s: &SimRelation, p: &ProbAutomaton, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Congruence> {
    check_context(p, q, r)?;
    let lhs = ops::plus(p, r)?;
    let rhs = ops::plus(q, r)?;
    let mut relation = s.clone();
    relation.extend(&points(r.states()).collect());
    relation.insert(root(&lhs), Dist::point(root(&rhs)));
    Ok(Congruence { lhs, rhs, relation })
}

/// `P·R ≤ Q·R`.
pub fn seq_congruence(s: &SimRelation, p: &ProbAutomaton, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Congruence> {
    check_context(p, q, r)?;
    let mut relation = s.clone();
    relation.extend(&points(r.states()).collect());
    Ok(Congruence {
        lhs: ops::seq(p, r)?,
        rhs: ops::seq(q, r)?,
        relation,
    })
}

/// `R·P ≤ R·Q`.
pub fn seq_left_congruence(s: &SimRelation, p: &ProbAutomaton, q: &ProbAutomaton, r: &ProbAutomaton) -> Result<Congruence> {
    check_context(p, q, r)?;
    let mut relation = s.clone();
    relation.extend(&points(r.states()).collect());
    Ok(Congruence {
        lhs: ops::seq(r, p)?,
        rhs: ops::seq(r, q)?,
        relation,
    })
}

/// `P* ≤ Q*`: `S` plus the pair of star roots.
pub fn star_congruence(s: &SimRelation, p: &ProbAutomaton, q: &ProbAutomaton) -> Result<Congruence> {
    let lhs = ops::star(p);
    let rhs = ops::star(q);
    let mut relation = s.clone();
    relation.insert(root(&lhs), Dist::point(root(&rhs)));
    Ok(Congruence { lhs, rhs, relation })
}

/// `P ⊕p R ≤ Q ⊕p R`.
pub fn pchoice_congruence(
    s: &SimRelation,
    p: &ProbAutomaton,
    prob: &Prob,
    q: &ProbAutomaton,
    r: &ProbAutomaton,
) -> Result<Congruence> {
    check_context(p, q, r)?;
    let mut relation = s.clone();
    relation.extend(&points(r.states()).collect());
    Ok(Congruence {
        lhs: ops::pchoice(p, prob, r)?,
        rhs: ops::pchoice(q, prob, r)?,
        relation,
    })
}

/// `P ‖A R ≤ Q ‖A R`: `(x, r)` is related to `ν × δr` whenever `x S ν`.
pub fn par_congruence(
    s: &SimRelation,
    p: &ProbAutomaton,
    frame: &BTreeSet<String>,
    q: &ProbAutomaton,
    r: &ProbAutomaton,
) -> Result<Congruence> {
    check_context(p, q, r)?;
    let lhs = ops::par(p, frame, r)?;
    let rhs = ops::par(q, frame, r)?;
    let left = ops::pair_table(&lhs);
    let right = ops::pair_table(&rhs);
    let mut relation = SimRelation::new();
    for (x, nu) in s.iter() {
        for z in r.states() {
            relation.insert(left[&(x, *z)], nu.product(&Dist::point(*z), |y, z| right[&(y, z)]));
        }
    }
    Ok(Congruence { lhs, rhs, relation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::ActionAlphabet;
    use crate::dist::ratio;
    use crate::simulation::verify_simulation;
    use std::sync::Arc;

    fn sigma() -> Arc<ActionAlphabet> {
        Arc::new(ActionAlphabet::new(["a", "b", "c"], ["i"]).unwrap())
    }

    fn act(name: &str) -> ProbAutomaton {
        ops::action(name, &sigma()).unwrap()
    }

    fn holds(lhs: &ProbAutomaton, rhs: &ProbAutomaton, relation: &SimRelation) -> bool {
        verify_simulation(relation, lhs, rhs, 8).unwrap().is_verified()
    }

    fn both(w: &Witnessed) -> bool {
        holds(&w.lhs, &w.rhs, &w.forward) && holds(&w.rhs, &w.lhs, w.backward.as_ref().unwrap())
    }

    #[test]
    fn sequential_witnesses() {
        let (a, b, c) = (act("a"), act("b"), act("c"));
        assert!(both(&right_dist(&a, &b, &c).unwrap()));
        assert!(both(&pc_dist(&a, &ratio(1, 3), &b, &c).unwrap()));
        let w = left_subdist(&a, &b, &c).unwrap();
        assert!(holds(&w.lhs, &w.rhs, &w.forward));
        let w = pc_supdist(&a, &ratio(1, 2), &b, &c).unwrap();
        assert!(holds(&w.lhs, &w.rhs, &w.forward));
    }

    #[test]
    fn operands_may_coincide() {
        let a = act("a");
        assert!(both(&right_dist(&a, &a, &a).unwrap()));
    }

    #[test]
    fn unfold_witness() {
        let ab = ops::seq(&act("a"), &act("b")).unwrap();
        assert!(both(&star_unfold(&ab).unwrap()));
        assert!(both(&star_unfold(&ops::skip(&sigma())).unwrap()));
    }

    #[test]
    fn interchange_witness() {
        let frame = sigma().external_actions();
        let (a, b) = (act("a"), act("b"));
        let one = ops::skip(&sigma());
        let w = interchange(&a, &a, &b, &one, &frame).unwrap();
        assert!(holds(&w.lhs, &w.rhs, &w.forward));
    }

    #[test]
    fn congruences_of_a_choice_pair() {
        let frame = sigma().external_actions();
        let (a, b) = (act("a"), act("b"));
        let q = ops::plus(&a, &b).unwrap();
        let s = SimRelation::identity(&a);
        let r = ops::seq(&act("c"), &act("a")).unwrap();
        let cases = [
            plus_congruence(&s, &a, &q, &r).unwrap(),
            seq_congruence(&s, &a, &q, &r).unwrap(),
            seq_left_congruence(&s, &a, &q, &r).unwrap(),
            star_congruence(&s, &a, &q).unwrap(),
            pchoice_congruence(&s, &a, &ratio(1, 4), &q, &r).unwrap(),
            par_congruence(&s, &a, &frame, &q, &r).unwrap(),
        ];
        for c in &cases {
            assert!(holds(&c.lhs, &c.rhs, &c.relation));
        }
        assert!(plus_congruence(&s, &a, &q, &a).is_err());
    }
}
