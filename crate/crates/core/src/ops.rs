//! The operator constructions on probabilistic automata: constants, choice,
//! sequencing, iteration, probabilistic choice, parallel composition, plus
//! reachability restriction and bounded unfolding.
//!
//! Binary operators require disjoint state spaces. When the operands share
//! states (for instance `plus(&p, &p)`) the right operand is replaced by a
//! renamed copy whose states record [`Origin::Copy`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::alphabet::{Action, ActionAlphabet};
use crate::automaton::{AutomatonParts, Origin, ProbAutomaton, StateId, StateIdAllocator, Transition};
use crate::dist::{format_prob, in_unit_interval, Dist, Prob};
use crate::error::{Error, Result};

fn build(parts: AutomatonParts) -> ProbAutomaton {
    ProbAutomaton::from_parts(parts).expect("operator constructions preserve automaton invariants")
}

fn single_state(alphabet: &Arc<ActionAlphabet>, is_final: bool) -> ProbAutomaton {
    let x = StateIdAllocator::fresh();
    build(AutomatonParts {
        alphabet: alphabet.clone(),
        states: [x].into(),
        transitions: Vec::new(),
        initial: Dist::point(x),
        finals: if is_final { [x].into() } else { BTreeSet::new() },
        labels: BTreeMap::new(),
        provenance: [(x, Origin::Base)].into(),
    })
}

/// `0`: one state, no transitions, no final state.
pub fn deadlock(alphabet: &Arc<ActionAlphabet>) -> ProbAutomaton {
    single_state(alphabet, false)
}

/// `1`: one state that is final.
pub fn skip(alphabet: &Arc<ActionAlphabet>) -> ProbAutomaton {
    single_state(alphabet, true)
}

/// The automaton performing the single action `name` and terminating.
pub fn action(name: &str, alphabet: &Arc<ActionAlphabet>) -> Result<ProbAutomaton> {
    let act = alphabet.action(name)?;
    if act.is_tau() {
        return Err(Error::UnknownAction(name.to_string()));
    }
    let (x, y) = (StateIdAllocator::fresh(), StateIdAllocator::fresh());
    Ok(build(AutomatonParts {
        alphabet: alphabet.clone(),
        states: [x, y].into(),
        transitions: vec![Transition {
            source: x,
            action: act,
            target: Dist::point(y),
        }],
        initial: Dist::point(x),
        finals: [y].into(),
        labels: BTreeMap::new(),
        provenance: [(x, Origin::Base), (y, Origin::Base)].into(),
    }))
}

/// A renamed copy and the map from original to copied states.
pub fn copy(p: &ProbAutomaton) -> (ProbAutomaton, BTreeMap<StateId, StateId>) {
    let map: BTreeMap<StateId, StateId> = p
        .states()
        .iter()
        .map(|s| (*s, StateIdAllocator::fresh()))
        .collect();
    let m = |s: StateId| map[&s];
    let parts = AutomatonParts {
        alphabet: p.shared_alphabet().clone(),
        states: p.states().iter().map(|s| m(*s)).collect(),
        transitions: p
            .transitions()
            .iter()
            .map(|t| Transition {
                source: m(t.source),
                action: t.action.clone(),
                target: t.target.map_states(m),
            })
            .collect(),
        initial: p.initial().map_states(m),
        finals: p.finals().iter().map(|s| m(*s)).collect(),
        labels: p.labels().iter().map(|(s, l)| (m(*s), format!("{l}_c"))).collect(),
        provenance: map.iter().map(|(o, c)| (*c, Origin::Copy(*o))).collect(),
    };
    (build(parts), map)
}

pub(crate) fn check_alphabets(p: &ProbAutomaton, q: &ProbAutomaton) -> Result<()> {
    if p.alphabet() != q.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    Ok(())
}

/// `q` itself when disjoint from `p`, otherwise a fresh copy of `q`.
fn disjoint_from(p: &ProbAutomaton, q: &ProbAutomaton) -> ProbAutomaton {
    if p.states().is_disjoint(q.states()) {
        q.clone()
    } else {
        copy(q).0
    }
}

struct Union {
    states: BTreeSet<StateId>,
    transitions: Vec<Transition>,
    labels: BTreeMap<StateId, String>,
    provenance: BTreeMap<StateId, Origin>,
}

fn union(p: &ProbAutomaton, q: &ProbAutomaton) -> Union {
    let mut states = p.states().clone();
    states.extend(q.states().iter().copied());
    let mut transitions = p.transitions().to_vec();
    transitions.extend(q.transitions().iter().cloned());
    let mut labels = p.labels().clone();
    labels.extend(q.labels().iter().map(|(s, l)| (*s, l.clone())));
    let mut provenance = p.provenance_map().clone();
    provenance.extend(q.provenance_map().iter().map(|(s, o)| (*s, o.clone())));
    Union {
        states,
        transitions,
        labels,
        provenance,
    }
}

/// `P + Q`: a fresh initial state with τ-transitions to both initial
/// distributions.
pub fn plus(p: &ProbAutomaton, q: &ProbAutomaton) -> Result<ProbAutomaton> {
    check_alphabets(p, q)?;
    let q = disjoint_from(p, q);
    let mut u = union(p, &q);
    let z = StateIdAllocator::fresh();
    u.states.insert(z);
    u.provenance.insert(z, Origin::ChoiceRoot);
    for init in [p.initial(), q.initial()] {
        u.transitions.push(Transition {
            source: z,
            action: Action::Tau,
            target: init.clone(),
        });
    }
    let mut finals = p.finals().clone();
    finals.extend(q.finals().iter().copied());
    Ok(build(AutomatonParts {
        alphabet: p.shared_alphabet().clone(),
        states: u.states,
        transitions: u.transitions,
        initial: Dist::point(z),
        finals,
        labels: u.labels,
        provenance: u.provenance,
    }))
}

/// `P · Q`: every final state of `P` gets a τ-transition to the initial
/// distribution of `Q`.
pub fn seq(p: &ProbAutomaton, q: &ProbAutomaton) -> Result<ProbAutomaton> {
    check_alphabets(p, q)?;
    let q = disjoint_from(p, q);
    let mut u = union(p, &q);
    for x in p.finals() {
        u.transitions.push(Transition {
            source: *x,
            action: Action::Tau,
            target: q.initial().clone(),
        });
    }
    Ok(build(AutomatonParts {
        alphabet: p.shared_alphabet().clone(),
        states: u.states,
        transitions: u.transitions,
        initial: p.initial().clone(),
        finals: q.finals().clone(),
        labels: u.labels,
        provenance: u.provenance,
    }))
}

/// `P*`: a fresh state `z`, initial and sole final state, looping through `P`.
pub fn star(p: &ProbAutomaton) -> ProbAutomaton {
    let z = StateIdAllocator::fresh();
    let mut states = p.states().clone();
    states.insert(z);
    let mut transitions = p.transitions().to_vec();
    transitions.push(Transition {
        source: z,
        action: Action::Tau,
        target: p.initial().clone(),
    });
    for x in p.finals() {
        transitions.push(Transition {
            source: *x,
            action: Action::Tau,
            target: Dist::point(z),
        });
    }
    let mut provenance = p.provenance_map().clone();
    provenance.insert(z, Origin::StarRoot);
    build(AutomatonParts {
        alphabet: p.shared_alphabet().clone(),
        states,
        transitions,
        initial: Dist::point(z),
        finals: [z].into(),
        labels: p.labels().clone(),
        provenance,
    })
}

/// `P ⊕p Q`: the initial distribution `p·μ0 + (1−p)·ν0`. At `p ∈ {0, 1}` the
/// other operand stays present but unreachable.
pub fn pchoice(p: &ProbAutomaton, prob: &Prob, q: &ProbAutomaton) -> Result<ProbAutomaton> {
    if !in_unit_interval(prob) {
        return Err(Error::ProbabilityRange(format_prob(prob)));
    }
    check_alphabets(p, q)?;
    let q = disjoint_from(p, q);
    let u = union(p, &q);
    let initial = if prob.is_one() {
        p.initial().clone()
    } else if prob.is_zero() {
        q.initial().clone()
    } else {
        p.initial().mix(prob, q.initial())
    };
    let mut finals = p.finals().clone();
    finals.extend(q.finals().iter().copied());
    Ok(build(AutomatonParts {
        alphabet: p.shared_alphabet().clone(),
        states: u.states,
        transitions: u.transitions,
        initial,
        finals,
        labels: u.labels,
        provenance: u.provenance,
    }))
}

/// Which defining clause of the parallel composition produced a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParClause {
    Synchronised,
    LeftMoves,
    RightMoves,
}

/// `P ‖A Q`: CSP-style product synchronising on the frame `A ⊆ E` and
/// interleaving every other action (including τ and internal actions).
pub fn par(p: &ProbAutomaton, frame: &BTreeSet<String>, q: &ProbAutomaton) -> Result<ProbAutomaton> {
    check_alphabets(p, q)?;
    let alphabet = p.shared_alphabet().clone();
    for a in frame {
        if !alphabet.is_external(a) {
            return Err(Error::InvalidFrame(a.clone()));
        }
    }
    let in_frame = |a: &Action| match a {
        Action::Tau => false,
        Action::Named(n) => frame.contains(&**n),
    };
    let mut pair: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut states = BTreeSet::new();
    let mut provenance = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for x in p.states() {
        for y in q.states() {
            let id = StateIdAllocator::fresh();
            pair.insert((*x, *y), id);
            states.insert(id);
            provenance.insert(id, Origin::Pair(*x, *y));
            if let (Some(lx), Some(ly)) = (p.labels().get(x), q.labels().get(y)) {
                labels.insert(id, format!("({lx},{ly})"));
            }
        }
    }
    let combine = |x: StateId, y: StateId| pair[&(x, y)];
    let mut transitions = Vec::new();
    for x in p.states() {
        for y in q.states() {
            let source = combine(*x, *y);
            for tp in p.transitions_from(*x) {
                if in_frame(&tp.action) {
                    for tq in q.transitions_from(*y).filter(|t| t.action == tp.action) {
                        transitions.push(Transition {
                            source,
                            action: tp.action.clone(),
                            target: tp.target.product(&tq.target, combine),
                        });
                    }
                } else {
                    transitions.push(Transition {
                        source,
                        action: tp.action.clone(),
                        target: tp.target.product(&Dist::point(*y), combine),
                    });
                }
            }
            for tq in q.transitions_from(*y).filter(|t| !in_frame(&t.action)) {
                transitions.push(Transition {
                    source,
                    action: tq.action.clone(),
                    target: Dist::point(*x).product(&tq.target, combine),
                });
            }
        }
    }
    let mut finals = BTreeSet::new();
    for x in p.finals() {
        for y in q.finals() {
            finals.insert(combine(*x, *y));
        }
    }
    let initial = p.initial().product(q.initial(), combine);
    Ok(build(AutomatonParts {
        alphabet,
        states,
        transitions,
        initial,
        finals,
        labels,
        provenance,
    }))
}

/// Product state of `par` for the operand states `(x, y)`.
pub fn pair_state(composite: &ProbAutomaton, x: StateId, y: StateId) -> Option<StateId> {
    composite
        .provenance_map()
        .iter()
        .find(|(_, o)| **o == Origin::Pair(x, y))
        .map(|(s, _)| *s)
}

/// Lookup table from operand pairs to product states.
pub fn pair_table(composite: &ProbAutomaton) -> HashMap<(StateId, StateId), StateId> {
    composite
        .provenance_map()
        .iter()
        .filter_map(|(s, o)| match o {
            Origin::Pair(x, y) => Some(((*x, *y), *s)),
            _ => None,
        })
        .collect()
}

/// `run(A) = (a₁ + … + aₙ)*`, absorbing for `‖A`.
pub fn run(actions: &BTreeSet<String>, alphabet: &Arc<ActionAlphabet>) -> Result<ProbAutomaton> {
    if actions.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut sum: Option<ProbAutomaton> = None;
    for a in actions {
        if !alphabet.is_external(a) {
            return Err(Error::InvalidFrame(a.clone()));
        }
        let next = action(a, alphabet)?;
        sum = Some(match sum {
            None => next,
            Some(acc) => plus(&acc, &next)?,
        });
    }
    Ok(star(&sum.expect("nonempty action set")))
}

/// Restriction to the states reachable from the initial distribution.
pub fn reachable(p: &ProbAutomaton) -> ProbAutomaton {
    let keep = p.reachable_states();
    if keep.len() == p.state_count() {
        return p.clone();
    }
    let parts = p.clone().into_parts();
    build(AutomatonParts {
        alphabet: parts.alphabet,
        transitions: parts
            .transitions
            .into_iter()
            .filter(|t| keep.contains(&t.source))
            .collect(),
        finals: parts.finals.intersection(&keep).copied().collect(),
        labels: parts.labels.into_iter().filter(|(s, _)| keep.contains(s)).collect(),
        provenance: parts
            .provenance
            .into_iter()
            .filter(|(s, _)| keep.contains(s))
            .collect(),
        initial: parts.initial,
        states: keep,
    })
}

/// A finite path `x₀ a₁ x₁ … aₙ xₙ` of an automaton.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub start: StateId,
    pub steps: Vec<(Action, StateId)>,
}

impl Path {
    pub fn last(&self) -> StateId {
        self.steps.last().map(|(_, s)| *s).unwrap_or(self.start)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// The path automaton of `p` truncated to paths with at most `depth` steps.
/// Returns the automaton and the path each of its states stands for.
pub fn unfold(p: &ProbAutomaton, depth: usize) -> (ProbAutomaton, BTreeMap<StateId, Path>) {
    let mut paths: BTreeMap<StateId, Path> = BTreeMap::new();
    let mut ids: HashMap<Path, StateId> = HashMap::new();
    let mut intern = |path: Path, paths: &mut BTreeMap<StateId, Path>| -> (StateId, bool) {
        if let Some(id) = ids.get(&path) {
            return (*id, false);
        }
        let id = StateIdAllocator::fresh();
        ids.insert(path.clone(), id);
        paths.insert(id, path);
        (id, true)
    };
    let mut frontier = Vec::new();
    let mut initial = Vec::new();
    for (x, w) in p.initial().iter() {
        let (id, _) = intern(
            Path {
                start: x,
                steps: Vec::new(),
            },
            &mut paths,
        );
        initial.push((id, w.clone()));
        frontier.push(id);
    }
    let mut transitions = Vec::new();
    while let Some(id) = frontier.pop() {
        let path = paths[&id].clone();
        if path.len() >= depth {
            continue;
        }
        for t in p.transitions_from(path.last()) {
            let mut target = Vec::new();
            for (x, w) in t.target.iter() {
                let mut next = path.clone();
                next.steps.push((t.action.clone(), x));
                let (nid, new) = intern(next, &mut paths);
                if new {
                    frontier.push(nid);
                }
                target.push((nid, w.clone()));
            }
            transitions.push(Transition {
                source: id,
                action: t.action.clone(),
                target: Dist::from_weights(target).expect("image of a distribution"),
            });
        }
    }
    let finals = paths
        .iter()
        .filter(|(_, path)| p.is_final(path.last()))
        .map(|(id, _)| *id)
        .collect();
    let provenance = paths
        .iter()
        .map(|(id, path)| {
            let mut trail = vec![path.start];
            trail.extend(path.steps.iter().map(|(_, s)| *s));
            (*id, Origin::Path(trail.into()))
        })
        .collect();
    let automaton = build(AutomatonParts {
        alphabet: p.shared_alphabet().clone(),
        states: paths.keys().copied().collect(),
        transitions,
        initial: Dist::from_weights(initial).expect("initial distribution"),
        finals,
        labels: BTreeMap::new(),
        provenance,
    });
    (automaton, paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;

    fn sigma() -> Arc<ActionAlphabet> {
        Arc::new(ActionAlphabet::new(["a", "b", "c"], ["i"]).unwrap())
    }

    #[test]
    fn constants_have_the_stated_shape() {
        let s = sigma();
        let zero = deadlock(&s);
        assert_eq!((zero.state_count(), zero.transitions().len(), zero.finals().len()), (1, 0, 0));
        let one = skip(&s);
        assert_eq!((one.state_count(), one.transitions().len(), one.finals().len()), (1, 0, 1));
        let a = action("a", &s).unwrap();
        assert_eq!((a.state_count(), a.transitions().len(), a.finals().len()), (2, 1, 1));
        assert!(action("zzz", &s).is_err());
        assert!(action("tau", &s).is_err());
    }

    #[test]
    fn closed_form_counts() {
        let s = sigma();
        let a = action("a", &s).unwrap();
        let b = seq(&action("b", &s).unwrap(), &action("c", &s).unwrap()).unwrap();
        let sum = plus(&a, &b).unwrap();
        assert_eq!(sum.state_count(), a.state_count() + b.state_count() + 1);
        assert_eq!(sum.transitions().len(), a.transitions().len() + b.transitions().len() + 2);
        let sq = seq(&a, &b).unwrap();
        assert_eq!(sq.state_count(), 6);
        assert_eq!(sq.transitions().len(), 1 + 3 + a.finals().len());
        let st = star(&b);
        assert_eq!(st.state_count(), b.state_count() + 1);
        assert_eq!(st.transitions().len(), b.transitions().len() + 1 + b.finals().len());
        assert_eq!(st.finals().len(), 1);
        let pc = pchoice(&a, &ratio(1, 3), &b).unwrap();
        assert_eq!(pc.state_count(), 6);
        assert_eq!(pc.initial().len(), 2);
        let frame: BTreeSet<String> = ["a".to_string()].into();
        let pr = par(&a, &frame, &b).unwrap();
        assert_eq!(pr.state_count(), a.state_count() * b.state_count());
    }

    #[test]
    fn shared_operands_are_copied() {
        let s = sigma();
        let a = action("a", &s).unwrap();
        let doubled = plus(&a, &a).unwrap();
        assert_eq!(doubled.state_count(), 5);
        let copies = doubled
            .provenance_map()
            .values()
            .filter(|o| matches!(o, Origin::Copy(_)))
            .count();
        assert_eq!(copies, 2);
    }

    #[test]
    fn probability_must_be_in_range() {
        let s = sigma();
        let a = action("a", &s).unwrap();
        assert!(pchoice(&a, &ratio(3, 2), &a).is_err());
        assert!(pchoice(&a, &ratio(-1, 2), &a).is_err());
        let left = pchoice(&a, &Prob::one(), &deadlock(&s)).unwrap();
        assert_eq!(left.initial(), a.initial());
    }

    #[test]
    fn blocked_synchronisation_has_no_transitions() {
        let s = sigma();
        let frame: BTreeSet<String> = ["a".to_string()].into();
        let blocked = par(&action("a", &s).unwrap(), &frame, &skip(&s)).unwrap();
        assert!(blocked.transitions().is_empty());
        assert!(par(&skip(&s), &["i".to_string()].into(), &skip(&s)).is_err());
    }

    #[test]
    fn run_needs_actions() {
        let s = sigma();
        assert!(matches!(run(&BTreeSet::new(), &s), Err(Error::EmptyRun)));
        let r = run(&["a".to_string()].into(), &s).unwrap();
        assert_eq!(r.state_count(), 3);
    }

    #[test]
    fn reachable_drops_dead_code() {
        let s = sigma();
        let z = seq(&deadlock(&s), &action("a", &s).unwrap()).unwrap();
        assert_eq!(z.state_count(), 3);
        let r = reachable(&z);
        assert_eq!(r.state_count(), 1);
        assert_eq!(reachable(&r).state_count(), 1);
    }

    #[test]
    fn unfold_of_star_is_layered() {
        let s = sigma();
        let st = star(&action("a", &s).unwrap());
        let (u, paths) = unfold(&st, 3);
        assert!(u.is_acyclic());
        let levels: BTreeSet<usize> = paths.values().map(Path::len).collect();
        assert_eq!(levels, [0, 1, 2, 3].into());
        let (one, _) = unfold(&action("a", &s).unwrap(), 1);
        assert_eq!((one.state_count(), one.transitions().len(), one.finals().len()), (2, 1, 1));
    }
}
