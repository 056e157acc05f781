//! Finite probabilistic automata with simple transitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::alphabet::{Action, ActionAlphabet};
use crate::dist::{format_prob, Dist, Prob};
use crate::error::{Error, Result};

/// Opaque state identifier. Identifiers are process-wide unique, so states of
/// automata built independently never collide.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(u64);

impl StateId {
    pub fn raw(self) -> u64 {
        self.0
    }

    /// Only for tests and diagnostics; real states come from the allocator.
    pub fn from_raw(raw: u64) -> Self {
        StateId(raw)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

static NEXT_STATE: AtomicU64 = AtomicU64::new(1 << 20);

/// Monotone source of fresh state identifiers.
pub struct StateIdAllocator;

impl StateIdAllocator {
    pub fn fresh() -> StateId {
        StateId(NEXT_STATE.fetch_add(1, Ordering::Relaxed))
    }

    /// Upper bound (exclusive) of every identifier issued so far.
    pub fn watermark() -> u64 {
        NEXT_STATE.load(Ordering::Relaxed)
    }
}

/// Where a state of a composite automaton came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Created by a constant (`0`, `1`, an action) or loaded from a file.
    Base,
    /// The fresh initial state of a nondeterministic choice.
    ChoiceRoot,
    /// The fresh initial and final state of a Kleene star.
    StarRoot,
    /// Renamed copy of another state.
    Copy(StateId),
    /// Product state of a parallel composition.
    Pair(StateId, StateId),
    /// A finite path of the unfolded automaton: its start and its steps.
    Path(Arc<[StateId]>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: StateId,
    pub action: Action,
    pub target: Dist,
}

/// A probabilistic automaton `(P, Σ, →, φ, F)`.
#[derive(Debug, Clone)]
pub struct ProbAutomaton {
    alphabet: Arc<ActionAlphabet>,
    states: BTreeSet<StateId>,
    transitions: Vec<Transition>,
    by_source: BTreeMap<StateId, Vec<usize>>,
    initial: Dist,
    finals: BTreeSet<StateId>,
    labels: BTreeMap<StateId, String>,
    provenance: BTreeMap<StateId, Origin>,
}

/// Parts of an automaton before validation.
#[derive(Debug, Clone)]
pub struct AutomatonParts {
    pub alphabet: Arc<ActionAlphabet>,
    pub states: BTreeSet<StateId>,
    pub transitions: Vec<Transition>,
    pub initial: Dist,
    pub finals: BTreeSet<StateId>,
    pub labels: BTreeMap<StateId, String>,
    pub provenance: BTreeMap<StateId, Origin>,
}

impl ProbAutomaton {
    /// Validates the parts and builds the automaton. Duplicate transitions
    /// are merged; the transition list is kept sorted.
    pub fn from_parts(parts: AutomatonParts) -> Result<Self> {
        let AutomatonParts {
            alphabet,
            states,
            mut transitions,
            initial,
            finals,
            labels,
            provenance,
        } = parts;
        transitions.sort();
        transitions.dedup();
        let mut by_source: BTreeMap<StateId, Vec<usize>> = BTreeMap::new();
        for (i, t) in transitions.iter().enumerate() {
            by_source.entry(t.source).or_default().push(i);
        }
        let automaton = ProbAutomaton {
            alphabet,
            states,
            transitions,
            by_source,
            initial,
            finals,
            labels,
            provenance,
        };
        automaton.validate()?;
        Ok(automaton)
    }

    pub fn into_parts(self) -> AutomatonParts {
        AutomatonParts {
            alphabet: self.alphabet,
            states: self.states,
            transitions: self.transitions,
            initial: self.initial,
            finals: self.finals,
            labels: self.labels,
            provenance: self.provenance,
        }
    }

    /// Checks every structural invariant of the tuple.
    pub fn validate(&self) -> Result<()> {
        let known = |s: StateId| self.states.contains(&s);
        let bad = |msg: String| Err(Error::Malformed(msg));
        if self.states.is_empty() {
            return bad("no states".into());
        }
        for s in self.initial.support() {
            if !known(s) {
                return bad(format!("initial support {s} is not a state"));
            }
        }
        if self.initial.is_empty() {
            return bad("empty initial distribution".into());
        }
        for s in &self.finals {
            if !known(*s) {
                return bad(format!("final {s} is not a state"));
            }
        }
        for t in &self.transitions {
            if !known(t.source) {
                return bad(format!("transition source {} is not a state", t.source));
            }
            if !self.alphabet.admits(&t.action) {
                return bad(format!("action `{}` is not in the alphabet", t.action));
            }
            if t.target.is_empty() {
                return bad("empty transition target".into());
            }
            for s in t.target.support() {
                if !known(s) {
                    return bad(format!("transition target {s} is not a state"));
                }
            }
        }
        let total: Prob = self.initial.iter().map(|(_, p)| p.clone()).sum();
        if total != Prob::from_integer(1.into()) {
            return bad("initial distribution does not sum to one".into());
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &ActionAlphabet {
        &self.alphabet
    }

    pub fn shared_alphabet(&self) -> &Arc<ActionAlphabet> {
        &self.alphabet
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, index: usize) -> &Transition {
        &self.transitions[index]
    }

    /// Indices (into [`transitions`](Self::transitions)) of the transitions leaving `state`.
    pub fn outgoing(&self, state: StateId) -> &[usize] {
        self.by_source.get(&state).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn transitions_from(&self, state: StateId) -> impl Iterator<Item = &Transition> {
        self.outgoing(state).iter().map(move |&i| &self.transitions[i])
    }

    pub fn initial(&self) -> &Dist {
        &self.initial
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn is_final(&self, state: StateId) -> bool {
        self.finals.contains(&state)
    }

    pub fn contains(&self, state: StateId) -> bool {
        self.states.contains(&state)
    }

    pub fn provenance(&self, state: StateId) -> Option<&Origin> {
        self.provenance.get(&state)
    }

    pub fn provenance_map(&self) -> &BTreeMap<StateId, Origin> {
        &self.provenance
    }

    pub fn labels(&self) -> &BTreeMap<StateId, String> {
        &self.labels
    }

    /// Human-readable name: the loaded label if any, else the raw id.
    pub fn label(&self, state: StateId) -> String {
        self.labels
            .get(&state)
            .cloned()
            .unwrap_or_else(|| state.to_string())
    }

    /// `label:weight` entries separated by spaces.
    pub fn format_dist(&self, d: &Dist) -> String {
        d.iter()
            .map(|(s, p)| format!("{}:{}", self.label(s), format_prob(p)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn state_by_label(&self, label: &str) -> Option<StateId> {
        self.labels
            .iter()
            .find(|(_, l)| l.as_str() == label)
            .map(|(s, _)| *s)
    }

    /// Replaces all labels.
    pub fn with_labels(mut self, labels: BTreeMap<StateId, String>) -> Self {
        self.labels = labels;
        self
    }

    /// States in increasing id order, labelled `prefix0`, `prefix1`, …
    pub fn canonical_labels(&self, prefix: &str) -> BTreeMap<StateId, String> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, format!("{prefix}{i}")))
            .collect()
    }

    pub fn is_unobservable(&self, action: &Action) -> bool {
        self.alphabet.is_unobservable(action)
    }

    /// States reachable from the initial support along any transitions.
    pub fn reachable_states(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = self.initial.support().collect();
        let mut stack: Vec<StateId> = seen.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for t in self.transitions_from(s) {
                for n in t.target.support() {
                    if seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
        }
        seen
    }

    /// `true` when no cycle is reachable, i.e. every path is finite.
    pub fn is_acyclic(&self) -> bool {
        self.depth().is_some()
    }

    /// Length of the longest path from the initial support, if finite.
    pub fn depth(&self) -> Option<usize> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done(usize),
        }
        fn visit(a: &ProbAutomaton, s: StateId, marks: &mut BTreeMap<StateId, Mark>) -> Option<usize> {
            match marks.get(&s) {
                Some(Mark::Open) => return None,
                Some(Mark::Done(d)) => return Some(*d),
                None => {}
            }
            marks.insert(s, Mark::Open);
            let mut best = 0;
            for t in a.transitions_from(s) {
                for n in t.target.support() {
                    best = best.max(visit(a, n, marks)? + 1);
                }
            }
            marks.insert(s, Mark::Done(best));
            Some(best)
        }
        let mut marks = BTreeMap::new();
        let mut depth = 0;
        for s in self.initial.support() {
            depth = depth.max(visit(self, s, &mut marks)?);
        }
        Some(depth)
    }
}
