//! Relations between the states of one automaton and distributions over the
//! states of another.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{ProbAutomaton, StateId};
use crate::dist::Dist;
use crate::error::{Error, Result};

/// A finite set of pairs `(x, ν)` with `x` a state of the simulated automaton
/// and `ν` a distribution over the simulating one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimRelation {
    pairs: BTreeMap<StateId, BTreeSet<Dist>>,
}

impl SimRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (StateId, Dist)>>(pairs: I) -> Self {
        let mut relation = Self::new();
        for (x, d) in pairs {
            relation.insert(x, d);
        }
        relation
    }

    /// `{(x, δx)}` for every state of the automaton.
    pub fn identity(p: &ProbAutomaton) -> Self {
        Self::from_pairs(p.states().iter().map(|x| (*x, Dist::point(*x))))
    }

    pub fn insert(&mut self, x: StateId, d: Dist) -> bool {
        self.pairs.entry(x).or_default().insert(d)
    }

    pub fn remove(&mut self, x: StateId, d: &Dist) -> bool {
        let Some(set) = self.pairs.get_mut(&x) else { return false };
        let removed = set.remove(d);
        if set.is_empty() {
            self.pairs.remove(&x);
        }
        removed
    }

    pub fn contains(&self, x: StateId, d: &Dist) -> bool {
        self.pairs.get(&x).is_some_and(|s| s.contains(d))
    }

    /// Distributions related to `x`.
    pub fn image(&self, x: StateId) -> impl Iterator<Item = &Dist> {
        self.pairs.get(&x).into_iter().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &Dist)> {
        self.pairs.iter().flat_map(|(x, ds)| ds.iter().map(move |d| (*x, d)))
    }

    pub fn domain(&self) -> impl Iterator<Item = StateId> + '_ {
        self.pairs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn extend(&mut self, other: &SimRelation) {
        for (x, d) in other.iter() {
            self.insert(x, d.clone());
        }
    }

    /// `{(y, δx) | (x, δy) ∈ self}`, defined when every distribution of the
    /// relation is a point.
    pub fn point_inverse(&self) -> Option<SimRelation> {
        self.iter()
            .map(|(x, d)| d.is_point().map(|y| (y, Dist::point(x))))
            .collect()
    }

    /// Checks that every left state belongs to `left` and every distribution
    /// is over the states of `right`.
    pub fn validate(&self, left: &ProbAutomaton, right: &ProbAutomaton) -> Result<()> {
        for (x, d) in self.iter() {
            if !left.contains(x) {
                return Err(Error::Relation(format!("{x} is not a state of the left automaton")));
            }
            if let Some(y) = d.support().find(|y| !right.contains(*y)) {
                return Err(Error::Relation(format!("{y} is not a state of the right automaton")));
            }
        }
        Ok(())
    }
}

impl FromIterator<(StateId, Dist)> for SimRelation {
    fn from_iter<I: IntoIterator<Item = (StateId, Dist)>>(iter: I) -> Self {
        Self::from_pairs(iter)
    }
}
