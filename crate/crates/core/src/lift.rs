//! Lifting of state-to-distribution relations to distributions, and the
//! double lifting onto distributions over distributions.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::automaton::StateId;
use crate::dist::{Dist, DistOfDists, Prob};
use crate::lp::{Affine, LinearProgram, LpOutcome, Var};
use crate::relation::SimRelation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftRow {
    pub weight: Prob,
    pub state: StateId,
    pub dist: Dist,
}

/// A decomposition `μ = Σ pₙ·δxₙ`, `ν = Σ pₙ·νₙ` with every `(xₙ, νₙ)` in
/// the relation. States may repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftWitness {
    pub rows: Vec<LiftRow>,
}

impl LiftWitness {
    pub fn single(state: StateId, dist: Dist) -> Self {
        LiftWitness {
            rows: vec![LiftRow {
                weight: Prob::one(),
                state,
                dist,
            }],
        }
    }

    fn marginals(&self) -> (BTreeMap<StateId, Prob>, BTreeMap<StateId, Prob>) {
        let mut left: BTreeMap<StateId, Prob> = BTreeMap::new();
        let mut right: BTreeMap<StateId, Prob> = BTreeMap::new();
        for row in &self.rows {
            *left.entry(row.state).or_insert_with(Prob::zero) += &row.weight;
            for (y, p) in row.dist.iter() {
                *right.entry(y).or_insert_with(Prob::zero) += &row.weight * p;
            }
        }
        left.retain(|_, p| !p.is_zero());
        right.retain(|_, p| !p.is_zero());
        (left, right)
    }

    /// Re-checks every identity of the decomposition without a solver.
    pub fn validate(&self, relation: &SimRelation, mu: &Dist, nu: &Dist) -> bool {
        if self.rows.iter().any(|r| !r.weight.is_positive() || !relation.contains(r.state, &r.dist)) {
            return false;
        }
        let total: Prob = self.rows.iter().map(|r| r.weight.clone()).sum();
        let (left, right) = self.marginals();
        total.is_one()
            && left.len() == mu.len()
            && left.iter().all(|(x, p)| mu.weight(*x) == *p)
            && right.len() == nu.len()
            && right.iter().all(|(y, p)| nu.weight(*y) == *p)
    }

    /// `Σ pₙ·δ(νₙ)`, the double-lifting counterpart of this decomposition.
    pub fn to_outer(&self) -> DistOfDists {
        DistOfDists::from_weights(self.rows.iter().map(|r| (r.dist.clone(), r.weight.clone())))
            .expect("lift weights sum to one")
    }
}

/// Weight function `w(x, ν)` witnessing `μ S̿ ψ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleLiftWitness {
    pub weights: BTreeMap<(StateId, Dist), Prob>,
}

impl DoubleLiftWitness {
    pub fn validate(&self, relation: &SimRelation, mu: &Dist, psi: &DistOfDists) -> bool {
        let mut rows: BTreeMap<StateId, Prob> = BTreeMap::new();
        let mut cols: BTreeMap<&Dist, Prob> = BTreeMap::new();
        for ((x, d), w) in &self.weights {
            if w.is_negative() {
                return false;
            }
            if w.is_zero() {
                continue;
            }
            if !relation.contains(*x, d) {
                return false;
            }
            *rows.entry(*x).or_insert_with(Prob::zero) += w;
            *cols.entry(d).or_insert_with(Prob::zero) += w;
        }
        rows.len() == mu.len()
            && rows.iter().all(|(x, p)| mu.weight(*x) == *p)
            && cols.len() == psi.len()
            && cols.iter().all(|(d, p)| psi.weight(d) == *p)
    }

    /// Column sums: the distribution over distributions being decomposed.
    pub fn outer(&self) -> DistOfDists {
        DistOfDists::from_weights(self.weights.iter().map(|((_, d), w)| (d.clone(), w.clone())))
            .expect("double-lift weights sum to one")
    }
}

/// Variables of a lifting embedded in a larger LP.
pub(crate) struct LiftVars {
    vars: Vec<(StateId, Dist, Var)>,
}

impl LiftVars {
    pub(crate) fn witness(&self, values: &[Prob]) -> LiftWitness {
        let rows = self
            .vars
            .iter()
            .filter(|(_, _, v)| values[*v].is_positive())
            .map(|(x, d, v)| LiftRow {
                weight: values[*v].clone(),
                state: *x,
                dist: d.clone(),
            })
            .collect();
        LiftWitness { rows }
    }
}

/// Adds the lifting constraints `μ S̄ target` to `lp`, where `target(y)` is
/// an affine expression (absent states must receive zero). Returns `None`
/// when some state of `supp μ` has no related distribution at all.
pub(crate) fn add_lift(
    lp: &mut LinearProgram,
    relation: &SimRelation,
    mu: &Dist,
    target: &BTreeMap<StateId, Affine>,
) -> Option<LiftVars> {
    let mut vars = Vec::new();
    let mut columns: BTreeMap<StateId, Affine> = BTreeMap::new();
    for (x, p) in mu.iter() {
        let mut row = Affine::constant(-p);
        for d in relation.image(x) {
            let v = lp.add_var(Prob::zero());
            row.add_term(v, Prob::one());
            for (y, q) in d.iter() {
                columns.entry(y).or_default().add_term(v, q.clone());
            }
            vars.push((x, d.clone(), v));
        }
        if row.terms.is_empty() {
            return None;
        }
        lp.add_zero(row);
    }
    let states: BTreeSet<StateId> = columns.keys().chain(target.keys()).copied().collect();
    for y in states {
        let mut expr = columns.remove(&y).unwrap_or_default();
        if let Some(t) = target.get(&y) {
            expr.add_scaled(t, &-Prob::one());
        }
        lp.add_zero(expr);
    }
    Some(LiftVars { vars })
}

fn constant_map(nu: &Dist) -> BTreeMap<StateId, Affine> {
    nu.iter().map(|(y, p)| (y, Affine::constant(p.clone()))).collect()
}

/// Decides `μ S̄ ν` and returns a decomposition when it holds.
pub fn check_lift(relation: &SimRelation, mu: &Dist, nu: &Dist) -> Option<LiftWitness> {
    let mut lp = LinearProgram::new();
    let vars = add_lift(&mut lp, relation, mu, &constant_map(nu))?;
    let LpOutcome::Optimal { values, .. } = lp.solve() else { return None };
    let witness = vars.witness(&values);
    debug_assert!(witness.validate(relation, mu, nu));
    Some(witness)
}

/// Decides `μ S̿ ψ`: a weight function whose rows give `μ` and whose
/// columns give `ψ`.
pub fn check_double_lift(relation: &SimRelation, mu: &Dist, psi: &DistOfDists) -> Option<DoubleLiftWitness> {
    let mut lp = LinearProgram::new();
    let mut vars = Vec::new();
    let mut columns: BTreeMap<&Dist, Affine> = BTreeMap::new();
    for (x, p) in mu.iter() {
        let mut row = Affine::constant(-p);
        for (d, _) in psi.iter() {
            if relation.contains(x, d) {
                let v = lp.add_var(Prob::zero());
                row.add_term(v, Prob::one());
                columns.entry(d).or_default().add_term(v, Prob::one());
                vars.push((x, d.clone(), v));
            }
        }
        if row.terms.is_empty() {
            return None;
        }
        lp.add_zero(row);
    }
    for (d, q) in psi.iter() {
        let mut col = columns.remove(d).unwrap_or_default();
        col.constant = -q;
        lp.add_zero(col);
    }
    let LpOutcome::Optimal { values, .. } = lp.solve() else { return None };
    let weights = vars
        .into_iter()
        .filter(|(_, _, v)| values[*v].is_positive())
        .map(|(x, d, v)| ((x, d), values[v].clone()))
        .collect();
    Some(DoubleLiftWitness { weights })
}

/// Finds `ψ` with `μ S̿ ψ` and `π(ψ) = ν`, choosing the columns of `ψ` among
/// the distributions already present in the relation.
pub fn double_lift_onto(relation: &SimRelation, mu: &Dist, nu: &Dist) -> Option<(DistOfDists, DoubleLiftWitness)> {
    let lift = check_lift(relation, mu, nu)?;
    let mut weights: BTreeMap<(StateId, Dist), Prob> = BTreeMap::new();
    for row in lift.rows {
        *weights.entry((row.state, row.dist)).or_insert_with(Prob::zero) += row.weight;
    }
    let witness = DoubleLiftWitness { weights };
    Some((witness.outer(), witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{flatten, ratio};

    fn s(n: u64) -> StateId {
        StateId::from_raw(n)
    }

    fn d(entries: &[(u64, Prob)]) -> Dist {
        Dist::from_weights(entries.iter().map(|(n, p)| (s(*n), p.clone()))).unwrap()
    }

    #[test]
    fn vending_initial_lift() {
        let (s1, s2, u0, u1) = (1, 2, 10, 11);
        let mixed = d(&[(u0, ratio(1, 5)), (u1, ratio(4, 5))]);
        let relation = SimRelation::from_pairs([(s(s1), mixed.clone()), (s(s2), Dist::point(s(u1)))]);
        let mu = d(&[(s1, ratio(1, 5)), (s2, ratio(4, 5))]);
        let nu = d(&[(u0, ratio(1, 25)), (u1, ratio(24, 25))]);
        let w = check_lift(&relation, &mu, &nu).expect("μ0 S̄ ν0");
        assert!(w.validate(&relation, &mu, &nu));
        assert_eq!(w.to_outer().weight(&mixed), ratio(1, 5));
        assert_eq!(flatten(&w.to_outer()), nu);
    }

    #[test]
    fn identity_lift_and_mismatch() {
        let mu = d(&[(1, ratio(1, 3)), (2, ratio(2, 3))]);
        let id = SimRelation::from_pairs([(s(1), Dist::point(s(1))), (s(2), Dist::point(s(2)))]);
        let w = check_lift(&id, &mu, &mu).unwrap();
        assert_eq!(w.rows.len(), 2);
        let r = SimRelation::from_pairs([(s(1), Dist::point(s(5)))]);
        assert!(check_lift(&r, &Dist::point(s(1)), &Dist::point(s(6))).is_none());
        assert!(check_lift(&r, &Dist::point(s(2)), &Dist::point(s(5))).is_none());
    }

    #[test]
    fn double_lift_split() {
        let (a, b) = (d(&[(10, ratio(1, 1))]), d(&[(11, ratio(1, 2)), (12, ratio(1, 2))]));
        let relation = SimRelation::from_pairs([(s(1), a.clone()), (s(2), b.clone())]);
        let mu = d(&[(1, ratio(1, 2)), (2, ratio(1, 2))]);
        let psi = DistOfDists::from_weights([(a.clone(), ratio(1, 2)), (b.clone(), ratio(1, 2))]).unwrap();
        let w = check_double_lift(&relation, &mu, &psi).unwrap();
        assert_eq!(w.weights.len(), 2);
        assert!(w.weights.values().all(|p| *p == ratio(1, 2)));
        assert!(w.validate(&relation, &mu, &psi));
        let point = check_double_lift(&relation, &Dist::point(s(1)), &DistOfDists::point(a)).unwrap();
        assert_eq!(point.weights.values().next(), Some(&Prob::one()));
    }
}
