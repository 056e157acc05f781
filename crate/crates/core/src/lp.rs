//! Exact linear programming: `minimise c·x subject to A·x = b, x ≥ 0`.
//!
//! A dense two-phase tableau simplex over exact rationals. Each problem is
//! first attempted with 128-bit rationals using checked arithmetic; on
//! overflow the same problem is re-solved with arbitrary precision.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::dist::Prob;

/// Index of a decision variable.
pub type Var = usize;

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(Var, Prob)>,
    rhs: Prob,
}

/// An equality-constrained LP over nonnegative variables.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    costs: Vec<Prob>,
    rows: Vec<Row>,
}

/// A linear expression `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default)]
pub struct Affine {
    pub terms: Vec<(Var, Prob)>,
    pub constant: Prob,
}

impl Affine {
    pub fn var(v: Var) -> Self {
        Affine {
            terms: vec![(v, Prob::one())],
            constant: Prob::zero(),
        }
    }

    pub fn constant(c: Prob) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn add_term(&mut self, v: Var, coeff: Prob) {
        self.terms.push((v, coeff));
    }

    /// Adds `k·other`.
    pub fn add_scaled(&mut self, other: &Affine, k: &Prob) {
        self.terms.extend(other.terms.iter().map(|(v, c)| (*v, c * k)));
        self.constant += &other.constant * k;
    }

    pub fn scaled(&self, k: &Prob) -> Affine {
        let mut out = Affine::default();
        out.add_scaled(self, k);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_zero())
    }

    pub fn eval(&self, values: &[Prob]) -> Prob {
        self.terms.iter().map(|(v, c)| c * &values[*v]).sum::<Prob>() + &self.constant
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { values: Vec<Prob>, objective: Prob },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn values(&self) -> Option<&[Prob]> {
        match self {
            LpOutcome::Optimal { values, .. } => Some(values),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable `x ≥ 0` with the given objective coefficient.
    pub fn add_var(&mut self, cost: Prob) -> Var {
        self.costs.push(cost);
        self.costs.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds `Σ coeff·var = rhs`. Repeated variables are summed.
    pub fn add_constraint<I>(&mut self, terms: I, rhs: Prob)
    where
        I: IntoIterator<Item = (Var, Prob)>,
    {
        let mut merged: BTreeMap<Var, Prob> = BTreeMap::new();
        for (v, c) in terms {
            assert!(v < self.costs.len(), "constraint mentions unknown variable {v}");
            *merged.entry(v).or_insert_with(<Prob as Zero>::zero) += c;
        }
        merged.retain(|_, c| !Zero::is_zero(c));
        self.rows.push(Row {
            terms: merged.into_iter().collect(),
            rhs,
        });
    }

    /// Adds the constraint `expr = 0`.
    pub fn add_zero(&mut self, expr: Affine) {
        self.add_constraint(expr.terms, -expr.constant);
    }

    pub fn solve(&self) -> LpOutcome {
        // A row without terms is either vacuous or contradictory.
        if self.rows.iter().any(|r| r.terms.is_empty() && !Zero::is_zero(&r.rhs)) {
            return LpOutcome::Infeasible;
        }
        match solve_with::<Ratio<i128>>(self) {
            Ok(outcome) => outcome,
            Err(Overflow) => solve_with::<BigRational>(self).expect("arbitrary precision cannot overflow"),
        }
    }

    /// Checks a claimed solution against every constraint.
    pub fn satisfies(&self, values: &[Prob]) -> bool {
        values.len() == self.costs.len()
            && values.iter().all(|v| !Signed::is_negative(v))
            && self.rows.iter().all(|row| {
                let lhs: Prob = row.terms.iter().map(|(v, c)| c * &values[*v]).sum();
                lhs == row.rhs
            })
    }
}

#[derive(Debug)]
struct Overflow;

trait Scalar: Clone + PartialOrd + Debug {
    fn s_zero() -> Self;
    fn s_one() -> Self;
    fn from_prob(p: &Prob) -> Result<Self, Overflow>;
    fn to_prob(&self) -> Prob;
    fn sub(&self, o: &Self) -> Result<Self, Overflow>;
    fn mul(&self, o: &Self) -> Result<Self, Overflow>;
    fn div(&self, o: &Self) -> Result<Self, Overflow>;
    fn s_is_zero(&self) -> bool;
    fn s_is_positive(&self) -> bool;
    fn s_is_negative(&self) -> bool;
}

impl Scalar for Ratio<i128> {
    fn s_zero() -> Self {
        Zero::zero()
    }
    fn s_one() -> Self {
        One::one()
    }
    fn from_prob(p: &Prob) -> Result<Self, Overflow> {
        match (p.numer().to_i128(), p.denom().to_i128()) {
            (Some(n), Some(d)) => Ok(Ratio::new_raw(n, d)),
            _ => Err(Overflow),
        }
    }
    fn to_prob(&self) -> Prob {
        BigRational::new_raw(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
    fn sub(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_sub(o).ok_or(Overflow)
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_mul(o).ok_or(Overflow)
    }
    fn div(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_div(o).ok_or(Overflow)
    }
    fn s_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn s_is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn s_is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for BigRational {
    fn s_zero() -> Self {
        Zero::zero()
    }
    fn s_one() -> Self {
        One::one()
    }
    fn from_prob(p: &Prob) -> Result<Self, Overflow> {
        Ok(p.clone())
    }
    fn to_prob(&self) -> Prob {
        self.clone()
    }
    fn sub(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self / o)
    }
    fn s_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn s_is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn s_is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 32;

/// Sparse row: entries sorted by column, zeros never stored.
type SparseRow<S> = Vec<(usize, S)>;

fn entry<S>(row: &SparseRow<S>, col: usize) -> Option<&S> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|i| &row[i].1)
}

/// `row - factor·pivot`, merging two sorted sparse rows.
fn axpy<S: Scalar>(row: &SparseRow<S>, factor: &S, pivot: &SparseRow<S>) -> Result<SparseRow<S>, Overflow> {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let cj = pivot.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        if ci < cj {
            out.push(row[i].clone());
            i += 1;
        } else if cj < ci {
            out.push((cj, S::s_zero().sub(&factor.mul(&pivot[j].1)?)?));
            j += 1;
        } else {
            let v = row[i].1.sub(&factor.mul(&pivot[j].1)?)?;
            if !v.s_is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    Ok(out)
}

struct Tableau<S> {
    rows: Vec<SparseRow<S>>,
    rhs: Vec<S>,
    // Reduced costs, dense; `value` holds minus the objective value.
    objective: Vec<S>,
    value: S,
    basis: Vec<usize>,
    width: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, e: usize) -> Result<(), Overflow> {
        let inv = S::s_one().div(entry(&self.rows[r], e).expect("pivot on a nonzero entry"))?;
        for item in self.rows[r].iter_mut() {
            item.1 = item.1.mul(&inv)?;
        }
        self.rhs[r] = self.rhs[r].mul(&inv)?;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let Some(factor) = entry(&self.rows[i], e).cloned() else { continue };
            self.rows[i] = axpy(&self.rows[i], &factor, &pivot_row)?;
            self.rhs[i] = self.rhs[i].sub(&factor.mul(&pivot_rhs)?)?;
        }
        let factor = self.objective[e].clone();
        if !factor.s_is_zero() {
            for (c, v) in &pivot_row {
                self.objective[*c] = self.objective[*c].sub(&factor.mul(v)?)?;
            }
            self.value = self.value.sub(&factor.mul(&pivot_rhs)?)?;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = e;
        Ok(())
    }

    /// Runs simplex iterations over the allowed columns. Returns `false` when
    /// the objective is unbounded below.
    fn optimise(&mut self, allowed: &[bool]) -> Result<bool, Overflow> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut entering: Option<usize> = None;
            for j in 0..self.width {
                if !allowed[j] || !self.objective[j].s_is_negative() {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                match entering {
                    Some(k) if self.objective[j] >= self.objective[k] => {}
                    _ => entering = Some(j),
                }
            }
            let Some(e) = entering else { return Ok(true) };
            let mut leaving: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let Some(a) = entry(&self.rows[i], e) else { continue };
                if !a.s_is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].div(a)?;
                let better = match &leaving {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
            let Some((r, step)) = leaving else { return Ok(false) };
            if step.s_is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e)?;
        }
    }
}

fn solve_with<S: Scalar>(lp: &LinearProgram) -> Result<LpOutcome, Overflow> {
    let n = lp.costs.len();
    let rows: Vec<&Row> = lp.rows.iter().filter(|r| !r.terms.is_empty()).collect();
    let m = rows.len();
    let width = n + m;
    let mut tableau = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        objective: vec![S::s_zero(); width],
        value: S::s_zero(),
        basis: (n..width).collect(),
        width,
    };
    for (i, row) in rows.iter().enumerate() {
        let flip = Signed::is_negative(&row.rhs);
        let mut sparse = Vec::with_capacity(row.terms.len() + 1);
        for (v, c) in &row.terms {
            let c = if flip { -c } else { c.clone() };
            sparse.push((*v, S::from_prob(&c)?));
        }
        sparse.push((n + i, S::s_one()));
        tableau.rows.push(sparse);
        tableau.rhs.push(S::from_prob(&if flip { -&row.rhs } else { row.rhs.clone() })?);
    }
    // Phase one: minimise the sum of the artificial variables.
    for i in 0..m {
        for (c, v) in &tableau.rows[i] {
            if *c < n {
                tableau.objective[*c] = tableau.objective[*c].sub(v)?;
            }
        }
        tableau.value = tableau.value.sub(&tableau.rhs[i])?;
    }
    let all = vec![true; width];
    tableau.optimise(&all)?;
    if !tableau.value.s_is_zero() {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive artificial variables out of the basis; rows where that is
    // impossible are redundant.
    let mut i = 0;
    while i < tableau.rows.len() {
        if tableau.basis[i] >= n {
            if let Some(j) = tableau.rows[i].iter().map(|(c, _)| *c).find(|&c| c < n) {
                tableau.pivot(i, j)?;
            } else {
                tableau.rows.swap_remove(i);
                tableau.rhs.swap_remove(i);
                tableau.basis.swap_remove(i);
                continue;
            }
        }
        i += 1;
    }
    // Phase two with the real objective, artificial columns barred.
    let mut objective = vec![S::s_zero(); width];
    for (j, c) in lp.costs.iter().enumerate() {
        objective[j] = S::from_prob(c)?;
    }
    let mut value = S::s_zero();
    for (i, &b) in tableau.basis.iter().enumerate() {
        let cb = objective[b].clone();
        if cb.s_is_zero() {
            continue;
        }
        for (c, v) in &tableau.rows[i] {
            objective[*c] = objective[*c].sub(&cb.mul(v)?)?;
        }
        value = value.sub(&cb.mul(&tableau.rhs[i])?)?;
    }
    tableau.objective = objective;
    tableau.value = value;
    let allowed: Vec<bool> = (0..width).map(|j| j < n).collect();
    if !tableau.optimise(&allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut values = vec![<Prob as Zero>::zero(); n];
    for (i, &b) in tableau.basis.iter().enumerate() {
        if b < n {
            values[b] = tableau.rhs[i].to_prob();
        }
    }
    let objective = -tableau.value.to_prob();
    Ok(LpOutcome::Optimal { values, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;
    use proptest::prelude::*;

    fn int(n: i64) -> Prob {
        ratio(n, 1)
    }

    #[test]
    fn small_optimum() {
        // min x + 2y  s.t.  x + y = 1,  x - y + s = 1/2
        let mut lp = LinearProgram::new();
        let x = lp.add_var(int(1));
        let y = lp.add_var(int(2));
        let s = lp.add_var(int(0));
        lp.add_constraint([(x, int(1)), (y, int(1))], int(1));
        lp.add_constraint([(x, int(1)), (y, int(-1)), (s, int(1))], ratio(1, 2));
        let LpOutcome::Optimal { values, objective } = lp.solve() else {
            panic!("expected an optimum")
        };
        assert_eq!(values[x], ratio(3, 4));
        assert_eq!(values[y], ratio(1, 4));
        assert_eq!(objective, ratio(5, 4));
        assert!(lp.satisfies(&values));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(int(0));
        lp.add_constraint([(x, int(1))], int(-1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var(int(-1));
        let y = lp.add_var(int(0));
        lp.add_constraint([(x, int(1)), (y, int(-1))], int(0));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(int(1));
        let y = lp.add_var(int(1));
        lp.add_constraint([(x, int(1)), (y, int(1))], int(2));
        lp.add_constraint([(x, int(2)), (y, int(2))], int(4));
        lp.add_constraint([], int(0));
        let values = lp.solve().values().unwrap().to_vec();
        assert!(lp.satisfies(&values));
    }

    #[test]
    fn huge_coefficients_fall_back_to_big_rationals() {
        let big = BigRational::from_integer(BigInt::from(10).pow(40));
        let mut lp = LinearProgram::new();
        let x = lp.add_var(int(1));
        lp.add_constraint([(x, big.clone())], int(1));
        assert_eq!(lp.solve().values().unwrap()[x], BigRational::one() / big);
    }

    proptest! {
        // Any system built around a known nonnegative point is feasible, and
        // the returned point satisfies it exactly.
        #[test]
        fn feasible_systems_are_solved(
            point in prop::collection::vec(0i64..4, 1..6),
            coeffs in prop::collection::vec(prop::collection::vec(-3i64..4, 6), 1..5),
        ) {
            let mut lp = LinearProgram::new();
            let vars: Vec<Var> = point.iter().map(|_| lp.add_var(int(1))).collect();
            for row in &coeffs {
                let rhs: i64 = point.iter().zip(row).map(|(p, c)| p * c).sum();
                lp.add_constraint(vars.iter().zip(row).map(|(v, c)| (*v, int(*c))), int(rhs));
            }
            let outcome = lp.solve();
            let values = outcome.values().expect("feasible by construction");
            prop_assert!(lp.satisfies(values));
            let cost: Prob = values.iter().sum();
            prop_assert!(cost <= int(point.iter().sum()));
        }
    }
}
