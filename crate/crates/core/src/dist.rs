//! Finitely supported probability distributions with exact rational weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::automaton::StateId;
use crate::error::{Error, Result};

pub type Prob = BigRational;

/// `num/den` as an exact probability.
pub fn ratio(num: i64, den: i64) -> Prob {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `1`, `0`, `num/den` or a finite decimal such as `0.04`.
pub fn parse_prob(text: &str) -> Result<Prob> {
    let bad = || Error::Distribution(format!("cannot read `{text}` as a rational"));
    let text = text.trim();
    let value = if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        BigRational::new(n, d)
    } else if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int = if int.is_empty() { "0" } else { int };
        let whole = BigInt::from_str(&format!("{int}{frac}")).map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        BigRational::new(whole, scale)
    } else {
        BigRational::from_integer(BigInt::from_str(text).map_err(|_| bad())?)
    };
    Ok(value)
}

/// Writes `1`, `0` or `num/den`.
pub fn format_prob(p: &Prob) -> String {
    if p.is_integer() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub(crate) fn in_unit_interval(p: &Prob) -> bool {
    !p.is_negative() && *p <= Prob::one()
}

/// A probability distribution over states. Zero weights are never stored, so
/// structural equality is distribution equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist {
    weights: BTreeMap<StateId, Prob>,
}

impl Dist {
    pub fn point(state: StateId) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(state, Prob::one());
        Dist { weights }
    }

    /// Builds a distribution, merging repeated states and dropping zeros. The
    /// weights must be nonnegative and sum to exactly one.
    pub fn from_weights<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (StateId, Prob)>,
    {
        let mut weights: BTreeMap<StateId, Prob> = BTreeMap::new();
        for (state, p) in entries {
            if p.is_negative() {
                return Err(Error::Distribution(format!(
                    "negative weight {} on {state}",
                    format_prob(&p)
                )));
            }
            *weights.entry(state).or_insert_with(Prob::zero) += p;
        }
        weights.retain(|_, p| !p.is_zero());
        let total: Prob = weights.values().sum();
        if !total.is_one() {
            return Err(Error::Distribution(format!(
                "weights sum to {}, not 1",
                format_prob(&total)
            )));
        }
        Ok(Dist { weights })
    }

    /// Normalises a nonzero, nonnegative weight vector.
    pub fn normalized<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (StateId, Prob)>,
    {
        let entries: Vec<_> = entries.into_iter().collect();
        let total: Prob = entries.iter().map(|(_, p)| p.clone()).sum();
        if !total.is_positive() {
            return Err(Error::Distribution("cannot normalise zero mass".into()));
        }
        Dist::from_weights(entries.into_iter().map(|(s, p)| (s, p / &total)))
    }

    /// `p·self + (1−p)·other`.
    pub fn mix(&self, p: &Prob, other: &Dist) -> Dist {
        let q = Prob::one() - p;
        let mut weights: BTreeMap<StateId, Prob> = BTreeMap::new();
        for (s, w) in &self.weights {
            *weights.entry(*s).or_insert_with(Prob::zero) += w * p;
        }
        for (s, w) in &other.weights {
            *weights.entry(*s).or_insert_with(Prob::zero) += w * &q;
        }
        weights.retain(|_, w| !w.is_zero());
        Dist { weights }
    }

    /// Product distribution, with the pair mapped through `combine`.
    pub fn product(&self, other: &Dist, mut combine: impl FnMut(StateId, StateId) -> StateId) -> Dist {
        let mut weights = BTreeMap::new();
        for (x, p) in &self.weights {
            for (y, q) in &other.weights {
                weights.insert(combine(*x, *y), p * q);
            }
        }
        Dist { weights }
    }

    pub fn map_states(&self, mut f: impl FnMut(StateId) -> StateId) -> Dist {
        let mut weights: BTreeMap<StateId, Prob> = BTreeMap::new();
        for (s, p) in &self.weights {
            *weights.entry(f(*s)).or_insert_with(Prob::zero) += p;
        }
        Dist { weights }
    }

    pub fn weight(&self, state: StateId) -> Prob {
        self.weights.get(&state).cloned().unwrap_or_else(Prob::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.weights.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &Prob)> {
        self.weights.iter().map(|(s, p)| (*s, p))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_point(&self) -> Option<StateId> {
        if self.weights.len() == 1 {
            self.weights.keys().next().copied()
        } else {
            None
        }
    }

    pub fn contains(&self, state: StateId) -> bool {
        self.weights.contains_key(&state)
    }
}

impl fmt::Debug for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (s, p)) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}:{}", format_prob(p))?;
        }
        write!(f, "}}")
    }
}

/// A finitely supported distribution over distributions, as used by the
/// double lifting. Entries with equal inner distributions are merged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistOfDists {
    weights: BTreeMap<Dist, Prob>,
}

impl DistOfDists {
    pub fn point(inner: Dist) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(inner, Prob::one());
        DistOfDists { weights }
    }

    pub fn from_weights<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Dist, Prob)>,
    {
        let mut weights: BTreeMap<Dist, Prob> = BTreeMap::new();
        for (d, p) in entries {
            if p.is_negative() {
                return Err(Error::Distribution("negative weight".into()));
            }
            *weights.entry(d).or_insert_with(Prob::zero) += p;
        }
        weights.retain(|_, p| !p.is_zero());
        let total: Prob = weights.values().sum();
        if !total.is_one() {
            return Err(Error::Distribution(format!(
                "outer weights sum to {}, not 1",
                format_prob(&total)
            )));
        }
        Ok(DistOfDists { weights })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Dist, &Prob)> {
        self.weights.iter()
    }

    pub fn weight(&self, inner: &Dist) -> Prob {
        self.weights.get(inner).cloned().unwrap_or_else(Prob::zero)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// π: flattens a distribution over distributions into its barycentre.
pub fn flatten(psi: &DistOfDists) -> Dist {
    let mut weights: BTreeMap<StateId, Prob> = BTreeMap::new();
    for (inner, outer) in psi.iter() {
        for (s, p) in inner.iter() {
            *weights.entry(s).or_insert_with(Prob::zero) += p * outer;
        }
    }
    weights.retain(|_, p| !p.is_zero());
    Dist { weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: u64) -> StateId {
        StateId::from_raw(n)
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_prob("1").unwrap(), Prob::one());
        assert_eq!(parse_prob("1/5").unwrap(), ratio(1, 5));
        assert_eq!(parse_prob("0.04").unwrap(), ratio(1, 25));
        assert_eq!(parse_prob(".5").unwrap(), ratio(1, 2));
        assert!(parse_prob("1/0").is_err());
        assert!(parse_prob("x").is_err());
        assert_eq!(format_prob(&ratio(24, 25)), "24/25");
        assert_eq!(format_prob(&ratio(4, 4)), "1");
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(Dist::from_weights([(s(1), ratio(1, 2))]).is_err());
        let d = Dist::from_weights([(s(1), ratio(1, 2)), (s(1), ratio(1, 2)), (s(2), Prob::zero())]).unwrap();
        assert_eq!(d, Dist::point(s(1)));
        assert!(Dist::from_weights([(s(1), ratio(3, 2)), (s(2), ratio(-1, 2))]).is_err());
    }

    #[test]
    fn flatten_point_and_mixture() {
        let mu = Dist::from_weights([(s(1), ratio(1, 3)), (s(2), ratio(2, 3))]).unwrap();
        assert_eq!(flatten(&DistOfDists::point(mu.clone())), mu);
        let psi = DistOfDists::from_weights([
            (Dist::point(s(1)), ratio(1, 2)),
            (Dist::point(s(2)), ratio(1, 2)),
        ])
        .unwrap();
        let expect = Dist::from_weights([(s(1), ratio(1, 2)), (s(2), ratio(1, 2))]).unwrap();
        assert_eq!(flatten(&psi), expect);
    }

    #[test]
    fn flatten_matches_vending_initial_split() {
        // 0.2·δ(0.2δu0 + 0.8δu1) + 0.8·δ(δu1) = 0.04δu0 + 0.96δu1
        let (u0, u1) = (s(10), s(11));
        let inner = Dist::from_weights([(u0, ratio(1, 5)), (u1, ratio(4, 5))]).unwrap();
        let psi = DistOfDists::from_weights([(inner, ratio(1, 5)), (Dist::point(u1), ratio(4, 5))]).unwrap();
        let flat = flatten(&psi);
        assert_eq!(flat.weight(u0), ratio(1, 25));
        assert_eq!(flat.weight(u1), ratio(24, 25));
    }
}
