//! Precongruence checks: a verified pair `P ≤ Q` is placed in an operator
//! context and the constructed relation is verified again.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::random::TermGen;
use super::witness::{self, Congruence, Witnessed};
use crate::alphabet::ActionAlphabet;
use crate::automaton::ProbAutomaton;
use crate::error::Result;
use crate::relation::SimRelation;
use crate::simulation::{default_horizon, verify_simulation, CheckResult, Verdict};
use crate::term::compile;

const OPERAND_DEPTH: usize = 2;
const CONTEXT_DEPTH: usize = 2;
const MAX_OPERAND_STATES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Closure {
    Plus,
    SeqRight,
    SeqLeft,
    Star,
    PChoice,
    Par,
}

impl Closure {
    pub const ALL: [Closure; 6] = [
        Closure::Plus,
        Closure::SeqRight,
        Closure::SeqLeft,
        Closure::Star,
        Closure::PChoice,
        Closure::Par,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Closure::Plus => "plus-congruence",
            Closure::SeqRight => "seq-congruence",
            Closure::SeqLeft => "seq-left-congruence",
            Closure::Star => "star-congruence",
            Closure::PChoice => "pc-congruence",
            Closure::Par => "par-congruence",
        }
    }

    pub fn from_id(id: &str) -> Option<Closure> {
        Closure::ALL.into_iter().find(|c| c.id() == id)
    }
}

impl fmt::Display for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A pair `lhs ≤ rhs` together with a simulation, built by a law witness.
#[derive(Debug, Clone)]
pub struct RelatedPair {
    pub lhs: ProbAutomaton,
    pub rhs: ProbAutomaton,
    pub relation: SimRelation,
    /// Name of the law that produced the pair.
    pub origin: &'static str,
}

impl RelatedPair {
    /// A related pair from a law witness; equations are used in either
    /// direction.
    pub fn sample(generator: &mut TermGen) -> Result<RelatedPair> {
        let alphabet = generator.alphabet().clone();
        let operand = |g: &mut TermGen| compile(&g.term_within(OPERAND_DEPTH, MAX_OPERAND_STATES), &alphabet);
        let p = operand(generator)?;
        let q = operand(generator)?;
        let r = operand(generator)?;
        let prob = generator.prob();
        let (origin, w): (&'static str, Witnessed) = match generator.rng().gen_range(0..5) {
            0 => ("right-dist", witness::right_dist(&p, &q, &r)?),
            1 => ("left-subdist", witness::left_subdist(&p, &q, &r)?),
            2 => ("pc-dist", witness::pc_dist(&p, &prob, &q, &r)?),
            3 => ("pc-supdist", witness::pc_supdist(&p, &prob, &q, &r)?),
            _ => ("star-unfold", witness::star_unfold(&p)?),
        };
        let flip = w.backward.is_some() && generator.rng().gen_bool(0.5);
        Ok(match (flip, w.backward) {
            (true, Some(backward)) => RelatedPair {
                lhs: w.rhs,
                rhs: w.lhs,
                relation: backward,
                origin,
            },
            _ => RelatedPair {
                lhs: w.lhs,
                rhs: w.rhs,
                relation: w.forward,
                origin,
            },
        })
    }

    pub fn verify(&self) -> Result<CheckResult> {
        verify_simulation(&self.relation, &self.lhs, &self.rhs, default_horizon(&self.rhs))
    }
}

/// Builds the closure of `pair` under `closure` with a random context.
pub fn close(pair: &RelatedPair, closure: Closure, generator: &mut TermGen) -> Result<Congruence> {
    let alphabet: Arc<ActionAlphabet> = generator.alphabet().clone();
    let context = compile(&generator.term_within(CONTEXT_DEPTH, MAX_OPERAND_STATES), &alphabet)?;
    let (s, p, q) = (&pair.relation, &pair.lhs, &pair.rhs);
    match closure {
        Closure::Plus => witness::plus_congruence(s, p, q, &context),
        Closure::SeqRight => witness::seq_congruence(s, p, q, &context),
        Closure::SeqLeft => witness::seq_left_congruence(s, p, q, &context),
        Closure::Star => witness::star_congruence(s, p, q),
        Closure::PChoice => witness::pchoice_congruence(s, p, &generator.prob(), q, &context),
        Closure::Par => witness::par_congruence(s, p, &alphabet.external_actions(), q, &context),
    }
}

/// Outcome of one closure instance.
#[derive(Debug, Clone)]
pub struct CongruenceReport {
    pub closure: Closure,
    pub index: usize,
    pub origin: &'static str,
    /// Verdict on the pair before closing it.
    pub base: Verdict,
    pub result: CheckResult,
}

impl CongruenceReport {
    pub fn line(&self, seed: u64) -> String {
        format!("LAW {} SEED {} {} forward -> {}", self.closure, seed, self.index, self.result.verdict())
    }
}

/// Checks `count` seeded instances of each closure.
pub fn run_congruences(closures: &[Closure], seed: u64, count: usize, alphabet: &Arc<ActionAlphabet>) -> Result<Vec<CongruenceReport>> {
    let mut out = Vec::new();
    for &closure in closures {
        let mut generator = TermGen::new(super::law_seed(seed, closure.id()), alphabet);
        for index in 0..count {
            let pair = RelatedPair::sample(&mut generator)?;
            let base = pair.verify()?.verdict();
            let c = close(&pair, closure, &mut generator)?;
            let result = verify_simulation(&c.relation, &c.lhs, &c.rhs, default_horizon(&c.rhs))?;
            out.push(CongruenceReport {
                closure,
                index,
                origin: pair.origin,
                base,
                result,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::random_alphabet;

    #[test]
    fn every_closure_preserves_simulation() {
        let reports = run_congruences(&Closure::ALL, 5, 4, &random_alphabet()).unwrap();
        assert_eq!(reports.len(), 24);
        for r in &reports {
            assert_eq!(r.base, Verdict::Verified, "{} from {}", r.closure, r.origin);
            assert!(r.result.is_verified(), "{} #{} from {}: {:?}", r.closure, r.index, r.origin, r.result);
        }
    }

    #[test]
    fn ids_round_trip() {
        for c in Closure::ALL {
            assert_eq!(Closure::from_id(c.id()), Some(c));
        }
        assert_eq!(Closure::from_id("plus-idem"), None);
    }
}
