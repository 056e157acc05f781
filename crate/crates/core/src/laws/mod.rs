//! The algebraic laws of probabilistic concurrent Kleene algebra as
//! executable checks.
//!
//! Laws are keyed by name. Where a hand proof supplies the simulation, the
//! law is checked by building that relation and verifying it; otherwise the
//! simulation is searched for.

pub mod congruence;
pub mod random;
pub mod witness;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::alphabet::ActionAlphabet;
use crate::automaton::ProbAutomaton;
use crate::dist::{format_prob, ratio, Prob};
use crate::error::{Error, Result};
use crate::simulation::{default_horizon, find_simulation, leq, verify_simulation, CheckResult, SearchConfig, Verdict};
use crate::term::{compile, Term};

pub use random::{random_alphabet, random_terms, sample_probs, TermGen, MAX_TERM_STATES};
use witness::Witnessed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Both `lhs ≤ rhs` and `rhs ≤ lhs`.
    Equiv,
    /// Only `lhs ≤ rhs`.
    Leq,
}

/// The hand-proof relation a law is checked with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    RightDist,
    LeftSubdist,
    PcDist,
    PcSupdist,
    StarUnfold,
    Interchange,
}

/// Terms and probabilities a law is instantiated with.
#[derive(Debug, Clone)]
pub struct Bindings {
    pub alphabet: Arc<ActionAlphabet>,
    pub terms: Vec<Term>,
    pub probs: Vec<Prob>,
}

impl Bindings {
    pub fn new(alphabet: &Arc<ActionAlphabet>, terms: Vec<Term>) -> Self {
        Bindings {
            alphabet: alphabet.clone(),
            terms,
            probs: Vec::new(),
        }
    }

    pub fn with_probs(mut self, probs: Vec<Prob>) -> Self {
        self.probs = probs;
        self
    }

    fn t(&self, i: usize) -> Term {
        self.terms[i].clone()
    }

    fn p(&self, i: usize) -> Prob {
        self.probs[i].clone()
    }

    fn frame(&self) -> BTreeSet<String> {
        self.alphabet.external_actions()
    }

    fn par(&self, l: Term, r: Term) -> Term {
        Term::par(l, self.frame(), r)
    }
}

type Template = fn(&Bindings) -> Term;

#[derive(Clone)]
pub struct Law {
    pub id: &'static str,
    pub arity: usize,
    /// Number of probability parameters.
    pub probs: usize,
    pub direction: Direction,
    pub witness: Option<WitnessKind>,
    /// Sides of the hypothesis for conditional laws.
    premise: Option<(Template, Template)>,
    lhs: Template,
    rhs: Template,
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Law")
            .field("id", &self.id)
            .field("arity", &self.arity)
            .field("probs", &self.probs)
            .field("direction", &self.direction)
            .field("witness", &self.witness)
            .finish()
    }
}

impl Law {
    pub fn is_conditional(&self) -> bool {
        self.premise.is_some()
    }

    pub fn lhs(&self, b: &Bindings) -> Term {
        (self.lhs)(b)
    }

    pub fn rhs(&self, b: &Bindings) -> Term {
        (self.rhs)(b)
    }

    /// Fills in default probabilities and checks the number of parameters.
    fn complete(&self, b: &Bindings) -> Result<Bindings> {
        if b.terms.len() != self.arity {
            return Err(Error::Arity {
                law: self.id.into(),
                expected: self.arity,
                got: b.terms.len(),
            });
        }
        let mut b = b.clone();
        if b.probs.is_empty() {
            b.probs = [ratio(1, 2), ratio(1, 3)][..self.probs].to_vec();
        }
        if b.probs.len() != self.probs {
            return Err(Error::Arity {
                law: format!("{} (probabilities)", self.id),
                expected: self.probs,
                got: b.probs.len(),
            });
        }
        Ok(b)
    }
}

/// `(p′, q′)` with `P ⊕p (Q ⊕q R) ≡ (P ⊕p′ Q) ⊕q′ R`.
pub fn pc_assoc_params(p: &Prob, q: &Prob) -> (Prob, Prob) {
    let q2 = Prob::one() - (Prob::one() - p) * (Prob::one() - q);
    let p2 = if q2.is_zero() { Prob::zero() } else { p / &q2 };
    (p2, q2)
}

macro_rules! law {
    ($id:literal, $arity:literal, $probs:literal, $dir:ident, $witness:expr, |$b:ident| $lhs:expr, $rhs:expr) => {
        Law {
            id: $id,
            arity: $arity,
            probs: $probs,
            direction: Direction::$dir,
            witness: $witness,
            premise: None,
            lhs: |$b| {
                let _ = $b;
                $lhs
            },
            rhs: |$b| $rhs,
        }
    };
}

/// Every law of the algebra, plus the derived fact `P ⊕p Q ≤ P + Q`.
pub fn law_registry() -> Vec<Law> {
    use Term as T;
    use WitnessKind as W;
    vec![
        law!("plus-idem", 1, 0, Equiv, None, |b| b.t(0), T::plus(b.t(0), b.t(0))),
        law!("plus-zero", 1, 0, Equiv, None, |b| b.t(0), T::plus(b.t(0), T::Zero)),
        law!("plus-comm", 2, 0, Equiv, None, |b| T::plus(b.t(0), b.t(1)), T::plus(b.t(1), b.t(0))),
        law!(
            "plus-assoc",
            3,
            0,
            Equiv,
            None,
            |b| T::plus(b.t(0), T::plus(b.t(1), b.t(2))),
            T::plus(T::plus(b.t(0), b.t(1)), b.t(2))
        ),
        law!("pc-idem", 1, 1, Equiv, None, |b| b.t(0), T::pchoice(b.t(0), b.p(0), b.t(0))),
        law!(
            "pc-comm",
            2,
            1,
            Equiv,
            None,
            |b| T::pchoice(b.t(0), b.p(0), b.t(1)),
            T::pchoice(b.t(1), Prob::one() - b.p(0), b.t(0))
        ),
        law!(
            "pc-assoc",
            3,
            2,
            Equiv,
            None,
            |b| T::pchoice(b.t(0), b.p(0), T::pchoice(b.t(1), b.p(1), b.t(2))),
            {
                let (p2, q2) = pc_assoc_params(&b.p(0), &b.p(1));
                T::pchoice(T::pchoice(b.t(0), p2, b.t(1)), q2, b.t(2))
            }
        ),
        law!("seq-one-right", 1, 0, Equiv, None, |b| b.t(0), T::seq(b.t(0), T::One)),
        law!("seq-one-left", 1, 0, Equiv, None, |b| b.t(0), T::seq(T::One, b.t(0))),
        law!("seq-zero-left", 1, 0, Equiv, None, |b| T::Zero, T::seq(T::Zero, b.t(0))),
        law!(
            "seq-assoc",
            3,
            0,
            Equiv,
            None,
            |b| T::seq(b.t(0), T::seq(b.t(1), b.t(2))),
            T::seq(T::seq(b.t(0), b.t(1)), b.t(2))
        ),
        law!(
            "right-dist",
            3,
            0,
            Equiv,
            Some(W::RightDist),
            |b| T::seq(T::plus(b.t(0), b.t(1)), b.t(2)),
            T::plus(T::seq(b.t(0), b.t(2)), T::seq(b.t(1), b.t(2)))
        ),
        law!(
            "left-subdist",
            3,
            0,
            Leq,
            Some(W::LeftSubdist),
            |b| T::plus(T::seq(b.t(0), b.t(1)), T::seq(b.t(0), b.t(2))),
            T::seq(b.t(0), T::plus(b.t(1), b.t(2)))
        ),
        law!(
            "pc-dist",
            3,
            1,
            Equiv,
            Some(W::PcDist),
            |b| T::seq(T::pchoice(b.t(0), b.p(0), b.t(1)), b.t(2)),
            T::pchoice(T::seq(b.t(0), b.t(2)), b.p(0), T::seq(b.t(1), b.t(2)))
        ),
        law!(
            "pc-supdist",
            3,
            1,
            Leq,
            Some(W::PcSupdist),
            |b| T::seq(b.t(0), T::pchoice(b.t(1), b.p(0), b.t(2))),
            T::pchoice(T::seq(b.t(0), b.t(1)), b.p(0), T::seq(b.t(0), b.t(2)))
        ),
        law!(
            "star-unfold",
            1,
            0,
            Equiv,
            Some(W::StarUnfold),
            |b| T::star(b.t(0)),
            T::plus(T::One, T::seq(b.t(0), T::star(b.t(0))))
        ),
        Law {
            id: "star-induction",
            arity: 2,
            probs: 0,
            direction: Direction::Leq,
            witness: None,
            premise: Some((|b| T::seq(b.t(0), b.t(1)), |b| b.t(1))),
            lhs: |b| T::seq(T::star(b.t(0)), b.t(1)),
            rhs: |b| b.t(1),
        },
        law!("par-comm", 2, 0, Equiv, None, |b| b.par(b.t(0), b.t(1)), b.par(b.t(1), b.t(0))),
        law!(
            "par-assoc",
            3,
            0,
            Equiv,
            None,
            |b| b.par(b.t(0), b.par(b.t(1), b.t(2))),
            b.par(b.par(b.t(0), b.t(1)), b.t(2))
        ),
        law!(
            "interchange",
            4,
            0,
            Leq,
            Some(W::Interchange),
            |b| T::seq(b.par(b.t(0), b.t(1)), b.par(b.t(2), b.t(3))),
            b.par(T::seq(b.t(0), b.t(2)), T::seq(b.t(1), b.t(3)))
        ),
        law!(
            "par-subdist",
            3,
            0,
            Leq,
            None,
            |b| T::plus(b.par(b.t(0), b.t(1)), b.par(b.t(0), b.t(2))),
            b.par(b.t(0), T::plus(b.t(1), b.t(2)))
        ),
        law!(
            "par-pc-dist",
            3,
            1,
            Equiv,
            None,
            |b| T::pchoice(b.par(b.t(0), b.t(1)), b.p(0), b.par(b.t(0), b.t(2))),
            b.par(b.t(0), T::pchoice(b.t(1), b.p(0), b.t(2)))
        ),
        law!(
            "pc-le-plus",
            2,
            1,
            Leq,
            None,
            |b| T::pchoice(b.t(0), b.p(0), b.t(1)),
            T::plus(b.t(0), b.t(1))
        ),
    ]
}

pub fn find_law(id: &str) -> Result<Law> {
    law_registry()
        .into_iter()
        .find(|l| l.id == id)
        .ok_or_else(|| Error::UnknownLaw(id.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Witness,
    Search,
}

/// One checked direction of a law instance.
#[derive(Debug, Clone)]
pub struct DirectionCheck {
    /// `forward`, `backward`, or a step of a conditional law.
    pub direction: String,
    pub method: Method,
    pub result: CheckResult,
}

#[derive(Debug, Clone)]
pub struct LawReport {
    pub law: String,
    pub terms: Vec<Term>,
    pub probs: Vec<Prob>,
    pub seed: Option<u64>,
    pub index: usize,
    pub checks: Vec<DirectionCheck>,
    /// A conditional law whose hypothesis did not verify.
    pub premise_failed: bool,
}

impl LawReport {
    fn new(law: &str, b: &Bindings) -> Self {
        LawReport {
            law: law.into(),
            terms: b.terms.clone(),
            probs: b.probs.clone(),
            seed: None,
            index: 0,
            checks: Vec::new(),
            premise_failed: false,
        }
    }

    fn push(&mut self, direction: impl Into<String>, method: Method, result: CheckResult) {
        self.checks.push(DirectionCheck {
            direction: direction.into(),
            method,
            result,
        });
    }

    pub fn check(&self, direction: &str) -> Option<&DirectionCheck> {
        self.checks.iter().find(|c| c.direction == direction)
    }

    /// Conjunction of all checks. An instance with a failed hypothesis holds
    /// vacuously.
    pub fn verdict(&self) -> Verdict {
        if self.premise_failed {
            return Verdict::Verified;
        }
        self.checks
            .iter()
            .fold(Verdict::Verified, |v, c| v.and(c.result.verdict()))
    }

    /// Report lines `LAW id SEED n DIRECTION -> verdict`.
    pub fn lines(&self) -> Vec<String> {
        let seed = self.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        self.checks
            .iter()
            .map(|c| format!("LAW {} SEED {} {} {} -> {}", self.law, seed, self.index, c.direction, c.result.verdict()))
            .collect()
    }

    /// The instance as `lhs <= rhs` text.
    pub fn instance_text(&self) -> String {
        let terms: Vec<String> = self.terms.iter().map(|t| format!("({t})")).collect();
        let probs: Vec<String> = self.probs.iter().map(format_prob).collect();
        if probs.is_empty() {
            terms.join(" ")
        } else {
            format!("{} p={}", terms.join(" "), probs.join(","))
        }
    }
}

fn search(lhs: &ProbAutomaton, rhs: &ProbAutomaton, config: &SearchConfig) -> Result<CheckResult> {
    leq(lhs, rhs, *config)
}

fn verify(relation: &crate::relation::SimRelation, lhs: &ProbAutomaton, rhs: &ProbAutomaton, config: &SearchConfig) -> Result<CheckResult> {
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(rhs));
    verify_simulation(relation, lhs, rhs, horizon)
}

fn build_witness(kind: WitnessKind, b: &Bindings) -> Result<Witnessed> {
    let a: Vec<ProbAutomaton> = b.terms.iter().map(|t| compile(t, &b.alphabet)).collect::<Result<_>>()?;
    match kind {
        WitnessKind::RightDist => witness::right_dist(&a[0], &a[1], &a[2]),
        WitnessKind::LeftSubdist => witness::left_subdist(&a[0], &a[1], &a[2]),
        WitnessKind::PcDist => witness::pc_dist(&a[0], &b.p(0), &a[1], &a[2]),
        WitnessKind::PcSupdist => witness::pc_supdist(&a[0], &b.p(0), &a[1], &a[2]),
        WitnessKind::StarUnfold => witness::star_unfold(&a[0]),
        WitnessKind::Interchange => witness::interchange(&a[0], &a[1], &a[2], &a[3], &b.frame()),
    }
}

/// Checks one instance of a law, with its hand-proof relation when there is
/// one and by search otherwise.
pub fn check_law(id: &str, bindings: &Bindings, config: &SearchConfig) -> Result<LawReport> {
    let law = find_law(id)?;
    let b = law.complete(bindings)?;
    if law.is_conditional() {
        return check_star_induction(&b.t(0), &b.t(1), &b.alphabet, STAR_INDUCTION_DEPTH, config);
    }
    let mut report = LawReport::new(id, &b);
    match law.witness {
        Some(kind) => {
            let w = build_witness(kind, &b)?;
            report.push("forward", Method::Witness, verify(&w.forward, &w.lhs, &w.rhs, config)?);
            if law.direction == Direction::Equiv {
                let backward = w
                    .backward
                    .as_ref()
                    .ok_or_else(|| Error::Witness(format!("{id} has no converse relation")))?;
                report.push("backward", Method::Witness, verify(backward, &w.rhs, &w.lhs, config)?);
            }
        }
        None => {
            let lhs = compile(&law.lhs(&b), &b.alphabet)?;
            let rhs = compile(&law.rhs(&b), &b.alphabet)?;
            report.push("forward", Method::Search, search(&lhs, &rhs, config)?);
            if law.direction == Direction::Equiv {
                report.push("backward", Method::Search, search(&rhs, &lhs, config)?);
            }
        }
    }
    Ok(report)
}

/// Default bound on the star approximants checked for the induction law.
pub const STAR_INDUCTION_DEPTH: usize = 4;

/// The `k`-th approximant `F^k(0)` of `P*` with `F(X) = 1 + P·X`.
pub fn star_approximant(p: &Term, k: usize) -> Term {
    (0..k).fold(Term::Zero, |x, _| Term::plus(Term::One, Term::seq(p.clone(), x)))
}

/// Bounded induction: given `P·Q ≤ Q`, checks `F^k(0)·Q ≤ Q` for
/// `k = 1..=k_max` and then tries `P*·Q ≤ Q` directly.
pub fn check_star_induction(
    p: &Term,
    q: &Term,
    alphabet: &Arc<ActionAlphabet>,
    k_max: usize,
    config: &SearchConfig,
) -> Result<LawReport> {
    let b = Bindings::new(alphabet, vec![p.clone(), q.clone()]);
    let mut report = LawReport::new("star-induction", &b);
    let qa = compile(q, alphabet)?;
    let premise = search(&compile(&Term::seq(p.clone(), q.clone()), alphabet)?, &qa, config)?;
    let holds = premise.is_verified();
    report.push("premise", Method::Search, premise);
    if !holds {
        report.premise_failed = true;
        return Ok(report);
    }
    for k in 1..=k_max {
        let lhs = compile(&Term::seq(star_approximant(p, k), q.clone()), alphabet)?;
        report.push(format!("k={k}"), Method::Search, search(&lhs, &qa, config)?);
    }
    let lhs = compile(&Term::seq(Term::star(p.clone()), q.clone()), alphabet)?;
    report.push("direct", Method::Search, search(&lhs, &qa, config)?);
    Ok(report)
}

/// A law that fails, with the instance that shows it.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub claim: &'static str,
    pub alphabet: Arc<ActionAlphabet>,
    /// `holds` is below `fails`; the converse is the false claim.
    pub holds: Term,
    pub fails: Term,
}

#[derive(Debug, Clone)]
pub struct CatalogResult {
    pub id: &'static str,
    /// `holds ≤ fails`.
    pub true_direction: CheckResult,
    /// `fails ≤ holds`, expected to be refuted.
    pub false_direction: CheckResult,
}

pub fn counterexample_catalog() -> Vec<CatalogEntry> {
    let single = Arc::new(ActionAlphabet::new(["a"], Vec::<&str>::new()).expect("valid alphabet"));
    let abc = Arc::new(ActionAlphabet::new(["a", "b", "c"], Vec::<&str>::new()).expect("valid alphabet"));
    let frame = single.external_actions();
    let (a, b, c) = (Term::act("a"), Term::act("b"), Term::act("c"));
    vec![
        CatalogEntry {
            id: "interchange-eq",
            claim: "(P || Q) . (P' || Q') == P . P' || Q . Q'",
            alphabet: single.clone(),
            holds: Term::seq(
                Term::par(a.clone(), frame.clone(), Term::One),
                Term::par(Term::One, frame.clone(), a.clone()),
            ),
            fails: Term::par(a.clone(), frame, a.clone()),
        },
        CatalogEntry {
            id: "left-subdist-converse",
            claim: "P . (Q + R) <= P . Q + P . R",
            alphabet: abc.clone(),
            holds: Term::plus(Term::seq(a.clone(), b.clone()), Term::seq(a.clone(), c.clone())),
            fails: Term::seq(a.clone(), Term::plus(b.clone(), c.clone())),
        },
        CatalogEntry {
            id: "pc-supdist-converse",
            claim: "P . Q +[p] P . R <= P . (Q +[p] R)",
            alphabet: abc,
            holds: Term::seq(a.clone(), Term::pchoice(b.clone(), ratio(1, 2), c.clone())),
            fails: Term::pchoice(Term::seq(a.clone(), b), ratio(1, 2), Term::seq(a, c)),
        },
    ]
}

pub fn check_catalog_entry(entry: &CatalogEntry, config: &SearchConfig) -> Result<CatalogResult> {
    let holds = compile(&entry.holds, &entry.alphabet)?;
    let fails = compile(&entry.fails, &entry.alphabet)?;
    Ok(CatalogResult {
        id: entry.id,
        true_direction: find_simulation(&holds, &fails, *config)?,
        false_direction: find_simulation(&fails, &holds, *config)?,
    })
}

/// Terms whose law sides exceed this many states are redrawn.
pub const MAX_SIDE_STATES: usize = 150;
/// Depth of random operands.
pub const OPERAND_DEPTH: usize = 3;

/// Seed of the instance stream of one law, so that a law's instances do not
/// depend on which other laws run.
pub fn law_seed(seed: u64, id: &str) -> u64 {
    id.bytes()
        .fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn fits(law: &Law, b: &Bindings) -> bool {
    let sides = match law.premise {
        Some((pl, _)) => vec![pl(b), law.lhs(b)],
        None => vec![law.lhs(b), law.rhs(b)],
    };
    sides.iter().all(|t| {
        compile(t, &b.alphabet)
            .map(|a| a.reachable_states().len() <= MAX_SIDE_STATES)
            .unwrap_or(false)
    })
}

/// A random instance of `law`. Instances of the induction law mostly take
/// `Q = (P + R)*·T`, which satisfies the hypothesis.
pub fn sample_instance(law: &Law, generator: &mut TermGen) -> Bindings {
    loop {
        let mut terms: Vec<Term> = (0..law.arity).map(|_| generator.term(OPERAND_DEPTH)).collect();
        if law.is_conditional() && rand::Rng::gen_bool(generator.rng(), 0.8) {
            let r = generator.term(1);
            let t = generator.term(1);
            terms[1] = Term::seq(Term::star(Term::plus(terms[0].clone(), r)), t);
        }
        let probs = (0..law.probs).map(|_| generator.prob()).collect();
        let b = Bindings::new(generator.alphabet(), terms).with_probs(probs);
        if fits(law, &b) {
            return b;
        }
    }
}

/// Reports of a law-suite run, ordered by law and instance.
#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub seed: u64,
    pub reports: Vec<LawReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub verified: usize,
    pub refuted: usize,
    pub inconclusive: usize,
}

impl Tally {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Verified => self.verified += 1,
            Verdict::Refuted => self.refuted += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
        }
    }
}

impl SuiteReport {
    /// Verdict counts over the checked directions of the named laws, or of
    /// all laws. Vacuous instances are left out.
    pub fn tally(&self, laws: Option<&[&str]>) -> Tally {
        let mut tally = Tally::default();
        for r in &self.reports {
            if r.premise_failed || laws.is_some_and(|ids| !ids.contains(&r.law.as_str())) {
                continue;
            }
            for c in &r.checks {
                tally.add(c.result.verdict());
            }
        }
        tally
    }

    pub fn lines(&self) -> Vec<String> {
        self.reports.iter().flat_map(LawReport::lines).collect()
    }

    /// `key=value` summary lines.
    pub fn summary(&self) -> String {
        let t = self.tally(None);
        let laws: BTreeSet<&str> = self.reports.iter().map(|r| r.law.as_str()).collect();
        let vacuous = self.reports.iter().filter(|r| r.premise_failed).count();
        format!(
            "seed={}\nlaws={}\ninstances={}\nchecks={}\nverified={}\nrefuted={}\ninconclusive={}\nvacuous={}\n",
            self.seed,
            laws.len(),
            self.reports.len(),
            t.verified + t.refuted + t.inconclusive,
            t.verified,
            t.refuted,
            t.inconclusive,
            vacuous
        )
    }
}

/// Runs `count` random instances of each selected law.
pub fn run_suite(laws: &[Law], seed: u64, count: usize, config: &SearchConfig) -> Result<SuiteReport> {
    let alphabet = random_alphabet();
    let mut suite = SuiteReport {
        seed,
        reports: Vec::new(),
    };
    for law in laws {
        let mut generator = TermGen::new(law_seed(seed, law.id), &alphabet);
        for index in 0..count {
            let b = sample_instance(law, &mut generator);
            let mut report = check_law(law.id, &b, config)?;
            report.seed = Some(seed);
            report.index = index;
            suite.reports.push(report);
        }
    }
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn abc() -> Arc<ActionAlphabet> {
        Arc::new(ActionAlphabet::new(["a", "b", "c"], Vec::<&str>::new()).unwrap())
    }

    fn terms(sigma: &Arc<ActionAlphabet>, texts: &[&str]) -> Vec<Term> {
        texts.iter().map(|t| parse_term(t, sigma).unwrap()).collect()
    }

    #[test]
    fn registry_is_complete_and_unique() {
        let laws = law_registry();
        assert_eq!(laws.len(), 23);
        let ids: BTreeSet<&str> = laws.iter().map(|l| l.id).collect();
        assert_eq!(ids.len(), 23);
        assert!(matches!(find_law("nope"), Err(Error::UnknownLaw(_))));
    }

    #[test]
    fn assoc_parameters() {
        assert_eq!(pc_assoc_params(&ratio(1, 5), &ratio(1, 4)), (ratio(1, 2), ratio(2, 5)));
        assert_eq!(pc_assoc_params(&Prob::zero(), &Prob::zero()), (Prob::zero(), Prob::zero()));
    }

    #[test]
    fn arity_is_checked() {
        let b = Bindings::new(&abc(), terms(&abc(), &["a"]));
        assert!(matches!(check_law("plus-comm", &b, &SearchConfig::default()), Err(Error::Arity { .. })));
    }

    #[test]
    fn distribution_over_probabilistic_choice() {
        let sigma = abc();
        let b = Bindings::new(&sigma, terms(&sigma, &["a", "b", "c"])).with_probs(vec![ratio(1, 2)]);
        let report = check_law("pc-dist", &b, &SearchConfig::default()).unwrap();
        assert_eq!(report.checks.len(), 2);
        assert_eq!(report.verdict(), Verdict::Verified);
        let b = Bindings::new(&sigma, terms(&sigma, &["a . b"]));
        let report = check_law("star-unfold", &b, &SearchConfig::default()).unwrap();
        assert_eq!(report.verdict(), Verdict::Verified);
        assert!(report.checks.iter().all(|c| c.method == Method::Witness));
    }

    #[test]
    fn searched_laws() {
        let sigma = abc();
        for (id, texts) in [
            ("plus-comm", vec!["a", "b . c"]),
            ("pc-assoc", vec!["a", "b", "c"]),
            ("par-comm", vec!["a . b", "a + b"]),
            ("pc-le-plus", vec!["a", "b"]),
        ] {
            let b = Bindings::new(&sigma, terms(&sigma, &texts));
            let report = check_law(id, &b, &SearchConfig::default()).unwrap();
            assert_eq!(report.verdict(), Verdict::Verified, "{id}");
        }
    }

    #[test]
    fn induction_premise_gates_the_conclusion() {
        let sigma = abc();
        let a = Term::act("a");
        let report = check_star_induction(&a, &Term::star(a.clone()), &sigma, 4, &SearchConfig::default()).unwrap();
        assert_eq!(report.checks.len(), 6);
        assert_eq!(report.verdict(), Verdict::Verified);
        let report = check_star_induction(&a, &Term::act("b"), &sigma, 4, &SearchConfig::default()).unwrap();
        assert!(report.premise_failed);
        assert_eq!(report.checks.len(), 1);
    }

    #[test]
    fn catalog_refutes_the_converses() {
        for entry in counterexample_catalog() {
            let r = check_catalog_entry(&entry, &SearchConfig::default()).unwrap();
            assert!(r.true_direction.is_verified(), "{}", entry.id);
            assert!(r.false_direction.is_refuted(), "{}", entry.id);
        }
    }

    #[test]
    fn report_lines() {
        let sigma = abc();
        let b = Bindings::new(&sigma, terms(&sigma, &["a", "b"]));
        let mut report = check_law("plus-comm", &b, &SearchConfig::default()).unwrap();
        report.seed = Some(42);
        report.index = 3;
        assert_eq!(
            report.lines(),
            vec!["LAW plus-comm SEED 42 3 forward -> Verified", "LAW plus-comm SEED 42 3 backward -> Verified"]
        );
    }
}
