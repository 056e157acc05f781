//! Weak probabilistic simulations: checking a candidate relation against the
//! simulation and forward-simulation definitions, converting certificates
//! between them, searching for a simulation, and the induced preorder.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::alphabet::Action;
use crate::automaton::{ProbAutomaton, StateId};
use crate::dist::{flatten, Dist, DistOfDists, Prob};
use crate::error::Result;
use crate::lift::{check_double_lift, check_lift, double_lift_onto, LiftWitness};
use crate::lp::{Affine, LinearProgram, LpOutcome};
use crate::ops;
use crate::relation::SimRelation;
use crate::support::{compatibility, Compat};
use crate::weak::{solve_finite, solve_move, weak_action_with, Derivation, Mode, MoveBuilder, Target, WeakResult};

/// Default limit on the proof obligations a search may examine.
pub const DEFAULT_BUDGET: usize = 10_000;

/// Default step bound for weak moves into `q`.
pub fn default_horizon(q: &ProbAutomaton) -> usize {
    2 * q.state_count().max(1)
}

/// One proof obligation of the simulation definition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Clause {
    /// The initial distributions are matched.
    Initial,
    /// `x -a-> μ′` (transition index of the left automaton) is matched from `simulating`.
    Step {
        state: StateId,
        simulating: Dist,
        transition: usize,
    },
    /// Final state `x` is matched by reaching final states from `simulating`.
    Final { state: StateId, simulating: Dist },
    /// A reachable state with no related distribution.
    Totality { state: StateId },
}

impl Clause {
    /// Renders the clause with state labels of both automata.
    pub fn describe(&self, p: &ProbAutomaton, q: &ProbAutomaton) -> String {
        match self {
            Clause::Initial => "initial distributions".to_string(),
            Clause::Step {
                state,
                simulating,
                transition,
            } => {
                let t = p.transition(*transition);
                format!(
                    "pair {} ~ {} under {} -{}-> {}",
                    p.label(*state),
                    q.format_dist(simulating),
                    p.label(t.source),
                    t.action,
                    p.format_dist(&t.target)
                )
            }
            Clause::Final { state, simulating } => {
                format!("final state {} ~ {}", p.label(*state), q.format_dist(simulating))
            }
            Clause::Totality { state } => format!("reachable state {} is unrelated", p.label(*state)),
        }
    }
}

/// A discharged obligation: the weak move found and the lifting of the
/// matched successor onto its end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discharge {
    pub clause: Clause,
    pub derivation: Derivation,
    pub lift: Option<LiftWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub relation: SimRelation,
    pub discharges: Vec<Discharge>,
}

/// A discharged forward-simulation obligation, with `ψ` in place of a
/// lifting decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardDischarge {
    pub clause: Clause,
    pub derivation: Derivation,
    pub psi: Option<DistOfDists>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardCertificate {
    pub relation: SimRelation,
    pub discharges: Vec<ForwardDischarge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Verified,
    Refuted,
    Inconclusive,
}

impl Verdict {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Refuted => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Conjunction: refutation dominates, then inconclusiveness.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Refuted, _) | (_, Verdict::Refuted) => Verdict::Refuted,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Verified,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Verified => "Verified",
            Verdict::Refuted => "Refuted",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckResult<C = Certificate> {
    Verified(C),
    /// A definitive failure: no choice of weak moves can discharge `clause`.
    Refuted { clause: Clause, reason: String },
    /// Horizon or budget ran out before a decision.
    Inconclusive(String),
}

impl<C> CheckResult<C> {
    pub fn verdict(&self) -> Verdict {
        match self {
            CheckResult::Verified(_) => Verdict::Verified,
            CheckResult::Refuted { .. } => Verdict::Refuted,
            CheckResult::Inconclusive(_) => Verdict::Inconclusive,
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, CheckResult::Verified(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, CheckResult::Refuted { .. })
    }

    pub fn certificate(&self) -> Option<&C> {
        match self {
            CheckResult::Verified(c) => Some(c),
            _ => None,
        }
    }
}

fn obligations(relation: &SimRelation, p: &ProbAutomaton) -> Vec<Clause> {
    let mut out = vec![Clause::Initial];
    for (x, nu) in relation.iter() {
        for &i in p.outgoing(x) {
            out.push(Clause::Step {
                state: x,
                simulating: nu.clone(),
                transition: i,
            });
        }
        if p.is_final(x) {
            out.push(Clause::Final {
                state: x,
                simulating: nu.clone(),
            });
        }
    }
    out
}

fn totality(relation: &SimRelation, p: &ProbAutomaton) -> Option<Clause> {
    p.reachable_states()
        .into_iter()
        .find(|x| relation.image(*x).next().is_none())
        .map(|state| Clause::Totality { state })
}

/// Left-hand source, right-hand start and label of a weak-move obligation.
fn move_of<'a>(clause: &'a Clause, p: &'a ProbAutomaton, q: &'a ProbAutomaton) -> (Option<&'a Dist>, &'a Dist, Action) {
    match clause {
        Clause::Initial => (Some(p.initial()), q.initial(), Action::Tau),
        Clause::Step {
            simulating, transition, ..
        } => {
            let t = p.transition(*transition);
            (Some(&t.target), simulating, t.action.clone())
        }
        Clause::Final { simulating, .. } => (None, simulating, Action::Tau),
        Clause::Totality { .. } => unreachable!("totality has no weak move"),
    }
}

enum Failure {
    Refuted(String),
    Inconclusive(String),
}

fn discharge(
    builder: &MoveBuilder<'_>,
    relation: &SimRelation,
    p: &ProbAutomaton,
    clause: &Clause,
    horizon: usize,
) -> std::result::Result<Derivation, Failure> {
    let q = builder.automaton();
    let (source, from, action) = move_of(clause, p, q);
    let target = match source {
        Some(source) => Target::LiftOf { relation, source },
        None => Target::Within(q.finals()),
    };
    match weak_action_with(builder, from, &action, target, horizon) {
        WeakResult::Reached(d) => Ok(d),
        WeakResult::Unreachable => Err(Failure::Refuted(match clause {
            Clause::Initial => "no weak move from the right initial distribution reaches a lifting of the left one".into(),
            Clause::Final { .. } => "the simulating distribution cannot reach final states".into(),
            _ => format!("no weak {action}-move from the simulating distribution reaches a lifting of the successor"),
        })),
        WeakResult::HorizonExhausted => Err(Failure::Inconclusive(format!(
            "horizon {horizon} exhausted while matching {}",
            clause.describe(p, q)
        ))),
    }
}

fn check_derivation(clause: &Clause, d: &Derivation, p: &ProbAutomaton, q: &ProbAutomaton) -> std::result::Result<(), String> {
    let (_, from, action) = move_of(clause, p, q);
    if d.start != *from {
        return Err("derivation starts elsewhere".into());
    }
    match (&d.visible, q.is_unobservable(&action)) {
        (None, true) => {}
        (Some((a, _)), false) if *a == action => {}
        _ => return Err(format!("derivation does not match label {action}")),
    }
    d.replay(q)
}

/// Re-validates a certificate without trusting the solver: obligations are
/// recomputed, derivations replayed and liftings re-summed.
pub fn check_certificate(cert: &Certificate, p: &ProbAutomaton, q: &ProbAutomaton) -> std::result::Result<(), String> {
    if let Some(c) = totality(&cert.relation, p) {
        return Err(c.describe(p, q));
    }
    let expected = obligations(&cert.relation, p);
    if expected.len() != cert.discharges.len() || expected.iter().zip(&cert.discharges).any(|(c, d)| *c != d.clause) {
        return Err("certificate does not discharge exactly the obligations of its relation".into());
    }
    for d in &cert.discharges {
        let fail = |m: String| format!("{}: {m}", d.clause.describe(p, q));
        check_derivation(&d.clause, &d.derivation, p, q).map_err(fail)?;
        match (move_of(&d.clause, p, q).0, &d.lift) {
            (Some(mu), Some(w)) => {
                if !w.validate(&cert.relation, mu, &d.derivation.end) {
                    return Err(fail("lifting does not re-sum".into()));
                }
            }
            (None, None) => {
                if d.derivation.end.support().any(|y| !q.is_final(y)) {
                    return Err(fail("mass left outside final states".into()));
                }
            }
            _ => return Err(fail("wrong witness kind".into())),
        }
    }
    Ok(())
}

/// Checks the forward-simulation identities: `μ′ S̿ ψ` and `π(ψ) = ν′`.
pub fn check_forward_certificate(
    cert: &ForwardCertificate,
    p: &ProbAutomaton,
    q: &ProbAutomaton,
) -> std::result::Result<(), String> {
    if let Some(c) = totality(&cert.relation, p) {
        return Err(c.describe(p, q));
    }
    let expected = obligations(&cert.relation, p);
    if expected.len() != cert.discharges.len() || expected.iter().zip(&cert.discharges).any(|(c, d)| *c != d.clause) {
        return Err("certificate does not discharge exactly the obligations of its relation".into());
    }
    for d in &cert.discharges {
        let fail = |m: &str| format!("{}: {m}", d.clause.describe(p, q));
        check_derivation(&d.clause, &d.derivation, p, q).map_err(|m| fail(&m))?;
        match (move_of(&d.clause, p, q).0, &d.psi) {
            (Some(mu), Some(psi)) => {
                if check_double_lift(&cert.relation, mu, psi).is_none() {
                    return Err(fail("successor is not double-lifted onto psi"));
                }
                if flatten(psi) != d.derivation.end {
                    return Err(fail("psi does not flatten to the reached distribution"));
                }
            }
            (None, None) => {
                if d.derivation.end.support().any(|y| !q.is_final(y)) {
                    return Err(fail("mass left outside final states"));
                }
            }
            _ => return Err(fail("wrong witness kind")),
        }
    }
    Ok(())
}

fn run_obligations(
    relation: &SimRelation,
    p: &ProbAutomaton,
    q: &ProbAutomaton,
    horizon: usize,
) -> Result<std::result::Result<Vec<(Clause, Derivation)>, CheckResult<()>>> {
    ops::check_alphabets(p, q)?;
    relation.validate(p, q)?;
    if let Some(clause) = totality(relation, p) {
        return Ok(Err(CheckResult::Refuted {
            clause,
            reason: "a reachable state has no related distribution".into(),
        }));
    }
    let builder = MoveBuilder::new(q);
    let mut done = Vec::new();
    let mut inconclusive = None;
    for clause in obligations(relation, p) {
        match discharge(&builder, relation, p, &clause, horizon) {
            Ok(d) => done.push((clause, d)),
            Err(Failure::Refuted(reason)) => return Ok(Err(CheckResult::Refuted { clause, reason })),
            Err(Failure::Inconclusive(m)) => {
                inconclusive.get_or_insert(m);
            }
        }
    }
    Ok(match inconclusive {
        Some(m) => Err(CheckResult::Inconclusive(m)),
        None => Ok(done),
    })
}

fn recast<A, B>(r: CheckResult<A>) -> CheckResult<B> {
    match r {
        CheckResult::Verified(_) => unreachable!("only failures are recast"),
        CheckResult::Refuted { clause, reason } => CheckResult::Refuted { clause, reason },
        CheckResult::Inconclusive(m) => CheckResult::Inconclusive(m),
    }
}

/// Checks that `relation` is a simulation from `p` to `q`.
pub fn verify_simulation(relation: &SimRelation, p: &ProbAutomaton, q: &ProbAutomaton, horizon: usize) -> Result<CheckResult> {
    let done = match run_obligations(relation, p, q, horizon)? {
        Ok(done) => done,
        Err(fail) => return Ok(recast(fail)),
    };
    let mut discharges = Vec::with_capacity(done.len());
    for (clause, derivation) in done {
        let lift = match move_of(&clause, p, q).0 {
            Some(mu) => match check_lift(relation, mu, &derivation.end) {
                Some(w) => Some(w),
                None => return Ok(CheckResult::Inconclusive("reached distribution lost its lifting".into())),
            },
            None => None,
        };
        discharges.push(Discharge {
            clause,
            derivation,
            lift,
        });
    }
    let cert = Certificate {
        relation: relation.clone(),
        discharges,
    };
    Ok(match check_certificate(&cert, p, q) {
        Ok(()) => CheckResult::Verified(cert),
        Err(m) => CheckResult::Inconclusive(format!("certificate failed revalidation: {m}")),
    })
}

/// Checks that `relation` is a forward simulation from `p` to `q`, choosing
/// each `ψ` among distributions over the distributions of the relation.
pub fn verify_forward_simulation(
    relation: &SimRelation,
    p: &ProbAutomaton,
    q: &ProbAutomaton,
    horizon: usize,
) -> Result<CheckResult<ForwardCertificate>> {
    let done = match run_obligations(relation, p, q, horizon)? {
        Ok(done) => done,
        Err(fail) => return Ok(recast(fail)),
    };
    let mut discharges = Vec::with_capacity(done.len());
    for (clause, derivation) in done {
        let psi = match move_of(&clause, p, q).0 {
            Some(mu) => match double_lift_onto(relation, mu, &derivation.end) {
                Some((psi, _)) => Some(psi),
                None => return Ok(CheckResult::Inconclusive("no psi over the relation's distributions".into())),
            },
            None => None,
        };
        discharges.push(ForwardDischarge { clause, derivation, psi });
    }
    let cert = ForwardCertificate {
        relation: relation.clone(),
        discharges,
    };
    Ok(match check_forward_certificate(&cert, p, q) {
        Ok(()) => CheckResult::Verified(cert),
        Err(m) => CheckResult::Inconclusive(format!("certificate failed revalidation: {m}")),
    })
}

/// Turns each lifting decomposition `Σ pₙ·(xₙ, νₙ)` into `ψ = Σ pₙ·δ(νₙ)`.
pub fn forward_witness_from_sim(cert: &Certificate) -> ForwardCertificate {
    ForwardCertificate {
        relation: cert.relation.clone(),
        discharges: cert
            .discharges
            .iter()
            .map(|d| ForwardDischarge {
                clause: d.clause.clone(),
                derivation: d.derivation.clone(),
                psi: d.lift.as_ref().map(LiftWitness::to_outer),
            })
            .collect(),
    }
}

/// Composes a relation from P to Q with one from Q to R: every `(x, ν)`
/// yields `Σ ν(y)·ρ_y` for each choice of `ρ_y` related to `y`. At most
/// `cap` choices are taken per pair.
pub fn compose(first: &SimRelation, second: &SimRelation, cap: usize) -> SimRelation {
    let mut out = SimRelation::new();
    for (x, nu) in first.iter() {
        let options: Vec<(StateId, &Prob, Vec<&Dist>)> =
            nu.iter().map(|(y, p)| (y, p, second.image(y).collect())).collect();
        if options.iter().any(|(_, _, o)| o.is_empty()) {
            continue;
        }
        let mut index = vec![0usize; options.len()];
        for _ in 0..cap {
            let parts = options
                .iter()
                .zip(&index)
                .flat_map(|((_, p, o), i)| o[*i].iter().map(move |(z, w)| (z, w * *p)));
            out.insert(x, Dist::from_weights(parts).expect("convex combination"));
            let mut k = 0;
            while k < index.len() {
                index[k] += 1;
                if index[k] < options[k].2.len() {
                    break;
                }
                index[k] = 0;
                k += 1;
            }
            if k == index.len() {
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Step bound for weak moves; `None` means [`default_horizon`].
    pub horizon: Option<usize>,
    /// Maximum number of proof obligations examined and repaired.
    pub budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            horizon: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Searches for a simulation from `p` to `q`.
///
/// Candidate pairs relate each state to point distributions and to
/// distributions already present in `q`; a greatest fixpoint discards pairs
/// whose obligations cannot be met inside the candidate set. Each failing
/// obligation is repaired once per round by an LP that may use fresh
/// distributions over compatible states, and the distributions it picks
/// join the candidates for the next round. A repair that is infeasible even
/// with fresh distributions kills the pair for good; the same holds for a
/// bounded obligation tree rooted at the initial clause, whose infeasibility
/// refutes `p ≤ q`.
pub fn find_simulation(p: &ProbAutomaton, q: &ProbAutomaton, config: SearchConfig) -> Result<CheckResult> {
    ops::check_alphabets(p, q)?;
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(q));
    let mut search = Search::new(p, q, config.budget, horizon);
    let outcome = search.run(horizon);
    Ok(match outcome {
        Ok(Found::Relation(relation)) => verify_simulation(&relation, p, q, horizon)?,
        Ok(Found::Refuted(clause, reason)) => CheckResult::Refuted { clause, reason },
        Ok(Found::Nothing(m)) => CheckResult::Inconclusive(m),
        Err(OutOfBudget) => CheckResult::Inconclusive(format!("budget of {} obligations exhausted", config.budget)),
    })
}

/// `p ≤ q`, decided on reachable parts.
pub fn leq(p: &ProbAutomaton, q: &ProbAutomaton, config: SearchConfig) -> Result<CheckResult> {
    find_simulation(&ops::reachable(p), &ops::reachable(q), config)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub forward: CheckResult,
    pub backward: CheckResult,
}

impl Equivalence {
    pub fn verdict(&self) -> Verdict {
        self.forward.verdict().and(self.backward.verdict())
    }
}

/// `p ≤ q` and `q ≤ p`.
pub fn equiv(p: &ProbAutomaton, q: &ProbAutomaton, config: SearchConfig) -> Result<Equivalence> {
    Ok(Equivalence {
        forward: leq(p, q, config)?,
        backward: leq(q, p, config)?,
    })
}

/// `p ≤ q` through the natural order `p + q ≡ q`.
pub fn leq_via_plus(p: &ProbAutomaton, q: &ProbAutomaton, config: SearchConfig) -> Result<Verdict> {
    let sum = ops::plus(p, q)?;
    Ok(equiv(&sum, q, config)?.verdict())
}

struct OutOfBudget;

enum Found {
    Relation(SimRelation),
    Refuted(Clause, String),
    Nothing(String),
}

const REFUTATION_DEPTH: usize = 3;
const SEARCH_LAYERS: usize = 8;
const TREE_NODE_CAP: usize = 24;

type Pair = (StateId, Dist);
type Obligation = (StateId, Dist, usize);

struct Search<'a> {
    p: &'a ProbAutomaton,
    q: &'a ProbAutomaton,
    builder: MoveBuilder<'a>,
    budget: usize,
    spent: usize,
    /// Depth bound for the derivations the search accepts.
    layers: usize,
    states: BTreeSet<StateId>,
    compat: Compat,
    candidates: SimRelation,
    /// Pairs belonging to no simulation at all.
    dead: SimRelation,
    alive: SimRelation,
    /// Pairs used by the last successful lifting of each obligation.
    cache: BTreeMap<Obligation, Vec<Pair>>,
    expanded: BTreeSet<Obligation>,
    /// Obligations looked at so far; each counts once against the budget.
    examined: BTreeSet<Obligation>,
}

impl<'a> Search<'a> {
    fn new(p: &'a ProbAutomaton, q: &'a ProbAutomaton, budget: usize, horizon: usize) -> Self {
        let builder = MoveBuilder::new(q);
        let states = p.reachable_states();
        let compat = compatibility(p, &states, &builder);
        Search {
            p,
            q,
            builder,
            budget,
            spent: 0,
            layers: horizon.min(SEARCH_LAYERS),
            states,
            compat,
            candidates: SimRelation::new(),
            dead: SimRelation::new(),
            alive: SimRelation::new(),
            cache: BTreeMap::new(),
            expanded: BTreeSet::new(),
            examined: BTreeSet::new(),
        }
    }

    fn spend(&mut self) -> std::result::Result<(), OutOfBudget> {
        if self.spent >= self.budget {
            return Err(OutOfBudget);
        }
        self.spent += 1;
        Ok(())
    }

    fn compatible(&self, x: StateId, d: &Dist) -> bool {
        d.support().all(|y| self.compat[&x].contains(&y))
    }

    fn run(&mut self, horizon: usize) -> std::result::Result<Found, OutOfBudget> {
        let points: SimRelation = self
            .states
            .iter()
            .flat_map(|x| self.compat[x].iter().map(|y| (*x, Dist::point(*y))))
            .collect();
        self.spend()?;
        let coupled = solve_move(
            &self.builder,
            self.q.initial(),
            &Action::Tau,
            Target::LiftOf {
                relation: &points,
                source: self.p.initial(),
            },
            Mode::Occupancy,
        );
        if coupled.is_none() {
            return Ok(Found::Refuted(
                Clause::Initial,
                "no weak move from the right initial distribution couples with the left one".into(),
            ));
        }
        if let Some(x) = self.states.iter().find(|x| self.compat[*x].is_empty()) {
            return Ok(Found::Refuted(
                Clause::Totality { state: *x },
                "no state of the right automaton can simulate this reachable state".into(),
            ));
        }
        self.candidates = points;
        let mut seeds: BTreeSet<&Dist> = self.q.transitions().iter().map(|t| &t.target).collect();
        seeds.insert(self.q.initial());
        for x in self.states.clone() {
            for d in &seeds {
                if self.compatible(x, d) {
                    self.candidates.insert(x, (*d).clone());
                }
            }
        }
        let mut last = String::from("no candidate relation survived");
        loop {
            let before = self.candidates.len();
            self.expanded.clear();
            self.alive = self.candidates.clone();
            for (x, d) in self.dead.iter() {
                self.alive.remove(x, d);
            }
            match self.local()? {
                Some(roots) => {
                    let relation = self.closure(roots);
                    match verify_simulation(&relation, self.p, self.q, horizon) {
                        Ok(CheckResult::Verified(_)) => return Ok(Found::Relation(relation)),
                        Ok(CheckResult::Inconclusive(m)) => last = m,
                        Ok(CheckResult::Refuted { reason, .. }) => last = reason,
                        Err(e) => last = e.to_string(),
                    }
                }
                None => {
                    self.spend()?;
                    let fresh = self.expand(self.q.initial(), &Action::Tau, self.p.initial());
                    match fresh {
                        None => {
                            return Ok(Found::Refuted(
                                Clause::Initial,
                                "no distribution over compatible states matches the initial clause".into(),
                            ))
                        }
                        Some(fresh) => self.adopt(fresh),
                    }
                }
            }
            if self.candidates.len() == before {
                break;
            }
        }
        for depth in 1..=REFUTATION_DEPTH {
            self.spend()?;
            if !self.tree_feasible(depth) {
                return Ok(Found::Refuted(
                    Clause::Initial,
                    format!("the obligation tree of depth {depth} has no solution"),
                ));
            }
        }
        Ok(Found::Nothing(last))
    }

    fn adopt(&mut self, fresh: Vec<Pair>) {
        for (x, d) in fresh {
            if !self.dead.contains(x, &d) {
                self.candidates.insert(x, d);
            }
        }
    }

    /// Checks the pairs reachable from the initial match, on demand. A pair
    /// whose obligation fails inside the surviving set is removed and the
    /// walk restarts from the root; its obligation is expanded once per
    /// round, fresh distributions becoming candidates and an infeasible
    /// expansion killing the pair for good. Returns the roots of a closed
    /// set of checked pairs, or `None` once the initial clause fails.
    fn local(&mut self) -> std::result::Result<Option<Vec<Pair>>, OutOfBudget> {
        'restart: loop {
            let Some(roots) = self.initial_match()? else { return Ok(None) };
            let mut seen = SimRelation::new();
            let mut stack = roots.clone();
            while let Some((x, nu)) = stack.pop() {
                if !seen.insert(x, nu.clone()) {
                    continue;
                }
                for &i in self.p.outgoing(x) {
                    let key = (x, nu.clone(), i);
                    if let Some(deps) = self.cache.get(&key) {
                        if deps.iter().all(|(x2, d)| self.alive.contains(*x2, d)) {
                            stack.extend(deps.iter().cloned());
                            continue;
                        }
                    }
                    if self.examined.insert(key.clone()) {
                        self.spend()?;
                    }
                    let t = self.p.transition(i);
                    let solved = solve_finite(
                        &self.builder,
                        &nu,
                        &t.action,
                        Target::LiftOf {
                            relation: &self.alive,
                            source: &t.target,
                        },
                        self.layers,
                    );
                    if let Some(s) = solved {
                        let deps: Vec<Pair> = s.lift.expect("lift target").witness(&s.values).rows.into_iter().map(|r| (r.state, r.dist)).collect();
                        stack.extend(deps.iter().cloned());
                        self.cache.insert(key, deps);
                        continue;
                    }
                    self.cache.remove(&key);
                    self.alive.remove(x, &nu);
                    if self.expanded.insert(key) {
                        self.spend()?;
                        match self.expand(&nu, &t.action, &t.target) {
                            None => {
                                self.dead.insert(x, nu.clone());
                            }
                            Some(fresh) => self.adopt(fresh),
                        }
                    }
                    continue 'restart;
                }
            }
            return Ok(Some(roots));
        }
    }

    /// One-level repair of a failing obligation `from ⟹a · S̄⁻¹ source`:
    /// successors may use surviving candidates or fresh distributions over
    /// compatible states. Returns the fresh distributions used, or `None`
    /// when even fresh distributions cannot help.
    fn expand(&self, from: &Dist, action: &Action, source: &Dist) -> Option<Vec<Pair>> {
        let mut lp = LinearProgram::new();
        let start = from.iter().map(|(y, p)| (y, Affine::constant(p.clone()))).collect();
        let end: BTreeSet<StateId> = source.support().flat_map(|x| self.compat[&x].iter().copied()).collect();
        let mv = self.builder.build(&mut lp, &start, action, &end, Mode::Occupancy);
        let mut balance: BTreeMap<StateId, Affine> = mv.end().iter().map(|(y, v)| (*y, Affine::var(*v))).collect();
        let mut parts = Vec::new();
        for (x, p) in source.iter() {
            let mut row = Affine::constant(-p);
            let mut reused = Vec::new();
            for nu in self.alive.image(x) {
                let l = lp.add_var(Prob::one());
                row.add_term(l, Prob::one());
                for (y, w) in nu.iter() {
                    balance.entry(y).or_default().add_term(l, -w);
                }
                reused.push((l, nu));
            }
            let mut vector = Vec::new();
            for y in &self.compat[&x] {
                let c = lp.add_var(Prob::from_integer(16.into()));
                row.add_term(c, Prob::one());
                balance.entry(*y).or_default().add_term(c, -Prob::one());
                vector.push((*y, c));
            }
            lp.add_zero(row);
            parts.push((x, reused, vector));
        }
        for (_, e) in balance {
            lp.add_zero(e);
        }
        let LpOutcome::Optimal { values, .. } = lp.solve() else { return None };
        // A valid mixture need not split into valid parts, so besides the
        // fresh share alone the whole mass assigned to `x` is proposed too.
        let mut out = Vec::new();
        for (x, reused, vector) in parts {
            let fresh: Vec<(StateId, Prob)> = vector
                .iter()
                .filter(|(_, c)| values[*c].is_positive())
                .map(|(y, c)| (*y, values[*c].clone()))
                .collect();
            if fresh.is_empty() {
                continue;
            }
            let mut whole: BTreeMap<StateId, Prob> = fresh.iter().cloned().collect();
            for (l, nu) in reused {
                if values[l].is_positive() {
                    for (y, w) in nu.iter() {
                        *whole.entry(y).or_insert_with(Prob::zero) += &values[l] * w;
                    }
                }
            }
            out.push((x, Dist::normalized(fresh).expect("positive mass")));
            out.push((x, Dist::normalized(whole).expect("positive mass")));
        }
        Some(out)
    }

    fn initial_match(&mut self) -> std::result::Result<Option<Vec<Pair>>, OutOfBudget> {
        let solved = solve_finite(
            &self.builder,
            self.q.initial(),
            &Action::Tau,
            Target::LiftOf {
                relation: &self.alive,
                source: self.p.initial(),
            },
            self.layers,
        );
        Ok(solved.map(|s| {
            let rows = s.lift.expect("lift target").witness(&s.values).rows;
            rows.into_iter().map(|r| (r.state, r.dist)).collect()
        }))
    }

    /// Pairs reachable from `roots` through the cached liftings.
    fn closure(&self, roots: Vec<Pair>) -> SimRelation {
        let mut relation = SimRelation::new();
        let mut stack = roots;
        while let Some((x, d)) = stack.pop() {
            if !relation.insert(x, d.clone()) {
                continue;
            }
            for &i in self.p.outgoing(x) {
                if let Some(deps) = self.cache.get(&(x, d.clone(), i)) {
                    stack.extend(deps.iter().cloned());
                }
            }
        }
        relation
    }

    /// Solves the obligation tree of the given depth. Each node may reuse
    /// surviving candidates or introduce a fresh simulating vector; fresh
    /// vectors above the depth limit carry their own obligations, those at
    /// the limit are unconstrained. Returns the normalised fresh vectors, or
    /// `None` when the tree is infeasible.
    fn tree_feasible(&self, depth_limit: usize) -> bool {
        struct Node {
            state: StateId,
            mass: Affine,
            depth: usize,
            obligation: usize,
        }
        let reuse_cost = Prob::one();
        let fresh_cost = Prob::from_integer(16.into());
        let leaf_cost = Prob::from_integer(64.into());
        let mut lp = LinearProgram::new();
        let mut balances: Vec<BTreeMap<StateId, Affine>> = Vec::new();
        let mut queue = VecDeque::new();
        let union = |targets: &mut dyn Iterator<Item = StateId>| -> BTreeSet<StateId> {
            targets.flat_map(|x| self.compat[&x].iter().copied()).collect()
        };
        let start = self.q.initial().iter().map(|(y, p)| (y, Affine::constant(p.clone()))).collect();
        let end = union(&mut self.p.initial().support());
        let root = self.builder.build(&mut lp, &start, &Action::Tau, &end, Mode::Occupancy);
        balances.push(root.end().iter().map(|(y, v)| (*y, Affine::var(*v))).collect());
        for (x, p) in self.p.initial().iter() {
            queue.push_back(Node {
                state: x,
                mass: Affine::constant(p.clone()),
                depth: 0,
                obligation: 0,
            });
        }
        let mut nodes = queue.len();
        while let Some(node) = queue.pop_front() {
            let x = node.state;
            let mut row = node.mass.scaled(&-Prob::one());
            for nu in self.alive.image(x) {
                let l = lp.add_var(reuse_cost.clone());
                row.add_term(l, Prob::one());
                for (y, w) in nu.iter() {
                    balances[node.obligation].entry(y).or_default().add_term(l, -w);
                }
            }
            let expand = node.depth < depth_limit && nodes < TREE_NODE_CAP;
            let cost = if expand { &fresh_cost } else { &leaf_cost };
            let mut vector = Vec::new();
            for y in &self.compat[&x] {
                let c = lp.add_var(cost.clone());
                row.add_term(c, Prob::one());
                balances[node.obligation].entry(*y).or_default().add_term(c, -Prob::one());
                vector.push((*y, c));
            }
            lp.add_zero(row);
            if expand {
                let start: BTreeMap<StateId, Affine> = vector.iter().map(|(y, c)| (*y, Affine::var(*c))).collect();
                let mut total = Affine::default();
                for (_, c) in &vector {
                    total.add_term(*c, Prob::one());
                }
                for t in self.p.transitions_from(x) {
                    let end = union(&mut t.target.support());
                    let mv = self.builder.build(&mut lp, &start, &t.action, &end, Mode::Occupancy);
                    let obligation = balances.len();
                    balances.push(mv.end().iter().map(|(y, v)| (*y, Affine::var(*v))).collect());
                    for (x2, p) in t.target.iter() {
                        queue.push_back(Node {
                            state: x2,
                            mass: total.scaled(p),
                            depth: node.depth + 1,
                            obligation,
                        });
                        nodes += 1;
                    }
                }
                if self.p.is_final(x) {
                    self.builder.build(&mut lp, &start, &Action::Tau, self.q.finals(), Mode::Occupancy);
                }
            }
        }
        for balance in balances {
            for (_, e) in balance {
                lp.add_zero(e);
            }
        }
        matches!(lp.solve(), LpOutcome::Optimal { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::ActionAlphabet;
    use std::sync::Arc;

    fn sigma() -> Arc<ActionAlphabet> {
        Arc::new(ActionAlphabet::new(["a", "b", "c"], ["i"]).unwrap())
    }

    fn act(name: &str, s: &Arc<ActionAlphabet>) -> ProbAutomaton {
        ops::action(name, s).unwrap()
    }

    #[test]
    fn identity_relation_verifies() {
        let s = sigma();
        let p = ops::seq(&act("a", &s), &ops::star(&act("b", &s))).unwrap();
        let r = verify_simulation(&SimRelation::identity(&p), &p, &p, 8).unwrap();
        assert!(r.is_verified());
        let fwd = forward_witness_from_sim(r.certificate().unwrap());
        check_forward_certificate(&fwd, &p, &p).unwrap();
        assert!(verify_forward_simulation(&SimRelation::identity(&p), &p, &p, 8).unwrap().is_verified());
    }

    #[test]
    fn missing_transition_is_refuted_at_a_step() {
        let s = sigma();
        let a = act("a", &s);
        let b = act("b", &s);
        let x = a.initial().support().next().unwrap();
        let y = b.initial().support().next().unwrap();
        let mut relation = SimRelation::from_pairs([(x, Dist::point(y))]);
        for z in a.states() {
            relation.insert(*z, Dist::point(y));
        }
        match verify_simulation(&relation, &a, &b, 4).unwrap() {
            CheckResult::Refuted {
                clause: Clause::Step { state, .. },
                ..
            } => assert_eq!(state, x),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sum_distributes_one_way_only() {
        let s = sigma();
        let (a, b, c) = (act("a", &s), act("b", &s), act("c", &s));
        let ab = ops::seq(&a, &b).unwrap();
        let ac = ops::seq(&ops::copy(&a).0, &c).unwrap();
        let lhs = ops::plus(&ab, &ac).unwrap();
        let rhs = ops::seq(&ops::copy(&a).0, &ops::plus(&ops::copy(&b).0, &ops::copy(&c).0).unwrap()).unwrap();
        let cfg = SearchConfig::default();
        assert!(leq(&lhs, &rhs, cfg).unwrap().is_verified());
        assert!(leq(&rhs, &lhs, cfg).unwrap().is_refuted());
    }

    #[test]
    fn deadlock_is_below_everything() {
        let s = sigma();
        let p = ops::star(&act("a", &s));
        assert!(leq(&ops::deadlock(&s), &p, SearchConfig::default()).unwrap().is_verified());
        assert!(leq(&p, &ops::deadlock(&s), SearchConfig::default()).unwrap().is_refuted());
    }

    #[test]
    fn internal_prefix_is_invisible() {
        let s = sigma();
        let ia = ops::seq(&act("i", &s), &act("a", &s)).unwrap();
        let a = act("a", &s);
        let e = equiv(&ia, &a, SearchConfig::default()).unwrap();
        assert_eq!(e.verdict(), Verdict::Verified);
    }

    #[test]
    fn probabilistic_choice_needs_mixed_partner() {
        // a·(b ⊕½ c) ≤ a·b ⊕½ a·c needs the initial pair (r, ½δx + ½δy).
        let s = sigma();
        let half = crate::dist::ratio(1, 2);
        let lhs = ops::pchoice(
            &ops::seq(&act("a", &s), &act("b", &s)).unwrap(),
            &half,
            &ops::seq(&act("a", &s), &act("c", &s)).unwrap(),
        )
        .unwrap();
        let rhs = ops::seq(&act("a", &s), &ops::pchoice(&act("b", &s), &half, &act("c", &s)).unwrap()).unwrap();
        assert!(leq(&rhs, &lhs, SearchConfig::default()).unwrap().is_verified());
        assert!(leq(&lhs, &rhs, SearchConfig::default()).unwrap().is_refuted());
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let s = sigma();
        let p = ops::star(&ops::plus(&act("a", &s), &act("b", &s)).unwrap());
        let r = leq(&p, &p, SearchConfig { horizon: None, budget: 1 }).unwrap();
        assert_eq!(r.verdict(), Verdict::Inconclusive);
    }

    #[test]
    fn composition_of_identities() {
        let s = sigma();
        let p = ops::star(&act("a", &s));
        let id = SimRelation::identity(&p);
        assert_eq!(compose(&id, &id, 64), id);
    }
}
