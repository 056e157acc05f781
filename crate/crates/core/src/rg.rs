//! Rely/guarantee quintuples and their proof rules.
//!
//! A quintuple `P R {U} Q G` holds when `P·(R ‖ U) ≤ Q` and `U ≤ G`. The
//! rules below check their premises and then verify the conclusion on its
//! own, so a rule never vouches for a conclusion it did not check.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::alphabet::ActionAlphabet;
use crate::automaton::{ProbAutomaton, StateId};
use crate::dist::{format_prob, Dist, Prob};
use crate::error::{Error, Result};
use crate::simulation::{equiv, leq, CheckResult, SearchConfig, Verdict};
use crate::term::{compile, parse_file, Term, TermFile};

/// `P R {U} Q G`, with `‖` synchronising on `frame`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quintuple {
    pub p: Term,
    pub r: Term,
    pub u: Term,
    pub q: Term,
    pub g: Term,
    pub frame: BTreeSet<String>,
}

impl Quintuple {
    pub fn new(p: Term, r: Term, u: Term, q: Term, g: Term, frame: BTreeSet<String>) -> Self {
        Quintuple { p, r, u, q, g, frame }
    }

    /// The behaviour `P·(R ‖ U)` the postcondition has to bound.
    pub fn behaviour(&self) -> Term {
        Term::seq(self.p.clone(), Term::Par(Box::new(self.r.clone()), self.frame.clone(), Box::new(self.u.clone())))
    }

    fn validate(&self, alphabet: &ActionAlphabet) -> Result<()> {
        if let Some(a) = self.frame.iter().find(|a| !alphabet.is_external(a)) {
            return Err(Error::InvalidFrame(a.clone()));
        }
        for t in [&self.p, &self.r, &self.u, &self.q, &self.g] {
            t.validate(alphabet)?;
        }
        Ok(())
    }
}

impl fmt::Display for Quintuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) ({}) {{{}}} ({}) ({})", self.p, self.r, self.u, self.q, self.g)
    }
}

/// One simulation check made by a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgCheck {
    pub name: String,
    pub claim: String,
    pub result: CheckResult,
}

#[derive(Debug, Clone)]
pub struct RgReport {
    pub rule: String,
    pub premises: Vec<RgCheck>,
    /// `None` when a premise did not verify and the rule was not applied.
    pub conclusion: Option<(Quintuple, Vec<RgCheck>)>,
}

impl RgReport {
    pub fn premise_verdict(&self) -> Verdict {
        self.premises.iter().fold(Verdict::Verified, |v, c| v.and(c.result.verdict()))
    }

    /// The conclusion's verdict, or the premises' when the rule was not
    /// applied.
    pub fn verdict(&self) -> Verdict {
        match &self.conclusion {
            Some((_, checks)) => checks.iter().fold(Verdict::Verified, |v, c| v.and(c.result.verdict())),
            None => self.premise_verdict(),
        }
    }

    /// Report lines in the style of the law suite.
    pub fn lines(&self) -> Vec<String> {
        if self.rule == "check" {
            return self
                .premises
                .iter()
                .map(|c| format!("CHECK {} {} -> {}", c.name, c.claim, c.result.verdict()))
                .collect();
        }
        let mut out: Vec<String> = self
            .premises
            .iter()
            .map(|c| format!("RULE {} PREMISE {} {} -> {}", self.rule, c.name, c.claim, c.result.verdict()))
            .collect();
        match &self.conclusion {
            Some((q, checks)) => {
                out.push(format!("RULE {} CONCLUDES {q}", self.rule));
                out.extend(
                    checks
                        .iter()
                        .map(|c| format!("RULE {} CONCLUSION {} {} -> {}", self.rule, c.name, c.claim, c.result.verdict())),
                );
            }
            None => out.push(format!("RULE {} NOT APPLIED -> {}", self.rule, self.premise_verdict())),
        }
        out
    }
}

/// Simulation checks between terms over one alphabet.
pub struct Checker {
    alphabet: Arc<ActionAlphabet>,
    config: SearchConfig,
}

impl Checker {
    pub fn new(alphabet: &Arc<ActionAlphabet>, config: SearchConfig) -> Self {
        Checker {
            alphabet: alphabet.clone(),
            config,
        }
    }

    pub fn alphabet(&self) -> &Arc<ActionAlphabet> {
        &self.alphabet
    }

    /// The full external frame, over which `run` is absorbing.
    pub fn full_frame(&self) -> BTreeSet<String> {
        self.alphabet.external_actions()
    }

    pub fn run(&self) -> Term {
        Term::Run(self.full_frame())
    }

    pub fn leq(&self, name: &str, lhs: &Term, rhs: &Term) -> Result<RgCheck> {
        let result = leq(&compile(lhs, &self.alphabet)?, &compile(rhs, &self.alphabet)?, self.config)?;
        Ok(RgCheck {
            name: name.into(),
            claim: format!("{lhs} <= {rhs}"),
            result,
        })
    }

    pub fn equiv(&self, name: &str, lhs: &Term, rhs: &Term) -> Result<RgCheck> {
        let e = equiv(&compile(lhs, &self.alphabet)?, &compile(rhs, &self.alphabet)?, self.config)?;
        // The equivalence is reported through its weaker direction.
        let result = match (e.forward.verdict(), e.backward.verdict()) {
            (Verdict::Verified, _) => e.backward,
            _ => e.forward,
        };
        Ok(RgCheck {
            name: name.into(),
            claim: format!("{lhs} == {rhs}"),
            result,
        })
    }

    /// `P·(R ‖ U) ≤ Q` and `U ≤ G`.
    pub fn holds(&self, prefix: &str, q: &Quintuple) -> Result<Vec<RgCheck>> {
        q.validate(&self.alphabet)?;
        Ok(vec![
            self.leq(&format!("{prefix}spec"), &q.behaviour(), &q.q)?,
            self.leq(&format!("{prefix}guarantee"), &q.u, &q.g)?,
        ])
    }
}

fn all_verified(checks: &[RgCheck]) -> bool {
    checks.iter().all(|c| c.result.is_verified())
}

fn par(l: &Term, frame: &BTreeSet<String>, r: &Term) -> Term {
    Term::Par(Box::new(l.clone()), frame.clone(), Box::new(r.clone()))
}

/// Checks a single quintuple.
pub fn holds(checker: &Checker, q: &Quintuple) -> Result<RgReport> {
    Ok(RgReport {
        rule: "holds".into(),
        premises: Vec::new(),
        conclusion: Some((q.clone(), checker.holds("", q)?)),
    })
}

fn conclude(checker: &Checker, rule: &str, premises: Vec<RgCheck>, conclusion: Quintuple) -> Result<RgReport> {
    let conclusion = if all_verified(&premises) {
        let checks = checker.holds("", &conclusion)?;
        Some((conclusion, checks))
    } else {
        None
    };
    Ok(RgReport {
        rule: rule.into(),
        premises,
        conclusion,
    })
}

fn same_frame(q1: &Quintuple, q2: &Quintuple) -> Result<()> {
    if q1.frame != q2.frame {
        return Err(Error::Scenario("the two quintuples use different frames".into()));
    }
    Ok(())
}

/// Isolated systems: from `P R {U} Q G`, `P′ R′ {U′} Q′ G′`, `G ≤ R′`,
/// `G′ ≤ R`, `T ≤ P` and `T ≤ P′`, conclude `T run {U ‖ U′} Q (G ‖ G′)`.
pub fn rule_concurrent_isolated(checker: &Checker, q1: &Quintuple, q2: &Quintuple, t: &Term) -> Result<RgReport> {
    same_frame(q1, q2)?;
    let mut premises = checker.holds("first-", q1)?;
    premises.extend(checker.holds("second-", q2)?);
    premises.push(checker.leq("rely-second", &q1.g, &q2.r)?);
    premises.push(checker.leq("rely-first", &q2.g, &q1.r)?);
    premises.push(checker.leq("pre-first", t, &q1.p)?);
    premises.push(checker.leq("pre-second", t, &q2.p)?);
    let f = &q1.frame;
    let conclusion = Quintuple::new(t.clone(), checker.run(), par(&q1.u, f, &q2.u), q1.q.clone(), par(&q1.g, f, &q2.g), f.clone());
    conclude(checker, "concurrent", premises, conclusion)
}

/// From `1 run {U} run G`, `P′ R′ {U′} Q′ G′` and `G ≤ R′`, conclude
/// `P′ run {U ‖ U′} Q′ (G ‖ G′)`.
pub fn rule_asymmetric(checker: &Checker, env: &Quintuple, q2: &Quintuple) -> Result<RgReport> {
    same_frame(env, q2)?;
    let run = checker.run();
    if env.p != Term::One || env.r != run || env.q != run {
        return Err(Error::Scenario(format!("the first premise must have the shape 1 run {{U}} run G, got {env}")));
    }
    let mut premises = checker.holds("premise1-", env)?;
    premises.extend(checker.holds("premise2-", q2)?);
    premises.push(checker.leq("side", &env.g, &q2.r)?);
    let f = &q2.frame;
    let conclusion = Quintuple::new(q2.p.clone(), run, par(&env.u, f, &q2.u), q2.q.clone(), par(&env.g, f, &q2.g), f.clone());
    conclude(checker, "asymmetric", premises, conclusion)
}

/// An environment `S` with `S ≤ R`, `S ≤ R′` and `S ‖ S ≤ S`: from the two
/// quintuples and `T ≤ P`, `T ≤ P′`, conclude `T S {U ‖ U′} Q (G ‖ G′)`.
pub fn rule_general_env(checker: &Checker, q1: &Quintuple, q2: &Quintuple, t: &Term, s: &Term) -> Result<RgReport> {
    same_frame(q1, q2)?;
    let f = &q1.frame;
    let mut premises = checker.holds("first-", q1)?;
    premises.extend(checker.holds("second-", q2)?);
    premises.push(checker.leq("rely-second", &q1.g, &q2.r)?);
    premises.push(checker.leq("rely-first", &q2.g, &q1.r)?);
    premises.push(checker.leq("pre-first", t, &q1.p)?);
    premises.push(checker.leq("pre-second", t, &q2.p)?);
    premises.push(checker.leq("env-first", s, &q1.r)?);
    premises.push(checker.leq("env-second", s, &q2.r)?);
    premises.push(checker.leq("env-idempotent", &par(s, f, s), s)?);
    let conclusion = Quintuple::new(t.clone(), s.clone(), par(&q1.u, f, &q2.u), q1.q.clone(), par(&q1.g, f, &q2.g), f.clone());
    conclude(checker, "general", premises, conclusion)
}

/// From `P R {U} Q G`, `P′ R′ {U′} Q′ G′`, `Q ≤ P′` and
/// `(R ‖ U)·(R′ ‖ U′) ≡ (R·R′) ‖ (U·U′)`, conclude
/// `P (R·R′) {U·U′} Q′ (G·G′)`.
pub fn rule_sequential(checker: &Checker, q1: &Quintuple, q2: &Quintuple) -> Result<RgReport> {
    same_frame(q1, q2)?;
    let f = &q1.frame;
    let mut premises = checker.holds("first-", q1)?;
    premises.extend(checker.holds("second-", q2)?);
    premises.push(checker.leq("midpoint", &q1.q, &q2.p)?);
    let split = Term::seq(par(&q1.r, f, &q1.u), par(&q2.r, f, &q2.u));
    let joined = par(&Term::seq(q1.r.clone(), q2.r.clone()), f, &Term::seq(q1.u.clone(), q2.u.clone()));
    premises.push(checker.equiv("exchange", &split, &joined)?);
    let conclusion = Quintuple::new(
        q1.p.clone(),
        Term::seq(q1.r.clone(), q2.r.clone()),
        Term::seq(q1.u.clone(), q2.u.clone()),
        q2.q.clone(),
        Term::seq(q1.g.clone(), q2.g.clone()),
        f.clone(),
    );
    conclude(checker, "sequential", premises, conclusion)
}

/// The rule stanzas of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleStanza {
    Holds { quintuple: Quintuple },
    Asymmetric { premise1: Quintuple, premise2: Quintuple },
    Concurrent { premise1: Quintuple, premise2: Quintuple, pre: Term },
    General { premise1: Quintuple, premise2: Quintuple, pre: Term, env: Term },
    Sequential { premise1: Quintuple, premise2: Quintuple },
    /// A bare simulation check `lhs <= rhs` or equivalence `lhs == rhs`.
    Check { name: String, lhs: Term, rhs: Term, equivalence: bool },
}

/// A rely/guarantee scenario: a term file and rule stanzas over its names.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub terms: TermFile,
    pub stanzas: Vec<RuleStanza>,
}

/// Parses a scenario. Definitions and headers follow the term-file syntax;
/// each `rule` line names a rule and its arguments:
///
/// ```text
/// rule asymmetric premise1=1,run,M,run,H premise2=coin,H,U',Q,run side=H<=H
/// rule holds quintuple=1,run,M,run,H
/// rule check name=final lhs=V||{coin,fail,kick,tea}U rhs=Q
/// ```
///
/// Values contain no spaces. Quintuple components are separated by commas
/// and are term expressions that may name definitions; a bare `run` stands
/// for `run` over all external actions.
/// The `side` argument of the asymmetric rule restates `G<=R′` and is
/// checked against the premises.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut term_lines = String::new();
    let mut rules: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with("rule ") || line.trim() == "rule" {
            rules.push((i + 1, line));
            term_lines.push('\n');
        } else {
            term_lines.push_str(line);
            term_lines.push('\n');
        }
    }
    let terms = parse_file(&term_lines)?;
    let frame = terms.alphabet.external_actions();
    let resolve = |line: usize, text: &str| -> Result<Term> {
        match text {
            "run" => Ok(Term::Run(frame.clone())),
            _ => terms.parse_expr(text, line, 1),
        }
    };
    let quintuple = |line: usize, text: &str| -> Result<Quintuple> {
        let parts = split_top(text);
        if parts.len() != 5 {
            return Err(Error::syntax(line, 1, format!("a quintuple has five components, got `{text}`")));
        }
        let t: Vec<Term> = parts.iter().map(|p| resolve(line, p)).collect::<Result<_>>()?;
        let mut t = t.into_iter();
        let mut next = || t.next().expect("five components");
        Ok(Quintuple::new(next(), next(), next(), next(), next(), frame.clone()))
    };
    let mut stanzas = Vec::new();
    for (line, text) in rules {
        let mut words = text.split_whitespace().skip(1);
        let kind = words.next().ok_or_else(|| Error::syntax(line, 1, "missing rule name"))?;
        let mut args = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::syntax(line, 1, format!("expected `key=value`, found `{w}`")))?;
            args.insert(k, v);
        }
        let arg = |k: &str| -> Result<&str> {
            args.get(k)
                .copied()
                .ok_or_else(|| Error::syntax(line, 1, format!("rule `{kind}` needs `{k}=`")))
        };
        let stanza = match kind {
            "holds" => RuleStanza::Holds {
                quintuple: quintuple(line, arg("quintuple")?)?,
            },
            "asymmetric" => {
                let premise1 = quintuple(line, arg("premise1")?)?;
                let premise2 = quintuple(line, arg("premise2")?)?;
                if let Some(side) = args.get("side") {
                    let (g, r) = side
                        .split_once("<=")
                        .ok_or_else(|| Error::syntax(line, 1, "expected `side=G<=R`"))?;
                    if resolve(line, g)? != premise1.g || resolve(line, r)? != premise2.r {
                        return Err(Error::syntax(line, 1, "`side` must relate the first guarantee to the second rely"));
                    }
                }
                RuleStanza::Asymmetric { premise1, premise2 }
            }
            "concurrent" => RuleStanza::Concurrent {
                premise1: quintuple(line, arg("premise1")?)?,
                premise2: quintuple(line, arg("premise2")?)?,
                pre: resolve(line, arg("pre")?)?,
            },
            "general" => RuleStanza::General {
                premise1: quintuple(line, arg("premise1")?)?,
                premise2: quintuple(line, arg("premise2")?)?,
                pre: resolve(line, arg("pre")?)?,
                env: resolve(line, arg("env")?)?,
            },
            "sequential" => RuleStanza::Sequential {
                premise1: quintuple(line, arg("premise1")?)?,
                premise2: quintuple(line, arg("premise2")?)?,
            },
            "check" | "equiv" => RuleStanza::Check {
                name: args.get("name").map_or_else(|| kind.to_string(), |n| n.to_string()),
                lhs: resolve(line, arg("lhs")?)?,
                rhs: resolve(line, arg("rhs")?)?,
                equivalence: kind == "equiv",
            },
            other => return Err(Error::syntax(line, 1, format!("unknown rule `{other}`"))),
        };
        stanzas.push(stanza);
    }
    Ok(Scenario { terms, stanzas })
}

/// Splits at commas outside parentheses and braces.
fn split_top(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in text.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts
}

/// Runs every stanza of a scenario.
pub fn run_scenario(scenario: &Scenario, config: SearchConfig) -> Result<Vec<RgReport>> {
    let checker = Checker::new(&scenario.terms.alphabet, config);
    scenario
        .stanzas
        .iter()
        .map(|s| match s {
            RuleStanza::Holds { quintuple } => holds(&checker, quintuple),
            RuleStanza::Asymmetric { premise1, premise2 } => rule_asymmetric(&checker, premise1, premise2),
            RuleStanza::Concurrent { premise1, premise2, pre } => rule_concurrent_isolated(&checker, premise1, premise2, pre),
            RuleStanza::General {
                premise1,
                premise2,
                pre,
                env,
            } => rule_general_env(&checker, premise1, premise2, pre, env),
            RuleStanza::Sequential { premise1, premise2 } => rule_sequential(&checker, premise1, premise2),
            RuleStanza::Check {
                name,
                lhs,
                rhs,
                equivalence,
            } => {
                let check = if *equivalence {
                    checker.equiv(name, lhs, rhs)?
                } else {
                    checker.leq(name, lhs, rhs)?
                };
                Ok(RgReport {
                    rule: "check".into(),
                    premises: Vec::new(),
                    conclusion: None,
                }
                .with_check(check))
            }
        })
        .collect()
}

impl RgReport {
    fn with_check(mut self, check: RgCheck) -> Self {
        self.premises.push(check);
        self
    }
}

/// The bundled vending-machine definitions.
pub const VENDING_TERMS: &str = include_str!("../data/vending.pcka");

/// Weights of the first probabilistic branching reached from the initial
/// distribution along deterministic steps, with the states they lead to.
pub fn first_split(p: &ProbAutomaton) -> Option<Dist> {
    let mut current = p.initial().clone();
    let mut seen = BTreeSet::new();
    loop {
        let x = match current.is_point() {
            None => return Some(current),
            Some(x) => x,
        };
        if !seen.insert(x) {
            return None;
        }
        let mut out = p.transitions_from(x);
        let (Some(t), None) = (out.next(), out.next()) else { return None };
        current = t.target.clone();
    }
}

/// Whether `trace` of external actions can be performed from `state`,
/// with unobservable steps in between.
pub fn can_perform(p: &ProbAutomaton, state: StateId, trace: &[&str]) -> bool {
    let closure = |set: BTreeSet<StateId>| {
        let mut set = set;
        let mut stack: Vec<StateId> = set.iter().copied().collect();
        while let Some(x) = stack.pop() {
            for t in p.transitions_from(x) {
                if p.is_unobservable(&t.action) {
                    for y in t.target.support() {
                        if set.insert(y) {
                            stack.push(y);
                        }
                    }
                }
            }
        }
        set
    };
    let mut current = closure(BTreeSet::from([state]));
    for a in trace {
        let next: BTreeSet<StateId> = current
            .iter()
            .flat_map(|x| p.transitions_from(*x))
            .filter(|t| t.action.name() == *a)
            .flat_map(|t| t.target.support())
            .collect();
        if next.is_empty() {
            return false;
        }
        current = closure(next);
    }
    true
}

/// Outcome of the vending-machine case study.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub reports: Vec<RgReport>,
    /// Weight of each branch of the postcondition's first probabilistic
    /// choice, and whether the branch admits two kicks.
    pub split: Vec<(Prob, bool)>,
}

impl CaseStudy {
    /// Probability mass of the branches that do not allow a second kick.
    pub fn safe_mass(&self) -> Prob {
        self.split.iter().filter(|(_, twice)| !twice).map(|(p, _)| p.clone()).sum()
    }

    pub fn verdict(&self) -> Verdict {
        self.reports.iter().fold(Verdict::Verified, |v, r| v.and(r.verdict()))
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self.reports.iter().flat_map(RgReport::lines).collect();
        for (p, twice) in &self.split {
            let branch = if *twice { "kick-twice" } else { "at-most-one-kick" };
            out.push(format!("SPLIT Q {branch} {}", format_prob(p)));
        }
        out
    }
}

/// The vending machine `V = coin·M` used by `U = coin·U′`: the asymmetric
/// rule with `1 run {M} run H` and `coin H {U′} Q run`, the strengthened
/// interchange `(coin·M) ‖ (coin·U′) ≡ coin·(M ‖ U′)`, and `V ‖ U ≤ Q`.
pub fn vending_machine_case_study(config: SearchConfig) -> Result<CaseStudy> {
    let terms = parse_file(VENDING_TERMS)?;
    let checker = Checker::new(&terms.alphabet, config);
    let t = |name: &str| -> Result<Term> {
        terms
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Scenario(format!("no definition named `{name}`")))
    };
    let (run, frame) = (checker.run(), checker.full_frame());
    let coin = Term::act("coin");
    let env = Quintuple::new(Term::One, run.clone(), t("M")?, run.clone(), t("H")?, frame.clone());
    let user = Quintuple::new(coin.clone(), t("H")?, t("U'")?, t("Q")?, run, frame.clone());
    let mut reports = vec![rule_asymmetric(&checker, &env, &user)?];
    let isolated = Term::seq(coin, par(&t("M")?, &frame, &t("U'")?));
    let system = par(&t("V")?, &frame, &t("U")?);
    let checks = vec![
        checker.leq("isolated", &isolated, &t("Q")?)?,
        checker.equiv("interchange", &system, &isolated)?,
        checker.leq("system", &system, &t("Q")?)?,
    ];
    reports.push(RgReport {
        rule: "check".into(),
        premises: checks,
        conclusion: None,
    });
    let q = compile(&t("Q")?, &terms.alphabet)?;
    let split = first_split(&q)
        .map(|d| d.iter().map(|(y, p)| (p.clone(), can_perform(&q, y, &["kick", "kick"]))).collect())
        .unwrap_or_default();
    Ok(CaseStudy { reports, split })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;

    fn checker() -> Checker {
        let terms = parse_file(VENDING_TERMS).unwrap();
        Checker::new(&terms.alphabet, SearchConfig::default())
    }

    #[test]
    fn behaviour_is_sequenced_with_the_rely() {
        let c = checker();
        let q = Quintuple::new(Term::One, c.run(), Term::act("tea"), Term::Zero, c.run(), c.full_frame());
        assert_eq!(q.behaviour().to_string(), "1 . (run{coin,fail,kick,tea} ||{coin,fail,kick,tea} tea)");
        let report = holds(&c, &q).unwrap();
        assert_eq!(report.verdict(), Verdict::Refuted);
        assert!(report.lines()[1].contains("CONCLUSION spec"));
    }

    #[test]
    fn failing_premise_blocks_the_rule() {
        let c = checker();
        let run = c.run();
        let env = Quintuple::new(Term::One, run.clone(), Term::act("tea"), run.clone(), Term::act("tea"), c.full_frame());
        let other = Quintuple::new(Term::One, Term::act("kick"), Term::One, Term::One, Term::One, c.full_frame());
        let report = rule_asymmetric(&c, &env, &other).unwrap();
        assert!(report.conclusion.is_none());
        assert_eq!(report.verdict(), Verdict::Refuted);
        assert!(report.lines().last().unwrap().contains("NOT APPLIED"));
    }

    #[test]
    fn trivial_instances_of_the_rules() {
        let c = checker();
        let one = Quintuple::new(Term::One, c.run(), Term::One, Term::One, Term::One, c.full_frame());
        let report = rule_sequential(&c, &one, &one).unwrap();
        assert_eq!(report.verdict(), Verdict::Verified, "{:?}", report.lines());
        let report = rule_general_env(&c, &one, &one, &Term::Zero, &Term::Zero).unwrap();
        assert_eq!(report.verdict(), Verdict::Verified, "{:?}", report.lines());
    }

    #[test]
    fn postcondition_split() {
        let terms = parse_file(VENDING_TERMS).unwrap();
        let q = compile(terms.get("Q").unwrap(), &terms.alphabet).unwrap();
        let split = first_split(&q).unwrap();
        let weights: BTreeSet<Prob> = split.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(weights, BTreeSet::from([ratio(1, 25), ratio(24, 25)]));
        for (y, p) in split.iter() {
            assert_eq!(can_perform(&q, y, &["kick", "kick"]), *p == ratio(1, 25));
        }
    }

    #[test]
    fn scenario_stanzas() {
        let text = format!(
            "{VENDING_TERMS}\nrule asymmetric premise1=1,run,M,run,H premise2=coin,H,U',Q,run side=H<=H\nrule check name=final lhs=V||{{coin,fail,kick,tea}}U rhs=Q\n"
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.stanzas.len(), 2);
        assert!(matches!(&s.stanzas[1], RuleStanza::Check { name, .. } if name == "final"));
        let bad = format!("{VENDING_TERMS}\nrule asymmetric premise1=1,run,M,run,H premise2=coin,H,U',Q,run side=run<=H\n");
        assert!(parse_scenario(&bad).is_err());
        assert!(parse_scenario(&format!("{VENDING_TERMS}\nrule frobnicate\n")).is_err());
    }
}
