//! Algebraic terms over probabilistic automata: syntax tree, printing,
//! parsing and compilation.

mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::alphabet::ActionAlphabet;
use crate::automaton::ProbAutomaton;
use crate::dist::{format_prob, Prob};
use crate::error::{Error, Result};
use crate::ops;

pub use parse::{parse_file, parse_term, TermFile};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Zero,
    One,
    Act(String),
    Plus(Box<Term>, Box<Term>),
    Seq(Box<Term>, Box<Term>),
    Star(Box<Term>),
    PChoice(Box<Term>, Prob, Box<Term>),
    Par(Box<Term>, BTreeSet<String>, Box<Term>),
    Run(BTreeSet<String>),
}

impl Term {
    pub fn act(name: &str) -> Term {
        Term::Act(name.to_string())
    }

    pub fn plus(l: Term, r: Term) -> Term {
        Term::Plus(Box::new(l), Box::new(r))
    }

    pub fn seq(l: Term, r: Term) -> Term {
        Term::Seq(Box::new(l), Box::new(r))
    }

    pub fn star(t: Term) -> Term {
        Term::Star(Box::new(t))
    }

    pub fn pchoice(l: Term, p: Prob, r: Term) -> Term {
        Term::PChoice(Box::new(l), p, Box::new(r))
    }

    pub fn par<I, S>(l: Term, frame: I, r: Term) -> Term
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Term::Par(Box::new(l), frame.into_iter().map(Into::into).collect(), Box::new(r))
    }

    pub fn run<I, S>(actions: I) -> Term
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Term::Run(actions.into_iter().map(Into::into).collect())
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Zero | Term::One | Term::Act(_) | Term::Run(_) => 1,
            Term::Star(t) => 1 + t.size(),
            Term::Plus(l, r) | Term::Seq(l, r) | Term::PChoice(l, _, r) | Term::Par(l, _, r) => 1 + l.size() + r.size(),
        }
    }

    /// Checks declared actions, frames, run sets and probabilities.
    pub fn validate(&self, alphabet: &ActionAlphabet) -> Result<()> {
        match self {
            Term::Zero | Term::One => Ok(()),
            Term::Act(a) => {
                if alphabet.contains(a) {
                    Ok(())
                } else {
                    Err(Error::UnknownAction(a.clone()))
                }
            }
            Term::Run(set) | Term::Par(_, set, _) if set.iter().any(|a| !alphabet.is_external(a)) => {
                let bad = set.iter().find(|a| !alphabet.is_external(a)).expect("found");
                Err(Error::InvalidFrame(bad.clone()))
            }
            Term::Run(set) if set.is_empty() => Err(Error::EmptyRun),
            Term::Run(_) => Ok(()),
            Term::PChoice(_, p, _) if !crate::dist::in_unit_interval(p) => Err(Error::ProbabilityRange(format_prob(p))),
            Term::Star(t) => t.validate(alphabet),
            Term::Plus(l, r) | Term::Seq(l, r) | Term::PChoice(l, _, r) | Term::Par(l, _, r) => {
                l.validate(alphabet)?;
                r.validate(alphabet)
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            Term::Plus(..) | Term::PChoice(..) => 0,
            Term::Par(..) => 1,
            Term::Seq(..) => 2,
            Term::Star(_) => 3,
            _ => 4,
        }
    }
}

/// Compiles a term by structural recursion into the automaton operators.
pub fn compile(term: &Term, alphabet: &Arc<ActionAlphabet>) -> Result<ProbAutomaton> {
    term.validate(alphabet)?;
    build(term, alphabet)
}

fn build(term: &Term, alphabet: &Arc<ActionAlphabet>) -> Result<ProbAutomaton> {
    Ok(match term {
        Term::Zero => ops::deadlock(alphabet),
        Term::One => ops::skip(alphabet),
        Term::Act(a) => ops::action(a, alphabet)?,
        Term::Plus(l, r) => ops::plus(&build(l, alphabet)?, &build(r, alphabet)?)?,
        Term::Seq(l, r) => ops::seq(&build(l, alphabet)?, &build(r, alphabet)?)?,
        Term::Star(t) => ops::star(&build(t, alphabet)?),
        Term::PChoice(l, p, r) => ops::pchoice(&build(l, alphabet)?, p, &build(r, alphabet)?)?,
        Term::Par(l, frame, r) => ops::par(&build(l, alphabet)?, frame, &build(r, alphabet)?)?,
        Term::Run(set) => ops::run(set, alphabet)?,
    })
}

/// The least fixpoint of `X ↦ P·X·0`, namely `P*·0`.
pub fn least_fixpoint_star(p: Term) -> Term {
    Term::seq(Term::star(p), Term::Zero)
}

fn set_text(set: &BTreeSet<String>) -> String {
    set.iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

struct Operand<'a> {
    term: &'a Term,
    parens: bool,
}

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parens {
            write!(f, "({})", self.term)
        } else {
            write!(f, "{}", self.term)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary operators are left-associative: the left operand may sit at
        // the same level, the right operand must bind strictly tighter.
        fn left<'t>(me: &Term, t: &'t Term) -> Operand<'t> {
            let mixed = me.level() == 0 && t.level() == 0 && std::mem::discriminant(t) != std::mem::discriminant(me);
            Operand {
                term: t,
                parens: t.level() < me.level() || mixed,
            }
        }
        fn right<'t>(me: &Term, t: &'t Term) -> Operand<'t> {
            Operand {
                term: t,
                parens: t.level() <= me.level(),
            }
        }
        match self {
            Term::Zero => f.write_str("0"),
            Term::One => f.write_str("1"),
            Term::Act(a) => f.write_str(a),
            Term::Run(set) => write!(f, "run{{{}}}", set_text(set)),
            Term::Plus(l, r) => write!(f, "{} + {}", left(self, l), right(self, r)),
            Term::PChoice(l, p, r) => write!(f, "{} +[{}] {}", left(self, l), format_prob(p), right(self, r)),
            Term::Par(l, frame, r) => write!(f, "{} ||{{{}}} {}", left(self, l), set_text(frame), right(self, r)),
            Term::Seq(l, r) => write!(f, "{} . {}", left(self, l), right(self, r)),
            Term::Star(t) => write!(
                f,
                "{}*",
                Operand {
                    term: t,
                    parens: t.level() < 3
                }
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;
    use proptest::prelude::*;

    fn sigma() -> Arc<ActionAlphabet> {
        Arc::new(ActionAlphabet::new(["a", "b", "c"], ["i"]).unwrap())
    }

    #[test]
    fn printing_parenthesises_by_precedence() {
        let t = Term::seq(Term::plus(Term::act("a"), Term::act("b")), Term::star(Term::seq(Term::act("c"), Term::One)));
        assert_eq!(t.to_string(), "(a + b) . (c . 1)*");
        let mixed = Term::plus(Term::pchoice(Term::act("a"), ratio(1, 2), Term::act("b")), Term::Zero);
        assert_eq!(mixed.to_string(), "(a +[1/2] b) + 0");
        let chain = Term::plus(Term::plus(Term::act("a"), Term::act("b")), Term::act("c"));
        assert_eq!(chain.to_string(), "a + b + c");
        let right = Term::plus(Term::act("a"), Term::plus(Term::act("b"), Term::act("c")));
        assert_eq!(right.to_string(), "a + (b + c)");
        assert_eq!(Term::Zero.to_string(), "0");
    }

    #[test]
    fn compile_literals() {
        let s = sigma();
        let one = compile(&Term::One, &s).unwrap();
        assert_eq!(one.state_count(), 1);
        assert_eq!(one.finals().len(), 1);
        assert!(compile(&Term::act("z"), &s).is_err());
        assert!(compile(&Term::run(["i"]), &s).is_err());
        assert!(compile(&Term::pchoice(Term::One, ratio(3, 2), Term::Zero), &s).is_err());
    }

    #[test]
    fn fixpoint_shape() {
        assert_eq!(least_fixpoint_star(Term::act("a")).to_string(), "a* . 0");
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            Just(Term::Zero),
            Just(Term::One),
            prop_oneof![Just("a"), Just("b"), Just("c"), Just("i")].prop_map(Term::act),
            Just(Term::run(["a", "b"])),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Term::plus(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Term::seq(l, r)),
                inner.clone().prop_map(Term::star),
                (inner.clone(), 0i64..=4, inner.clone()).prop_map(|(l, k, r)| Term::pchoice(l, ratio(k, 4), r)),
                (inner.clone(), inner).prop_map(|(l, r)| Term::par(l, ["a"], r)),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_then_parse_is_identity(t in arb_term()) {
            let text = t.to_string();
            let back = parse_term(&text, &sigma()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
