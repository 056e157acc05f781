//! Probabilistic automata modulo weak probabilistic simulation, with the
//! operators of probabilistic concurrent Kleene algebra, a term language,
//! a law suite and rely/guarantee rules.

pub mod alphabet;
pub mod automaton;
pub mod dist;
pub mod dot;
pub mod error;
pub mod format;
pub mod laws;
pub mod lift;
pub mod lp;
pub mod ops;
pub mod relation;
pub mod rg;
pub mod simulation;
mod support;
pub mod term;
pub mod weak;

pub use alphabet::{Action, ActionAlphabet};
pub use automaton::{Origin, ProbAutomaton, StateId, Transition};
pub use dist::{Dist, DistOfDists, Prob};
pub use error::{Error, Result};
