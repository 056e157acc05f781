//! Seeded random terms for law instances.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::ActionAlphabet;
use crate::dist::{ratio, Prob};
use crate::term::{compile, Term};

/// Terms whose compiled automaton exceeds this many states are redrawn.
pub const MAX_TERM_STATES: usize = 60;

/// The probabilities random choices are drawn from.
pub fn sample_probs() -> Vec<Prob> {
    vec![ratio(1, 4), ratio(1, 3), ratio(1, 2), ratio(2, 3), ratio(3, 4), ratio(1, 5)]
}

/// The default alphabet of random instances: two external actions and one
/// internal one.
pub fn random_alphabet() -> Arc<ActionAlphabet> {
    Arc::new(ActionAlphabet::new(["a", "b"], ["c"]).expect("valid alphabet"))
}

/// A generator of terms over a fixed alphabet. Parallel compositions
/// synchronise on every external action.
pub struct TermGen {
    rng: ChaCha8Rng,
    alphabet: Arc<ActionAlphabet>,
    actions: Vec<String>,
    probs: Vec<Prob>,
}

impl TermGen {
    pub fn new(seed: u64, alphabet: &Arc<ActionAlphabet>) -> Self {
        let actions = alphabet.external().chain(alphabet.internal()).map(String::from).collect();
        TermGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            alphabet: alphabet.clone(),
            actions,
            probs: sample_probs(),
        }
    }

    pub fn alphabet(&self) -> &Arc<ActionAlphabet> {
        &self.alphabet
    }

    pub fn prob(&mut self) -> Prob {
        self.probs.choose(&mut self.rng).expect("nonempty").clone()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn leaf(&mut self) -> Term {
        match self.rng.gen_range(0..10) {
            0 => Term::Zero,
            1 | 2 => Term::One,
            _ => Term::Act(self.actions.choose(&mut self.rng).expect("nonempty").clone()),
        }
    }

    /// A term of depth at most `max_depth`, before the size check.
    fn draw(&mut self, max_depth: usize) -> Term {
        if max_depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let d = max_depth - 1;
        match self.rng.gen_range(0..12) {
            0 | 1 => Term::plus(self.draw(d), self.draw(d)),
            2..=4 => Term::seq(self.draw(d), self.draw(d)),
            5 | 6 => Term::star(self.draw(d)),
            7 | 8 => {
                let l = self.draw(d);
                let p = self.prob();
                Term::pchoice(l, p, self.draw(d))
            }
            9 | 10 => Term::par(self.draw(d), self.alphabet.external_actions(), self.draw(d)),
            _ => Term::Run(self.alphabet.external_actions()),
        }
    }

    /// A term whose automaton has at most `max_states` states.
    pub fn term_within(&mut self, max_depth: usize, max_states: usize) -> Term {
        loop {
            let t = self.draw(max_depth);
            let size = compile(&t, &self.alphabet).expect("generated terms are well formed").state_count();
            if size <= max_states {
                return t;
            }
        }
    }

    pub fn term(&mut self, max_depth: usize) -> Term {
        self.term_within(max_depth, MAX_TERM_STATES)
    }
}

/// `count` terms of depth at most `max_depth`, determined by `seed`.
pub fn random_terms(seed: u64, count: usize, max_depth: usize, alphabet: &Arc<ActionAlphabet>) -> Vec<Term> {
    let mut generator = TermGen::new(seed, alphabet);
    (0..count).map(|_| generator.term(max_depth)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth(t: &Term) -> usize {
        match t {
            Term::Zero | Term::One | Term::Act(_) | Term::Run(_) => 0,
            Term::Star(t) => 1 + depth(t),
            Term::Plus(l, r) | Term::Seq(l, r) | Term::PChoice(l, _, r) | Term::Par(l, _, r) => 1 + depth(l).max(depth(r)),
        }
    }

    #[test]
    fn seeded_and_bounded() {
        let sigma = random_alphabet();
        let first = random_terms(7, 40, 4, &sigma);
        assert_eq!(first, random_terms(7, 40, 4, &sigma));
        assert_ne!(first, random_terms(8, 40, 4, &sigma));
        for t in &first {
            assert!(depth(t) <= 4);
            assert!(compile(t, &sigma).unwrap().state_count() <= MAX_TERM_STATES);
        }
        for t in random_terms(1, 30, 0, &sigma) {
            assert!(matches!(t, Term::Zero | Term::One | Term::Act(_)));
        }
    }
}
