//! Action alphabets: external actions (visible, synchronisable), internal
//! actions (local, never synchronised) and the distinguished silent action.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Reserved spelling of the silent action in every text format.
pub const TAU: &str = "tau";

const RESERVED: &[&str] = &[TAU, "run", "def", "external", "internal"];

/// A transition label: the silent action or a named action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Tau,
    Named(Arc<str>),
}

impl Action {
    pub fn named(name: &str) -> Self {
        Action::Named(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        match self {
            Action::Tau => TAU,
            Action::Named(n) => n,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// The action set Σ = I ∪ E together with τ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ActionAlphabet {
    external: BTreeSet<Arc<str>>,
    internal: BTreeSet<Arc<str>>,
}

impl ActionAlphabet {
    pub fn new<E, I, S, T>(external: E, internal: I) -> Result<Self>
    where
        E: IntoIterator<Item = S>,
        I: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut alphabet = ActionAlphabet::default();
        for name in external {
            alphabet.add_external(name.as_ref())?;
        }
        for name in internal {
            alphabet.add_internal(name.as_ref())?;
        }
        Ok(alphabet)
    }

    fn check_name(&self, name: &str) -> Result<()> {
        if !is_identifier(name) {
            return Err(Error::Alphabet(format!("`{name}` is not an identifier")));
        }
        if RESERVED.contains(&name) {
            return Err(Error::Alphabet(format!("`{name}` is reserved")));
        }
        if self.contains(name) {
            return Err(Error::Alphabet(format!("`{name}` declared twice")));
        }
        Ok(())
    }

    pub fn add_external(&mut self, name: &str) -> Result<()> {
        self.check_name(name)?;
        self.external.insert(Arc::from(name));
        Ok(())
    }

    pub fn add_internal(&mut self, name: &str) -> Result<()> {
        self.check_name(name)?;
        self.internal.insert(Arc::from(name));
        Ok(())
    }

    pub fn external(&self) -> impl Iterator<Item = &str> {
        self.external.iter().map(|s| &**s)
    }

    pub fn internal(&self) -> impl Iterator<Item = &str> {
        self.internal.iter().map(|s| &**s)
    }

    pub fn is_external(&self, name: &str) -> bool {
        self.external.contains(name)
    }

    pub fn is_internal(&self, name: &str) -> bool {
        self.internal.contains(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.is_external(name) || self.is_internal(name)
    }

    /// Resolves a name to an action of Σ_τ.
    pub fn action(&self, name: &str) -> Result<Action> {
        if name == TAU {
            Ok(Action::Tau)
        } else if let Some(n) = self.external.get(name).or_else(|| self.internal.get(name)) {
            Ok(Action::Named(n.clone()))
        } else {
            Err(Error::UnknownAction(name.to_string()))
        }
    }

    /// τ and internal actions cannot be observed by the environment; weak
    /// transitions close over all of them.
    pub fn is_unobservable(&self, action: &Action) -> bool {
        match action {
            Action::Tau => true,
            Action::Named(n) => self.internal.contains(&**n),
        }
    }

    pub fn admits(&self, action: &Action) -> bool {
        match action {
            Action::Tau => true,
            Action::Named(n) => self.contains(n),
        }
    }

    pub fn external_actions(&self) -> BTreeSet<String> {
        self.external.iter().map(|s| s.to_string()).collect()
    }
}
