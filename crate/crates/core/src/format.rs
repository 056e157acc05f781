//! Line-oriented text formats for automata and simulation relations.
//!
//! ```text
//! automaton M
//! external coin tea kick fail
//! internal stuck
//! states s0 s1 s2
//! init s0:1
//! final s2
//! trans s0 coin -> s1:1/5 s2:4/5
//! ```
//!
//! ```text
//! relation S from M to H
//! pair s1 ~ u0:1/5 u1:4/5
//! ```
//!
//! `#` starts a comment. Probabilities are exact: `num/den`, integers or
//! finite decimals.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::alphabet::{Action, ActionAlphabet, TAU};
use crate::automaton::{AutomatonParts, Origin, ProbAutomaton, StateId, StateIdAllocator, Transition};
use crate::dist::{parse_prob, Dist};
use crate::error::{Error, Result};
use crate::relation::SimRelation;

/// A whitespace-separated word with its 1-based column.
struct Word<'a> {
    text: &'a str,
    column: usize,
}

fn words(line: &str) -> Vec<Word<'_>> {
    let line = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices().chain([(line.len(), ' ')]) {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Word {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Iterator for Lines<'a> {
    type Item = (usize, Vec<Word<'a>>);

    fn next(&mut self) -> Option<Self::Item> {
        for (i, line) in self.inner.by_ref() {
            let w = words(line);
            if !w.is_empty() {
                return Some((i + 1, w));
            }
        }
        None
    }
}

fn lines(text: &str) -> Lines<'_> {
    Lines {
        inner: text.lines().enumerate(),
    }
}

/// Reads `label:weight` entries through `resolve`.
fn read_dist(line: usize, entries: &[Word<'_>], mut resolve: impl FnMut(&Word<'_>, &str) -> Result<StateId>) -> Result<Dist> {
    if entries.is_empty() {
        let column = 1;
        return Err(Error::syntax(line, column, "expected a distribution"));
    }
    let mut weights = Vec::new();
    for w in entries {
        let (label, weight) = w
            .text
            .split_once(':')
            .ok_or_else(|| Error::syntax(line, w.column, format!("expected `state:weight`, found `{}`", w.text)))?;
        let p = parse_prob(weight).map_err(|e| Error::syntax(line, w.column, e.to_string()))?;
        weights.push((resolve(w, label)?, p));
    }
    Dist::from_weights(weights).map_err(|e| Error::syntax(line, entries[0].column, e.to_string()))
}

/// Parses an automaton; returns its name and the automaton with the file's
/// state names as labels.
pub fn read_automaton(text: &str) -> Result<(String, ProbAutomaton)> {
    let mut lines = lines(text);
    let (first, head) = lines
        .next()
        .ok_or_else(|| Error::syntax(1, 1, "empty automaton file"))?;
    if head[0].text != "automaton" || head.len() != 2 {
        return Err(Error::syntax(first, head[0].column, "expected `automaton NAME`"));
    }
    let name = head[1].text.to_string();
    let mut alphabet = ActionAlphabet::default();
    let mut ids: BTreeMap<String, StateId> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    let mut initial = None;
    let mut finals = BTreeSet::new();
    let mut pending: Vec<(usize, Vec<Word<'_>>)> = Vec::new();
    for (line, w) in lines {
        let rest = &w[1..];
        match w[0].text {
            "external" | "internal" => {
                for a in rest {
                    let added = if w[0].text == "external" {
                        alphabet.add_external(a.text)
                    } else {
                        alphabet.add_internal(a.text)
                    };
                    added.map_err(|e| Error::syntax(line, a.column, e.to_string()))?;
                }
            }
            "states" => {
                for s in rest {
                    if s.text.contains(':') {
                        return Err(Error::syntax(line, s.column, "state names cannot contain `:`"));
                    }
                    if ids.contains_key(s.text) {
                        return Err(Error::syntax(line, s.column, format!("state `{}` declared twice", s.text)));
                    }
                    let id = StateIdAllocator::fresh();
                    ids.insert(s.text.to_string(), id);
                    labels.insert(id, s.text.to_string());
                }
            }
            "init" | "final" | "trans" => pending.push((line, w)),
            other => return Err(Error::syntax(line, w[0].column, format!("unknown directive `{other}`"))),
        }
    }
    let state = |w: &Word<'_>, label: &str, line: usize| {
        ids.get(label)
            .copied()
            .ok_or_else(|| Error::syntax(line, w.column, format!("undeclared state `{label}`")))
    };
    let alphabet = Arc::new(alphabet);
    let mut transitions = Vec::new();
    for (line, w) in &pending {
        let line = *line;
        let rest = &w[1..];
        match w[0].text {
            "init" => {
                if initial.is_some() {
                    return Err(Error::syntax(line, w[0].column, "initial distribution given twice"));
                }
                initial = Some(read_dist(line, rest, |w, l| state(w, l, line))?);
            }
            "final" => {
                for s in rest {
                    finals.insert(state(s, s.text, line)?);
                }
            }
            _ => {
                if rest.len() < 3 || rest[2].text != "->" {
                    return Err(Error::syntax(line, w[0].column, "expected `trans SOURCE ACTION -> DISTRIBUTION`"));
                }
                let source = state(&rest[0], rest[0].text, line)?;
                let action = if rest[1].text == TAU {
                    Action::Tau
                } else {
                    alphabet
                        .action(rest[1].text)
                        .map_err(|e| Error::syntax(line, rest[1].column, e.to_string()))?
                };
                let target = read_dist(line, &rest[3..], |w, l| state(w, l, line))?;
                transitions.push(Transition { source, action, target });
            }
        }
    }
    let initial = initial.ok_or_else(|| Error::syntax(first, 1, "missing `init` line"))?;
    let states: BTreeSet<StateId> = ids.values().copied().collect();
    let provenance = states.iter().map(|s| (*s, Origin::Base)).collect();
    let automaton = ProbAutomaton::from_parts(AutomatonParts {
        alphabet,
        states,
        transitions,
        initial,
        finals,
        labels,
        provenance,
    })?;
    Ok((name, automaton))
}

/// State names for writing: the automaton's labels when they are usable,
/// otherwise `s0, s1, …` in state order.
pub fn output_labels(p: &ProbAutomaton) -> BTreeMap<StateId, String> {
    let labels = p.labels();
    let distinct: BTreeSet<&String> = labels.values().collect();
    let usable = labels.len() == p.state_count()
        && distinct.len() == labels.len()
        && labels
            .values()
            .all(|l| !l.is_empty() && !l.contains(':') && !l.contains('#') && !l.chars().any(char::is_whitespace));
    if usable {
        labels.clone()
    } else {
        p.canonical_labels("s")
    }
}

fn dist_text(d: &Dist, labels: &BTreeMap<StateId, String>) -> String {
    d.iter()
        .map(|(s, p)| format!("{}:{}", labels[&s], crate::dist::format_prob(p)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes an automaton; state names come from [`output_labels`].
pub fn write_automaton(name: &str, p: &ProbAutomaton) -> String {
    let labels = output_labels(p);
    let join = |it: &mut dyn Iterator<Item = String>| it.map(|s| format!(" {s}")).collect::<String>();
    let mut out = format!("automaton {name}\n");
    out += &format!("external{}\n", join(&mut p.alphabet().external().map(String::from)));
    out += &format!("internal{}\n", join(&mut p.alphabet().internal().map(String::from)));
    out += &format!("states{}\n", join(&mut p.states().iter().map(|s| labels[s].clone())));
    out += &format!("init {}\n", dist_text(p.initial(), &labels));
    out += &format!("final{}\n", join(&mut p.finals().iter().map(|s| labels[s].clone())));
    for t in p.transitions() {
        out += &format!("trans {} {} -> {}\n", labels[&t.source], t.action, dist_text(&t.target, &labels));
    }
    out
}

/// Header of a relation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationHeader {
    pub name: String,
    pub left: String,
    pub right: String,
}

/// Parses a relation between two loaded automata, resolving state names
/// through their labels.
pub fn read_relation(text: &str, left: &ProbAutomaton, right: &ProbAutomaton) -> Result<(RelationHeader, SimRelation)> {
    let mut lines = lines(text);
    let (first, head) = lines.next().ok_or_else(|| Error::syntax(1, 1, "empty relation file"))?;
    let shape: Vec<&str> = head.iter().map(|w| w.text).collect();
    let header = match shape.as_slice() {
        ["relation", name, "from", l, "to", r] => RelationHeader {
            name: name.to_string(),
            left: l.to_string(),
            right: r.to_string(),
        },
        _ => return Err(Error::syntax(first, 1, "expected `relation NAME from LEFT to RIGHT`")),
    };
    let (lnames, rnames) = (output_labels(left), output_labels(right));
    let lookup = |names: &BTreeMap<StateId, String>, label: &str| names.iter().find(|(_, l)| l.as_str() == label).map(|(s, _)| *s);
    let mut relation = SimRelation::new();
    for (line, w) in lines {
        if w[0].text != "pair" || w.len() < 4 || w[2].text != "~" {
            return Err(Error::syntax(line, w[0].column, "expected `pair STATE ~ DISTRIBUTION`"));
        }
        let x = lookup(&lnames, w[1].text)
            .ok_or_else(|| Error::syntax(line, w[1].column, format!("`{}` is not a state of {}", w[1].text, header.left)))?;
        let d = read_dist(line, &w[3..], |w, l| {
            lookup(&rnames, l).ok_or_else(|| Error::syntax(line, w.column, format!("`{l}` is not a state of {}", header.right)))
        })?;
        relation.insert(x, d);
    }
    Ok((header, relation))
}

pub fn write_relation(header: &RelationHeader, relation: &SimRelation, left: &ProbAutomaton, right: &ProbAutomaton) -> String {
    let (lnames, rnames) = (output_labels(left), output_labels(right));
    let mut out = format!("relation {} from {} to {}\n", header.name, header.left, header.right);
    for (x, d) in relation.iter() {
        out += &format!("pair {} ~ {}\n", lnames[&x], dist_text(d, &rnames));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::verify_simulation;

    const SMALL: &str = "\
automaton A   # a comment
external coin tea
internal stuck
states s0 s1 s2
init s0:1
final s2
trans s0 coin -> s1:1/5 s2:0.8
trans s1 stuck -> s0:1
trans s1 tau -> s2:1
";

    #[test]
    fn read_then_write_round_trips() {
        let (name, a) = read_automaton(SMALL).unwrap();
        assert_eq!(name, "A");
        assert_eq!(a.state_count(), 3);
        assert_eq!(a.transitions().len(), 3);
        let text = write_automaton(&name, &a);
        assert!(text.contains("trans s0 coin -> s1:1/5 s2:4/5\n"));
        let (_, b) = read_automaton(&text).unwrap();
        assert_eq!(write_automaton(&name, &b), text);
    }

    #[test]
    fn diagnostics_point_at_the_problem() {
        let bad = SMALL.replace("trans s1 tau", "trans s9 tau");
        let err = read_automaton(&bad).unwrap_err();
        assert!(matches!(err, Error::Syntax { location, .. } if location.line == 9 && location.column == 7), "{err}");
        let bad = SMALL.replace("s2:0.8", "s2:3/5");
        assert!(read_automaton(&bad).is_err());
        let bad = SMALL.replace("coin ->", "milk ->");
        assert!(matches!(read_automaton(&bad), Err(Error::Syntax { .. })));
        assert!(read_automaton("states s0\n").is_err());
    }

    #[test]
    fn relations_round_trip_and_verify() {
        let (_, a) = read_automaton(SMALL).unwrap();
        let text = "relation Id from A to A\npair s0 ~ s0:1\npair s1 ~ s1:1\npair s2 ~ s2:1\n";
        let (header, relation) = read_relation(text, &a, &a).unwrap();
        assert_eq!(header.left, "A");
        assert_eq!(write_relation(&header, &relation, &a, &a), text);
        assert!(verify_simulation(&relation, &a, &a, 6).unwrap().is_verified());
        assert!(read_relation("relation R from A to A\npair q ~ s0:1\n", &a, &a).is_err());
    }
}
