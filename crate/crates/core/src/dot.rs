//! Graphviz export.
//!
//! States are circles (finals double circles) named by their labels.
//! Action edges are solid. A transition into a proper distribution goes to
//! a small point node, from which dashed edges labelled with probabilities
//! fan out; equal distributions share one point node. The output depends
//! only on the automaton, so it is stable across runs.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::automaton::ProbAutomaton;
use crate::dist::{format_prob, Dist};
use crate::format::output_labels;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders `p` as a DOT digraph called `name`.
pub fn to_dot(name: &str, p: &ProbAutomaton) -> String {
    let labels = output_labels(p);
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    writeln!(out, "  rankdir=TB;").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    writeln!(out, "  __start [shape=none, label=\"\", width=0, height=0];").unwrap();
    for s in p.states() {
        let shape = if p.is_final(*s) { " [shape=doublecircle]" } else { "" };
        writeln!(out, "  {}{shape};", quote(&labels[s])).unwrap();
    }
    let mut branches: BTreeMap<&Dist, String> = BTreeMap::new();
    let proper = std::iter::once(p.initial()).chain(p.transitions().iter().map(|t| &t.target));
    for d in proper.filter(|d| d.is_point().is_none()) {
        let next = format!("__d{}", branches.len());
        branches.entry(d).or_insert(next);
    }
    for (d, node) in &branches {
        writeln!(out, "  {node} [shape=point, width=0.08];").unwrap();
        for (y, w) in d.iter() {
            writeln!(out, "  {node} -> {} [style=dashed, label={}];", quote(&labels[&y]), quote(&format_prob(w))).unwrap();
        }
    }
    let head = |d: &Dist| match d.is_point() {
        Some(y) => quote(&labels[&y]),
        None => branches[d].clone(),
    };
    writeln!(out, "  __start -> {};", head(p.initial())).unwrap();
    for t in p.transitions() {
        let style = if p.is_unobservable(&t.action) { ", style=bold" } else { "" };
        writeln!(out, "  {} -> {} [label={}{style}];", quote(&labels[&t.source]), head(&t.target), quote(t.action.name())).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::read_automaton;
    use crate::ops;
    use std::sync::Arc;

    #[test]
    fn skip_is_one_final_node() {
        let sigma = Arc::new(crate::alphabet::ActionAlphabet::new(["a"], Vec::<&str>::new()).unwrap());
        let dot = to_dot("skip", &ops::skip(&sigma));
        assert_eq!(dot.matches("doublecircle").count(), 1);
        assert_eq!(dot.matches("shape=point").count(), 0);
        assert_eq!(dot.lines().filter(|l| l.contains(" -> ")).count(), 1);
    }

    #[test]
    fn branches_are_shared_and_stable() {
        let (_, m) = read_automaton(include_str!("../data/m.aut")).unwrap();
        let dot = to_dot("M", &m);
        assert_eq!(dot.matches("shape=point").count(), 1);
        assert!(dot.contains("[style=dashed, label=\"1/5\"]"));
        assert!(dot.contains("[style=dashed, label=\"4/5\"]"));
        assert!(dot.contains("\"s3\" -> __d0 [label=\"kick\"]"));
        assert_eq!(dot, to_dot("M", &m));
    }
}
