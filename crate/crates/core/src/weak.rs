//! Combined transitions and weak transitions.
//!
//! A weak move `ν ⟹a ν′` is encoded as a flow problem over the simulating
//! automaton: the mass of `ν` travels along unobservable transitions, takes
//! one `a`-step (for external `a`), travels again and stops at `ν′`. The
//! occupancy encoding has one flow variable per transition and is a
//! relaxation of finite derivations, so its infeasibility is definitive. A
//! feasible occupancy whose positive flows are acyclic unrolls into an exact
//! finite derivation; otherwise a layered encoding bounded by the horizon is
//! tried.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::alphabet::Action;
use crate::automaton::{ProbAutomaton, StateId};
use crate::dist::{Dist, Prob};
use crate::lift::{add_lift, LiftVars};
use crate::lp::{Affine, LinearProgram, LpOutcome, Var};
use crate::relation::SimRelation;

/// What one unit of mass at a state does during a lifted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepChoice {
    /// Remain in place (only for unobservable steps).
    Stay,
    /// Take the transition with this index.
    Take(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRow {
    pub weight: Prob,
    pub state: StateId,
    pub choice: StepChoice,
}

/// One lifted (combined) step: the mass of every state is split among its
/// choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedStep {
    pub rows: Vec<StepRow>,
}

impl LiftedStep {
    /// Executes the step from `from`. With `visible = Some(a)` every row must
    /// take an `a`-transition; otherwise rows stay or take unobservable
    /// transitions.
    pub fn apply(&self, q: &ProbAutomaton, from: &Dist, visible: Option<&Action>) -> Result<Dist, String> {
        let mut used: BTreeMap<StateId, Prob> = BTreeMap::new();
        let mut out: Vec<(StateId, Prob)> = Vec::new();
        for row in &self.rows {
            if !row.weight.is_positive() {
                return Err(format!("nonpositive weight at {}", row.state));
            }
            *used.entry(row.state).or_insert_with(Prob::zero) += &row.weight;
            match row.choice {
                StepChoice::Stay => {
                    if visible.is_some() {
                        return Err(format!("{} idles during a visible step", row.state));
                    }
                    out.push((row.state, row.weight.clone()));
                }
                StepChoice::Take(i) => {
                    let t = q
                        .transitions()
                        .get(i)
                        .ok_or_else(|| format!("no transition #{i}"))?;
                    if t.source != row.state {
                        return Err(format!("transition #{i} does not leave {}", row.state));
                    }
                    let ok = match visible {
                        Some(a) => t.action == *a,
                        None => q.is_unobservable(&t.action),
                    };
                    if !ok {
                        return Err(format!("transition #{i} has the wrong label `{}`", t.action));
                    }
                    out.extend(t.target.iter().map(|(y, p)| (y, p * &row.weight)));
                }
            }
        }
        if used.len() != from.len() || used.iter().any(|(x, p)| from.weight(*x) != *p) {
            return Err("step rows do not partition the current distribution".into());
        }
        Dist::from_weights(out).map_err(|e| e.to_string())
    }
}

/// A replayable weak move: unobservable steps, optionally one visible step,
/// then unobservable steps again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub start: Dist,
    pub pre: Vec<LiftedStep>,
    pub visible: Option<(Action, LiftedStep)>,
    pub post: Vec<LiftedStep>,
    pub end: Dist,
}

impl Derivation {
    pub fn idle(d: Dist) -> Self {
        Derivation {
            start: d.clone(),
            pre: Vec::new(),
            visible: None,
            post: Vec::new(),
            end: d,
        }
    }

    /// Number of lifted steps, the visible one included.
    pub fn steps(&self) -> usize {
        self.pre.len() + self.post.len() + usize::from(self.visible.is_some())
    }

    /// Re-executes every step and compares the outcome with `end`.
    pub fn replay(&self, q: &ProbAutomaton) -> Result<(), String> {
        let mut cur = self.start.clone();
        for step in &self.pre {
            cur = step.apply(q, &cur, None)?;
        }
        if let Some((a, step)) = &self.visible {
            if q.is_unobservable(a) {
                return Err(format!("visible step labelled by unobservable `{a}`"));
            }
            cur = step.apply(q, &cur, Some(a))?;
        }
        for step in &self.post {
            cur = step.apply(q, &cur, None)?;
        }
        if cur != self.end {
            return Err(format!("derivation ends in {cur:?}, claimed {:?}", self.end));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeakResult {
    Reached(Derivation),
    /// No finite derivation exists at any horizon.
    Unreachable,
    /// No derivation within the horizon was found, though a longer one may
    /// exist.
    HorizonExhausted,
}

/// The condition the final distribution of a weak move must satisfy.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// Exactly this distribution.
    Exactly(&'a Dist),
    /// Any distribution supported inside the set.
    Within(&'a BTreeSet<StateId>),
    /// Any `ν′` with `source S̄ ν′`.
    LiftOf {
        relation: &'a SimRelation,
        source: &'a Dist,
    },
    /// No condition.
    Any,
}

/// `from ⟹ ν′` with `ν′` satisfying the target.
pub fn weak_reach(q: &ProbAutomaton, from: &Dist, target: Target<'_>, horizon: usize) -> WeakResult {
    weak_action(q, from, &Action::Tau, target, horizon)
}

/// `from ⟹a ν′` with `ν′` satisfying the target. For unobservable `a` this is
/// the plain weak move.
pub fn weak_action(q: &ProbAutomaton, from: &Dist, action: &Action, target: Target<'_>, horizon: usize) -> WeakResult {
    weak_action_with(&MoveBuilder::new(q), from, action, target, horizon)
}

pub(crate) fn weak_action_with(
    builder: &MoveBuilder<'_>,
    from: &Dist,
    action: &Action,
    target: Target<'_>,
    horizon: usize,
) -> WeakResult {
    let q = builder.automaton();
    let Some(solved) = solve_move(builder, from, action, target, Mode::Occupancy) else {
        return WeakResult::Unreachable;
    };
    if let Some(d) = solved.moves.derivation(q, from, &solved.values) {
        if d.pre.len() <= horizon && d.post.len() <= horizon {
            return WeakResult::Reached(d);
        }
    }
    let mut layers = 1;
    loop {
        layers = (layers * 2).min(horizon);
        if let Some(solved) = solve_move(builder, from, action, target, Mode::Layered(layers)) {
            if let Some(d) = solved.moves.derivation(q, from, &solved.values) {
                return WeakResult::Reached(d);
            }
        }
        if layers >= horizon {
            return WeakResult::HorizonExhausted;
        }
    }
}

/// Like [`solve_move`], but the solution must unroll into a derivation of at
/// most `horizon` steps per phase: cyclic occupancy solutions are replaced by
/// layered ones of growing depth.
pub(crate) fn solve_finite(
    builder: &MoveBuilder<'_>,
    from: &Dist,
    action: &Action,
    target: Target<'_>,
    horizon: usize,
) -> Option<Solved> {
    let q = builder.automaton();
    let solved = solve_move(builder, from, action, target, Mode::Occupancy)?;
    if let Some(d) = solved.moves.derivation(q, from, &solved.values) {
        if d.pre.len() <= horizon && d.post.len() <= horizon {
            return Some(solved);
        }
    }
    let mut layers = 1;
    loop {
        layers = (layers * 2).min(horizon);
        if let Some(solved) = solve_move(builder, from, action, target, Mode::Layered(layers)) {
            if solved.moves.derivation(q, from, &solved.values).is_some() {
                return Some(solved);
            }
        }
        if layers >= horizon {
            return None;
        }
    }
}

pub(crate) struct Solved {
    pub(crate) moves: MoveVars,
    pub(crate) lift: Option<LiftVars>,
    pub(crate) values: Vec<Prob>,
}

pub(crate) fn solve_move(
    builder: &MoveBuilder<'_>,
    from: &Dist,
    action: &Action,
    target: Target<'_>,
    mode: Mode,
) -> Option<Solved> {
    let q = builder.automaton();
    let end_states: BTreeSet<StateId> = match target {
        Target::Exactly(d) => d.support().collect(),
        Target::Within(set) => set.clone(),
        Target::LiftOf { relation, source } => source
            .support()
            .flat_map(|x| relation.image(x).flat_map(|d| d.support()))
            .collect(),
        Target::Any => q.states().clone(),
    };
    let mut lp = LinearProgram::new();
    let start = from.iter().map(|(y, p)| (y, Affine::constant(p.clone()))).collect();
    let mv = builder.build(&mut lp, &start, action, &end_states, mode);
    let mut lift = None;
    match target {
        Target::Exactly(d) => {
            for (y, p) in d.iter() {
                let v = *mv.end().get(&y)?;
                let mut e = Affine::var(v);
                e.constant = -p;
                lp.add_zero(e);
            }
        }
        Target::LiftOf { relation, source } => {
            let end = mv.end().iter().map(|(y, v)| (*y, Affine::var(*v))).collect();
            lift = Some(add_lift(&mut lp, relation, source, &end)?);
        }
        Target::Within(_) | Target::Any => {}
    }
    match lp.solve() {
        LpOutcome::Optimal { values, .. } => Some(Solved {
            moves: mv,
            lift,
            values,
        }),
        _ => None,
    }
}

/// The set of combined `a`-steps available from a distribution.
#[derive(Debug, Clone)]
pub struct CombinedStep {
    action: Action,
    options: Vec<(StateId, Prob, Vec<StepChoice>)>,
}

/// Combined `a`-steps from `from`. Unobservable actions may also idle.
pub fn combined_step(q: &ProbAutomaton, from: &Dist, action: &Action) -> CombinedStep {
    let unobservable = q.is_unobservable(action);
    let options = from
        .iter()
        .map(|(x, p)| {
            let mut choices: Vec<StepChoice> = q
                .outgoing(x)
                .iter()
                .filter(|i| q.transition(**i).action == *action)
                .map(|i| StepChoice::Take(*i))
                .collect();
            if unobservable {
                choices.push(StepChoice::Stay);
            }
            (x, p.clone(), choices)
        })
        .collect();
    CombinedStep {
        action: action.clone(),
        options,
    }
}

impl CombinedStep {
    fn outcome(q: &ProbAutomaton, x: StateId, choice: StepChoice) -> Dist {
        match choice {
            StepChoice::Stay => Dist::point(x),
            StepChoice::Take(i) => q.transition(i).target.clone(),
        }
    }

    /// Whether every state of the source can move at all.
    pub fn is_enabled(&self) -> bool {
        self.options.iter().all(|(_, _, c)| !c.is_empty())
    }

    /// A step from the source to `target`, if `target` lies in the polytope.
    pub fn contains(&self, q: &ProbAutomaton, target: &Dist) -> Option<LiftedStep> {
        let mut lp = LinearProgram::new();
        let mut vars = Vec::new();
        let mut columns: BTreeMap<StateId, Affine> = BTreeMap::new();
        for (x, p, choices) in &self.options {
            let mut row = Affine::constant(-p);
            for c in choices {
                let v = lp.add_var(Prob::zero());
                row.add_term(v, Prob::one());
                for (y, w) in Self::outcome(q, *x, *c).iter() {
                    columns.entry(y).or_default().add_term(v, w.clone());
                }
                vars.push((*x, *c, v));
            }
            lp.add_zero(row);
        }
        let states: BTreeSet<StateId> = columns.keys().chain(target.support().collect::<Vec<_>>().iter()).copied().collect();
        for y in states {
            let mut e = columns.remove(&y).unwrap_or_default();
            e.constant = -target.weight(y);
            lp.add_zero(e);
        }
        let values = lp.solve().values()?.to_vec();
        let rows = vars
            .into_iter()
            .filter(|(_, _, v)| values[*v].is_positive())
            .map(|(x, c, v)| StepRow {
                weight: values[v].clone(),
                state: x,
                choice: c,
            })
            .collect();
        Some(LiftedStep { rows })
    }

    /// Targets of the deterministic choices (one option per state), the
    /// vertices of the polytope. Stops after `limit` combinations.
    pub fn vertices(&self, q: &ProbAutomaton, limit: usize) -> Vec<Dist> {
        let mut out = Vec::new();
        let mut index = vec![0usize; self.options.len()];
        if !self.is_enabled() {
            return out;
        }
        loop {
            let mut parts = Vec::new();
            for ((x, p, choices), i) in self.options.iter().zip(&index) {
                for (y, w) in Self::outcome(q, *x, choices[*i]).iter() {
                    parts.push((y, w * p));
                }
            }
            out.push(Dist::from_weights(parts).expect("convex combination"));
            if out.len() >= limit {
                return out;
            }
            let mut k = 0;
            loop {
                if k == index.len() {
                    return out;
                }
                index[k] += 1;
                if index[k] < self.options[k].2.len() {
                    break;
                }
                index[k] = 0;
                k += 1;
            }
        }
    }

    pub fn action(&self) -> &Action {
        &self.action
    }
}

/// Encoding of the mass flow in one phase of a weak move.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Mode {
    Occupancy,
    Layered(usize),
}

#[derive(Debug)]
enum PhaseKind {
    Occupancy { flows: Vec<(usize, Var)> },
    Layered { layers: Vec<Layer> },
}

#[derive(Debug, Default)]
struct Layer {
    stays: Vec<(StateId, Var)>,
    flows: Vec<(usize, Var)>,
}

#[derive(Debug)]
struct Phase {
    kind: PhaseKind,
    stops: BTreeMap<StateId, Var>,
}

/// LP variables of one weak move.
#[derive(Debug)]
pub(crate) struct MoveVars {
    pre: Phase,
    visible: Option<(Action, Vec<(usize, Var)>)>,
    post: Option<Phase>,
}

impl MoveVars {
    /// Variables holding the final mass of each state.
    pub(crate) fn end(&self) -> &BTreeMap<StateId, Var> {
        match &self.post {
            Some(post) => &post.stops,
            None => &self.pre.stops,
        }
    }

    /// Unrolls a solution into a derivation starting at `start`. `None` when
    /// the occupancy flows contain a cycle.
    pub(crate) fn derivation(&self, q: &ProbAutomaton, start: &Dist, values: &[Prob]) -> Option<Derivation> {
        let mut cur = start.clone();
        let pre = unroll(&self.pre, q, &mut cur, values)?;
        let visible = match &self.visible {
            Some((a, flows)) => {
                let rows: Vec<StepRow> = flows
                    .iter()
                    .filter(|(_, v)| values[*v].is_positive())
                    .map(|(t, v)| StepRow {
                        weight: values[*v].clone(),
                        state: q.transition(*t).source,
                        choice: StepChoice::Take(*t),
                    })
                    .collect();
                let step = LiftedStep { rows };
                cur = step.apply(q, &cur, Some(a)).ok()?;
                Some((a.clone(), step))
            }
            None => None,
        };
        let post = match &self.post {
            Some(phase) => unroll(phase, q, &mut cur, values)?,
            None => Vec::new(),
        };
        Some(Derivation {
            start: start.clone(),
            pre,
            visible,
            post,
            end: cur,
        })
    }
}

fn unroll(phase: &Phase, q: &ProbAutomaton, cur: &mut Dist, values: &[Prob]) -> Option<Vec<LiftedStep>> {
    let positive = |v: &Var| values[*v].is_positive();
    let mut steps = Vec::new();
    match &phase.kind {
        PhaseKind::Layered { layers } => {
            for layer in layers {
                if !layer.flows.iter().any(|(_, v)| positive(v)) {
                    continue;
                }
                let mut rows: Vec<StepRow> = layer
                    .stays
                    .iter()
                    .filter(|(_, v)| positive(v))
                    .map(|(y, v)| StepRow {
                        weight: values[*v].clone(),
                        state: *y,
                        choice: StepChoice::Stay,
                    })
                    .collect();
                rows.extend(layer.flows.iter().filter(|(_, v)| positive(v)).map(|(t, v)| StepRow {
                    weight: values[*v].clone(),
                    state: q.transition(*t).source,
                    choice: StepChoice::Take(*t),
                }));
                let step = LiftedStep { rows };
                *cur = step.apply(q, cur, None).ok()?;
                steps.push(step);
            }
        }
        PhaseKind::Occupancy { flows } => {
            let active: Vec<(usize, Prob)> = flows
                .iter()
                .filter(|(_, v)| positive(v))
                .map(|(t, v)| (*t, values[*v].clone()))
                .collect();
            if active.is_empty() {
                return Some(steps);
            }
            // Longest-path levels of the positive-flow graph.
            let mut out_edges: BTreeMap<StateId, BTreeSet<StateId>> = BTreeMap::new();
            let mut indegree: BTreeMap<StateId, usize> = BTreeMap::new();
            for (t, _) in &active {
                let tr = q.transition(*t);
                let succ = out_edges.entry(tr.source).or_default();
                for y in tr.target.support() {
                    succ.insert(y);
                }
            }
            for (x, succ) in &out_edges {
                indegree.entry(*x).or_insert(0);
                for y in succ {
                    *indegree.entry(*y).or_insert(0) += 1;
                }
            }
            let mut level: BTreeMap<StateId, usize> = BTreeMap::new();
            let mut queue: Vec<StateId> = indegree.iter().filter(|(_, d)| **d == 0).map(|(s, _)| *s).collect();
            let mut seen = 0;
            while let Some(x) = queue.pop() {
                seen += 1;
                let lx = *level.entry(x).or_insert(0);
                if let Some(succ) = out_edges.get(&x) {
                    for y in succ {
                        let ly = level.entry(*y).or_insert(0);
                        *ly = (*ly).max(lx + 1);
                        let d = indegree.get_mut(y).expect("indexed");
                        *d -= 1;
                        if *d == 0 {
                            queue.push(*y);
                        }
                    }
                }
            }
            if seen != indegree.len() {
                return None;
            }
            let mut by_level: BTreeMap<usize, Vec<(usize, Prob)>> = BTreeMap::new();
            for (t, w) in active {
                by_level.entry(level[&q.transition(t).source]).or_default().push((t, w));
            }
            for (_, group) in by_level {
                let mut moving: BTreeMap<StateId, Prob> = BTreeMap::new();
                let mut rows = Vec::new();
                for (t, w) in &group {
                    let x = q.transition(*t).source;
                    *moving.entry(x).or_insert_with(Prob::zero) += w;
                    rows.push(StepRow {
                        weight: w.clone(),
                        state: x,
                        choice: StepChoice::Take(*t),
                    });
                }
                for (x, p) in cur.iter() {
                    let rest = p - moving.get(&x).cloned().unwrap_or_else(Prob::zero);
                    if rest.is_negative() {
                        return None;
                    }
                    if rest.is_positive() {
                        rows.push(StepRow {
                            weight: rest,
                            state: x,
                            choice: StepChoice::Stay,
                        });
                    }
                }
                let step = LiftedStep { rows };
                *cur = step.apply(q, cur, None).ok()?;
                steps.push(step);
            }
        }
    }
    Some(steps)
}

/// Builds weak-move encodings over one simulating automaton.
pub(crate) struct MoveBuilder<'q> {
    q: &'q ProbAutomaton,
    unobservable: Vec<bool>,
}

impl<'q> MoveBuilder<'q> {
    pub(crate) fn new(q: &'q ProbAutomaton) -> Self {
        let unobservable = q.transitions().iter().map(|t| q.is_unobservable(&t.action)).collect();
        MoveBuilder { q, unobservable }
    }

    pub(crate) fn automaton(&self) -> &'q ProbAutomaton {
        self.q
    }

    /// States from which some scheduler drives all mass into `target` in
    /// finitely many unobservable steps.
    pub(crate) fn attractor(&self, target: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut attr = target.clone();
        loop {
            let mut changed = false;
            for (i, t) in self.q.transitions().iter().enumerate() {
                if self.unobservable[i] && !attr.contains(&t.source) && t.target.support().all(|y| attr.contains(&y)) {
                    attr.insert(t.source);
                    changed = true;
                }
            }
            if !changed {
                return attr;
            }
        }
    }

    /// Sources of `action`-transitions whose whole target lies in `post`.
    pub(crate) fn ready(&self, action: &Action, post: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        self.q
            .transitions()
            .iter()
            .filter(|t| t.action == *action && t.target.support().all(|y| post.contains(&y)))
            .map(|t| t.source)
            .collect()
    }

    /// States from which a weak `action`-move can end entirely in `end`.
    pub(crate) fn can_reach(&self, action: &Action, end: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let post = self.attractor(end);
        if self.q.is_unobservable(action) {
            post
        } else {
            self.attractor(&self.ready(action, &post))
        }
    }

    /// Adds the encoding of a weak `action`-move whose initial mass is given
    /// by `start` and whose final mass may only rest on `end`.
    pub(crate) fn build(
        &self,
        lp: &mut LinearProgram,
        start: &BTreeMap<StateId, Affine>,
        action: &Action,
        end: &BTreeSet<StateId>,
        mode: Mode,
    ) -> MoveVars {
        let post_region = self.attractor(end);
        if self.q.is_unobservable(action) {
            let pre = self.phase(lp, start, &post_region, end, mode);
            return MoveVars {
                pre,
                visible: None,
                post: None,
            };
        }
        let ready = self.ready(action, &post_region);
        let pre_region = self.attractor(&ready);
        let pre = self.phase(lp, start, &pre_region, &ready, mode);
        let mut flows = Vec::new();
        let mut inflow: BTreeMap<StateId, Affine> = BTreeMap::new();
        for (y, s) in &pre.stops {
            let mut balance = Affine::var(*s);
            for i in self.q.outgoing(*y) {
                let t = self.q.transition(*i);
                if t.action != *action || !t.target.support().all(|z| post_region.contains(&z)) {
                    continue;
                }
                let g = lp.add_var(Prob::one());
                balance.add_term(g, -Prob::one());
                for (z, p) in t.target.iter() {
                    inflow.entry(z).or_default().add_term(g, p.clone());
                }
                flows.push((*i, g));
            }
            lp.add_zero(balance);
        }
        let post = self.phase(lp, &inflow, &post_region, end, mode);
        MoveVars {
            pre,
            visible: Some((action.clone(), flows)),
            post: Some(post),
        }
    }

    fn phase(
        &self,
        lp: &mut LinearProgram,
        inflow: &BTreeMap<StateId, Affine>,
        region: &BTreeSet<StateId>,
        can_stop: &BTreeSet<StateId>,
        mode: Mode,
    ) -> Phase {
        // Mass outside the region can never finish, so it must be zero.
        for (y, e) in inflow {
            if !region.contains(y) {
                lp.add_zero(e.clone());
            }
        }
        let allowed = |i: usize| {
            self.unobservable[i] && self.q.transition(i).target.support().all(|z| region.contains(&z))
        };
        let mut states: BTreeSet<StateId> = inflow.keys().filter(|y| region.contains(y)).copied().collect();
        let mut stack: Vec<StateId> = states.iter().copied().collect();
        while let Some(y) = stack.pop() {
            for &i in self.q.outgoing(y) {
                if allowed(i) {
                    for z in self.q.transition(i).target.support() {
                        if states.insert(z) {
                            stack.push(z);
                        }
                    }
                }
            }
        }
        let mut stops = BTreeMap::new();
        match mode {
            Mode::Occupancy => {
                let mut balance: BTreeMap<StateId, Affine> = states
                    .iter()
                    .map(|y| (*y, inflow.get(y).cloned().unwrap_or_default()))
                    .collect();
                let mut flows = Vec::new();
                for y in &states {
                    if can_stop.contains(y) {
                        let s = lp.add_var(Prob::zero());
                        balance.get_mut(y).expect("state").add_term(s, -Prob::one());
                        stops.insert(*y, s);
                    }
                    for &i in self.q.outgoing(*y) {
                        if !allowed(i) {
                            continue;
                        }
                        let f = lp.add_var(Prob::one());
                        balance.get_mut(y).expect("state").add_term(f, -Prob::one());
                        for (z, p) in self.q.transition(i).target.iter() {
                            balance.get_mut(&z).expect("closed region").add_term(f, p.clone());
                        }
                        flows.push((i, f));
                    }
                }
                for (_, e) in balance {
                    lp.add_zero(e);
                }
                Phase {
                    kind: PhaseKind::Occupancy { flows },
                    stops,
                }
            }
            Mode::Layered(horizon) => {
                let mut mass: BTreeMap<StateId, Affine> = inflow
                    .iter()
                    .filter(|(y, _)| states.contains(y))
                    .map(|(y, e)| (*y, e.clone()))
                    .collect();
                let mut layers = Vec::new();
                for _ in 0..horizon {
                    let mut next: BTreeMap<StateId, Affine> = BTreeMap::new();
                    let mut layer = Layer::default();
                    for (y, m) in &mass {
                        let mut balance = m.clone();
                        let stay = lp.add_var(Prob::zero());
                        balance.add_term(stay, -Prob::one());
                        next.entry(*y).or_default().add_term(stay, Prob::one());
                        layer.stays.push((*y, stay));
                        for &i in self.q.outgoing(*y) {
                            if !allowed(i) {
                                continue;
                            }
                            let f = lp.add_var(Prob::one());
                            balance.add_term(f, -Prob::one());
                            for (z, p) in self.q.transition(i).target.iter() {
                                next.entry(z).or_default().add_term(f, p.clone());
                            }
                            layer.flows.push((i, f));
                        }
                        lp.add_zero(balance);
                    }
                    mass = next;
                    layers.push(layer);
                }
                for (y, m) in mass {
                    let mut e = m;
                    if can_stop.contains(&y) {
                        let s = lp.add_var(Prob::zero());
                        e.add_term(s, -Prob::one());
                        stops.insert(y, s);
                    }
                    lp.add_zero(e);
                }
                Phase {
                    kind: PhaseKind::Layered { layers },
                    stops,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::ActionAlphabet;
    use crate::automaton::{AutomatonParts, Origin, Transition};
    use crate::dist::ratio;
    use std::sync::Arc;

    fn sigma() -> Arc<ActionAlphabet> {
        Arc::new(ActionAlphabet::new(["a", "b", "kick", "tea"], ["i"]).unwrap())
    }

    struct Builder {
        alphabet: Arc<ActionAlphabet>,
        states: Vec<StateId>,
        transitions: Vec<Transition>,
    }

    impl Builder {
        fn new(n: usize) -> Self {
            Builder {
                alphabet: sigma(),
                states: (0..n).map(|_| crate::automaton::StateIdAllocator::fresh()).collect(),
                transitions: Vec::new(),
            }
        }
        fn tr(&mut self, from: usize, a: &str, to: &[(usize, Prob)]) -> &mut Self {
            let action = self.alphabet.action(a).unwrap();
            let target = Dist::from_weights(to.iter().map(|(i, p)| (self.states[*i], p.clone()))).unwrap();
            self.transitions.push(Transition {
                source: self.states[from],
                action,
                target,
            });
            self
        }
        fn build(&self, finals: &[usize]) -> ProbAutomaton {
            ProbAutomaton::from_parts(AutomatonParts {
                alphabet: self.alphabet.clone(),
                states: self.states.iter().copied().collect(),
                transitions: self.transitions.clone(),
                initial: Dist::point(self.states[0]),
                finals: finals.iter().map(|i| self.states[*i]).collect(),
                labels: Default::default(),
                provenance: self.states.iter().map(|s| (*s, Origin::Base)).collect(),
            })
            .unwrap()
        }
    }

    fn one() -> Prob {
        Prob::one()
    }

    #[test]
    fn reflexive_closure() {
        let mut b = Builder::new(2);
        b.tr(0, "tau", &[(1, one())]);
        let q = b.build(&[]);
        let d = Dist::point(b.states[0]);
        let WeakResult::Reached(der) = weak_reach(&q, &d, Target::Exactly(&d), 4) else { panic!() };
        assert_eq!(der.steps(), 0);
        der.replay(&q).unwrap();
        let e = Dist::point(b.states[1]);
        let WeakResult::Reached(der) = weak_reach(&q, &d, Target::Exactly(&e), 4) else { panic!() };
        assert_eq!(der.steps(), 1);
        der.replay(&q).unwrap();
    }

    #[test]
    fn kick_from_mixture() {
        // 0.2δu0 + 0.8δu1 ⟹kick 0.2δu2 + 0.8δu3
        let mut b = Builder::new(4);
        b.tr(0, "kick", &[(2, one())]).tr(1, "kick", &[(3, one())]).tr(1, "tea", &[(3, one())]);
        let q = b.build(&[]);
        let u = &b.states;
        let from = Dist::from_weights([(u[0], ratio(1, 5)), (u[1], ratio(4, 5))]).unwrap();
        let to = Dist::from_weights([(u[2], ratio(1, 5)), (u[3], ratio(4, 5))]).unwrap();
        let kick = q.alphabet().action("kick").unwrap();
        let WeakResult::Reached(der) = weak_action(&q, &from, &kick, Target::Exactly(&to), 6) else { panic!() };
        der.replay(&q).unwrap();
        let tea = q.alphabet().action("tea").unwrap();
        assert_eq!(weak_action(&q, &from, &tea, Target::Any, 6), WeakResult::Unreachable);
    }

    #[test]
    fn internal_actions_are_absorbed() {
        let mut b = Builder::new(3);
        b.tr(0, "i", &[(1, one())]).tr(1, "a", &[(2, one())]);
        let q = b.build(&[2]);
        let a = q.alphabet().action("a").unwrap();
        let finals = q.finals().clone();
        let WeakResult::Reached(der) = weak_action(&q, &Dist::point(b.states[0]), &a, Target::Within(&finals), 4) else {
            panic!()
        };
        assert_eq!(der.steps(), 2);
        der.replay(&q).unwrap();
        let i = q.alphabet().action("i").unwrap();
        let WeakResult::Reached(idle) = weak_action(&q, &Dist::point(b.states[0]), &i, Target::Any, 4) else {
            panic!()
        };
        assert_eq!(idle.steps(), 0);
    }

    #[test]
    fn deadlock_cannot_reach_finals() {
        let b = Builder::new(1);
        let q = b.build(&[]);
        let finals = BTreeSet::new();
        assert_eq!(
            weak_reach(&q, &Dist::point(b.states[0]), Target::Within(&finals), 3),
            WeakResult::Unreachable
        );
    }

    #[test]
    fn limit_only_targets_are_unreachable() {
        // y -τ-> ½y + ½g: g is reached with probability one only in the limit.
        let mut b = Builder::new(2);
        b.tr(0, "tau", &[(0, ratio(1, 2)), (1, ratio(1, 2))]);
        let q = b.build(&[]);
        let g = Dist::point(b.states[1]);
        assert_eq!(
            weak_reach(&q, &Dist::point(b.states[0]), Target::Exactly(&g), 8),
            WeakResult::Unreachable
        );
    }

    #[test]
    fn horizon_is_monotone() {
        let mut b = Builder::new(4);
        b.tr(0, "tau", &[(1, one())]).tr(1, "tau", &[(2, one())]).tr(2, "tau", &[(3, one())]);
        let q = b.build(&[]);
        let from = Dist::point(b.states[0]);
        let to = Dist::point(b.states[3]);
        assert_eq!(weak_reach(&q, &from, Target::Exactly(&to), 2), WeakResult::HorizonExhausted);
        for h in 3..6 {
            assert!(matches!(weak_reach(&q, &from, Target::Exactly(&to), h), WeakResult::Reached(_)));
        }
    }

    #[test]
    fn combined_step_segment() {
        let mut b = Builder::new(3);
        b.tr(0, "a", &[(1, one())]).tr(0, "a", &[(2, one())]);
        let q = b.build(&[]);
        let a = q.alphabet().action("a").unwrap();
        let step = combined_step(&q, &Dist::point(b.states[0]), &a);
        let mid = Dist::from_weights([(b.states[1], ratio(1, 2)), (b.states[2], ratio(1, 2))]).unwrap();
        let lifted = step.contains(&q, &mid).unwrap();
        assert_eq!(lifted.apply(&q, &Dist::point(b.states[0]), Some(&a)).unwrap(), mid);
        assert!(step.contains(&q, &Dist::point(b.states[0])).is_none());
        assert_eq!(step.vertices(&q, 16).len(), 2);
        let tau = combined_step(&q, &Dist::point(b.states[1]), &Action::Tau);
        assert!(tau.contains(&q, &Dist::point(b.states[1])).is_some());
    }
}
