//! Acceptance run: one PASS/FAIL line per criterion, with the measured time
//! and the tolerance it was held to. Exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcka::automaton::StateId;
use pcka::dist::{flatten, ratio, Dist, DistOfDists, Prob};
use pcka::format::{read_automaton, read_relation};
use pcka::laws::congruence::{run_congruences, Closure, RelatedPair};
use pcka::laws::random::{TermGen, MAX_TERM_STATES};
use pcka::laws::{
    check_catalog_entry, check_star_induction, counterexample_catalog, law_registry, random_alphabet, run_suite, sample_instance,
    law_seed, find_law, STAR_INDUCTION_DEPTH,
};
use pcka::lift::{check_double_lift, check_lift};
use pcka::relation::SimRelation;
use pcka::rg::{can_perform, first_split, rule_asymmetric, Checker, Quintuple, VENDING_TERMS};
use pcka::simulation::{
    check_forward_certificate, compose, default_horizon, find_simulation, forward_witness_from_sim, verify_forward_simulation,
    verify_simulation, SearchConfig, Verdict,
};
use pcka::term::{compile, parse_file, Term};

const SEED: u64 = 42;

const FIG_HORIZON: usize = 6;
const FIG_LIMIT: Duration = Duration::from_secs(1);
const SEARCH_BUDGET: usize = 10_000;
const SEARCH_LIMIT: Duration = Duration::from_secs(10);
const RG_LIMIT: Duration = Duration::from_secs(30);
const SUITE_LIMIT: Duration = Duration::from_secs(300);

/// Instances per constructor law and per sequential/star closure.
const WITNESS_INSTANCES: usize = 200;
/// Instances per law that is only checked by search.
const SEARCH_INSTANCES: usize = 10;
const FORWARD_RUNS: usize = 100;
const LIFT_INSTANCES: usize = 500;
const LIFT_SUPPORT: usize = 4;
const REFLEXIVE_AUTOMATA: usize = 100;
const TRANSITIVE_PAIRS: usize = 50;
const CLOSURE_PAIRS: usize = 50;
const COMPOSE_CAP: usize = 64;
const INDUCTION_INSTANCES: usize = 50;

const WITNESS_LAWS: [&str; 6] = ["right-dist", "left-subdist", "pc-dist", "pc-supdist", "star-unfold", "interchange"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.3}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs_f64())
}

fn config() -> SearchConfig {
    SearchConfig {
        horizon: None,
        budget: SEARCH_BUDGET,
    }
}

fn literal_witness() -> Outcome {
    let (_, m) = read_automaton(include_str!("../data/m.aut")).unwrap();
    let (_, h) = read_automaton(include_str!("../data/h.aut")).unwrap();
    let start = Instant::now();
    let (_, literal) = read_relation(include_str!("../data/m_h.rel"), &m, &h).unwrap();
    let result = verify_simulation(&literal, &m, &h, FIG_HORIZON).unwrap();
    let elapsed = start.elapsed();
    let why = match &result {
        pcka::simulation::CheckResult::Refuted { clause, reason } => format!(" at {}: {reason}", clause.describe(&m, &h)),
        _ => String::new(),
    };
    let (_, closed) = read_relation(include_str!("../data/m_h_closed.rel"), &m, &h).unwrap();
    let start = Instant::now();
    let repaired = verify_simulation(&closed, &m, &h, FIG_HORIZON).unwrap().verdict();
    println!(
        "SUPPLEMENT 1 closed relation (adds s2 and s4 against u4) -> {repaired} in {}",
        within(start.elapsed(), FIG_LIMIT)
    );
    outcome(
        result.is_verified() && elapsed < FIG_LIMIT,
        format!("literal relation -> {}{why}; {}", result.verdict(), within(elapsed, FIG_LIMIT)),
    )
}

fn vending() -> (pcka::term::TermFile, impl Fn(&str) -> Term) {
    let terms = parse_file(VENDING_TERMS).unwrap();
    let defs = terms.clone();
    (terms, move |name: &str| defs.get(name).unwrap().clone())
}

fn m_le_h() -> Outcome {
    let (terms, t) = vending();
    let m = compile(&t("M"), &terms.alphabet).unwrap();
    let h = compile(&t("H"), &terms.alphabet).unwrap();
    let start = Instant::now();
    let result = find_simulation(&m, &h, config()).unwrap();
    let elapsed = start.elapsed();
    outcome(
        result.is_verified() && elapsed < SEARCH_LIMIT,
        format!("search M <= H -> {}; {}", result.verdict(), within(elapsed, SEARCH_LIMIT)),
    )
}

fn rely_guarantee() -> Outcome {
    let (terms, t) = vending();
    let checker = Checker::new(&terms.alphabet, config());
    let (run, frame) = (checker.run(), checker.full_frame());
    let coin = Term::act("coin");
    let start = Instant::now();
    let env = Quintuple::new(Term::One, run.clone(), t("M"), run.clone(), t("H"), frame.clone());
    let user = Quintuple::new(coin.clone(), t("H"), t("U'"), t("Q"), run, frame.clone());
    let report = rule_asymmetric(&checker, &env, &user).unwrap();
    let premises = report.premise_verdict();
    let concluded = report.verdict();
    let isolated = Term::seq(coin, Term::Par(Box::new(t("M")), frame, Box::new(t("U'"))));
    let direct = checker.leq("isolated", &isolated, &t("Q")).unwrap().result.verdict();
    let elapsed = start.elapsed();
    let pass = premises == Verdict::Verified
        && report.premises.len() == 5
        && concluded == Verdict::Verified
        && direct == Verdict::Verified
        && elapsed < RG_LIMIT;
    outcome(
        pass,
        format!(
            "{} premises -> {premises}, rule conclusion -> {concluded}, coin.(M || U') <= Q -> {direct}; {}",
            report.premises.len(),
            within(elapsed, RG_LIMIT)
        ),
    )
}

fn law_suite() -> Outcome {
    let start = Instant::now();
    let registry = law_registry();
    let witness: Vec<_> = registry.iter().filter(|l| WITNESS_LAWS.contains(&l.id)).cloned().collect();
    let searched: Vec<_> = registry
        .iter()
        .filter(|l| l.witness.is_none() && !l.is_conditional())
        .cloned()
        .collect();
    let w = run_suite(&witness, SEED, WITNESS_INSTANCES, &config()).unwrap().tally(None);
    let closures = run_congruences(&[Closure::SeqRight, Closure::SeqLeft, Closure::Star], SEED, WITNESS_INSTANCES, &random_alphabet()).unwrap();
    let c_bad = closures.iter().filter(|c| c.base != Verdict::Verified || !c.result.is_verified()).count();
    let s = run_suite(&searched, SEED, SEARCH_INSTANCES, &config()).unwrap().tally(None);
    let elapsed = start.elapsed();
    let pass = w.refuted == 0 && w.inconclusive == 0 && c_bad == 0 && s.refuted == 0 && elapsed < SUITE_LIMIT;
    outcome(
        pass,
        format!(
            "constructors {}x{WITNESS_INSTANCES}: verified={} refuted={} inconclusive={}; closures {}: failed={c_bad}; \
             {} search laws x{SEARCH_INSTANCES}: verified={} refuted={} inconclusive={}; {}",
            witness.len(),
            w.verified,
            w.refuted,
            w.inconclusive,
            closures.len(),
            searched.len(),
            s.verified,
            s.refuted,
            s.inconclusive,
            within(elapsed, SUITE_LIMIT)
        ),
    )
}

fn catalog() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let required = ["interchange-eq", "left-subdist-converse", "pc-supdist-converse"];
    let entries = counterexample_catalog();
    for id in required {
        let Some(e) = entries.iter().find(|e| e.id == id) else {
            pass = false;
            parts.push(format!("{id} missing"));
            continue;
        };
        let r = check_catalog_entry(e, &config()).unwrap();
        let (t, f) = (r.true_direction.verdict(), r.false_direction.verdict());
        pass &= t == Verdict::Verified && f == Verdict::Refuted;
        parts.push(format!("{id}: claim -> {f}, converse -> {t}"));
    }
    let a = &entries[0];
    pass &= a.holds.to_string() == "(a ||{a} 1) . (1 ||{a} a)" && a.fails.to_string() == "a ||{a} a";
    outcome(pass, parts.join("; "))
}

fn random_lift_instance(rng: &mut ChaCha8Rng) -> (SimRelation, Dist, DistOfDists) {
    let s = StateId::from_raw;
    let weight = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Prob> {
        let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
        let total: i64 = raw.iter().sum();
        raw.into_iter().map(|w| ratio(w, total)).collect()
    };
    let mut relation = SimRelation::new();
    for x in 0..LIFT_SUPPORT as u64 {
        for _ in 0..rng.gen_range(1..=3) {
            let n = rng.gen_range(1..=LIFT_SUPPORT);
            let ys: Vec<StateId> = (0..n).map(|_| s(100 + rng.gen_range(0..6))).collect();
            relation.insert(s(x), Dist::from_weights(ys.into_iter().zip(weight(rng, n))).unwrap());
        }
    }
    let pairs: Vec<(StateId, Dist)> = relation.iter().map(|(x, d)| (x, d.clone())).collect();
    let n = rng.gen_range(1..=LIFT_SUPPORT);
    let chosen: Vec<&(StateId, Dist)> = (0..n).map(|_| &pairs[rng.gen_range(0..pairs.len())]).collect();
    let w = weight(rng, n);
    let mu = Dist::from_weights(chosen.iter().map(|(x, _)| *x).zip(w.clone())).unwrap();
    let psi = DistOfDists::from_weights(chosen.iter().map(|(_, d)| d.clone()).zip(w)).unwrap();
    (relation, mu, psi)
}

fn definitions() -> Outcome {
    let mut generator = TermGen::new(law_seed(SEED, "forward"), &random_alphabet());
    let mut runs = 0;
    let mut failures = 0;
    while runs < FORWARD_RUNS {
        let pair = RelatedPair::sample(&mut generator).unwrap();
        let Some(cert) = pair.verify().unwrap().certificate().cloned() else { continue };
        runs += 1;
        let converted = check_forward_certificate(&forward_witness_from_sim(&cert), &pair.lhs, &pair.rhs).is_ok();
        let searched = verify_forward_simulation(&pair.relation, &pair.lhs, &pair.rhs, default_horizon(&pair.rhs))
            .unwrap()
            .is_verified();
        if !(converted && searched) {
            failures += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut lift_failures = 0;
    for _ in 0..LIFT_INSTANCES {
        let (relation, mu, psi) = random_lift_instance(&mut rng);
        let doubled = check_double_lift(&relation, &mu, &psi).is_some();
        let lifted = check_lift(&relation, &mu, &flatten(&psi)).is_some_and(|w| w.validate(&relation, &mu, &flatten(&psi)));
        if !(doubled && lifted) {
            lift_failures += 1;
        }
    }
    outcome(
        failures == 0 && lift_failures == 0,
        format!(
            "converted certificates: {failures} failures in {runs} runs; double lift implies lift: {lift_failures} failures in {LIFT_INSTANCES}"
        ),
    )
}

fn preorder() -> Outcome {
    let alphabet: Arc<_> = random_alphabet();
    let mut generator = TermGen::new(law_seed(SEED, "preorder"), &alphabet);
    let mut reflexive_failures = 0;
    for _ in 0..REFLEXIVE_AUTOMATA {
        let p = compile(&generator.term_within(3, MAX_TERM_STATES), &alphabet).unwrap();
        if !verify_simulation(&SimRelation::identity(&p), &p, &p, default_horizon(&p)).unwrap().is_verified() {
            reflexive_failures += 1;
        }
    }
    let mut transitive_failures = 0;
    let mut pairs = 0;
    while pairs < TRANSITIVE_PAIRS {
        let first = RelatedPair::sample(&mut generator).unwrap();
        let upper = compile(&generator.term_within(2, 20), &alphabet).unwrap();
        let r = pcka::ops::plus(&first.rhs, &upper).unwrap();
        let second = find_simulation(&first.rhs, &r, config()).unwrap();
        let Some(cert) = second.certificate() else { continue };
        if !first.verify().unwrap().is_verified() {
            continue;
        }
        pairs += 1;
        let composed = compose(&first.relation, &cert.relation, COMPOSE_CAP);
        if !verify_simulation(&composed, &first.lhs, &r, default_horizon(&r)).unwrap().is_verified() {
            transitive_failures += 1;
        }
    }
    let closures = run_congruences(&Closure::ALL, SEED, CLOSURE_PAIRS, &alphabet).unwrap();
    let closure_failures = closures.iter().filter(|c| c.base != Verdict::Verified || !c.result.is_verified()).count();
    outcome(
        reflexive_failures + transitive_failures + closure_failures == 0,
        format!(
            "reflexivity {reflexive_failures}/{REFLEXIVE_AUTOMATA} failed; transitivity {transitive_failures}/{pairs} failed; \
             closures {closure_failures}/{} failed over 6 operators",
            closures.len()
        ),
    )
}

fn star_induction() -> Outcome {
    let law = find_law("star-induction").unwrap();
    let mut generator = TermGen::new(law_seed(SEED, law.id), &random_alphabet());
    let mut instances = 0;
    let mut drawn = 0;
    let mut refuted = 0;
    let mut inconclusive = 0;
    while instances < INDUCTION_INSTANCES {
        drawn += 1;
        let b = sample_instance(&law, &mut generator);
        let report = check_star_induction(&b.terms[0], &b.terms[1], &b.alphabet, STAR_INDUCTION_DEPTH, &config()).unwrap();
        if report.premise_failed {
            continue;
        }
        instances += 1;
        for k in 1..=STAR_INDUCTION_DEPTH {
            match report.check(&format!("k={k}")).map(|c| c.result.verdict()) {
                Some(Verdict::Verified) => {}
                Some(Verdict::Refuted) => refuted += 1,
                _ => inconclusive += 1,
            }
        }
    }
    outcome(
        refuted == 0 && inconclusive == 0,
        format!(
            "{instances} instances with a verified premise ({drawn} drawn), k=1..={STAR_INDUCTION_DEPTH}: refuted={refuted} inconclusive={inconclusive}"
        ),
    )
}

fn postcondition_mass() -> Outcome {
    let (terms, t) = vending();
    let q = compile(&t("Q"), &terms.alphabet).unwrap();
    let Some(split) = first_split(&q) else { return outcome(false, "Q has no initial probabilistic choice") };
    let mut safe = Prob::from_integer(0.into());
    let mut weights = Vec::new();
    for (y, p) in split.iter() {
        let twice = can_perform(&q, y, &["kick", "kick"]);
        if !twice {
            safe += p;
        }
        weights.push(format!("{}{}", pcka::dist::format_prob(p), if twice { " kick-twice" } else { " at-most-one-kick" }));
    }
    outcome(
        safe == ratio(24, 25) && split.len() == 2,
        format!("branches [{}], safe mass {}", weights.join(", "), pcka::dist::format_prob(&safe)),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("literal witness relation verifies M <= H", literal_witness),
        ("M <= H found by search", m_le_h),
        ("asymmetric rely/guarantee rule on the vending machine", rely_guarantee),
        ("law suite", law_suite),
        ("counterexample catalog refuted exhaustively", catalog),
        ("forward simulation from simulation, double lifting", definitions),
        ("preorder and precongruence", preorder),
        ("bounded star induction", star_induction),
        ("postcondition mass 24/25", postcondition_mass),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("ACCEPT {n} {verdict} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
