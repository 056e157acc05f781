use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcka::automaton::ProbAutomaton;
use pcka::error::{Error, Result};
use pcka::format::{read_automaton, read_relation, write_automaton, write_relation, RelationHeader};
use pcka::laws::congruence::{run_congruences, Closure};
use pcka::laws::{check_catalog_entry, counterexample_catalog, law_registry, random_alphabet, run_suite, SuiteReport};
use pcka::ops;
use pcka::rg::{parse_scenario, run_scenario};
use pcka::simulation::{default_horizon, find_simulation, verify_simulation, CheckResult, SearchConfig, Verdict};
use pcka::term::parse_file;

/// Exit status for malformed invocations and unreadable inputs.
const USAGE: u8 = 64;
const FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "pcka", version, about = "Probabilistic automata and simulation checking")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// Step bound for weak moves (default: twice the states of the right side).
    #[arg(long, global = true, env = "PCKA_HORIZON", value_parser = clap::value_parser!(u64).range(1..))]
    horizon: Option<u64>,
    /// Number of proof obligations a search may examine.
    #[arg(long, global = true, env = "PCKA_BUDGET", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Seed for random law instances.
    #[arg(long, global = true, env = "PCKA_SEED", default_value_t = 42)]
    seed: u64,
    /// Write the main artefact here instead of standard output.
    #[arg(long, global = true, env = "PCKA_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a definition of a term file into the automaton format.
    Compile { file: PathBuf, name: String },
    /// Check LEFT <= RIGHT, verifying a witness relation or searching for one.
    ///
    /// Each side is an automaton file or `TERMFILE:NAME`.
    CheckSim {
        left: String,
        right: String,
        #[arg(long, env = "PCKA_WITNESS")]
        witness: Option<PathBuf>,
    },
    /// Run random instances of the algebraic laws.
    Laws {
        /// Every registered law and every congruence closure.
        #[arg(long, conflicts_with = "law")]
        all: bool,
        /// A law, congruence or counterexample id; repeatable.
        #[arg(long)]
        law: Vec<String>,
        /// Instances per law.
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// List the known ids and exit.
        #[arg(long)]
        list: bool,
    },
    /// Run the rules of a rely/guarantee scenario file.
    Rg { scenario: PathBuf },
    /// Render an automaton (file or `TERMFILE:NAME`) as Graphviz DOT.
    Dot { automaton: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(USAGE);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::UnknownLaw(_) | Error::Arity { .. } => USAGE,
                _ => FAILURE,
            };
            ExitCode::from(code)
        }
    }
}

fn exit(v: Verdict) -> ExitCode {
    ExitCode::from(v.exit_code() as u8)
}

impl Opts {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            horizon: self.horizon.map(|h| h as usize),
            budget: self.budget as usize,
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => Ok(std::fs::write(path, text)?),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Compile { file, name } => {
            let terms = parse_file(&read(file)?)?;
            let p = ops::reachable(&terms.compile(name)?);
            opts.emit(&write_automaton(name, &p))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckSim { left, right, witness } => check_sim(opts, left, right, witness.as_deref()),
        Command::Laws { all, law, count, list } => {
            if *list {
                for l in law_registry() {
                    println!("{}", l.id);
                }
                for c in Closure::ALL {
                    println!("{c}");
                }
                for e in counterexample_catalog() {
                    println!("{}", e.id);
                }
                return Ok(ExitCode::SUCCESS);
            }
            if !*all && law.is_empty() {
                eprintln!("error: give --all, --law ID or --list");
                return Ok(ExitCode::from(USAGE));
            }
            laws(opts, *all, law, *count)
        }
        Command::Rg { scenario } => {
            let scenario = parse_scenario(&read(scenario)?)?;
            let reports = run_scenario(&scenario, opts.config())?;
            let mut text = String::new();
            let mut verdict = Verdict::Verified;
            for r in &reports {
                for line in r.lines() {
                    text += &line;
                    text.push('\n');
                }
                verdict = verdict.and(r.verdict());
            }
            text += &format!("verdict={verdict}\n");
            opts.emit(&text)?;
            Ok(exit(verdict))
        }
        Command::Dot { automaton } => {
            let (name, p) = load(automaton)?;
            opts.emit(&pcka::dot::to_dot(&name, &p))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))
}

/// Loads an automaton file, or compiles `NAME` from `TERMFILE:NAME`.
fn load(spec: &str) -> Result<(String, ProbAutomaton)> {
    if let Some((file, name)) = spec.rsplit_once(':') {
        if Path::new(file).is_file() && !Path::new(spec).is_file() {
            let terms = parse_file(&read(Path::new(file))?)?;
            return Ok((name.to_string(), ops::reachable(&terms.compile(name)?)));
        }
    }
    read_automaton(&read(Path::new(spec))?)
}

fn describe(result: &CheckResult, p: &ProbAutomaton, q: &ProbAutomaton) -> Option<String> {
    match result {
        CheckResult::Verified(_) => None,
        CheckResult::Refuted { clause, reason } => Some(format!("at {}: {reason}", clause.describe(p, q))),
        CheckResult::Inconclusive(m) => Some(m.clone()),
    }
}

fn check_sim(opts: &Opts, left: &str, right: &str, witness: Option<&Path>) -> Result<ExitCode> {
    let (lname, p) = load(left)?;
    let (rname, q) = load(right)?;
    let horizon = opts.horizon.map_or_else(|| default_horizon(&q), |h| h as usize);
    let (method, result) = match witness {
        Some(path) => {
            let (_, relation) = read_relation(&read(path)?, &p, &q)?;
            ("witness", verify_simulation(&relation, &p, &q, horizon)?)
        }
        None => ("search", find_simulation(&ops::reachable(&p), &ops::reachable(&q), opts.config())?),
    };
    println!("CHECK {lname} <= {rname} {method} -> {}", result.verdict());
    if let Some(why) = describe(&result, &p, &q) {
        println!("  {why}");
    }
    if let (Some(cert), None, Some(_)) = (result.certificate(), witness, &opts.out) {
        let header = RelationHeader {
            name: "S".into(),
            left: lname,
            right: rname,
        };
        opts.emit(&write_relation(&header, &cert.relation, &p, &q))?;
    }
    Ok(exit(result.verdict()))
}

fn laws(opts: &Opts, all: bool, ids: &[String], count: usize) -> Result<ExitCode> {
    let registry = law_registry();
    let catalog = counterexample_catalog();
    let config = opts.config();
    let mut selected = Vec::new();
    let mut closures = Vec::new();
    let mut entries = Vec::new();
    if all {
        selected = registry.clone();
        closures = Closure::ALL.to_vec();
    }
    for id in ids {
        if let Some(l) = registry.iter().find(|l| l.id == id) {
            selected.push(l.clone());
        } else if let Some(c) = Closure::from_id(id) {
            closures.push(c);
        } else if let Some(e) = catalog.iter().find(|e| e.id == id) {
            entries.push(e);
        } else {
            return Err(Error::UnknownLaw(id.clone()));
        }
    }
    let suite = run_suite(&selected, opts.seed, count, &config)?;
    let mut text = String::new();
    for line in suite.lines() {
        text += &line;
        text.push('\n');
    }
    let mut verdict = suite
        .reports
        .iter()
        .fold(Verdict::Verified, |v, r| v.and(r.verdict()));
    let congruences = run_congruences(&closures, opts.seed, count, &random_alphabet())?;
    for c in &congruences {
        text += &c.line(opts.seed);
        text.push('\n');
        verdict = verdict.and(c.result.verdict());
    }
    let mut refuted_claims = 0;
    for e in entries {
        let r = check_catalog_entry(e, &config)?;
        text += &format!("LAW {} SEED - 0 converse -> {}\n", r.id, r.true_direction.verdict());
        text += &format!("LAW {} SEED - 0 claim -> {}\n", r.id, r.false_direction.verdict());
        if r.false_direction.verdict() == Verdict::Refuted {
            refuted_claims += 1;
        }
        verdict = verdict.and(r.true_direction.verdict()).and(r.false_direction.verdict());
    }
    text += &summary(&suite, &congruences, refuted_claims);
    opts.emit(&text)?;
    Ok(exit(verdict))
}

fn summary(suite: &SuiteReport, congruences: &[pcka::laws::congruence::CongruenceReport], refuted_claims: usize) -> String {
    let mut text = suite.summary();
    let tally = |v: Verdict| congruences.iter().filter(|c| c.result.verdict() == v).count();
    text += &format!(
        "congruence_instances={}\ncongruence_verified={}\ncongruence_refuted={}\ncongruence_inconclusive={}\ncatalog_refuted={refuted_claims}\n",
        congruences.len(),
        tally(Verdict::Verified),
        tally(Verdict::Refuted),
        tally(Verdict::Inconclusive)
    );
    text
}
