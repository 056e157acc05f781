//! Parsing terms, printing them back, and compiling them to automata.

use pcka::format::write_automaton;
use pcka::ops;
use pcka::term::{compile, least_fixpoint_star, parse_file, parse_term};

fn main() -> Result<(), pcka::error::Error> {
    let file = parse_file(
        "external a, b\n\
         internal c\n\
         def P = a . b +[1/3] c\n\
         def Q = (P ||{a} a)* . b\n",
    )?;
    for (name, term) in &file.defs {
        println!("{name} = {term}");
        let p = ops::reachable(&compile(term, &file.alphabet)?);
        println!("  {} states, {} transitions", p.state_count(), p.transitions().len());
    }

    // Printing and parsing agree.
    let q = file.get("Q").expect("defined above");
    assert_eq!(&parse_term(&q.to_string(), &file.alphabet)?, q);

    // X = a·X·0 has the least solution a*·0.
    let fix = least_fixpoint_star(parse_term("a", &file.alphabet)?);
    println!("lfp = {fix}");
    print!("{}", write_automaton("lfp", &ops::reachable(&compile(&fix, &file.alphabet)?)));
    Ok(())
}
