//! Graphviz output for a compiled term. Pipe into `dot -Tsvg`.

use pcka::dot::to_dot;
use pcka::ops;
use pcka::rg::VENDING_TERMS;
use pcka::term::parse_file;

fn main() -> Result<(), pcka::error::Error> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "H".into());
    let terms = parse_file(VENDING_TERMS)?;
    let p = ops::reachable(&terms.compile(&name)?);
    print!("{}", to_dot(&name, &p));
    Ok(())
}
