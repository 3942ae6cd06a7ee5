//! Compile a term and print its automaton as a dot graph. Pipe the output
//! into graphviz to render it: cargo run --example export_dot | dot -Tsvg
//!
//! Run with: cargo run --example export_dot [term]

use kict::laws::default_sig;
use kict::rattree::{compile, to_dot};
use kict::syntax::parse_term;

fn main() {
    let sig = default_sig();
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "while t do u + a ; v od".to_string());
    let term = parse_term(&text, &sig).expect("term parses");
    let m = compile(&term, &sig).expect("term compiles");
    print!("{}", to_dot(&m, &sig).expect("dot export"));
}
