//! Every compiled morphism can be rebuilt as `inj ; step* ; out` with a
//! flat guarded step machine: the automaton normal form. This example
//! extracts that form, recompiles it and checks it against the source,
//! then minimizes the source for comparison.
//!
//! Run with: cargo run --example definable_form

use kict::equiv::{equal, minimize};
use kict::laws::default_sig;
use kict::rattree::{compile, to_definable};
use kict::syntax::parse_term;

fn main() {
    let sig = default_sig();
    for text in [
        "while t do u + a ; v od",
        "(u + f ; [v, id@1])*",
        "dagger(t ; u ; inr@(1,1) + ~t ; inl@(1,1))",
    ] {
        let m = compile(&parse_term(text, &sig).unwrap(), &sig).unwrap();
        let form = to_definable(&m).unwrap();
        let rebuilt = form.recompile();
        let minimized = minimize(&m).unwrap();
        println!("{text}");
        println!("  states in normal form: {}", form.states);
        println!("  recompiled == source:  {}", equal(&rebuilt, &m).unwrap());
        println!(
            "  minimized nodes:       {} (from {})",
            minimized.machine.nodes.len(),
            m.machine.nodes.len()
        );
        println!();
    }
}
