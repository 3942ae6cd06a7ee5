//! Print the guarded-string support of tame terms, computed both
//! structurally on the term and by path enumeration over the automaton.
//!
//! Run with: cargo run --example support_language

use kict::laws::default_sig;
use kict::oracle::{machine_support, support_lang};
use kict::rattree::compile;
use kict::syntax::parse_term;

fn main() {
    let sig = default_sig();
    for text in ["t ; u", "(t ; u)* ; ~t", "u + v ; v", "[u ; inr@(1,1), inl@(1,1)]"] {
        let term = parse_term(text, &sig).unwrap();
        let structural = support_lang(&term, &sig, 3).unwrap();
        let machine = machine_support(&compile(&term, &sig).unwrap(), 3).unwrap();
        assert_eq!(structural, machine, "the two oracles agree");
        println!("{text}   (strings of up to 3 actions)");
        for line in structural.render(&sig).lines() {
            println!("  {line}");
        }
        println!();
    }
}
