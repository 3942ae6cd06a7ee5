//! Show counterexample traces for inequivalent terms: an exit-weight
//! mismatch (iteration is not idempotent here) and a branching mismatch
//! that only appears at the level of whole argument tuples.
//!
//! Run with: cargo run --example witness_demo

use kict::equiv::{equal, lemma_bisim_equal, witness};
use kict::laws::default_sig;
use kict::rattree::compile;
use kict::syntax::parse_term;

fn main() {
    let sig = default_sig();
    let pairs = [
        ("id@1*", "id@1"),
        ("a ; (u + v)", "a ; u + a ; v"),
        ("f ; [u, v] + f ; [v, u]", "f ; [u, u] + f ; [v, v]"),
    ];
    for (l, r) in pairs {
        let lm = compile(&parse_term(l, &sig).unwrap(), &sig).unwrap();
        let rm = compile(&parse_term(r, &sig).unwrap(), &sig).unwrap();
        println!("{l}  vs  {r}");
        println!("  equal: {}", equal(&lm, &rm).unwrap());
        println!(
            "  componentwise bisimilar: {}",
            lemma_bisim_equal(&lm, &rm).unwrap()
        );
        match witness(&lm, &rm).unwrap() {
            Some(w) => {
                for line in w.render(&sig).lines() {
                    println!("  witness: {line}");
                }
            }
            None => println!("  witness: none (equal)"),
        }
        println!();
    }
}
