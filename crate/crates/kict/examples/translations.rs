//! The three loop primitives (star, dagger, while) are interdefinable.
//! This example builds each translation and lets the engine confirm the
//! round trips on sample programs.
//!
//! Run with: cargo run --example translations

use kict::control::{
    dagger, dagger_via_while, star_via_dagger, star_via_while, while_test, while_via_dagger,
    while_via_star,
};
use kict::equiv::equal;
use kict::laws::default_sig;
use kict::rattree::compile;
use kict::syntax::{parse_term, print_term, Term};

fn main() {
    let sig = default_sig();
    let p = parse_term("t ; u + ~t ; v", &sig).unwrap();
    let b = parse_term("t", &sig).unwrap();
    let body = parse_term("u ; inl@(1,1) + v ; inr@(1,1)", &sig).unwrap();

    let show = |name: &str, lhs: &Term, rhs: &Term| {
        let lm = compile(lhs, &sig).unwrap();
        let rm = compile(rhs, &sig).unwrap();
        let verdict = if equal(&lm, &rm).unwrap() { "ok" } else { "MISMATCH" };
        println!("{verdict}  {name}");
        println!("      {}", print_term(lhs, &sig));
    };

    show("star via dagger", &star_via_dagger(&p, 1), &Term::star(p.clone()));
    show("star via while", &star_via_while(&p, 1).unwrap(), &Term::star(p.clone()));
    show(
        "while via star",
        &while_via_star(&b, &p).unwrap(),
        &while_test(&b, p.clone()).unwrap(),
    );
    show(
        "while via dagger",
        &while_via_dagger(&b, &p, 1).unwrap(),
        &while_test(&b, p).unwrap(),
    );
    show(
        "dagger via while",
        &dagger_via_while(&body, 1, 1),
        &dagger(&body, 1, 1),
    );
}
