//! Parse a program file, decide each `check` line and print the verdicts.
//!
//! Run with: cargo run --example check_program

use kict::equiv::{equal, witness};
use kict::rattree::compile;
use kict::syntax::parse_program;

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/programs/demo.kic");
    let text = std::fs::read_to_string(path).expect("demo program is shipped");
    let prog = parse_program(&text).expect("demo program parses");

    println!(
        "signature: {} actions, {} tests, {} ops; {} defs, {} checks\n",
        prog.sig.actions.len(),
        prog.sig.tests.len(),
        prog.sig.ops.len(),
        prog.defs.len(),
        prog.checks.len()
    );
    for check in &prog.checks {
        let lhs = compile(&check.lhs, &prog.sig).unwrap();
        let rhs = compile(&check.rhs, &prog.sig).unwrap();
        let eq = equal(&lhs, &rhs).unwrap();
        let verdict = if eq != check.negated { "ok  " } else { "FAIL" };
        println!("{verdict} {}", check.text);
        if eq == check.negated && !check.negated {
            if let Some(w) = witness(&lhs, &rhs).unwrap() {
                println!("{}", w.render(&prog.sig));
            }
        }
    }
}
