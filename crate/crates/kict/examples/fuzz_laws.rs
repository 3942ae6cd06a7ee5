//! Fuzz the built-in equational law catalog with random well-typed terms
//! and print one line per law.
//!
//! Run with: cargo run --example fuzz_laws

use kict::laws::{default_sig, fuzz, FuzzCfg};

fn main() {
    let sig = default_sig();
    let cfg = FuzzCfg { seed: 42, trials: 60, invalid_trials: 30, size: 7 };
    let report = fuzz(&sig, cfg);
    print!("{}", report.render());
    std::process::exit(if report.ok() { 0 } else { 1 });
}
