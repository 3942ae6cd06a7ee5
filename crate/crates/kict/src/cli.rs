//! Command-line front end: check assertion files, fuzz the law catalog,
//! and export compiled terms as dot graphs or support languages.
//!
//! Exit codes: 0 when everything passed, 1 when a check or law failed,
//! 2 on usage, parse, or type errors.

use crate::equiv::{equal, witness};
use crate::laws::{default_sig, fuzz, FuzzCfg};
use crate::oracle::support_lang;
use crate::rattree::{compile, to_dot};
use crate::syntax::{parse_program, parse_term_with_defs, Program};
use crate::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "kict",
    about = "Equivalence checker for program skeletons with branching operations, \
             nondeterminism and iteration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Run the assertions of a program file.
    Check {
        /// Program file: signature, definitions and `check` lines.
        file: PathBuf,
    },
    /// Fuzz the built-in law catalog and print one line per law.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per valid law.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Trials per expected refutation.
        #[arg(long, default_value_t = 50)]
        invalid_trials: usize,
        /// Size budget for generated terms.
        #[arg(long, default_value_t = 8)]
        size: usize,
    },
    /// Print the compiled automaton of a term as a dot graph.
    Dot {
        /// Program file providing the signature and definitions.
        file: PathBuf,
        /// Term to compile, in the surface syntax (may use the file's defs).
        term: String,
    },
    /// Print the guarded-string support of a tame term.
    Support {
        /// Program file providing the signature and definitions.
        file: PathBuf,
        /// Term to analyze, in the surface syntax (may use the file's defs).
        term: String,
        /// Maximum number of actions per reported string.
        #[arg(long, default_value_t = 3)]
        max_len: usize,
    },
}

fn load(path: &PathBuf) -> Result<Program> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        crate::Error::SyntaxError {
            line: 0,
            col: 0,
            msg: format!("cannot read {}: {e}", path.display()),
        }
    })?;
    parse_program(&text)
}

fn cmd_check(file: &PathBuf) -> Result<i32> {
    let prog = load(file)?;
    let sig = &prog.sig;
    let mut failed = 0usize;
    for check in &prog.checks {
        let lm = compile(&check.lhs, sig)?;
        let rm = compile(&check.rhs, sig)?;
        let eq = equal(&lm, &rm)?;
        let pass = eq != check.negated;
        if pass {
            println!("ok   {}", check.text);
        } else {
            failed += 1;
            println!("FAIL {}", check.text);
            if check.negated {
                println!("     expected a difference, but the sides are equal");
            } else if let Some(w) = witness(&lm, &rm)? {
                for line in w.render(sig).lines() {
                    println!("     {line}");
                }
            }
        }
    }
    println!(
        "{}: {}/{} checks passed",
        if failed == 0 { "PASS" } else { "FAIL" },
        prog.checks.len() - failed,
        prog.checks.len()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_fuzz(seed: u64, trials: usize, invalid_trials: usize, size: usize) -> i32 {
    let sig = default_sig();
    let report = fuzz(&sig, FuzzCfg { seed, trials, invalid_trials, size });
    print!("{}", report.render());
    if report.ok() {
        0
    } else {
        1
    }
}

fn cmd_dot(file: &PathBuf, term: &str) -> Result<i32> {
    let prog = load(file)?;
    let t = parse_term_with_defs(term, &prog.sig, &prog.defs)?;
    let m = compile(&t, &prog.sig)?;
    print!("{}", to_dot(&m, &prog.sig)?);
    Ok(0)
}

fn cmd_support(file: &PathBuf, term: &str, max_len: usize) -> Result<i32> {
    let prog = load(file)?;
    let t = parse_term_with_defs(term, &prog.sig, &prog.defs)?;
    let lang = support_lang(&t, &prog.sig, max_len)?;
    print!("{}", lang.render(&prog.sig));
    Ok(0)
}

/// Run a parsed invocation; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.cmd {
        Cmd::Check { file } => cmd_check(file),
        Cmd::Fuzz { seed, trials, invalid_trials, size } => {
            return cmd_fuzz(*seed, *trials, *invalid_trials, *size)
        }
        Cmd::Dot { file, term } => cmd_dot(file, term),
        Cmd::Support { file, term, max_len } => cmd_support(file, term, *max_len),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
