//! Equivalence checking for program skeletons over Kleene-iteration
//! categories with tests (KiCT).
//!
//! Terms over a signature of atomic actions, primitive tests and branching
//! operation symbols are compiled to finite automata presenting rational
//! trees over the complete semiring `{0, 1, ∞}` and guarded strings.
//! Semantic equality is decided by determinized weighted bisimulation
//! ([`equiv::equal`]), with replayable counterexamples ([`equiv::witness`]).
//! The crate also ships an executable catalog of the iteration laws
//! ([`laws::catalog`]) together with a fuzzing harness, and two independent
//! brute-force oracles ([`oracle`]) used for cross-validation.
//!
//! Entry points:
//! - [`syntax::load_signature`] / [`syntax::parse_term`] — build typed terms;
//! - [`rattree::compile`] — terms to automata;
//! - [`equiv::equal`] / [`equiv::witness`] — decide equality;
//! - [`laws::fuzz`] — run the law suite;
//! - [`cli`] — the batch front end used by the `kict` binary.

pub mod cli;
pub mod control;
pub mod equiv;
pub mod laws;
pub mod oracle;
pub mod rattree;
pub mod syntax;
pub mod weights;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate name `{0}` in signature")]
    DuplicateName(String),
    #[error("operation symbol `{0}` has arity 0; arities must be positive")]
    ZeroArity(String),
    #[error("{0} test symbols exceed the atom cap of {1}")]
    AtomCapExceeded(usize, usize),
    #[error("syntax error at {line}:{col}: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("not a test form: {0}")]
    NotATest(String),
    #[error("term is not tame (mentions an operation symbol)")]
    NotTame,
    #[error("child index {0} out of arity {1}")]
    IndexOutOfArity(usize, usize),
    #[error("derivative closure budget of {0} states exceeded")]
    ClosureBudgetExceeded(usize),
    #[error("fuzz budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("unsatisfiable generator request: {0}")]
    UnsatisfiableRequest(String),
}

pub type Result<T> = std::result::Result<T, Error>;
