//! Signatures, the typed term language for morphisms `n -> k`, parsing,
//! printing, typing, classification and desugaring.
//!
//! Core terms are the categorical combinators (generators, identities,
//! zero maps, choice, composition, cotupling, injections, star); derived
//! control forms (`if`/`while`/`dagger`, test connectives) are eliminated by
//! [`desugar`] into the core using the encodings from [`crate::control`].

use crate::control;
use crate::weights::{enumerate_atoms, Atom, ATOM_CAP};
use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

/// A signature: atomic actions Γ, primitive tests Θ (≤ [`ATOM_CAP`]), and
/// branching operation symbols Σ with positive arities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub actions: Vec<String>,
    pub tests: Vec<String>,
    pub ops: Vec<(String, usize)>,
    atoms: Vec<Atom>,
}

impl Signature {
    pub fn new(
        actions: Vec<String>,
        tests: Vec<String>,
        ops: Vec<(String, usize)>,
    ) -> Result<Signature> {
        let mut seen = std::collections::HashSet::new();
        for name in actions
            .iter()
            .chain(tests.iter())
            .chain(ops.iter().map(|(n, _)| n))
        {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        for (name, arity) in &ops {
            if *arity == 0 {
                return Err(Error::ZeroArity(name.clone()));
            }
        }
        if tests.len() > ATOM_CAP {
            return Err(Error::AtomCapExceeded(tests.len(), ATOM_CAP));
        }
        let atoms = enumerate_atoms(tests.len())?;
        Ok(Signature { actions, tests, ops, atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn action_idx(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn test_idx(&self, name: &str) -> Option<usize> {
        self.tests.iter().position(|t| t == name)
    }

    pub fn op_idx(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|(o, _)| o == name)
    }

    pub fn arity(&self, op: usize) -> usize {
        self.ops[op].1
    }
}

/// One declaration from the `sig` section of a program file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigDecl {
    Actions(Vec<String>),
    Tests(Vec<String>),
    Ops(Vec<(String, usize)>),
}

/// Build a validated signature from parsed declarations.
pub fn load_signature(decls: &[SigDecl]) -> Result<Signature> {
    let mut actions = vec![];
    let mut tests = vec![];
    let mut ops = vec![];
    for d in decls {
        match d {
            SigDecl::Actions(a) => actions.extend(a.iter().cloned()),
            SigDecl::Tests(t) => tests.extend(t.iter().cloned()),
            SigDecl::Ops(o) => ops.extend(o.iter().cloned()),
        }
    }
    Signature::new(actions, tests, ops)
}

// ---------------------------------------------------------------------------
// Types and terms
// ---------------------------------------------------------------------------

/// The type of a morphism `dom -> cod`; both sides are positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MorphType {
    pub dom: usize,
    pub cod: usize,
}

impl MorphType {
    pub fn new(dom: usize, cod: usize) -> MorphType {
        MorphType { dom, cod }
    }
}

impl fmt::Display for MorphType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.dom, self.cod)
    }
}

/// Terms. The first block are the core constructors; everything after
/// `Star` is a derived form removed by [`desugar`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// operation symbol (index into `Signature::ops`), type `1 -> arity`
    Gen(usize),
    /// atomic action (index into `Signature::actions`), type `1 -> 1`
    Act(usize),
    /// primitive test or its negation (index into `Signature::tests`)
    Test { test: usize, positive: bool },
    Id(usize),
    Zero(usize, usize),
    Plus(Box<Term>, Box<Term>),
    Comp(Box<Term>, Box<Term>),
    /// `[t, s]` with `t: n -> k`, `s: m -> k`, yielding `n+m -> k`
    Cotuple(Box<Term>, Box<Term>),
    /// `inl@(n,m): n -> n+m`
    InjL(usize, usize),
    /// `inr@(n,m): m -> n+m`
    InjR(usize, usize),
    Star(Box<Term>),

    // derived forms
    Top(usize),
    Bot(usize),
    Neg(Box<Term>),
    And(Box<Term>, Box<Term>),
    Or(Box<Term>, Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    While(Box<Term>, Box<Term>),
    Dagger(Box<Term>),
}

impl Term {
    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn comp(a: Term, b: Term) -> Term {
        Term::Comp(Box::new(a), Box::new(b))
    }

    /// Left-to-right composition of several factors.
    pub fn comp_all(factors: Vec<Term>) -> Term {
        let mut it = factors.into_iter();
        let first = it.next().expect("comp_all needs at least one factor");
        it.fold(first, Term::comp)
    }

    pub fn cotuple(a: Term, b: Term) -> Term {
        Term::Cotuple(Box::new(a), Box::new(b))
    }

    pub fn star(a: Term) -> Term {
        Term::Star(Box::new(a))
    }

    pub fn test(idx: usize) -> Term {
        Term::Test { test: idx, positive: true }
    }
}

/// Syntactic classification: `TestForm ⊆ Tame ⊆ General`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermClass {
    TestForm,
    Tame,
    General,
}

// ---------------------------------------------------------------------------
// Typing
// ---------------------------------------------------------------------------

/// Infer the unique type of a term, or report the offending constraint.
pub fn type_of(t: &Term, sig: &Signature) -> Result<MorphType> {
    let mism = |msg: String| Err(Error::TypeMismatch(msg));
    match t {
        Term::Gen(f) => Ok(MorphType::new(1, sig.arity(*f))),
        Term::Act(_) | Term::Test { .. } => Ok(MorphType::new(1, 1)),
        Term::Id(n) | Term::Top(n) | Term::Bot(n) => Ok(MorphType::new(*n, *n)),
        Term::Zero(n, k) => Ok(MorphType::new(*n, *k)),
        Term::Plus(a, b) | Term::Or(a, b) => {
            let ta = type_of(a, sig)?;
            let tb = type_of(b, sig)?;
            if ta != tb {
                return mism(format!("choice of {ta} and {tb}"));
            }
            Ok(ta)
        }
        Term::Comp(a, b) | Term::And(a, b) => {
            let ta = type_of(a, sig)?;
            let tb = type_of(b, sig)?;
            if ta.cod != tb.dom {
                return mism(format!("composition of {ta} and {tb}"));
            }
            Ok(MorphType::new(ta.dom, tb.cod))
        }
        Term::Cotuple(a, b) => {
            let ta = type_of(a, sig)?;
            let tb = type_of(b, sig)?;
            if ta.cod != tb.cod {
                return mism(format!("cotuple of {ta} and {tb}"));
            }
            Ok(MorphType::new(ta.dom + tb.dom, ta.cod))
        }
        Term::InjL(n, m) => Ok(MorphType::new(*n, *n + *m)),
        Term::InjR(n, m) => Ok(MorphType::new(*m, *n + *m)),
        Term::Star(a) => {
            let ta = type_of(a, sig)?;
            if ta.dom != ta.cod {
                return mism(format!("star of non-endomorphism {ta}"));
            }
            Ok(ta)
        }
        Term::Neg(a) => {
            let ta = type_of(a, sig)?;
            if ta.dom != ta.cod {
                return mism(format!("negation of non-square {ta}"));
            }
            Ok(ta)
        }
        Term::If(b, p, q) => {
            let tb = type_of(b, sig)?;
            let tp = type_of(p, sig)?;
            let tq = type_of(q, sig)?;
            if tb.dom != tb.cod || tb.dom != tp.dom || tp != tq {
                return mism(format!("if with test {tb}, branches {tp} and {tq}"));
            }
            Ok(tp)
        }
        Term::While(b, p) => {
            let tb = type_of(b, sig)?;
            let tp = type_of(p, sig)?;
            if tb.dom != tb.cod || tp.dom != tp.cod || tb.dom != tp.dom {
                return mism(format!("while with test {tb}, body {tp}"));
            }
            Ok(tp)
        }
        Term::Dagger(p) => {
            let tp = type_of(p, sig)?;
            if tp.cod <= tp.dom {
                return mism(format!("dagger needs cod = k + dom, got {tp}"));
            }
            Ok(MorphType::new(tp.dom, tp.cod - tp.dom))
        }
    }
}

// ---------------------------------------------------------------------------
// Desugaring
// ---------------------------------------------------------------------------

/// Replace derived forms by core constructors; idempotent on core terms.
/// Fails if a guard of `~`/`if`/`while` is not a test form (its complement
/// would be undefined) or if a `dagger` body is ill-typed.
pub fn desugar(t: &Term, sig: &Signature) -> Result<Term> {
    Ok(match t {
        Term::Gen(_)
        | Term::Act(_)
        | Term::Test { .. }
        | Term::Id(_)
        | Term::Zero(_, _)
        | Term::InjL(_, _)
        | Term::InjR(_, _) => t.clone(),
        Term::Plus(a, b) => Term::plus(desugar(a, sig)?, desugar(b, sig)?),
        Term::Comp(a, b) => Term::comp(desugar(a, sig)?, desugar(b, sig)?),
        Term::Cotuple(a, b) => Term::cotuple(desugar(a, sig)?, desugar(b, sig)?),
        Term::Star(a) => Term::star(desugar(a, sig)?),
        Term::Top(n) => Term::Id(*n),
        Term::Bot(n) => Term::Zero(*n, *n),
        Term::Neg(b) => complement(&desugar(b, sig)?)?,
        Term::And(a, b) => Term::comp(desugar(a, sig)?, desugar(b, sig)?),
        Term::Or(a, b) => Term::plus(desugar(a, sig)?, desugar(b, sig)?),
        Term::If(b, p, q) => {
            let b = desugar(b, sig)?;
            control::ite_test(&b, desugar(p, sig)?, desugar(q, sig)?)?
        }
        Term::While(b, p) => {
            let b = desugar(b, sig)?;
            control::while_test(&b, desugar(p, sig)?)?
        }
        Term::Dagger(p) => {
            let p = desugar(p, sig)?;
            let tp = type_of(&p, sig)?;
            control::dagger(&p, tp.cod - tp.dom, tp.dom)
        }
    })
}

// ---------------------------------------------------------------------------
// Classification and complement
// ---------------------------------------------------------------------------

fn mentions_gen(t: &Term) -> bool {
    match t {
        Term::Gen(_) => true,
        Term::Act(_)
        | Term::Test { .. }
        | Term::Id(_)
        | Term::Zero(_, _)
        | Term::InjL(_, _)
        | Term::InjR(_, _)
        | Term::Top(_)
        | Term::Bot(_) => false,
        Term::Plus(a, b)
        | Term::Comp(a, b)
        | Term::Cotuple(a, b)
        | Term::And(a, b)
        | Term::Or(a, b) => mentions_gen(a) || mentions_gen(b),
        Term::Star(a) | Term::Neg(a) | Term::Dagger(a) => mentions_gen(a),
        Term::If(a, b, c) => mentions_gen(a) || mentions_gen(b) || mentions_gen(c),
        Term::While(a, b) => mentions_gen(a) || mentions_gen(b),
    }
}

/// Does this core term belong to the generated family of test forms?
///
/// The family is the closure of `0`, `id`, primitive (possibly negated)
/// tests and the split forms `[inl,0]` / `[0,inr]` under `+` and `;`. The
/// check is syntactic and conservative; the semantic counterpart is
/// `rattree::is_test`.
fn is_test_form(t: &Term) -> bool {
    match t {
        Term::Test { .. } | Term::Id(_) => true,
        Term::Zero(n, k) => n == k,
        Term::Plus(a, b) | Term::Comp(a, b) => is_test_form(a) && is_test_form(b),
        Term::Cotuple(a, b) => match (&**a, &**b) {
            // [inl,0] at n1+n2
            (Term::InjL(n1, n2), Term::Zero(z1, z2)) => z1 == n2 && *z2 == n1 + n2,
            // [0,inr] at n1+n2
            (Term::Zero(z1, z2), Term::InjR(n1, n2)) => z1 == n1 && *z2 == n1 + n2,
            _ => false,
        },
        _ => false,
    }
}

/// Classify a core term; monotone along the subterm grammar.
pub fn classify(t: &Term) -> TermClass {
    if mentions_gen(t) {
        TermClass::General
    } else if is_test_form(t) {
        TermClass::TestForm
    } else {
        TermClass::Tame
    }
}

/// Structural complement of a test form.
///
/// `0̄ = id`, `īd = 0`, `[inl,0]‾ = [0,inr]`, `[0,inr]‾ = [inl,0]`,
/// `(b+c)‾ = b̄;c̄`, `(b;c)‾ = b̄+c̄`; a primitive test flips its polarity
/// marker (the atom-level complement is taken at compile time).
pub fn complement(b: &Term) -> Result<Term> {
    if !is_test_form(b) {
        return Err(Error::NotATest(format!("{b:?}")));
    }
    Ok(match b {
        Term::Test { test, positive } => Term::Test { test: *test, positive: !positive },
        Term::Id(n) => Term::Zero(*n, *n),
        Term::Zero(n, _) => Term::Id(*n),
        Term::Plus(x, y) => Term::comp(complement(x)?, complement(y)?),
        Term::Comp(x, y) => Term::plus(complement(x)?, complement(y)?),
        Term::Cotuple(x, y) => match (&**x, &**y) {
            (Term::InjL(n1, n2), Term::Zero(_, _)) => Term::cotuple(
                Term::Zero(*n1, n1 + n2),
                Term::InjR(*n1, *n2),
            ),
            (Term::Zero(_, _), Term::InjR(n1, n2)) => Term::cotuple(
                Term::InjL(*n1, *n2),
                Term::Zero(*n2, n1 + n2),
            ),
            _ => unreachable!("is_test_form admits only the two split cotuples"),
        },
        _ => unreachable!("is_test_form admits only test constructors"),
    })
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Precedence levels, loosest first: + / | (0), ; & (1), * ~ (2), atoms (3).
fn prec(t: &Term) -> u8 {
    match t {
        Term::Plus(_, _) | Term::Or(_, _) => 0,
        Term::Comp(_, _) | Term::And(_, _) => 1,
        Term::Star(_) | Term::Neg(_) => 2,
        _ => 3,
    }
}

fn print_prec(t: &Term, sig: &Signature, min: u8, out: &mut String) {
    let p = prec(t);
    if p < min {
        out.push('(');
    }
    match t {
        Term::Gen(f) => out.push_str(&sig.ops[*f].0),
        Term::Act(u) => out.push_str(&sig.actions[*u]),
        Term::Test { test, positive } => {
            if !positive {
                out.push('~');
            }
            out.push_str(&sig.tests[*test]);
        }
        Term::Id(n) => out.push_str(&format!("id@{n}")),
        Term::Top(n) => out.push_str(&format!("top@{n}")),
        Term::Bot(n) => out.push_str(&format!("bot@{n}")),
        Term::Zero(n, k) => out.push_str(&format!("0@({n},{k})")),
        Term::InjL(n, m) => out.push_str(&format!("inl@({n},{m})")),
        Term::InjR(n, m) => out.push_str(&format!("inr@({n},{m})")),
        Term::Plus(a, b) => {
            print_prec(a, sig, 0, out);
            out.push_str(" + ");
            print_prec(b, sig, 1, out);
        }
        Term::Or(a, b) => {
            print_prec(a, sig, 0, out);
            out.push_str(" | ");
            print_prec(b, sig, 1, out);
        }
        Term::Comp(a, b) => {
            print_prec(a, sig, 1, out);
            out.push_str(" ; ");
            print_prec(b, sig, 2, out);
        }
        Term::And(a, b) => {
            print_prec(a, sig, 1, out);
            out.push_str(" & ");
            print_prec(b, sig, 2, out);
        }
        Term::Star(a) => {
            print_prec(a, sig, 3, out);
            out.push('*');
        }
        Term::Neg(a) => {
            out.push('~');
            print_prec(a, sig, 3, out);
        }
        Term::Cotuple(a, b) => {
            out.push('[');
            print_prec(a, sig, 0, out);
            out.push_str(", ");
            print_prec(b, sig, 0, out);
            out.push(']');
        }
        Term::If(b, p, q) => {
            out.push_str("if ");
            print_prec(b, sig, 0, out);
            out.push_str(" then ");
            print_prec(p, sig, 0, out);
            out.push_str(" else ");
            print_prec(q, sig, 0, out);
            out.push_str(" fi");
        }
        Term::While(b, p) => {
            out.push_str("while ");
            print_prec(b, sig, 0, out);
            out.push_str(" do ");
            print_prec(p, sig, 0, out);
            out.push_str(" od");
        }
        Term::Dagger(p) => {
            out.push_str("dagger(");
            print_prec(p, sig, 0, out);
            out.push(')');
        }
    }
    if p < min {
        out.push(')');
    }
}

/// Pretty-print a term in the surface grammar accepted by [`parse_term`].
pub fn print_term(t: &Term, sig: &Signature) -> String {
    let mut out = String::new();
    print_prec(t, sig, 0, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    Star,
    Semi,
    Dot,
    Plus,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    At,
    Tilde,
    Amp,
    Pipe,
    Colon,
    EqEq,
    BangEq,
    Arrow,
    Eq,
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let mut toks = vec![];
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, co) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            // comment to end of line
            while let Some(&c2) = chars.peek() {
                bump(&mut chars);
                if c2 == '\n' {
                    break;
                }
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_ascii_alphanumeric() || c2 == '_' {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut n = 0usize;
            while let Some(&c2) = chars.peek() {
                if c2.is_ascii_digit() {
                    n = n * 10 + (bump(&mut chars) as usize - '0' as usize);
                } else {
                    break;
                }
            }
            Tok::Nat(n)
        } else {
            bump(&mut chars);
            match c {
                '*' => Tok::Star,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '@' => Tok::At,
                '~' => Tok::Tilde,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                ':' => Tok::Colon,
                '=' => {
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars);
                        Tok::EqEq
                    } else {
                        Tok::Eq
                    }
                }
                '!' => {
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars);
                        Tok::BangEq
                    } else {
                        return Err(Error::SyntaxError {
                            line: l,
                            col: co,
                            msg: "expected `!=`".into(),
                        });
                    }
                }
                '-' => {
                    if chars.peek() == Some(&'>') {
                        bump(&mut chars);
                        Tok::Arrow
                    } else {
                        return Err(Error::SyntaxError {
                            line: l,
                            col: co,
                            msg: "expected `->`".into(),
                        });
                    }
                }
                other => {
                    return Err(Error::SyntaxError {
                        line: l,
                        col: co,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            }
        };
        toks.push(Lexed { tok, line: l, col: co });
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: Vec<Lexed>,
    pos: usize,
    sig: &'a Signature,
    defs: &'a [(String, Term)],
    /// Whether `;` currently means composition. Inside statements of a
    /// program file a top-level `;` terminates the statement instead, but
    /// it regains its composition meaning inside any bracketed construct.
    allow_semi: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|l| (l.line, l.col))
            .unwrap_or((1, 1))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::SyntaxError { line, col, msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|l| l.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn eat(&mut self, want: Tok) -> bool {
        if self.peek() == Some(&want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self, what: &str) -> Result<usize> {
        match self.next() {
            Some(Tok::Nat(n)) => Ok(n),
            _ => {
                self.pos -= 1;
                self.err(format!("expected {what}"))
            }
        }
    }

    fn keyword(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(k)) if k == s)
    }

    fn at_pair(&mut self) -> Result<(usize, usize)> {
        self.expect(Tok::At, "`@`")?;
        self.expect(Tok::LParen, "`(`")?;
        let n = self.nat("a dimension")?;
        self.expect(Tok::Comma, "`,`")?;
        let m = self.nat("a dimension")?;
        self.expect(Tok::RParen, "`)`")?;
        Ok((n, m))
    }

    // a term inside brackets, where `;` always composes
    fn term_nested(&mut self) -> Result<Term> {
        let saved = self.allow_semi;
        self.allow_semi = true;
        let out = self.term();
        self.allow_semi = saved;
        out
    }

    // term := sum; sum := seq (('+'|'|') seq)*
    fn term(&mut self) -> Result<Term> {
        let mut acc = self.seq()?;
        loop {
            if self.eat(Tok::Plus) {
                acc = Term::plus(acc, self.seq()?);
            } else if self.eat(Tok::Pipe) {
                acc = Term::Or(Box::new(acc), Box::new(self.seq()?));
            } else {
                return Ok(acc);
            }
        }
    }

    // seq := starred ((';'|'.'|'&') starred)*
    fn seq(&mut self) -> Result<Term> {
        let mut acc = self.starred()?;
        loop {
            if self.eat(Tok::Dot) || (self.allow_semi && self.eat(Tok::Semi)) {
                acc = Term::comp(acc, self.starred()?);
            } else if self.eat(Tok::Amp) {
                acc = Term::And(Box::new(acc), Box::new(self.starred()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn starred(&mut self) -> Result<Term> {
        let mut acc = self.primary()?;
        while self.eat(Tok::Star) {
            acc = Term::star(acc);
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term_nested()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let a = self.term_nested()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.term_nested()?;
                self.expect(Tok::RBrack, "`]`")?;
                Ok(Term::cotuple(a, b))
            }
            Some(Tok::Tilde) => {
                self.pos += 1;
                let inner = self.primary()?;
                Ok(match inner {
                    Term::Test { test, positive } => Term::Test { test, positive: !positive },
                    other => Term::Neg(Box::new(other)),
                })
            }
            Some(Tok::Nat(0)) => {
                self.pos += 1;
                let (n, k) = self.at_pair()?;
                Ok(Term::Zero(n, k))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "id" => {
                        self.expect(Tok::At, "`@` after `id`")?;
                        Ok(Term::Id(self.nat("a dimension")?))
                    }
                    "top" | "bot" => {
                        let n = if self.eat(Tok::At) { self.nat("a dimension")? } else { 1 };
                        Ok(if name == "top" { Term::Top(n) } else { Term::Bot(n) })
                    }
                    "inl" => {
                        let (n, m) = self.at_pair()?;
                        Ok(Term::InjL(n, m))
                    }
                    "inr" => {
                        let (n, m) = self.at_pair()?;
                        Ok(Term::InjR(n, m))
                    }
                    "if" => {
                        let b = self.term_nested()?;
                        if !self.eat_kw("then") {
                            return self.err("expected `then`");
                        }
                        let p = self.term_nested()?;
                        if !self.eat_kw("else") {
                            return self.err("expected `else`");
                        }
                        let q = self.term_nested()?;
                        if !self.eat_kw("fi") {
                            return self.err("expected `fi`");
                        }
                        Ok(Term::If(Box::new(b), Box::new(p), Box::new(q)))
                    }
                    "while" => {
                        let b = self.term_nested()?;
                        if !self.eat_kw("do") {
                            return self.err("expected `do`");
                        }
                        let p = self.term_nested()?;
                        if !self.eat_kw("od") {
                            return self.err("expected `od`");
                        }
                        Ok(Term::While(Box::new(b), Box::new(p)))
                    }
                    "dagger" => {
                        self.expect(Tok::LParen, "`(`")?;
                        let p = self.term_nested()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(Term::Dagger(Box::new(p)))
                    }
                    _ => {
                        if let Some(u) = self.sig.action_idx(&name) {
                            Ok(Term::Act(u))
                        } else if let Some(t) = self.sig.test_idx(&name) {
                            Ok(Term::test(t))
                        } else if let Some(f) = self.sig.op_idx(&name) {
                            Ok(Term::Gen(f))
                        } else if let Some((_, body)) =
                            self.defs.iter().find(|(n, _)| *n == name)
                        {
                            Ok(body.clone())
                        } else {
                            Err(Error::UnknownIdentifier(name))
                        }
                    }
                }
            }
            _ => self.err("expected a term"),
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

/// Parse a single term against a signature (and optional named definitions,
/// which are substituted inline).
pub fn parse_term_with_defs(
    text: &str,
    sig: &Signature,
    defs: &[(String, Term)],
) -> Result<Term> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, sig, defs, allow_semi: true };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input after term");
    }
    Ok(t)
}

pub fn parse_term(text: &str, sig: &Signature) -> Result<Term> {
    parse_term_with_defs(text, sig, &[])
}

// ---------------------------------------------------------------------------
// Program files
// ---------------------------------------------------------------------------

/// One `check` directive: `lhs == rhs` (negated = false) or `lhs != rhs`.
#[derive(Debug, Clone)]
pub struct Check {
    pub lhs: Term,
    pub rhs: Term,
    pub negated: bool,
    pub text: String,
}

/// A parsed program file: signature, named definitions, check directives.
#[derive(Debug, Clone)]
pub struct Program {
    pub sig: Arc<Signature>,
    pub defs: Vec<(String, Term)>,
    pub checks: Vec<Check>,
}

/// Parse a full program file:
///
/// ```text
/// sig actions u, v;
/// sig tests t;
/// sig ops a:1, f:2;
/// def p : 1 -> 1 = (t . u)* . ~t;
/// check p == while t do u od;
/// check id@1* != id@1;
/// ```
pub fn parse_program(text: &str) -> Result<Program> {
    // First pass: collect signature declarations.
    let toks = lex(text)?;
    let empty_sig = Signature::new(vec![], vec![], vec![])?;
    let mut decls = vec![];
    let mut p = Parser { toks, pos: 0, sig: &empty_sig, defs: &[], allow_semi: false };
    // statements are scanned in order; sig lines must precede uses, which the
    // two-pass structure enforces naturally (defs/checks are parsed second)
    let mut rest = vec![]; // (kind, start token index)
    while let Some(tok) = p.peek() {
        match tok {
            Tok::Ident(k) if k == "sig" => {
                p.pos += 1;
                match p.next() {
                    Some(Tok::Ident(kind)) if kind == "actions" || kind == "tests" => {
                        let mut names = vec![];
                        loop {
                            match p.next() {
                                Some(Tok::Ident(n)) => names.push(n),
                                _ => {
                                    p.pos -= 1;
                                    return p.err("expected a name");
                                }
                            }
                            if !p.eat(Tok::Comma) {
                                break;
                            }
                        }
                        p.expect(Tok::Semi, "`;`")?;
                        decls.push(if kind == "actions" {
                            SigDecl::Actions(names)
                        } else {
                            SigDecl::Tests(names)
                        });
                    }
                    Some(Tok::Ident(kind)) if kind == "ops" => {
                        let mut ops = vec![];
                        loop {
                            let name = match p.next() {
                                Some(Tok::Ident(n)) => n,
                                _ => {
                                    p.pos -= 1;
                                    return p.err("expected an op name");
                                }
                            };
                            p.expect(Tok::Colon, "`:`")?;
                            let ar = p.nat("an arity")?;
                            ops.push((name, ar));
                            if !p.eat(Tok::Comma) {
                                break;
                            }
                        }
                        p.expect(Tok::Semi, "`;`")?;
                        decls.push(SigDecl::Ops(ops));
                    }
                    _ => {
                        p.pos -= 1;
                        return p.err("expected `actions`, `tests` or `ops`");
                    }
                }
            }
            Tok::Ident(k) if k == "def" || k == "check" => {
                let kind = k.clone();
                rest.push((kind, p.pos));
                // skip to the terminating `;` (at bracket depth 0)
                p.pos += 1;
                let mut depth = 0i32;
                loop {
                    match p.next() {
                        None => return p.err("unterminated statement"),
                        Some(Tok::LParen) | Some(Tok::LBrack) => depth += 1,
                        Some(Tok::RParen) | Some(Tok::RBrack) => depth -= 1,
                        // loop and conditional bodies may contain `;`
                        Some(Tok::Ident(w)) if w == "while" || w == "if" => depth += 1,
                        Some(Tok::Ident(w)) if w == "od" || w == "fi" => depth -= 1,
                        Some(Tok::Semi) if depth == 0 => break,
                        _ => {}
                    }
                }
            }
            _ => return p.err("expected `sig`, `def` or `check`"),
        }
    }
    let sig = Arc::new(load_signature(&decls)?);

    // Second pass: parse defs and checks with the signature in scope.
    let toks = lex(text)?;
    let mut defs: Vec<(String, Term)> = vec![];
    let mut checks = vec![];
    for (kind, start) in rest {
        let mut q = Parser {
            toks: toks.clone(),
            pos: start + 1,
            sig: &sig,
            defs: &defs,
            allow_semi: false,
        };
        if kind == "def" {
            let name = match q.next() {
                Some(Tok::Ident(n)) => n,
                _ => {
                    q.pos -= 1;
                    return q.err("expected a definition name");
                }
            };
            if defs.iter().any(|(n, _)| *n == name) {
                return Err(Error::DuplicateName(name));
            }
            q.expect(Tok::Colon, "`:`")?;
            let dom = q.nat("a dimension")?;
            q.expect(Tok::Arrow, "`->`")?;
            let cod = q.nat("a dimension")?;
            q.expect(Tok::Eq, "`=`")?;
            let body = q.term()?;
            q.expect(Tok::Semi, "`;`")?;
            let ty = type_of(&body, &sig)?;
            if ty != MorphType::new(dom, cod) {
                return Err(Error::TypeMismatch(format!(
                    "def {name} declared {dom} -> {cod} but body has type {ty}"
                )));
            }
            defs.push((name, body));
        } else {
            let lhs = q.term()?;
            let negated = if q.eat(Tok::EqEq) {
                false
            } else if q.eat(Tok::BangEq) {
                true
            } else {
                return q.err("expected `==` or `!=`");
            };
            let rhs = q.term()?;
            q.expect(Tok::Semi, "`;`")?;
            let tl = type_of(&lhs, &sig)?;
            let tr = type_of(&rhs, &sig)?;
            if tl != tr {
                return Err(Error::TypeMismatch(format!(
                    "check compares {tl} with {tr}"
                )));
            }
            let text = format!(
                "{} {} {}",
                print_term(&lhs, &sig),
                if negated { "!=" } else { "==" },
                print_term(&rhs, &sig)
            );
            checks.push(Check { lhs, rhs, negated, text });
        }
    }
    Ok(Program { sig, defs, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::new(
            vec!["u".into(), "v".into()],
            vec!["t".into()],
            vec![("a".into(), 1), ("f".into(), 2)],
        )
        .unwrap()
    }

    #[test]
    fn signature_validation() {
        assert!(matches!(
            Signature::new(vec!["u".into()], vec!["u".into()], vec![]),
            Err(Error::DuplicateName(_))
        ));
        assert!(matches!(
            Signature::new(vec![], vec![], vec![("f".into(), 0)]),
            Err(Error::ZeroArity(_))
        ));
        let s = sig();
        assert_eq!(s.atoms().len(), 2);
    }

    #[test]
    fn parse_basic() {
        let s = sig();
        assert_eq!(
            parse_term("u ; u", &s).unwrap(),
            Term::comp(Term::Act(0), Term::Act(0))
        );
        // precedence: * > ; > +
        assert_eq!(
            parse_term("(t . u)* . ~t", &s).unwrap(),
            Term::comp(
                Term::star(Term::comp(Term::test(0), Term::Act(0))),
                Term::Test { test: 0, positive: false }
            )
        );
        assert_eq!(
            parse_term("u ; v + u", &s).unwrap(),
            Term::plus(Term::comp(Term::Act(0), Term::Act(1)), Term::Act(0))
        );
    }

    #[test]
    fn parse_combinators() {
        let s = sig();
        assert_eq!(parse_term("id@2", &s).unwrap(), Term::Id(2));
        assert_eq!(parse_term("0@(1,2)", &s).unwrap(), Term::Zero(1, 2));
        assert_eq!(parse_term("inl@(1,1)", &s).unwrap(), Term::InjL(1, 1));
        assert_eq!(
            parse_term("[id@1, 0@(1,1)]", &s).unwrap(),
            Term::cotuple(Term::Id(1), Term::Zero(1, 1))
        );
        assert!(matches!(
            parse_term("w", &s),
            Err(Error::UnknownIdentifier(_))
        ));
    }

    #[test]
    fn parse_control_forms() {
        let s = sig();
        let t = parse_term("while t do u od", &s).unwrap();
        assert_eq!(t, Term::While(Box::new(Term::test(0)), Box::new(Term::Act(0))));
        let t = parse_term("if t then u else v fi", &s).unwrap();
        assert!(matches!(t, Term::If(_, _, _)));
        let t = parse_term("dagger(inr@(1,1))", &s).unwrap();
        assert!(matches!(t, Term::Dagger(_)));
    }

    #[test]
    fn typing() {
        let s = sig();
        assert_eq!(type_of(&Term::Gen(1), &s).unwrap(), MorphType::new(1, 2));
        assert_eq!(
            type_of(&Term::cotuple(Term::Id(1), Term::Zero(2, 1)), &s).unwrap(),
            MorphType::new(3, 1)
        );
        assert!(matches!(
            type_of(&Term::star(Term::InjL(1, 1)), &s),
            Err(Error::TypeMismatch(_))
        ));
    }

    #[test]
    fn desugar_if_while() {
        let s = sig();
        let b = Term::test(0);
        let t = desugar(
            &Term::If(Box::new(b.clone()), Box::new(Term::Act(0)), Box::new(Term::Act(1))),
            &s,
        )
        .unwrap();
        // b;p + ~b;q
        assert_eq!(
            t,
            Term::plus(
                Term::comp(b.clone(), Term::Act(0)),
                Term::comp(Term::Test { test: 0, positive: false }, Term::Act(1))
            )
        );
        let w = desugar(&Term::While(Box::new(b.clone()), Box::new(Term::Act(0))), &s).unwrap();
        assert_eq!(
            w,
            Term::comp(
                Term::star(Term::comp(b, Term::Act(0))),
                Term::Test { test: 0, positive: false }
            )
        );
        // idempotent on core
        assert_eq!(desugar(&w, &s).unwrap(), w);
        // a non-test guard cannot be complemented
        assert!(desugar(
            &Term::While(Box::new(Term::Act(0)), Box::new(Term::Act(1))),
            &s
        )
        .is_err());
    }

    #[test]
    fn classification() {
        let s = sig();
        assert_eq!(classify(&Term::Act(0)), TermClass::Tame);
        assert_eq!(classify(&Term::Gen(1)), TermClass::General);
        assert_eq!(classify(&Term::test(0)), TermClass::TestForm);
        let inl0 = Term::cotuple(Term::InjL(1, 1), Term::Zero(1, 2));
        assert_eq!(classify(&inl0), TermClass::TestForm);
        assert_eq!(classify(&Term::star(Term::test(0))), TermClass::Tame);
        let _ = s;
    }

    #[test]
    fn complement_table() {
        let c = |t: &Term| complement(t).unwrap();
        assert_eq!(c(&Term::Zero(2, 2)), Term::Id(2));
        assert_eq!(c(&Term::Id(2)), Term::Zero(2, 2));
        let inl0 = Term::cotuple(Term::InjL(1, 1), Term::Zero(1, 2));
        let zinr = Term::cotuple(Term::Zero(1, 2), Term::InjR(1, 1));
        assert_eq!(c(&inl0), zinr);
        assert_eq!(c(&zinr), inl0);
        assert_eq!(
            c(&Term::plus(Term::test(0), Term::Id(1))),
            Term::comp(Term::Test { test: 0, positive: false }, Term::Zero(1, 1))
        );
        assert!(complement(&Term::Act(0)).is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        let s = sig();
        let terms = vec![
            Term::comp(Term::star(Term::comp(Term::test(0), Term::Act(0))), Term::Act(1)),
            Term::cotuple(Term::plus(Term::Id(1), Term::Act(0)), Term::Zero(1, 1)),
            Term::plus(Term::comp(Term::Gen(1), Term::cotuple(Term::Act(0), Term::Act(1))), Term::Id(1)),
            Term::star(Term::plus(Term::Act(0), Term::comp(Term::Act(1), Term::Act(1)))),
            Term::Test { test: 0, positive: false },
        ];
        for t in terms {
            let printed = print_term(&t, &s);
            let back = parse_term(&printed, &s).unwrap();
            assert_eq!(back, t, "round trip of `{printed}`");
        }
    }

    #[test]
    fn program_file() {
        let text = "
            sig actions u, v;
            sig tests t;
            sig ops a:1, f:2;
            def p : 1 -> 1 = (t . u)* . ~t;
            check p == while t do u od;
            check id@1* != id@1;
        ";
        let prog = parse_program(text).unwrap();
        assert_eq!(prog.defs.len(), 1);
        assert_eq!(prog.checks.len(), 2);
        assert!(!prog.checks[0].negated);
        assert!(prog.checks[1].negated);
    }

    #[test]
    fn program_file_errors() {
        assert!(matches!(
            parse_program("sig actions u; def p : 1 -> 1 = q;"),
            Err(Error::UnknownIdentifier(_))
        ));
        assert!(matches!(
            parse_program("sig actions u; def p : 1 -> 2 = u;"),
            Err(Error::TypeMismatch(_))
        ));
        assert!(parse_program("sig bogus u;").is_err());
    }
}
