//! Control-flow encodings: decisions (two-exit branch morphisms), guarded
//! conditionals and loops, the iteration operator `dagger`, and the
//! translations between the three loop primitives (star, dagger, while).
//!
//! All builders are purely syntactic: they produce core [`Term`]s. The
//! convention for decisions `d : n -> n+n` is that the *left* summand means
//! "false"/"exit" and the *right* summand means "true"/"continue"; `tt` and
//! `ff` are the constant decisions.

use crate::syntax::{complement, Term};
use crate::Result;

/// Constantly-true decision at dimension `n`.
pub fn tt(n: usize) -> Term {
    Term::InjR(n, n)
}

/// Constantly-false decision at dimension `n`.
pub fn ff(n: usize) -> Term {
    Term::InjL(n, n)
}

/// Negated decision: swap the two exits.
pub fn dneg(d: &Term, n: usize) -> Term {
    Term::comp(d.clone(), Term::cotuple(Term::InjR(n, n), Term::InjL(n, n)))
}

/// Disjunction of decisions: if `d` answers true, done; otherwise ask `e`.
pub fn dor(d: &Term, e: &Term, n: usize) -> Term {
    Term::comp(d.clone(), Term::cotuple(e.clone(), tt(n)))
}

/// Conjunction of decisions: if `d` answers false, done; otherwise ask `e`.
pub fn dand(d: &Term, e: &Term, n: usize) -> Term {
    Term::comp(d.clone(), Term::cotuple(ff(n), e.clone()))
}

/// Turn a test form `b : n -> n` into the decision `~b;inl + b;inr`.
pub fn test_to_dec(b: &Term, n: usize) -> Result<Term> {
    Ok(Term::plus(
        Term::comp(complement(b)?, ff(n)),
        Term::comp(b.clone(), tt(n)),
    ))
}

/// Extract the "true" part of a decision as a square morphism: `d;[0,id]`.
pub fn dec_to_test(d: &Term, n: usize) -> Term {
    Term::comp(d.clone(), Term::cotuple(Term::Zero(n, n), Term::Id(n)))
}

/// `if b then p else q` with a test-form guard: `b;p + ~b;q`.
pub fn ite_test(b: &Term, p: Term, q: Term) -> Result<Term> {
    Ok(Term::plus(
        Term::comp(b.clone(), p),
        Term::comp(complement(b)?, q),
    ))
}

/// `if d then p else q` with a decision guard: `d;[q,p]`.
pub fn ite_dec(d: &Term, p: Term, q: Term) -> Term {
    Term::comp(d.clone(), Term::cotuple(q, p))
}

/// `while b do p od` with a test-form guard: `(b;p)* ; ~b`.
pub fn while_test(b: &Term, p: Term) -> Result<Term> {
    Ok(Term::comp(
        Term::star(Term::comp(b.clone(), p)),
        complement(b)?,
    ))
}

/// Iteration of `p : n -> k+n`: feed the right summand back into `p` until
/// the left summand is reached. Encoded with star:
/// `p ; [0, p]* ; [id, 0] : n -> k`.
pub fn dagger(p: &Term, k: usize, n: usize) -> Term {
    Term::comp_all(vec![
        p.clone(),
        Term::star(Term::cotuple(Term::Zero(k, k + n), p.clone())),
        Term::cotuple(Term::Id(k), Term::Zero(n, k)),
    ])
}

/// `while d do p od` with a decision guard: iterate "ask `d`; on true run
/// `p` and continue, on false exit".
pub fn while_dec(d: &Term, p: Term, n: usize) -> Term {
    dagger(&ite_dec(d, Term::comp(p, tt(n)), ff(n)), n, n)
}

/// The divergence constant `delta : n -> k`, i.e. the loop that never
/// reaches its exit: `dagger(inr)`. In this model it denotes the zero
/// morphism (engine-derived; see the regression test below).
pub fn delta(k: usize, n: usize) -> Term {
    dagger(&Term::InjR(k, n), k, n)
}

// ---------------------------------------------------------------------------
// Translations between the three loop primitives
// ---------------------------------------------------------------------------

/// `p* = dagger(inl + p;inr)` for `p : n -> n`.
pub fn star_via_dagger(p: &Term, n: usize) -> Term {
    dagger(
        &Term::plus(Term::InjL(n, n), Term::comp(p.clone(), Term::InjR(n, n))),
        n,
        n,
    )
}

/// `dagger` expressed with star. This is the defining encoding, restated
/// under the translation name so the law suite exercises it explicitly.
pub fn dagger_via_star(p: &Term, k: usize, n: usize) -> Term {
    Term::comp_all(vec![
        p.clone(),
        Term::star(Term::cotuple(Term::Zero(k, k + n), p.clone())),
        Term::cotuple(Term::Id(k), Term::Zero(n, k)),
    ])
}

/// `dagger` expressed with a decision-guarded while loop over the state
/// space `k+n`: start in the right summand, keep running `p` on the right
/// summand until the left summand is reached, then project.
pub fn dagger_via_while(p: &Term, k: usize, n: usize) -> Term {
    // decision on k+n: left summand answers false (exit), right answers true
    let d = Term::cotuple(
        Term::comp(Term::InjL(k, n), Term::InjL(k + n, k + n)),
        Term::comp(Term::InjR(k, n), Term::InjR(k + n, k + n)),
    );
    let body = Term::cotuple(Term::InjL(k, n), p.clone());
    Term::comp_all(vec![
        Term::InjR(k, n),
        while_dec(&d, body, k + n),
        Term::cotuple(Term::Id(k), delta(k, n)),
    ])
}

/// `while b do p od` expressed with star: identical to [`while_test`].
pub fn while_via_star(b: &Term, p: &Term) -> Result<Term> {
    while_test(b, p.clone())
}

/// `p*` expressed with a test-guarded while loop over `n+n`: the left
/// summand is "stopped", the right is "running"; each round either stops or
/// runs `p` once more.
pub fn star_via_while(p: &Term, n: usize) -> Result<Term> {
    // test on n+n that holds exactly on the "running" summand
    let b = Term::cotuple(Term::Zero(n, n + n), Term::InjR(n, n));
    let body = Term::cotuple(
        Term::InjL(n, n),
        Term::plus(Term::InjL(n, n), Term::comp(p.clone(), Term::InjR(n, n))),
    );
    Ok(Term::comp_all(vec![
        Term::InjR(n, n),
        while_test(&b, body)?,
        Term::cotuple(Term::Id(n), delta(n, n)),
    ]))
}

/// `while b do p od` expressed with dagger through the decision `<>b`.
pub fn while_via_dagger(b: &Term, p: &Term, n: usize) -> Result<Term> {
    Ok(while_dec(&test_to_dec(b, n)?, p.clone(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::equal;
    use crate::rattree::compile;
    use crate::syntax::{type_of, MorphType, Signature};

    fn sig() -> Signature {
        Signature::new(
            vec!["u".into(), "v".into()],
            vec!["t".into()],
            vec![("a".into(), 1), ("f".into(), 2)],
        )
        .unwrap()
    }

    #[test]
    fn builder_types() {
        let s = sig();
        let b = Term::test(0);
        let p = Term::Act(0);
        let d = test_to_dec(&b, 1).unwrap();
        assert_eq!(type_of(&d, &s).unwrap(), MorphType::new(1, 2));
        assert_eq!(type_of(&dneg(&d, 1), &s).unwrap(), MorphType::new(1, 2));
        assert_eq!(type_of(&dor(&d, &d, 1), &s).unwrap(), MorphType::new(1, 2));
        assert_eq!(type_of(&dand(&d, &d, 1), &s).unwrap(), MorphType::new(1, 2));
        assert_eq!(type_of(&dec_to_test(&d, 1), &s).unwrap(), MorphType::new(1, 1));
        assert_eq!(
            type_of(&ite_test(&b, p.clone(), Term::Act(1)).unwrap(), &s).unwrap(),
            MorphType::new(1, 1)
        );
        assert_eq!(
            type_of(&while_dec(&d, p.clone(), 1), &s).unwrap(),
            MorphType::new(1, 1)
        );
        assert_eq!(
            type_of(&dagger(&Term::InjL(1, 1), 1, 1), &s).unwrap(),
            MorphType::new(1, 1)
        );
        assert_eq!(
            type_of(&delta(2, 3), &s).unwrap(),
            MorphType::new(3, 2)
        );
    }

    #[test]
    fn while_test_shape() {
        let b = Term::test(0);
        let w = while_test(&b, Term::Act(0)).unwrap();
        assert_eq!(
            w,
            Term::comp(
                Term::star(Term::comp(b, Term::Act(0))),
                Term::Test { test: 0, positive: false }
            )
        );
    }

    #[test]
    fn round_trip_test_decision() {
        let s = sig();
        // b? recovered from <>b: (<>b)? == b
        let b = Term::test(0);
        let d = test_to_dec(&b, 1).unwrap();
        let back = dec_to_test(&d, 1);
        let m1 = compile(&back, &s).unwrap();
        let m2 = compile(&b, &s).unwrap();
        assert!(equal(&m1, &m2).unwrap());
    }

    #[test]
    fn delta_is_zero() {
        // engine-derived value of the divergence constant in this model
        let s = sig();
        let m1 = compile(&delta(1, 1), &s).unwrap();
        let m2 = compile(&Term::Zero(1, 1), &s).unwrap();
        assert!(equal(&m1, &m2).unwrap());
    }

    #[test]
    fn loop_translations_agree_on_samples() {
        let s = sig();
        let p = Term::comp(Term::Act(0), Term::Act(1));
        let star = Term::star(p.clone());
        for candidate in [
            star_via_dagger(&p, 1),
            star_via_while(&p, 1).unwrap(),
        ] {
            let m1 = compile(&candidate, &s).unwrap();
            let m2 = compile(&star, &s).unwrap();
            assert!(equal(&m1, &m2).unwrap());
        }
        let b = Term::test(0);
        let w = while_test(&b, Term::Act(0)).unwrap();
        for candidate in [
            while_via_star(&b, &Term::Act(0)).unwrap(),
            while_via_dagger(&b, &Term::Act(0), 1).unwrap(),
        ] {
            let m1 = compile(&candidate, &s).unwrap();
            let m2 = compile(&w, &s).unwrap();
            assert!(equal(&m1, &m2).unwrap());
        }
        // dagger of a genuinely branching body: flip a coin u/v, exit on u
        let body = Term::plus(
            Term::comp(Term::Act(0), Term::InjL(1, 1)),
            Term::comp(Term::Act(1), Term::InjR(1, 1)),
        );
        let m1 = compile(&dagger_via_while(&body, 1, 1), &s).unwrap();
        let m2 = compile(&dagger_via_star(&body, 1, 1), &s).unwrap();
        assert!(equal(&m1, &m2).unwrap());
        // and against the closed form v* ; u
        let closed = Term::comp(Term::star(Term::Act(1)), Term::Act(0));
        let m3 = compile(&closed, &s).unwrap();
        assert!(equal(&m1, &m3).unwrap());
    }
}
