//! An executable catalog of the equational laws the engine is expected to
//! satisfy (and a few it is expected to refute), with a seeded random term
//! generator and a parallel fuzzing harness.
//!
//! Each law is a template over generated terms. Conditional laws carry
//! premises which are checked semantically before the conclusion; their
//! generators are biased so that the premises usually hold (unbiased random
//! instances would be vacuous almost always), but the premises are still
//! verified by the engine and instances that fail them count as vacuous.
//! Laws marked invalid are refuted by exhibiting counterexamples.

use crate::control::{
    dagger, dagger_via_star, dagger_via_while, dand, dec_to_test, dneg, dor, ff, ite_dec,
    ite_test, star_via_dagger, star_via_while, test_to_dec, tt, while_dec, while_test,
    while_via_dagger, while_via_star,
};
use crate::equiv::{equal, witness};
use crate::rattree::compile;
use crate::syntax::{complement, print_term, MorphType, Signature, Term, TermClass};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The standard fuzzing signature: two actions, one test, a unary and a
/// binary operation.
pub fn default_sig() -> Signature {
    Signature::new(
        vec!["u".into(), "v".into()],
        vec!["t".into()],
        vec![("a".into(), 1), ("f".into(), 2)],
    )
    .expect("default signature is valid")
}

// ---------------------------------------------------------------------------
// Term generation
// ---------------------------------------------------------------------------

/// Generate a random well-typed term of the given class and type. The same
/// seed yields the same term.
pub fn gen_term(
    rng: &mut ChaCha8Rng,
    sig: &Signature,
    class: TermClass,
    ty: MorphType,
    size: usize,
) -> Result<Term> {
    if ty.dom == 0 || ty.cod == 0 {
        return Err(Error::UnsatisfiableRequest(format!(
            "cannot generate a term of type {ty}"
        )));
    }
    if class == TermClass::TestForm {
        if ty.dom != ty.cod {
            return Err(Error::UnsatisfiableRequest(format!(
                "test forms are square, requested {ty}"
            )));
        }
        return Ok(gen_test_form(rng, sig, ty.dom, size));
    }
    Ok(gen_any(rng, sig, class == TermClass::General, ty, size))
}

fn gen_test_form(rng: &mut ChaCha8Rng, sig: &Signature, n: usize, size: usize) -> Term {
    if size <= 1 || rng.gen_bool(0.3) {
        // leaves
        let mut opts: Vec<Term> = vec![Term::Id(n), Term::Zero(n, n)];
        if n == 1 {
            for t in 0..sig.tests.len() {
                opts.push(Term::Test { test: t, positive: true });
                opts.push(Term::Test { test: t, positive: false });
            }
        }
        if n >= 2 {
            let s = rng.gen_range(1..n);
            opts.push(Term::cotuple(Term::InjL(s, n - s), Term::Zero(n - s, n)));
            opts.push(Term::cotuple(Term::Zero(s, n), Term::InjR(s, n - s)));
        }
        return opts[rng.gen_range(0..opts.len())].clone();
    }
    let left = gen_test_form(rng, sig, n, size / 2);
    let right = gen_test_form(rng, sig, n, size - size / 2 - 1);
    if rng.gen_bool(0.5) {
        Term::plus(left, right)
    } else {
        Term::comp(left, right)
    }
}

fn gen_any(
    rng: &mut ChaCha8Rng,
    sig: &Signature,
    allow_ops: bool,
    ty: MorphType,
    size: usize,
) -> Term {
    let (n, k) = (ty.dom, ty.cod);
    let leaf = |rng: &mut ChaCha8Rng| -> Term {
        let mut opts: Vec<Term> = vec![Term::Zero(n, k)];
        if n == k {
            opts.push(Term::Id(n));
        }
        if k > n {
            opts.push(Term::InjL(n, k - n));
            opts.push(Term::InjR(k - n, n));
        }
        if n == 1 && k == 1 {
            for u in 0..sig.actions.len() {
                opts.push(Term::Act(u));
                opts.push(Term::Act(u)); // actions twice as likely as tests
            }
            for t in 0..sig.tests.len() {
                opts.push(Term::Test { test: t, positive: true });
                opts.push(Term::Test { test: t, positive: false });
            }
        }
        if allow_ops && n == 1 {
            for (f, &(_, ar)) in sig.ops.iter().enumerate() {
                if ar == k {
                    opts.push(Term::Gen(f));
                }
            }
        }
        opts[rng.gen_range(0..opts.len())].clone()
    };
    if size <= 1 {
        return leaf(rng);
    }
    // weighted pick of a combinator; star is damped on large budgets so
    // generated machines stay small
    #[derive(Clone, Copy)]
    enum Pick {
        Leaf,
        Plus,
        Comp,
        Star,
        Cotuple,
    }
    let mut picks: Vec<(Pick, u32)> = vec![(Pick::Leaf, 1), (Pick::Plus, 3), (Pick::Comp, 4)];
    if n == k {
        picks.push((Pick::Star, if size > 8 { 1 } else { 2 }));
    }
    if n >= 2 {
        picks.push((Pick::Cotuple, 3));
    }
    let total: u32 = picks.iter().map(|&(_, w)| w).sum();
    let mut roll = rng.gen_range(0..total);
    let pick = picks
        .iter()
        .find(|&&(_, w)| {
            if roll < w {
                true
            } else {
                roll -= w;
                false
            }
        })
        .unwrap()
        .0;
    match pick {
        Pick::Leaf => leaf(rng),
        Pick::Plus => Term::plus(
            gen_any(rng, sig, allow_ops, ty, size / 2),
            gen_any(rng, sig, allow_ops, ty, size - size / 2 - 1),
        ),
        Pick::Comp => {
            // intermediate dimension; operation arities make good cut points
            let mut mids = vec![1, 2];
            if allow_ops {
                mids.extend(sig.ops.iter().map(|&(_, ar)| ar));
            }
            let m = mids[rng.gen_range(0..mids.len())];
            Term::comp(
                gen_any(rng, sig, allow_ops, MorphType::new(n, m), size / 2),
                gen_any(rng, sig, allow_ops, MorphType::new(m, k), size - size / 2 - 1),
            )
        }
        Pick::Star => Term::star(gen_any(rng, sig, allow_ops, ty, size - 1)),
        Pick::Cotuple => {
            let s = rng.gen_range(1..n);
            Term::cotuple(
                gen_any(rng, sig, allow_ops, MorphType::new(s, k), size / 2),
                gen_any(rng, sig, allow_ops, MorphType::new(n - s, k), size - size / 2 - 1),
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Laws
// ---------------------------------------------------------------------------

/// One generated test case of a law.
pub struct Instance {
    /// Semantic equalities that must hold for the conclusion to apply.
    pub premises: Vec<(Term, Term)>,
    pub lhs: Term,
    pub rhs: Term,
}

type GenFn = Box<dyn Fn(&mut ChaCha8Rng, &Signature, usize) -> Result<Instance> + Send + Sync>;

pub struct Law {
    pub name: &'static str,
    pub group: &'static str,
    /// Whether instances are expected to hold. Invalid laws are refuted by
    /// finding counterexamples.
    pub valid: bool,
    pub gen: GenFn,
}

fn t11() -> MorphType {
    MorphType::new(1, 1)
}

fn plain(lhs: Term, rhs: Term) -> Result<Instance> {
    Ok(Instance { premises: vec![], lhs, rhs })
}

macro_rules! law {
    ($name:literal, $group:literal, $valid:expr, |$rng:ident, $sig:ident, $size:ident| $body:expr) => {
        Law {
            name: $name,
            group: $group,
            valid: $valid,
            gen: Box::new(|$rng: &mut ChaCha8Rng, $sig: &Signature, $size: usize| $body),
        }
    };
}

/// The full law catalog. Groups:
/// `category` (unit and associativity of composition), `kic` (the core
/// axiom box: coproducts, join structure, tame distribution, star axioms),
/// `grove` (join of cotuples), `star-extra` (derivable star identities),
/// `conway` (Elgot iteration principles), `dec-while` / `test-while`
/// (while-loop axiom boxes over decisions and tests), `tests-dec` (the
/// test/decision retraction), `while-eqs` (derived while identities),
/// `translation` (the encodings between star, dagger and while agree), and
/// `invalid` (expected refutations).
pub fn catalog() -> Vec<Law> {
    // generator shorthands used by the templates below
    fn g(rng: &mut ChaCha8Rng, sig: &Signature, size: usize) -> Term {
        gen_any(rng, sig, true, t11(), size)
    }
    fn tame(rng: &mut ChaCha8Rng, sig: &Signature, size: usize) -> Term {
        gen_any(rng, sig, false, t11(), size)
    }
    fn tst(rng: &mut ChaCha8Rng, sig: &Signature, size: usize) -> Term {
        gen_test_form(rng, sig, 1, size)
    }
    fn g12(rng: &mut ChaCha8Rng, sig: &Signature, size: usize) -> Term {
        gen_any(rng, sig, true, MorphType::new(1, 2), size)
    }
    fn dec(rng: &mut ChaCha8Rng, sig: &Signature, size: usize) -> Result<(Term, Term)> {
        let b = gen_test_form(rng, sig, 1, size);
        let d = test_to_dec(&b, 1)?;
        Ok((b, d))
    }
    vec![
        // -- category ------------------------------------------------------
        law!("comp-assoc", "category", true, |r, s, z| {
            let (p, q, w) = (g(r, s, z), g(r, s, z), g(r, s, z));
            plain(
                Term::comp(Term::comp(p.clone(), q.clone()), w.clone()),
                Term::comp(p, Term::comp(q, w)),
            )
        }),
        law!("id-left", "category", true, |r, s, z| {
            let p = g(r, s, z);
            plain(Term::comp(Term::Id(1), p.clone()), p)
        }),
        law!("id-right", "category", true, |r, s, z| {
            let p = g(r, s, z);
            plain(Term::comp(p.clone(), Term::Id(1)), p)
        }),
        // -- kic axiom box -------------------------------------------------
        law!("copr-beta-left", "kic", true, |r, s, z| {
            let (p, q) = (g(r, s, z), g(r, s, z));
            plain(
                Term::comp(Term::InjL(1, 1), Term::cotuple(p.clone(), q)),
                p,
            )
        }),
        law!("copr-beta-right", "kic", true, |r, s, z| {
            let (p, q) = (g(r, s, z), g(r, s, z));
            plain(
                Term::comp(Term::InjR(1, 1), Term::cotuple(p, q.clone())),
                q,
            )
        }),
        law!("copr-eta", "kic", true, |_r, _s, _z| {
            plain(
                Term::cotuple(Term::InjL(1, 1), Term::InjR(1, 1)),
                Term::Id(2),
            )
        }),
        law!("copr-fusion", "kic", true, |r, s, z| {
            let (p, q, w) = (g(r, s, z), g(r, s, z), g(r, s, z));
            plain(
                Term::comp(Term::cotuple(p.clone(), q.clone()), w.clone()),
                Term::cotuple(Term::comp(p, w.clone()), Term::comp(q, w)),
            )
        }),
        law!("plus-unit", "kic", true, |r, s, z| {
            let p = g(r, s, z);
            plain(Term::plus(Term::Zero(1, 1), p.clone()), p)
        }),
        law!("plus-idem", "kic", true, |r, s, z| {
            let p = g(r, s, z);
            plain(Term::plus(p.clone(), p.clone()), p)
        }),
        law!("plus-comm", "kic", true, |r, s, z| {
            let (p, q) = (g(r, s, z), g(r, s, z));
            plain(Term::plus(p.clone(), q.clone()), Term::plus(q, p))
        }),
        law!("plus-assoc", "kic", true, |r, s, z| {
            let (p, q, w) = (g(r, s, z), g(r, s, z), g(r, s, z));
            plain(
                Term::plus(Term::plus(p.clone(), q.clone()), w.clone()),
                Term::plus(p, Term::plus(q, w)),
            )
        }),
        law!("zero-annih-left", "kic", true, |r, s, z| {
            let p = g(r, s, z);
            plain(Term::comp(Term::Zero(1, 1), p), Term::Zero(1, 1))
        }),
        law!("dist-right", "kic", true, |r, s, z| {
            let (p, q, w) = (g(r, s, z), g(r, s, z), g(r, s, z));
            plain(
                Term::comp(Term::plus(q.clone(), w.clone()), p.clone()),
                Term::plus(Term::comp(q, p.clone()), Term::comp(w, p)),
            )
        }),
        law!("tame-annih-right", "kic", true, |r, s, z| {
            let u = tame(r, s, z);
            plain(Term::comp(u, Term::Zero(1, 1)), Term::Zero(1, 1))
        }),
        law!("tame-dist-left", "kic", true, |r, s, z| {
            let (u, p, q) = (tame(r, s, z), g(r, s, z), g(r, s, z));
            plain(
                Term::comp(u.clone(), Term::plus(p.clone(), q.clone())),
                Term::plus(Term::comp(u.clone(), p), Term::comp(u, q)),
            )
        }),
        law!("star-fix", "kic", true, |r, s, z| {
            let p = g(r, s, z);
            plain(
                Term::star(p.clone()),
                Term::plus(Term::Id(1), Term::comp(p.clone(), Term::star(p))),
            )
        }),
        law!("star-sum", "kic", true, |r, s, z| {
            let (p, q) = (g(r, s, z), g(r, s, z));
            plain(
                Term::star(Term::plus(p.clone(), q.clone())),
                Term::comp(
                    Term::star(p.clone()),
                    Term::star(Term::comp(q, Term::star(p))),
                ),
            )
        }),
        law!("star-uni", "kic", true, |r, s, z| {
            // premise u;p = q;u, biased with p = w;u and q = u;w
            let (u, w) = (tame(r, s, z), g(r, s, z));
            let p = Term::comp(w.clone(), u.clone());
            let q = Term::comp(u.clone(), w);
            Ok(Instance {
                premises: vec![(
                    Term::comp(u.clone(), p.clone()),
                    Term::comp(q.clone(), u.clone()),
                )],
                lhs: Term::comp(u.clone(), Term::star(p)),
                rhs: Term::comp(Term::star(q), u),
            })
        }),
        // -- grove ---------------------------------------------------------
        law!("copr-join", "grove", true, |r, s, z| {
            let (p, q, p2, q2) = (g(r, s, z), g(r, s, z), g(r, s, z), g(r, s, z));
            plain(
                Term::plus(
                    Term::cotuple(p.clone(), q.clone()),
                    Term::cotuple(p2.clone(), q2.clone()),
                ),
                Term::cotuple(Term::plus(p, p2), Term::plus(q, q2)),
            )
        }),
        // -- derivable star identities --------------------------------------
        law!("star-sqr", "star-extra", true, |r, s, z| {
            let p = g(r, s, z);
            plain(
                Term::star(p.clone()),
                Term::star(Term::comp(p.clone(), Term::plus(Term::Id(1), p))),
            )
        }),
        law!("star-swap-tame", "star-extra", true, |r, s, z| {
            // (p;q)* = id + p;(q;p)*;q, derivable with q tame
            let (p, q) = (g(r, s, z), tame(r, s, z));
            plain(
                Term::star(Term::comp(p.clone(), q.clone())),
                Term::plus(
                    Term::Id(1),
                    Term::comp_all(vec![
                        p.clone(),
                        Term::star(Term::comp(q.clone(), p)),
                        q,
                    ]),
                ),
            )
        }),
        // -- conway iteration ----------------------------------------------
        law!("conway-naturality", "conway", true, |r, s, z| {
            let (p, q) = (g12(r, s, z), g(r, s, z));
            let q_oplus_id = Term::cotuple(
                Term::comp(q.clone(), Term::InjL(1, 1)),
                Term::InjR(1, 1),
            );
            plain(
                Term::comp(dagger(&p, 1, 1), q),
                dagger(&Term::comp(p, q_oplus_id), 1, 1),
            )
        }),
        law!("conway-dinaturality", "conway", true, |r, s, z| {
            let (p, q) = (g12(r, s, z), g12(r, s, z));
            plain(
                dagger(
                    &Term::comp(p.clone(), Term::cotuple(Term::InjL(1, 1), q.clone())),
                    1,
                    1,
                ),
                Term::comp(
                    p.clone(),
                    Term::cotuple(
                        Term::Id(1),
                        dagger(&Term::comp(q, Term::cotuple(Term::InjL(1, 1), p)), 1, 1),
                    ),
                ),
            )
        }),
        law!("conway-codiagonal", "conway", true, |r, s, z| {
            let p = gen_any(r, s, true, MorphType::new(1, 3), z);
            plain(
                dagger(
                    &Term::comp(p.clone(), Term::cotuple(Term::Id(2), Term::InjR(1, 1))),
                    1,
                    1,
                ),
                dagger(&dagger(&p, 2, 1), 1, 1),
            )
        }),
        law!("conway-fixpoint", "conway", true, |r, s, z| {
            let p = g12(r, s, z);
            plain(
                Term::comp(
                    p.clone(),
                    Term::cotuple(Term::Id(1), dagger(&p, 1, 1)),
                ),
                dagger(&p, 1, 1),
            )
        }),
        law!("conway-uniformity", "conway", true, |r, s, z| {
            // premise u;q = p;(id+u), biased with q = w;(id+u) and p = u;w
            let (u, w) = (tame(r, s, z), g12(r, s, z));
            let id_oplus_u = Term::cotuple(
                Term::InjL(1, 1),
                Term::comp(u.clone(), Term::InjR(1, 1)),
            );
            let q = Term::comp(w.clone(), id_oplus_u.clone());
            let p = Term::comp(u.clone(), w);
            Ok(Instance {
                premises: vec![(
                    Term::comp(u.clone(), q.clone()),
                    Term::comp(p.clone(), id_oplus_u),
                )],
                lhs: Term::comp(u, dagger(&q, 1, 1)),
                rhs: dagger(&p, 1, 1),
            })
        }),
        // -- while over decisions ------------------------------------------
        law!("dw-fix", "dec-while", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            let p = g(r, s, z);
            plain(
                while_dec(&d, p.clone(), 1),
                ite_dec(&d, Term::comp(p.clone(), while_dec(&d, p, 1)), Term::Id(1)),
            )
        }),
        law!("dw-or", "dec-while", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            let (_, e) = dec(r, s, z)?;
            let p = g(r, s, z);
            plain(
                while_dec(&dor(&d, &e, 1), p.clone(), 1),
                Term::comp(
                    while_dec(&d, p.clone(), 1),
                    while_dec(&e, Term::comp(p.clone(), while_dec(&d, p, 1)), 1),
                ),
            )
        }),
        law!("dw-and", "dec-while", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            let (_, e) = dec(r, s, z)?;
            let p = g(r, s, z);
            plain(
                while_dec(&dand(&d, &dor(&e, &tt(1), 1), 1), p.clone(), 1),
                while_dec(&d, ite_dec(&e, p.clone(), p), 1),
            )
        }),
        law!("dw-uni", "dec-while", true, |r, s, z| {
            // biased: u = v = a test form, e = d = <>b, p = w;u, q = u;w;
            // tests commute, so the premise holds
            let (_, d) = dec(r, s, z)?;
            let u = gen_test_form(r, s, 1, z);
            let w = g(r, s, z);
            let p = Term::comp(w.clone(), u.clone());
            let q = Term::comp(u.clone(), w);
            let body = |d: &Term, p: &Term| {
                ite_dec(d, Term::comp(p.clone(), tt(1)), ff(1))
            };
            Ok(Instance {
                premises: vec![(
                    Term::comp(u.clone(), body(&d, &p)),
                    ite_dec(
                        &d,
                        Term::comp_all(vec![q.clone(), u.clone(), tt(1)]),
                        Term::comp(u.clone(), ff(1)),
                    ),
                )],
                lhs: Term::comp(u.clone(), while_dec(&d, p, 1)),
                rhs: Term::comp(while_dec(&d, q, 1), u),
            })
        }),
        // -- while over tests ----------------------------------------------
        law!("tw-fix", "test-while", true, |r, s, z| {
            let b = tst(r, s, z);
            let p = g(r, s, z);
            plain(
                while_test(&b, p.clone())?,
                ite_test(&b, Term::comp(p.clone(), while_test(&b, p)?), Term::Id(1))?,
            )
        }),
        law!("tw-or", "test-while", true, |r, s, z| {
            let (b, c) = (tst(r, s, z), tst(r, s, z));
            let p = g(r, s, z);
            let or = Term::plus(b.clone(), c.clone());
            plain(
                while_test(&or, p.clone())?,
                Term::comp(
                    while_test(&b, p.clone())?,
                    while_test(&c, Term::comp(p.clone(), while_test(&b, p)?))?,
                ),
            )
        }),
        law!("tw-uni", "test-while", true, |r, s, z| {
            // biased: u = v = a test form w, c = b, p = e;w, q = w;e
            let b = tst(r, s, z);
            let w = gen_test_form(r, s, 1, z);
            let e = g(r, s, z);
            let p = Term::comp(e.clone(), w.clone());
            let q = Term::comp(w.clone(), e);
            Ok(Instance {
                premises: vec![
                    (
                        Term::comp(w.clone(), complement(&b)?),
                        Term::comp(complement(&b)?, w.clone()),
                    ),
                    (
                        Term::comp_all(vec![w.clone(), b.clone(), p.clone()]),
                        Term::comp_all(vec![b.clone(), q.clone(), w.clone()]),
                    ),
                ],
                lhs: Term::comp(w.clone(), while_test(&b, p)?),
                rhs: Term::comp(while_test(&b, q)?, w),
            })
        }),
        // -- tests vs decisions --------------------------------------------
        law!("td-retraction", "tests-dec", true, |r, s, z| {
            let (b, d) = dec(r, s, z)?;
            plain(dec_to_test(&d, 1), b)
        }),
        law!("td-nabla", "tests-dec", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            plain(
                Term::comp(d, Term::cotuple(Term::Id(1), Term::Id(1))),
                Term::Id(1),
            )
        }),
        law!("td-and-idem", "tests-dec", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            plain(d.clone(), dand(&d, &d, 1))
        }),
        law!("td-or-idem", "tests-dec", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            plain(d.clone(), dor(&d, &d, 1))
        }),
        law!("td-query-or", "tests-dec", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            let (_, e) = dec(r, s, z)?;
            plain(
                dec_to_test(&dor(&e, &d, 1), 1),
                Term::plus(dec_to_test(&e, 1), dec_to_test(&d, 1)),
            )
        }),
        law!("td-query-and", "tests-dec", true, |r, s, z| {
            let (_, d) = dec(r, s, z)?;
            let (_, e) = dec(r, s, z)?;
            plain(
                dec_to_test(&dand(&e, &d, 1), 1),
                Term::comp(dec_to_test(&e, 1), dec_to_test(&d, 1)),
            )
        }),
        law!("td-query-neg", "tests-dec", true, |r, s, z| {
            let (b, d) = dec(r, s, z)?;
            plain(dec_to_test(&dneg(&d, 1), 1), complement(&b)?)
        }),
        law!("if-dec-as-test", "tests-dec", true, |r, s, z| {
            let (b, d) = dec(r, s, z)?;
            let (p, q) = (g(r, s, z), g(r, s, z));
            plain(ite_dec(&d, p.clone(), q.clone()), ite_test(&b, p, q)?)
        }),
        // -- derived while identities --------------------------------------
        law!("we-guard-exit", "while-eqs", true, |r, s, z| {
            let (b, c) = (tst(r, s, z), tst(r, s, z));
            let p = g(r, s, z);
            let nb = complement(&b)?;
            plain(
                Term::comp(nb.clone(), while_test(&Term::comp(b, c), p)?),
                nb,
            )
        }),
        law!("we-post-test", "while-eqs", true, |r, s, z| {
            let (b, c) = (tst(r, s, z), tst(r, s, z));
            let p = g(r, s, z);
            let or = Term::plus(b.clone(), c);
            let lhs = while_test(&or, p)?;
            plain(lhs.clone(), Term::comp(lhs, complement(&b)?))
        }),
        law!("we-absorb-guard", "while-eqs", true, |r, s, z| {
            let (b, c) = (tst(r, s, z), tst(r, s, z));
            let p = g(r, s, z);
            let and = Term::comp(b.clone(), c);
            plain(
                while_test(&and, p.clone())?,
                while_test(&and, Term::comp(b, p))?,
            )
        }),
        law!("we-if-split", "while-eqs", true, |r, s, z| {
            let (b, c) = (tst(r, s, z), tst(r, s, z));
            let (p, q) = (g(r, s, z), g(r, s, z));
            let and = Term::comp(b.clone(), c.clone());
            let inner = while_test(&and, p.clone())?;
            plain(
                while_test(&b, ite_test(&c, p, q.clone())?)?,
                Term::comp(
                    inner.clone(),
                    while_test(&b, Term::comp(q, inner))?,
                ),
            )
        }),
        // -- translations between loop primitives ---------------------------
        law!("trans-star-via-dagger", "translation", true, |r, s, z| {
            let p = g(r, s, z);
            plain(star_via_dagger(&p, 1), Term::star(p))
        }),
        law!("trans-dagger-via-star", "translation", true, |r, s, z| {
            let p = g12(r, s, z);
            plain(dagger_via_star(&p, 1, 1), dagger(&p, 1, 1))
        }),
        law!("trans-dagger-via-while", "translation", true, |r, s, z| {
            let p = g12(r, s, z);
            plain(dagger_via_while(&p, 1, 1), dagger(&p, 1, 1))
        }),
        law!("trans-while-via-star", "translation", true, |r, s, z| {
            let b = tst(r, s, z);
            let p = g(r, s, z);
            plain(while_via_star(&b, &p)?, while_test(&b, p)?)
        }),
        law!("trans-star-via-while", "translation", true, |r, s, z| {
            let p = g(r, s, z);
            plain(star_via_while(&p, 1)?, Term::star(p))
        }),
        law!("trans-while-via-dagger", "translation", true, |r, s, z| {
            let b = tst(r, s, z);
            let p = g(r, s, z);
            plain(while_via_dagger(&b, &p, 1)?, while_test(&b, p)?)
        }),
        // -- expected refutations ------------------------------------------
        law!("inv-star-star", "invalid", false, |r, s, z| {
            let p = g(r, s, z);
            plain(Term::star(Term::star(p.clone())), Term::star(p))
        }),
        law!("inv-plus-id-star", "invalid", false, |r, s, z| {
            let p = g(r, s, z);
            plain(
                Term::star(Term::plus(p.clone(), Term::Id(1))),
                Term::star(p),
            )
        }),
        law!("inv-dist-left-general", "invalid", false, |r, s, z| {
            // biased towards an operation head so the left factor really
            // branches; the law does hold for tame left factors
            let f = r.gen_range(0..s.ops.len());
            let ar = s.ops[f].1;
            let head = Term::comp(
                Term::Gen(f),
                gen_any(r, s, true, MorphType::new(ar, 1), z),
            );
            let (p, q) = (g(r, s, z), g(r, s, z));
            plain(
                Term::comp(head.clone(), Term::plus(p.clone(), q.clone())),
                Term::plus(Term::comp(head.clone(), p), Term::comp(head, q)),
            )
        }),
    ]
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

/// Outcome of fuzzing one law.
#[derive(Debug, Clone)]
pub struct LawReport {
    pub name: &'static str,
    pub group: &'static str,
    pub valid: bool,
    pub trials: usize,
    pub holds: usize,
    pub fails: usize,
    pub vacuous: usize,
    pub errors: usize,
    /// Up to a few rendered counterexamples (for valid laws these are
    /// failures; for invalid laws, the expected refutations).
    pub samples: Vec<String>,
}

impl LawReport {
    pub fn ok(&self) -> bool {
        if self.errors > 0 {
            return false;
        }
        if self.valid {
            self.fails == 0 && self.holds > 0
        } else {
            self.fails > 0
        }
    }
}

fn law_seed(base: u64, name: &str) -> u64 {
    // FNV-1a over the name, mixed with the base seed
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in name.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ base
}

/// Fuzz one law for a number of trials.
pub fn check_law(law: &Law, sig: &Signature, seed: u64, trials: usize, size: usize) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(law_seed(seed, law.name));
    let mut report = LawReport {
        name: law.name,
        group: law.group,
        valid: law.valid,
        trials,
        holds: 0,
        fails: 0,
        vacuous: 0,
        errors: 0,
        samples: vec![],
    };
    for _ in 0..trials {
        let inst = match (law.gen)(&mut rng, sig, size) {
            Ok(i) => i,
            Err(e) => {
                report.errors += 1;
                if report.samples.len() < 3 {
                    report.samples.push(format!("generator error: {e}"));
                }
                continue;
            }
        };
        let outcome = (|| -> Result<Option<bool>> {
            for (l, r) in &inst.premises {
                if !equal(&compile(l, sig)?, &compile(r, sig)?)? {
                    return Ok(None); // premise not met
                }
            }
            let lm = compile(&inst.lhs, sig)?;
            let rm = compile(&inst.rhs, sig)?;
            Ok(Some(equal(&lm, &rm)?))
        })();
        match outcome {
            Err(e) => {
                report.errors += 1;
                if report.samples.len() < 3 {
                    report.samples.push(format!("engine error: {e}"));
                }
            }
            Ok(None) => report.vacuous += 1,
            Ok(Some(true)) => report.holds += 1,
            Ok(Some(false)) => {
                report.fails += 1;
                if report.samples.len() < 3 {
                    let detail = (|| -> Result<String> {
                        let lm = compile(&inst.lhs, sig)?;
                        let rm = compile(&inst.rhs, sig)?;
                        Ok(match witness(&lm, &rm)? {
                            Some(w) => w.render(sig).replace('\n', "; "),
                            None => "no witness".into(),
                        })
                    })()
                    .unwrap_or_else(|e| format!("witness error: {e}"));
                    report.samples.push(format!(
                        "{} /= {} [{}]",
                        print_term(&inst.lhs, sig),
                        print_term(&inst.rhs, sig),
                        detail
                    ));
                }
            }
        }
    }
    report
}

/// Aggregate suite result with a deterministic line-oriented rendering.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub laws: Vec<LawReport>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.laws.iter().all(|l| l.ok())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.laws {
            let status = if l.ok() { "ok  " } else { "FAIL" };
            out.push_str(&format!(
                "{status} {:<28} group={:<12} trials={:<4} holds={:<4} fails={:<3} vacuous={}\n",
                l.name, l.group, l.trials, l.holds, l.fails, l.vacuous
            ));
            let show_samples = !l.ok() || !l.valid;
            if show_samples {
                for s in &l.samples {
                    out.push_str(&format!("     | {s}\n"));
                }
            }
        }
        let (ok, total) = (
            self.laws.iter().filter(|l| l.ok()).count(),
            self.laws.len(),
        );
        out.push_str(&format!(
            "{}: {ok}/{total} laws as expected\n",
            if self.ok() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Fuzz configuration. Trials apply to valid laws; invalid laws use the
/// (smaller) refutation count.
#[derive(Debug, Clone, Copy)]
pub struct FuzzCfg {
    pub seed: u64,
    pub trials: usize,
    pub invalid_trials: usize,
    pub size: usize,
}

impl Default for FuzzCfg {
    fn default() -> Self {
        FuzzCfg { seed: 0, trials: 200, invalid_trials: 50, size: 8 }
    }
}

/// Run the whole catalog in parallel; the report order is the catalog
/// order regardless of scheduling.
pub fn fuzz(sig: &Signature, cfg: FuzzCfg) -> SuiteReport {
    let laws = catalog();
    let laws_reports: Vec<LawReport> = laws
        .par_iter()
        .map(|law| {
            let trials = if law.valid { cfg.trials } else { cfg.invalid_trials };
            check_law(law, sig, cfg.seed, trials, cfg.size)
        })
        .collect();
    SuiteReport { laws: laws_reports }
}
