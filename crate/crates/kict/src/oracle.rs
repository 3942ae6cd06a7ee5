//! Independent cross-checks for the equivalence engine.
//!
//! Two oracles live here:
//!
//! * Guarded-string support languages for tame terms, computed twice via
//!   unrelated routes: structurally on the term ([`support_lang`]) and by
//!   path enumeration over the compiled automaton ([`machine_support`]).
//!   Both are bounded by a maximum number of actions per string, which makes
//!   the star case a finite closure.
//! * Depth-bounded behavior trees ([`TruncTree`], [`expand`]) for arbitrary
//!   terms, including branching operations. Bounded equality is a necessary
//!   condition for engine equality, so [`cross_check`] can flag an engine
//!   bug as an inconsistency but can never be fooled by a deep difference.

use crate::rattree::{Machine, Morphism, State};
use crate::syntax::{desugar, Signature, Term};
use crate::weights::{gs_fuse, w_add, Atom, GuardedString, Weight};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::collections::BTreeSet;

pub type Lang = BTreeSet<GuardedString>;

/// A `dom x cod` matrix of guarded-string languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangMatrix {
    pub dom: usize,
    pub cod: usize,
    entries: Vec<Lang>,
}

impl LangMatrix {
    fn empty(dom: usize, cod: usize) -> Self {
        LangMatrix { dom, cod, entries: vec![Lang::new(); dom * cod] }
    }

    pub fn at(&self, i: usize, k: usize) -> &Lang {
        &self.entries[i * self.cod + k]
    }

    fn at_mut(&mut self, i: usize, k: usize) -> &mut Lang {
        &mut self.entries[i * self.cod + k]
    }

    pub fn render(&self, sig: &Signature) -> String {
        let mut out = String::new();
        for i in 0..self.dom {
            for k in 0..self.cod {
                let cell = self.at(i, k);
                if cell.is_empty() {
                    continue;
                }
                let strs: Vec<String> = cell
                    .iter()
                    .map(|g| g.render(&sig.tests, &sig.actions))
                    .collect();
                out.push_str(&format!("{i} -> {k}: {}\n", strs.join(", ")));
            }
        }
        if out.is_empty() {
            out.push_str("(empty)\n");
        }
        out
    }
}

fn diag_atoms(n: usize, atoms: &[Atom]) -> LangMatrix {
    let mut m = LangMatrix::empty(n, n);
    for i in 0..n {
        for &a in atoms {
            m.at_mut(i, i).insert(GuardedString::atom(a));
        }
    }
    m
}

fn lm_union(a: &LangMatrix, b: &LangMatrix) -> LangMatrix {
    let mut out = a.clone();
    for (dst, src) in out.entries.iter_mut().zip(b.entries.iter()) {
        dst.extend(src.iter().cloned());
    }
    out
}

fn lm_comp(a: &LangMatrix, b: &LangMatrix, max_len: usize) -> LangMatrix {
    let mut out = LangMatrix::empty(a.dom, b.cod);
    for i in 0..a.dom {
        for j in 0..a.cod {
            let left = a.at(i, j);
            if left.is_empty() {
                continue;
            }
            for k in 0..b.cod {
                for x in left {
                    for y in b.at(j, k) {
                        if let Some(z) = gs_fuse(x, y) {
                            if z.len_actions() <= max_len {
                                out.at_mut(i, k).insert(z);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// The support language of a tame term, computed structurally. Strings are
/// truncated to at most `max_len` actions; star is the corresponding finite
/// closure. Terms mentioning a branching operation are rejected.
pub fn support_lang(t: &Term, sig: &Signature, max_len: usize) -> Result<LangMatrix> {
    let core = desugar(t, sig)?;
    support_core(&core, sig, max_len)
}

fn support_core(t: &Term, sig: &Signature, max_len: usize) -> Result<LangMatrix> {
    let atoms = sig.atoms();
    Ok(match t {
        Term::Gen(_) => return Err(Error::NotTame),
        Term::Id(n) => diag_atoms(*n, atoms),
        Term::Zero(n, k) => LangMatrix::empty(*n, *k),
        Term::InjL(n, m) => {
            let mut out = LangMatrix::empty(*n, *n + *m);
            for i in 0..*n {
                for &a in atoms {
                    out.at_mut(i, i).insert(GuardedString::atom(a));
                }
            }
            out
        }
        Term::InjR(m, n) => {
            let mut out = LangMatrix::empty(*n, *m + *n);
            for i in 0..*n {
                for &a in atoms {
                    out.at_mut(i, m + i).insert(GuardedString::atom(a));
                }
            }
            out
        }
        Term::Act(u) => {
            let mut out = LangMatrix::empty(1, 1);
            if max_len >= 1 {
                for &a in atoms {
                    for &b in atoms {
                        out.at_mut(0, 0).insert(GuardedString {
                            atoms: vec![a, b],
                            actions: vec![*u],
                        });
                    }
                }
            }
            out
        }
        Term::Test { test, positive } => {
            let mut out = LangMatrix::empty(1, 1);
            for &a in atoms {
                if a.contains(*test) == *positive {
                    out.at_mut(0, 0).insert(GuardedString::atom(a));
                }
            }
            out
        }
        Term::Plus(p, q) => lm_union(
            &support_core(p, sig, max_len)?,
            &support_core(q, sig, max_len)?,
        ),
        Term::Comp(p, q) => lm_comp(
            &support_core(p, sig, max_len)?,
            &support_core(q, sig, max_len)?,
            max_len,
        ),
        Term::Cotuple(p, q) => {
            let lp = support_core(p, sig, max_len)?;
            let lq = support_core(q, sig, max_len)?;
            let mut out = LangMatrix::empty(lp.dom + lq.dom, lp.cod);
            for i in 0..lp.dom {
                for k in 0..lp.cod {
                    *out.at_mut(i, k) = lp.at(i, k).clone();
                }
            }
            for i in 0..lq.dom {
                for k in 0..lq.cod {
                    *out.at_mut(lp.dom + i, k) = lq.at(i, k).clone();
                }
            }
            out
        }
        Term::Star(p) => {
            let lp = support_core(p, sig, max_len)?;
            let mut acc = diag_atoms(lp.dom, atoms);
            loop {
                let next = lm_union(&acc, &lm_comp(&acc, &lp, max_len));
                if next == acc {
                    break acc;
                }
                acc = next;
            }
        }
        other => {
            // desugar eliminates the derived constructors
            return Err(Error::TypeMismatch(format!(
                "unexpected sugared constructor after desugaring: {other:?}"
            )));
        }
    })
}

/// The support language read off the compiled automaton by enumerating
/// guarded paths of at most `max_len` actions. Independent of the
/// structural computation above; rejects machines with branching output.
pub fn machine_support(p: &Morphism, max_len: usize) -> Result<LangMatrix> {
    let mut memo: BTreeMap<(State, usize), Vec<Lang>> = BTreeMap::new();
    let mut out = LangMatrix::empty(p.dom, p.cod());
    for (i, root) in p.roots.iter().enumerate() {
        let langs = paths_from(&p.machine, root, max_len, &mut memo)?;
        for (k, lang) in langs.into_iter().enumerate() {
            *out.at_mut(i, k) = lang;
        }
    }
    Ok(out)
}

fn paths_from(
    m: &Machine,
    s: &State,
    rem: usize,
    memo: &mut BTreeMap<(State, usize), Vec<Lang>>,
) -> Result<Vec<Lang>> {
    if let Some(hit) = memo.get(&(s.clone(), rem)) {
        return Ok(hit.clone());
    }
    if !m.souts_of(s).is_empty() {
        return Err(Error::NotTame);
    }
    let mut langs = vec![Lang::new(); m.cod];
    for ((a, k), w) in m.output_of(s) {
        if !w.is_zero() {
            langs[k].insert(GuardedString::atom(a));
        }
    }
    if rem > 0 {
        let mut keys: BTreeSet<(Atom, usize)> = BTreeSet::new();
        for &(id, _) in s.pairs() {
            keys.extend(m.nodes[id].gtrans.keys().copied());
        }
        for (a, u) in keys {
            let succ = m.deriv_action(s, a, u);
            if succ.is_empty() {
                continue;
            }
            let tails = paths_from(m, &succ, rem - 1, memo)?;
            for (k, tail) in tails.iter().enumerate() {
                for g in tail {
                    let mut atoms = vec![a];
                    atoms.extend(g.atoms.iter().copied());
                    let mut actions = vec![u];
                    actions.extend(g.actions.iter().copied());
                    langs[k].insert(GuardedString { atoms, actions });
                }
            }
        }
    }
    memo.insert((s.clone(), rem), langs.clone());
    Ok(langs)
}

// ---------------------------------------------------------------------------
// Depth-bounded behavior trees
// ---------------------------------------------------------------------------

/// A behavior tree truncated at a fixed depth. Two morphisms that the
/// engine considers equal must have identical trees at every depth;
/// differing trees at some depth therefore certify inequality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TruncTree {
    Horizon,
    Layer {
        exits: BTreeMap<(Atom, usize), Weight>,
        steps: BTreeMap<(Atom, usize), TruncTree>,
        ops: BTreeMap<(Atom, usize, Vec<TruncTree>), Weight>,
    },
}

/// Expand each root of a morphism to the given depth. States are pruned to
/// their productive part first, so semantically dead branches do not show
/// up; this keeps tree expansion invariant under the same normalization
/// the engine uses.
pub fn expand(p: &Morphism, depth: usize) -> Vec<TruncTree> {
    let prod = p.machine.productive();
    p.roots
        .iter()
        .map(|r| expand_state(&p.machine, &prod, r, depth))
        .collect()
}

fn norm(prod: &[bool], s: &State) -> State {
    State::from_pairs(
        s.pairs()
            .iter()
            .copied()
            .filter(|&(id, _)| prod[id]),
    )
}

fn expand_state(m: &Machine, prod: &[bool], s: &State, depth: usize) -> TruncTree {
    let s = norm(prod, s);
    if depth == 0 {
        return TruncTree::Horizon;
    }
    let exits = m.output_of(&s);
    let mut steps = BTreeMap::new();
    let mut keys: BTreeSet<(Atom, usize)> = BTreeSet::new();
    for &(id, _) in s.pairs() {
        keys.extend(m.nodes[id].gtrans.keys().copied());
    }
    for (a, u) in keys {
        let succ = norm(prod, &m.deriv_action(&s, a, u));
        if succ.is_empty() {
            continue;
        }
        steps.insert((a, u), expand_state(m, prod, &succ, depth - 1));
    }
    let mut ops: BTreeMap<(Atom, usize, Vec<TruncTree>), Weight> = BTreeMap::new();
    for ((a, f, kids), w) in m.souts_of(&s) {
        let key = (
            a,
            f,
            kids.iter()
                .map(|k| expand_state(m, prod, k, depth - 1))
                .collect::<Vec<_>>(),
        );
        let e = ops.entry(key).or_insert(Weight::Zero);
        *e = w_add(*e, w);
    }
    TruncTree::Layer { exits, steps, ops }
}

fn check_shape(p: &Morphism, q: &Morphism) -> Result<()> {
    if p.dom != q.dom || p.cod() != q.cod() || p.machine.num_atoms != q.machine.num_atoms {
        return Err(Error::TypeMismatch(format!(
            "cannot compare {} -> {} with {} -> {}",
            p.dom,
            p.cod(),
            q.dom,
            q.cod()
        )));
    }
    Ok(())
}

/// Depth-bounded behavioral equality: a necessary condition for engine
/// equality.
pub fn compare_bounded(p: &Morphism, q: &Morphism, depth: usize) -> Result<bool> {
    check_shape(p, q)?;
    Ok(expand(p, depth) == expand(q, depth))
}

/// Result of running the engine and the bounded oracle side by side.
/// `consistent` is false exactly when the engine claims equality but the
/// bounded trees already differ, which would mean an engine bug.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossCheck {
    pub engine: bool,
    pub bounded: bool,
    pub consistent: bool,
}

pub fn cross_check(p: &Morphism, q: &Morphism, depth: usize) -> Result<CrossCheck> {
    let engine = crate::equiv::equal(p, q)?;
    let bounded = compare_bounded(p, q, depth)?;
    Ok(CrossCheck { engine, bounded, consistent: !(engine && !bounded) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::equal;
    use crate::laws::{default_sig, gen_term};
    use crate::rattree::compile;
    use crate::syntax::{MorphType, TermClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probe_pair() -> (Term, Term) {
        // pairs the two branch outcomes differently under the binary op f:
        // f;[u,v] + f;[v,u]  vs  f;[u,u] + f;[v,v]
        let f = Term::Gen(1);
        let u = Term::Act(0);
        let v = Term::Act(1);
        let mk = |l: &Term, r: &Term| {
            Term::comp(f.clone(), Term::cotuple(l.clone(), r.clone()))
        };
        (
            Term::plus(mk(&u, &v), mk(&v, &u)),
            Term::plus(mk(&u, &u), mk(&v, &v)),
        )
    }

    #[test]
    fn structural_and_machine_support_agree() {
        let sig = default_sig();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pool: Vec<Term> = vec![
            Term::star(Term::Act(0)),
            Term::comp(Term::test(0), Term::Act(1)),
            Term::cotuple(
                Term::InjR(1, 1),
                Term::plus(
                    Term::comp(Term::Act(0), Term::InjL(1, 1)),
                    Term::InjR(1, 1),
                ),
            ),
            Term::star(Term::plus(Term::Act(0), Term::Act(1))),
        ];
        for _ in 0..25 {
            pool.push(
                gen_term(&mut rng, &sig, TermClass::Tame, MorphType::new(1, 1), 8).unwrap(),
            );
            pool.push(
                gen_term(&mut rng, &sig, TermClass::Tame, MorphType::new(2, 2), 8).unwrap(),
            );
        }
        for t in &pool {
            let structural = support_lang(t, &sig, 3).unwrap();
            let machine = machine_support(&compile(t, &sig).unwrap(), 3).unwrap();
            assert_eq!(structural, machine, "support mismatch for {t:?}");
        }
    }

    #[test]
    fn branching_terms_are_rejected() {
        let sig = default_sig();
        let t = Term::comp(Term::Gen(1), Term::cotuple(Term::Act(0), Term::Act(1)));
        assert!(matches!(support_lang(&t, &sig, 3), Err(Error::NotTame)));
        let m = compile(&t, &sig).unwrap();
        assert!(matches!(machine_support(&m, 3), Err(Error::NotTame)));
    }

    #[test]
    fn support_ignores_weights() {
        // id* and id differ in weight (infinity vs one) but have the same
        // support, while the engine still separates them
        let sig = default_sig();
        let a = support_lang(&Term::star(Term::Id(1)), &sig, 3).unwrap();
        let b = support_lang(&Term::Id(1), &sig, 3).unwrap();
        assert_eq!(a, b);
        let ma = compile(&Term::star(Term::Id(1)), &sig).unwrap();
        let mb = compile(&Term::Id(1), &sig).unwrap();
        assert!(!equal(&ma, &mb).unwrap());
    }

    #[test]
    fn probe_pair_needs_depth_two() {
        let sig = default_sig();
        let (l, r) = probe_pair();
        let ml = compile(&l, &sig).unwrap();
        let mr = compile(&r, &sig).unwrap();
        assert!(compare_bounded(&ml, &mr, 1).unwrap(), "depth 1 cannot see it");
        assert!(!compare_bounded(&ml, &mr, 2).unwrap(), "depth 2 separates");
        let cc = cross_check(&ml, &mr, 2).unwrap();
        assert!(!cc.engine);
        assert!(!cc.bounded);
        assert!(cc.consistent);
    }

    #[test]
    fn engine_equalities_pass_the_bounded_oracle() {
        let sig = default_sig();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for i in 0..40 {
            let t = gen_term(&mut rng, &sig, TermClass::General, MorphType::new(1, 1), 8)
                .unwrap();
            // a pair that is equal by construction and a random pair
            let noisy = Term::comp(t.clone(), Term::Id(1));
            let other =
                gen_term(&mut rng, &sig, TermClass::General, MorphType::new(1, 1), 8).unwrap();
            let m = compile(&t, &sig).unwrap();
            let mn = compile(&noisy, &sig).unwrap();
            let mo = compile(&other, &sig).unwrap();
            let depth = 2 + (i % 3);
            assert!(cross_check(&m, &mn, depth).unwrap().consistent);
            assert!(cross_check(&m, &mo, depth).unwrap().consistent);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let sig = default_sig();
        let p = compile(&Term::Id(1), &sig).unwrap();
        let q = compile(&Term::Id(2), &sig).unwrap();
        assert!(compare_bounded(&p, &q, 2).is_err());
    }

    #[test]
    fn render_lists_strings() {
        let sig = default_sig();
        let l = support_lang(&Term::comp(Term::test(0), Term::Act(0)), &sig, 2).unwrap();
        let text = l.render(&sig);
        assert!(text.contains("0 -> 0:"));
        assert!(text.contains('u'));
    }
}
