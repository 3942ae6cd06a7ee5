//! The scalar semiring `Q = {0, 1, ∞}`, atoms, guarded strings, atom-indexed
//! weights and matrices over them.
//!
//! `Q` is a complete lattice under `0 < 1 < ∞`; addition is binary join,
//! multiplication has `0` absorbing and `1` neutral, and the star is the
//! countable power sum, so `0* = 1` and `1* = ∞* = ∞`. Star is *not*
//! idempotent — this is the whole point of the weight ∞ (it records that a
//! loop can spin), and it is why truncated power sums cannot be used for
//! matrix star: no finite join of `1`s ever reaches `∞`.

use crate::{Error, Result};
use std::fmt;

/// Hard cap on the number of test symbols; atoms blow up as `2^|Θ|`.
pub const ATOM_CAP: usize = 6;

// ---------------------------------------------------------------------------
// Weight
// ---------------------------------------------------------------------------

/// A scalar in the complete semiring `Q = {0, 1, ∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    Zero,
    One,
    Infinity,
}

pub use Weight::{Infinity, One, Zero};

/// Join (the semiring addition).
pub fn w_add(a: Weight, b: Weight) -> Weight {
    a.max(b)
}

/// Product: `0·x = 0`, `1·x = x`, `∞·∞ = ∞`.
pub fn w_mul(a: Weight, b: Weight) -> Weight {
    match (a, b) {
        (Zero, _) | (_, Zero) => Zero,
        (One, x) | (x, One) => x,
        (Infinity, Infinity) => Infinity,
    }
}

/// Star, i.e. the countable sum of all powers: `0* = 1`, `1* = ∞`, `∞* = ∞`.
pub fn w_star(a: Weight) -> Weight {
    match a {
        Zero => One,
        One | Infinity => Infinity,
    }
}

impl Weight {
    pub fn is_zero(self) -> bool {
        self == Zero
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Zero => write!(f, "0"),
            One => write!(f, "1"),
            Infinity => write!(f, "inf"),
        }
    }
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

/// A complete atom over the test symbols: bit `i` set means test `i` holds,
/// every unset test is negated. Canonical order is the numeric bitset order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(pub u8);

impl Atom {
    pub fn contains(self, test_idx: usize) -> bool {
        self.0 & (1 << test_idx) != 0
    }

    /// Render as `<t1 t2>` given the test-name table; `<>` is the empty atom.
    pub fn render(self, test_names: &[String]) -> String {
        let names: Vec<&str> = test_names
            .iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, n)| n.as_str())
            .collect();
        format!("<{}>", names.join(" "))
    }
}

/// All `2^n` atoms over `n` test symbols, in canonical order.
pub fn enumerate_atoms(num_tests: usize) -> Result<Vec<Atom>> {
    if num_tests > ATOM_CAP {
        return Err(Error::AtomCapExceeded(num_tests, ATOM_CAP));
    }
    Ok((0..1u16 << num_tests).map(|b| Atom(b as u8)).collect())
}

// ---------------------------------------------------------------------------
// Guarded strings
// ---------------------------------------------------------------------------

/// An alternating sequence `b1 u1 b2 ... un b(n+1)`: `atoms.len()` is always
/// `actions.len() + 1`. Actions are indices into the signature's action table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GuardedString {
    pub atoms: Vec<Atom>,
    pub actions: Vec<usize>,
}

impl GuardedString {
    pub fn atom(a: Atom) -> Self {
        GuardedString { atoms: vec![a], actions: vec![] }
    }

    pub fn first(&self) -> Atom {
        self.atoms[0]
    }

    pub fn last(&self) -> Atom {
        *self.atoms.last().unwrap()
    }

    pub fn len_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn render(&self, test_names: &[String], action_names: &[String]) -> String {
        let mut out = self.atoms[0].render(test_names);
        for (i, &u) in self.actions.iter().enumerate() {
            out.push(' ');
            out.push_str(&action_names[u]);
            out.push(' ');
            out.push_str(&self.atoms[i + 1].render(test_names));
        }
        out
    }
}

/// Fusion product: concatenate on a shared middle atom, `None` otherwise.
pub fn gs_fuse(x: &GuardedString, y: &GuardedString) -> Option<GuardedString> {
    if x.last() != y.first() {
        return None;
    }
    let mut atoms = x.atoms.clone();
    atoms.extend_from_slice(&y.atoms[1..]);
    let mut actions = x.actions.clone();
    actions.extend_from_slice(&y.actions);
    Some(GuardedString { atoms, actions })
}

// ---------------------------------------------------------------------------
// Atom-indexed weights
// ---------------------------------------------------------------------------

/// A total map `Atom → Weight`, stored densely over the atom table.
///
/// This is the algebra of atom-guarded exits: the product is pointwise
/// (diagonal) because composing two exits fuses their atoms, which vanishes
/// unless the atoms coincide.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomWeight(pub Vec<Weight>);

impl AtomWeight {
    pub fn zero(num_atoms: usize) -> Self {
        AtomWeight(vec![Zero; num_atoms])
    }

    pub fn one(num_atoms: usize) -> Self {
        AtomWeight(vec![One; num_atoms])
    }

    pub fn add(&self, other: &AtomWeight) -> AtomWeight {
        AtomWeight(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| w_add(a, b))
                .collect(),
        )
    }

    pub fn mul(&self, other: &AtomWeight) -> AtomWeight {
        AtomWeight(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| w_mul(a, b))
                .collect(),
        )
    }

    pub fn star(&self) -> AtomWeight {
        AtomWeight(self.0.iter().map(|&a| w_star(a)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|w| w.is_zero())
    }

    pub fn get(&self, a: Atom) -> Weight {
        self.0[a.0 as usize]
    }
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// A square matrix over [`AtomWeight`] (the exit algebra of iteration).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WMatrix {
    pub n: usize,
    pub num_atoms: usize,
    /// Row-major entries, `entries[i * n + j]`.
    pub entries: Vec<AtomWeight>,
}

impl WMatrix {
    pub fn zero(n: usize, num_atoms: usize) -> Self {
        WMatrix {
            n,
            num_atoms,
            entries: vec![AtomWeight::zero(num_atoms); n * n],
        }
    }

    pub fn identity(n: usize, num_atoms: usize) -> Self {
        let mut m = WMatrix::zero(n, num_atoms);
        for i in 0..n {
            *m.at_mut(i, i) = AtomWeight::one(num_atoms);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &AtomWeight {
        &self.entries[i * self.n + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut AtomWeight {
        &mut self.entries[i * self.n + j]
    }

    pub fn add(&self, other: &WMatrix) -> WMatrix {
        assert_eq!(self.n, other.n);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        WMatrix { n: self.n, num_atoms: self.num_atoms, entries }
    }

    pub fn mul(&self, other: &WMatrix) -> WMatrix {
        assert_eq!(self.n, other.n);
        let mut out = WMatrix::zero(self.n, self.num_atoms);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut acc = AtomWeight::zero(self.num_atoms);
                for k in 0..self.n {
                    acc = acc.add(&self.at(i, k).mul(other.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }
}

/// Star of a square matrix by recursive block elimination.
///
/// For `M = [[a]]` this is the scalar star. For a `1 + (n-1)` block split
/// `M = [[A, B], [C, D]]` the standard complete-semiring identities give
///
/// ```text
/// F        = (A + B·D*·C)*
/// M*       = [[F,        F·B·D*              ],
///             [D*·C·F,   D* + D*·C·F·B·D*    ]]
/// ```
///
/// which is exact in `Q` (the infinite path sums collapse to joins that
/// saturate at ∞); `w_star` on scalars supplies the base case.
pub fn mat_star(m: &WMatrix) -> WMatrix {
    let n = m.n;
    let na = m.num_atoms;
    if n == 0 {
        return m.clone();
    }
    if n == 1 {
        return WMatrix { n: 1, num_atoms: na, entries: vec![m.at(0, 0).star()] };
    }
    // Split off the first row/column as the A block.
    let k = n - 1;
    let a = m.at(0, 0).clone();
    let b: Vec<AtomWeight> = (0..k).map(|j| m.at(0, j + 1).clone()).collect();
    let c: Vec<AtomWeight> = (0..k).map(|i| m.at(i + 1, 0).clone()).collect();
    let mut d = WMatrix::zero(k, na);
    for i in 0..k {
        for j in 0..k {
            *d.at_mut(i, j) = m.at(i + 1, j + 1).clone();
        }
    }
    let ds = mat_star(&d);
    // F = (A + B D* C)*
    let mut f = a;
    for i in 0..k {
        for j in 0..k {
            f = f.add(&b[i].mul(ds.at(i, j)).mul(&c[j]));
        }
    }
    let f = f.star();
    let mut out = WMatrix::zero(n, na);
    *out.at_mut(0, 0) = f.clone();
    // top row: F B D*
    for j in 0..k {
        let mut acc = AtomWeight::zero(na);
        for i in 0..k {
            acc = acc.add(&b[i].mul(ds.at(i, j)));
        }
        *out.at_mut(0, j + 1) = f.mul(&acc);
    }
    // left column: D* C F
    for i in 0..k {
        let mut acc = AtomWeight::zero(na);
        for j in 0..k {
            acc = acc.add(&ds.at(i, j).mul(&c[j]));
        }
        *out.at_mut(i + 1, 0) = acc.mul(&f);
    }
    // bottom-right: D* + (D* C F)(B D*)
    for i in 0..k {
        for j in 0..k {
            let left = out.at(i + 1, 0).clone();
            let top = out.at(0, j + 1).clone();
            // left·top has F twice (D* C F · F B D*), but F is a star and
            // star values lie in {1, ∞}, where w·w = w, so F·F = F exactly.
            *out.at_mut(i + 1, j + 1) = ds.at(i, j).add(&left.mul(&top));
        }
    }
    out
}
