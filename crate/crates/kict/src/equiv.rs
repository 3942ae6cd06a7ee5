//! Deciding equality of compiled morphisms by weighted bisimulation on the
//! determinized derivative closure, with replayable counterexamples,
//! quotient minimization, and the componentwise comparison that is strictly
//! coarser than true equality.

use crate::rattree::{closure, union_machines, Machine, Morphism, Node, State, CLOSURE_BUDGET};
use crate::syntax::Signature;
use crate::weights::{w_add, Atom, Weight, Zero};
use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::hash::Hash;

// ---------------------------------------------------------------------------
// Partition refinement
// ---------------------------------------------------------------------------

/// Coarsest partition of `0..n` stable under a signature function. The
/// current class of the element is folded into its key, so each round
/// refines the previous partition and the loop runs at most `n` rounds.
fn refine_by<K: Eq + Hash>(n: usize, mut sig_of: impl FnMut(usize, &[usize]) -> K) -> Vec<usize> {
    let mut class = vec![0usize; n];
    loop {
        let mut map: HashMap<(usize, K), usize> = HashMap::new();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let key = (class[i], sig_of(i, &class));
            let fresh = map.len();
            next.push(*map.entry(key).or_insert(fresh));
        }
        if next == class {
            return class;
        }
        class = next;
    }
}

/// Full behavioral signature of a closure configuration under a partition:
/// exits, classes of action derivatives, and operation outputs with child
/// tuples mapped to classes (weights of collapsing tuples joined).
type FullSig = (
    BTreeMap<(Atom, usize), Weight>,
    BTreeMap<(Atom, usize), usize>,
    BTreeMap<(Atom, usize, Vec<usize>), Weight>,
);

fn full_sig(cl: &crate::rattree::Closure, i: usize, class: &[usize]) -> FullSig {
    let gmap = cl.gsucc[i]
        .iter()
        .map(|(&k, &j)| (k, class[j]))
        .collect();
    let mut smap: BTreeMap<(Atom, usize, Vec<usize>), Weight> = BTreeMap::new();
    for ((b, f, kids), &w) in &cl.souts[i] {
        let key = (*b, *f, kids.iter().map(|&k| class[k]).collect());
        let e = smap.entry(key).or_insert(Zero);
        *e = w_add(*e, w);
    }
    (cl.exits[i].clone(), gmap, smap)
}

fn partition(cl: &crate::rattree::Closure) -> Vec<usize> {
    refine_by(cl.configs.len(), |i, class| full_sig(cl, i, class))
}

fn check_compatible(p: &Morphism, q: &Morphism) -> Result<()> {
    if p.dom != q.dom || p.cod() != q.cod() || p.machine.num_atoms != q.machine.num_atoms {
        return Err(Error::TypeMismatch(format!(
            "comparing {} -> {} with {} -> {}",
            p.dom,
            p.cod(),
            q.dom,
            q.cod()
        )));
    }
    Ok(())
}

/// Decide whether two morphisms denote the same rational tree tuple.
pub fn equal(p: &Morphism, q: &Morphism) -> Result<bool> {
    check_compatible(p, q)?;
    let (machine, shift) = union_machines(&p.machine, &q.machine);
    let mut seeds: Vec<State> = p.roots.clone();
    seeds.extend(q.roots.iter().map(|s| s.map_ids(|i| i + shift)));
    let cl = closure(&machine, &seeds, CLOSURE_BUDGET)?;
    let class = partition(&cl);
    Ok((0..p.dom).all(|i| class[cl.seed_idx[i]] == class[cl.seed_idx[p.dom + i]]))
}

// ---------------------------------------------------------------------------
// Minimization
// ---------------------------------------------------------------------------

/// Quotient a morphism by bisimilarity: one node per behavior class, in
/// order of first discovery. The class with empty behavior (the zero tree)
/// gets no node; references to it become the empty state.
pub fn minimize(p: &Morphism) -> Result<Morphism> {
    let cl = closure(&p.machine, &p.roots, CLOSURE_BUDGET)?;
    let class = partition(&cl);
    // representative and node index per class, in first-discovery order
    let mut repr: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..cl.configs.len() {
        repr.entry(class[i]).or_insert(i);
    }
    let is_zero_class = |c: usize| {
        let r = repr[&c];
        cl.exits[r].is_empty() && cl.gsucc[r].is_empty() && cl.souts[r].is_empty()
    };
    let mut node_of: HashMap<usize, usize> = HashMap::new();
    let mut order: Vec<usize> = repr.values().copied().collect();
    order.sort_unstable();
    for &r in &order {
        let c = class[r];
        if !is_zero_class(c) && !node_of.contains_key(&c) {
            let idx = node_of.len();
            node_of.insert(c, idx);
        }
    }
    let state_of = |c: usize| match node_of.get(&c) {
        Some(&i) => State::unit(i),
        None => State::zero(),
    };
    let mut nodes = vec![Node::default(); node_of.len()];
    for &r in &order {
        let c = class[r];
        let Some(&ni) = node_of.get(&c) else { continue };
        let node = &mut nodes[ni];
        node.exits = cl.exits[r].clone();
        for (&key, &j) in &cl.gsucc[r] {
            let t = state_of(class[j]);
            if !t.is_empty() {
                node.gtrans.insert(key, t);
            }
        }
        for ((b, f, kids), &w) in &cl.souts[r] {
            let kids: Vec<State> = kids.iter().map(|&k| state_of(class[k])).collect();
            let e = node.souts.entry((*b, *f, kids)).or_insert(Zero);
            *e = w_add(*e, w);
        }
    }
    let roots = cl.seed_idx.iter().map(|&i| state_of(class[i])).collect();
    Ok(Morphism {
        dom: p.dom,
        machine: Machine {
            nodes,
            num_atoms: p.machine.num_atoms,
            cod: p.cod(),
        },
        roots,
    })
}

// ---------------------------------------------------------------------------
// Counterexamples
// ---------------------------------------------------------------------------

/// One move of the distinguishing experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Follow an atom-guarded action on both sides.
    Act { atom: Atom, act: usize },
    /// Descend into one child position of an operation layer, joining over
    /// all tuples on each side.
    Op { atom: Atom, op: usize, child: usize },
}

/// Where the two sides come apart after replaying the steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    Exit {
        atom: Atom,
        idx: usize,
        left: Weight,
        right: Weight,
    },
    /// The operation layers differ as *tuples* even though every child
    /// position agrees in isolation (or differ in shape at all).
    Branch {
        atom: Atom,
        op: usize,
        left: String,
        right: String,
    },
}

/// A replayable counterexample for one root pair.
#[derive(Debug, Clone)]
pub struct Witness {
    /// Which root coordinate the experiment starts from.
    pub root: usize,
    pub steps: Vec<Step>,
    pub mismatch: Mismatch,
}

impl Witness {
    pub fn render(&self, sig: &Signature) -> String {
        let tn = &sig.tests;
        let mut lines = vec![format!("root {}", self.root)];
        for s in &self.steps {
            match s {
                Step::Act { atom, act } => {
                    lines.push(format!("step {} {}", atom.render(tn), sig.actions[*act]))
                }
                Step::Op { atom, op, child } => lines.push(format!(
                    "enter {} {}.child {}",
                    atom.render(tn),
                    sig.ops[*op].0,
                    child
                )),
            }
        }
        match &self.mismatch {
            Mismatch::Exit { atom, idx, left, right } => lines.push(format!(
                "exit({}, {}): {} vs {}",
                atom.render(tn),
                idx,
                left,
                right
            )),
            Mismatch::Branch { atom, op, left, right } => lines.push(format!(
                "branch {} {}: tuples {} vs {}",
                atom.render(tn),
                sig.ops[*op].0,
                left,
                right
            )),
        }
        lines.join("\n")
    }
}

/// Produce a distinguishing experiment, or `None` when the morphisms are
/// equal. Exit mismatches are preferred; when every playable experiment
/// agrees (the componentwise blind spot), the shallowest pair whose
/// operation layers differ as tuples is reported instead.
pub fn witness(p: &Morphism, q: &Morphism) -> Result<Option<Witness>> {
    check_compatible(p, q)?;
    if equal(p, q)? {
        return Ok(None);
    }
    let (machine, shift) = union_machines(&p.machine, &q.machine);
    let prod = machine.productive();
    let norm = |s: State| {
        if machine.is_zero_state(&prod, &s) {
            State::zero()
        } else {
            s
        }
    };

    // BFS over pairs of configurations, remembering how each pair was
    // reached. Steps are the moves of the distinguishing game.
    struct Entry {
        pair: (State, State),
        from: Option<(usize, Step)>,
    }
    let mut entries: Vec<Entry> = vec![];
    let mut seen: HashSet<(State, State)> = HashSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for i in 0..p.dom {
        let pair = (
            norm(p.roots[i].clone()),
            norm(q.roots[i].map_ids(|n| n + shift)),
        );
        if seen.insert(pair.clone()) {
            entries.push(Entry { pair, from: None });
            queue.push_back(entries.len() - 1);
        }
    }
    let root_of = |entries: &Vec<Entry>, mut at: usize| {
        while let Some((parent, _)) = &entries[at].from {
            at = *parent;
        }
        at
    };
    let path_of = |entries: &Vec<Entry>, mut at: usize| {
        let mut steps = vec![];
        while let Some((parent, step)) = &entries[at].from {
            steps.push(step.clone());
            at = *parent;
        }
        steps.reverse();
        steps
    };

    let mut exit_hit: Option<usize> = None;
    while let Some(e) = queue.pop_front() {
        if entries.len() > CLOSURE_BUDGET {
            return Err(Error::ClosureBudgetExceeded(CLOSURE_BUDGET));
        }
        let (l, r) = entries[e].pair.clone();
        if machine.output_of(&l) != machine.output_of(&r) {
            exit_hit = Some(e);
            break;
        }
        let mut akeys: BTreeSet<(Atom, usize)> = BTreeSet::new();
        let mut okeys: BTreeSet<(Atom, usize, usize)> = BTreeSet::new();
        for s in [&l, &r] {
            for &(id, _) in s.pairs() {
                akeys.extend(machine.nodes[id].gtrans.keys().copied());
                for (b, f, kids) in machine.nodes[id].souts.keys() {
                    for k in 0..kids.len() {
                        okeys.insert((*b, *f, k));
                    }
                }
            }
        }
        let push = |entries: &mut Vec<Entry>,
                        queue: &mut VecDeque<usize>,
                        seen: &mut HashSet<(State, State)>,
                        pair: (State, State),
                        step: Step,
                        from: usize| {
            if pair.0.is_empty() && pair.1.is_empty() {
                return;
            }
            if seen.insert(pair.clone()) {
                entries.push(Entry { pair, from: Some((from, step)) });
                queue.push_back(entries.len() - 1);
            }
        };
        for (b, u) in akeys {
            let pair = (
                norm(machine.deriv_action(&l, b, u)),
                norm(machine.deriv_action(&r, b, u)),
            );
            push(&mut entries, &mut queue, &mut seen, pair, Step::Act { atom: b, act: u }, e);
        }
        for (b, f, k) in okeys {
            let pair = (
                norm(machine.deriv_op(&l, b, f, k)),
                norm(machine.deriv_op(&r, b, f, k)),
            );
            push(
                &mut entries,
                &mut queue,
                &mut seen,
                pair,
                Step::Op { atom: b, op: f, child: k },
                e,
            );
        }
    }

    if let Some(e) = exit_hit {
        let (l, r) = &entries[e].pair;
        let lo = machine.output_of(l);
        let ro = machine.output_of(r);
        let mut keys: BTreeSet<(Atom, usize)> = lo.keys().copied().collect();
        keys.extend(ro.keys().copied());
        let &(atom, idx) = keys
            .iter()
            .find(|k| lo.get(k) != ro.get(k))
            .expect("outputs differ at some key");
        return Ok(Some(Witness {
            root: root_of(&entries, e),
            steps: path_of(&entries, e),
            mismatch: Mismatch::Exit {
                atom,
                idx,
                left: lo.get(&(atom, idx)).copied().unwrap_or(Zero),
                right: ro.get(&(atom, idx)).copied().unwrap_or(Zero),
            },
        }));
    }

    // Every playable experiment agreed, so the difference is tuple-level.
    // Compute behavior classes and report the shallowest pair whose
    // operation layers differ as class tuples.
    let mut seeds: Vec<State> = vec![];
    for en in &entries {
        seeds.push(en.pair.0.clone());
        seeds.push(en.pair.1.clone());
    }
    let cl = closure(&machine, &seeds, CLOSURE_BUDGET)?;
    let class = partition(&cl);
    let tuple_map = |s: &State| {
        let mut out: BTreeMap<(Atom, usize, Vec<usize>), Weight> = BTreeMap::new();
        for ((b, f, kids), w) in machine.souts_of(s) {
            let key = (
                b,
                f,
                kids.iter()
                    .map(|k| class[cl.index[&norm(k.clone())]])
                    .collect(),
            );
            let e = out.entry(key).or_insert(Zero);
            *e = w_add(*e, w);
        }
        out
    };
    for (e, en) in entries.iter().enumerate() {
        let lm = tuple_map(&en.pair.0);
        let rm = tuple_map(&en.pair.1);
        if lm == rm {
            continue;
        }
        let mut keys: BTreeSet<&(Atom, usize, Vec<usize>)> = lm.keys().collect();
        keys.extend(rm.keys());
        let (atom, op, _) = keys
            .iter()
            .find(|k| lm.get(**k) != rm.get(**k))
            .expect("tuple maps differ at some key");
        let fmt = |m: &BTreeMap<(Atom, usize, Vec<usize>), Weight>| {
            let items: Vec<String> = m
                .iter()
                .filter(|((b, f, _), _)| b == atom && f == op)
                .map(|((_, _, kids), w)| format!("{kids:?}:{w}"))
                .collect();
            format!("{{{}}}", items.join(", "))
        };
        return Ok(Some(Witness {
            root: root_of(&entries, e),
            steps: path_of(&entries, e),
            mismatch: Mismatch::Branch {
                atom: *atom,
                op: *op,
                left: fmt(&lm),
                right: fmt(&rm),
            },
        }));
    }
    unreachable!("unequal morphisms must differ in some reachable pair");
}

// ---------------------------------------------------------------------------
// Componentwise comparison
// ---------------------------------------------------------------------------

/// Compare two morphisms by exits, action derivatives, and *componentwise*
/// operation derivatives (each child position in isolation, plus the joined
/// layer weight). This is implied by [`equal`] but strictly coarser: it
/// cannot see how siblings are paired inside one operation layer.
pub fn lemma_bisim_equal(p: &Morphism, q: &Morphism) -> Result<bool> {
    check_compatible(p, q)?;
    let (machine, shift) = union_machines(&p.machine, &q.machine);
    let prod = machine.productive();
    let norm = |s: State| {
        if machine.is_zero_state(&prod, &s) {
            State::zero()
        } else {
            s
        }
    };

    // closure under action derivatives and componentwise op derivatives
    let mut configs: Vec<State> = vec![];
    let mut index: HashMap<State, usize> = HashMap::new();
    let intern = |configs: &mut Vec<State>, index: &mut HashMap<State, usize>, s: State| {
        *index.entry(s.clone()).or_insert_with(|| {
            configs.push(s);
            configs.len() - 1
        })
    };
    let mut seeds = vec![];
    for i in 0..p.dom {
        seeds.push(intern(&mut configs, &mut index, norm(p.roots[i].clone())));
        seeds.push(intern(
            &mut configs,
            &mut index,
            norm(q.roots[i].map_ids(|n| n + shift)),
        ));
    }
    let mut exits = vec![];
    let mut gsucc: Vec<BTreeMap<(Atom, usize), usize>> = vec![];
    let mut osucc: Vec<BTreeMap<(Atom, usize, usize), usize>> = vec![];
    let mut fweight: Vec<BTreeMap<(Atom, usize), Weight>> = vec![];
    let mut i = 0;
    while i < configs.len() {
        if configs.len() > CLOSURE_BUDGET {
            return Err(Error::ClosureBudgetExceeded(CLOSURE_BUDGET));
        }
        let cfg = configs[i].clone();
        exits.push(machine.output_of(&cfg));
        let mut akeys: BTreeSet<(Atom, usize)> = BTreeSet::new();
        let mut okeys: BTreeSet<(Atom, usize, usize)> = BTreeSet::new();
        let mut fw: BTreeMap<(Atom, usize), Weight> = BTreeMap::new();
        for &(id, _) in cfg.pairs() {
            akeys.extend(machine.nodes[id].gtrans.keys().copied());
            for (b, f, kids) in machine.nodes[id].souts.keys() {
                for k in 0..kids.len() {
                    okeys.insert((*b, *f, k));
                }
            }
        }
        for ((b, f, _), w) in machine.souts_of(&cfg) {
            let e = fw.entry((b, f)).or_insert(Zero);
            *e = w_add(*e, w);
        }
        fweight.push(fw);
        let mut gs = BTreeMap::new();
        for (b, u) in akeys {
            let d = norm(machine.deriv_action(&cfg, b, u));
            if !d.is_empty() {
                gs.insert((b, u), intern(&mut configs, &mut index, d));
            }
        }
        gsucc.push(gs);
        let mut os = BTreeMap::new();
        for (b, f, k) in okeys {
            let d = norm(machine.deriv_op(&cfg, b, f, k));
            if !d.is_empty() {
                os.insert((b, f, k), intern(&mut configs, &mut index, d));
            }
        }
        osucc.push(os);
        i += 1;
    }

    let class = refine_by(configs.len(), |i, class| {
        let gmap: BTreeMap<(Atom, usize), usize> =
            gsucc[i].iter().map(|(&k, &j)| (k, class[j])).collect();
        let omap: BTreeMap<(Atom, usize, usize), usize> =
            osucc[i].iter().map(|(&k, &j)| (k, class[j])).collect();
        (exits[i].clone(), gmap, omap, fweight[i].clone())
    });
    Ok((0..p.dom).all(|i| class[seeds[2 * i]] == class[seeds[2 * i + 1]]))
}
