//! Free operads on Σ*-modules of generators of arity ≥ 2, with a freely adjoined unit.
//!
//! A basis element is a canonical 1-reduced tree whose vertices carry generator labels.
//! Generators come with a symmetry type: Σ-free generators contribute a label (g, σ) for every
//! σ, while trivially or sign-symmetric generators carry a bare label.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use crate::field::{Lin, Prime};
use crate::perm::Permutation;
use crate::tree::{reduced_shapes, Len, Tree};

use super::treewise::{canonicalize, tag_preorder, Fac};
use super::{DgOperad, OpResult, OperadError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symmetry {
    Free,
    Trivial,
    Sign,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub arity: usize,
    pub degree: i64,
    pub symmetry: Symmetry,
}

/// Vertex label: generator index and, for Σ-free generators, the permutation acting on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenLabel {
    pub gen: u16,
    pub perm: Permutation,
    name: &'static str,
}

impl fmt::Display for GenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.perm.is_identity() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}{{{}}}", self.name, self.perm.image_string())
        }
    }
}

pub type FTree = Tree<GenLabel>;

/// Generator names live for the whole process; each distinct name is leaked once.
fn intern(name: &str) -> &'static str {
    static NAMES: Mutex<BTreeSet<&'static str>> = Mutex::new(BTreeSet::new());
    let mut names = NAMES.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(n) = names.get(name) {
        return n;
    }
    let n: &'static str = Box::leak(name.to_string().into_boxed_str());
    names.insert(n);
    n
}

pub struct FreeOperad {
    prime: Prime,
    name: String,
    gens: Vec<Generator>,
    names: Vec<&'static str>,
    gen_diff: Vec<Lin<FTree>>,
    label_diff: Mutex<HashMap<GenLabel, Lin<FTree>>>,
    arity_max: usize,
    degree_max: i64,
}

impl FreeOperad {
    pub fn new(prime: Prime, name: &str, gens: Vec<Generator>, arity_max: usize, degree_max: i64) -> Self {
        assert!(gens.iter().all(|g| g.arity >= 2), "generators must have arity at least 2");
        let names = gens.iter().map(|g| intern(&g.name)).collect();
        FreeOperad {
            prime,
            name: name.to_string(),
            gen_diff: Vec::new(),
            label_diff: Mutex::new(HashMap::new()),
            gens,
            names,
            arity_max,
            degree_max,
        }
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn bounds(&self) -> (usize, i64) {
        (self.arity_max, self.degree_max)
    }

    /// Sets d on generators; the differential extends as a derivation.
    pub fn set_generator_differentials(&mut self, d: Vec<Lin<FTree>>) {
        assert_eq!(d.len(), self.gens.len());
        self.gen_diff = d;
        self.label_diff.lock().unwrap_or_else(|e| e.into_inner()).clear();
    }

    pub fn label(&self, g: usize, perm: Permutation) -> GenLabel {
        GenLabel { gen: g as u16, perm, name: self.names[g] }
    }

    /// The corolla on generator g.
    pub fn generator(&self, g: usize) -> FTree {
        let n = self.gens[g].arity;
        Tree::corolla(self.label(g, Permutation::identity(n)), n)
    }

    fn odd(&self, l: &GenLabel) -> bool {
        self.gens[l.gen as usize].degree.rem_euclid(2) == 1
    }

    fn relabel(&self, l: &GenLabel, w: &Permutation) -> Option<(u32, GenLabel)> {
        match self.gens[l.gen as usize].symmetry {
            Symmetry::Free => Some((1, GenLabel { perm: w.compose(&l.perm), ..l.clone() })),
            Symmetry::Trivial => Some((1, l.clone())),
            Symmetry::Sign => Some((w.sign(self.prime), l.clone())),
        }
    }

    fn finish(&self, t: Tree<Fac<GenLabel>>) -> Lin<FTree> {
        let p = self.prime;
        match canonicalize(p, t, &mut |l: &GenLabel, w: &Permutation| self.relabel(l, w)) {
            Some((c, t)) => Lin::single(p, t, c),
            None => Lin::zero(p),
        }
    }

    fn tree_degree(&self, t: &FTree) -> i64 {
        t.labels().iter().map(|l| self.gens[l.gen as usize].degree).sum()
    }

    /// d of a single vertex label, memoized.
    fn label_differential(&self, label: &GenLabel, dg: &Lin<FTree>) -> OpResult<Lin<FTree>> {
        if label.perm.is_identity() {
            return Ok(dg.clone());
        }
        if let Some(v) = self.label_diff.lock().unwrap_or_else(|e| e.into_inner()).get(label) {
            return Ok(v.clone());
        }
        let v = dg.try_flat_map(|t| self.act(&label.perm, t))?;
        self.label_diff.lock().unwrap_or_else(|e| e.into_inner()).insert(label.clone(), v.clone());
        Ok(v)
    }

    /// Substitutes the tree `s` for the vertex with preorder index `target`; the factors of `s`
    /// take the place of that vertex's label in the source order.
    fn substitute(&self, t: &FTree, target: usize, s: &FTree) -> Lin<FTree> {
        let odd = |l: &GenLabel| self.odd(l);
        fn rec<F: Fn(&GenLabel) -> bool>(
            t: &FTree,
            target: usize,
            s: &FTree,
            idx: &mut usize,
            next: &mut u32,
            odd: &F,
        ) -> Tree<Fac<GenLabel>> {
            match t {
                Tree::Leaf(l) => Tree::Leaf(*l),
                Tree::Node { label, children } => {
                    let me = *idx;
                    *idx += 1;
                    if me == target {
                        let (st, nx) = tag_preorder(s, *next, odd);
                        *next = nx;
                        let kids: Vec<Option<Tree<Fac<GenLabel>>>> =
                            children.iter().map(|(_, c)| Some(rec(c, target, s, idx, next, odd))).collect();
                        plug(st, &mut kids.into_iter().collect())
                    } else {
                        let id = *next;
                        *next += 1;
                        let children =
                            children.iter().map(|(l, c)| (*l, rec(c, target, s, idx, next, odd))).collect();
                        Tree::Node { label: Fac { label: label.clone(), id, odd: odd(label), edge_id: u32::MAX }, children }
                    }
                }
            }
        }
        let mut idx = 0;
        let mut next = 0;
        let tagged = rec(t, target, s, &mut idx, &mut next, &odd);
        self.finish(tagged)
    }

    /// All labelings of a shape by generators of matching arity.
    fn labelings(&self, shape: &Tree<()>) -> Vec<FTree> {
        match shape {
            Tree::Leaf(l) => vec![Tree::Leaf(*l)],
            Tree::Node { children, .. } => {
                let k = children.len();
                let mut labels = Vec::new();
                for (g, gen) in self.gens.iter().enumerate() {
                    if gen.arity != k {
                        continue;
                    }
                    match gen.symmetry {
                        Symmetry::Free => {
                            for s in Permutation::all(k) {
                                labels.push(self.label(g, s));
                            }
                        }
                        _ => labels.push(self.label(g, Permutation::identity(k))),
                    }
                }
                let mut kids: Vec<Vec<(Len, FTree)>> = vec![Vec::new()];
                for (l, c) in children {
                    let opts = self.labelings(c);
                    let mut next = Vec::new();
                    for prefix in &kids {
                        for o in &opts {
                            let mut v = prefix.clone();
                            v.push((*l, o.clone()));
                            next.push(v);
                        }
                    }
                    kids = next;
                }
                let mut out = Vec::new();
                for lab in &labels {
                    for ch in &kids {
                        out.push(Tree::Node { label: lab.clone(), children: ch.clone() });
                    }
                }
                out
            }
        }
    }
}

/// Replaces leaf j of `s` by the j-th entry of `kids`.
pub(crate) fn plug<L: Clone>(s: Tree<Fac<L>>, kids: &mut Vec<Option<Tree<Fac<L>>>>) -> Tree<Fac<L>> {
    match s {
        Tree::Leaf(j) => kids[j as usize - 1].take().expect("each leaf is plugged once"),
        Tree::Node { label, children } => Tree::Node {
            label,
            children: children
                .into_iter()
                .map(|(l, c)| {
                    let c = plug(c, kids);
                    (if c.is_leaf() { Len::X1 } else { l }, c)
                })
                .collect(),
        },
    }
}

impl DgOperad for FreeOperad {
    type B = FTree;

    fn prime(&self) -> Prime {
        self.prime
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn degree_range(&self, arity: usize) -> Option<(i64, i64)> {
        if arity > self.arity_max || arity == 0 {
            return None;
        }
        if arity == 1 {
            return Some((0, 0));
        }
        let lo = self.gens.iter().map(|g| g.degree).min().unwrap_or(0).min(0) * (arity as i64 - 1);
        let hi = self.gens.iter().map(|g| g.degree).max().unwrap_or(0).max(0) * (arity as i64 - 1);
        Some((lo, hi.min(self.degree_max)))
    }

    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<FTree>> {
        if arity > self.arity_max || degree > self.degree_max {
            return Err(OperadError::OutOfTruncation(format!(
                "{}({}) in degree {} (bounds: arity {}, degree {})",
                self.name, arity, degree, self.arity_max, self.degree_max
            )));
        }
        if arity == 0 {
            return Ok(Vec::new());
        }
        if arity == 1 {
            return Ok(if degree == 0 { vec![Tree::Leaf(1)] } else { Vec::new() });
        }
        let leaves: Vec<u8> = (1..=arity as u8).collect();
        let mut out = Vec::new();
        for shape in reduced_shapes(&leaves, arity) {
            for t in self.labelings(&shape) {
                if self.tree_degree(&t) == degree {
                    out.push(t);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn degree(&self, x: &FTree) -> i64 {
        self.tree_degree(x)
    }

    fn arity(&self, x: &FTree) -> usize {
        x.arity()
    }

    fn unit(&self) -> Option<FTree> {
        Some(Tree::Leaf(1))
    }

    fn compose(&self, x: &FTree, i: usize, y: &FTree) -> OpResult<Lin<FTree>> {
        let s = x.arity();
        if i == 0 || i > s {
            return Err(OperadError::Arity(format!("∘_{} on an element of arity {}", i, s)));
        }
        let odd = |l: &GenLabel| self.odd(l);
        let (tx, n) = tag_preorder(x, 0, &odd);
        let (ty, _) = tag_preorder(y, n, &odd);
        Ok(self.finish(tx.graft_raw(i, &ty, Len::X1)))
    }

    fn act(&self, w: &Permutation, x: &FTree) -> OpResult<Lin<FTree>> {
        if w.len() != x.arity() {
            return Err(OperadError::Arity(format!("Σ_{} acting on arity {}", w.len(), x.arity())));
        }
        let moved = x.map_leaves(|k| w.apply(k as usize) as u8);
        let (t, _) = tag_preorder(&moved, 0, &|l: &GenLabel| self.odd(l));
        Ok(self.finish(t))
    }

    fn differential(&self, x: &FTree) -> OpResult<Lin<FTree>> {
        let p = self.prime;
        let mut out = Lin::zero(p);
        if self.gen_diff.is_empty() {
            return Ok(out);
        }
        let mut before = 0i64;
        for (v, label) in x.labels().into_iter().enumerate() {
            let dg = &self.gen_diff[label.gen as usize];
            if !dg.is_zero() {
                let dl = self.label_differential(label, dg)?;
                let sign = p.sign_of(before);
                for (s, c) in dl.iter() {
                    out.add_scaled(&self.substitute(x, v, s), p.mul(sign, c));
                }
            }
            before += self.gens[label.gen as usize].degree;
        }
        Ok(out)
    }
}
