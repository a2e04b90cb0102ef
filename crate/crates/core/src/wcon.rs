//! The Boardman–Vogt construction W(P) of a connected unital operad P.
//!
//! A basis element of W(P)(r), r ≥ 2, is a canonical 1-reduced tree whose vertices carry
//! basis elements of P and whose internal edges have lengths x1 or x01; the degree is the
//! sum of label degrees plus the number of x01 edges. W(P)(0) and W(P)(1) are spanned by
//! `*` and the unit. Raw trees, possibly with x0 edges, arity-0 or unit vertices, are
//! brought to normal form by [`WOperad::normalize`]:
//!
//! * an x0 edge is contracted and the labels composed;
//! * an arity-0 vertex is absorbed into its parent through ε on its edge (ε(x01) = 0);
//! * a unit vertex is removed and its two edges merged with the max rule μ, external edges
//!   counting as x1.

use std::fmt;

use crate::field::{Lin, Prime};
use crate::linear::{ChainComplex, GradedBasedModule, Pair};
use crate::operad::treewise::{canonicalize, factor_sequence, tag_preorder, Fac};
use crate::operad::{act_lin, d_lin, evaluate_tree, DgOperad, HopfOperad, OpResult, OperadError};
use crate::perm::Permutation;
use crate::tree::{reduced_shapes, to_dot, Len, Tree, TreeError};

/// Truncation of W(P): arity, number of internal edges, and total label degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WBounds {
    pub arity_max: usize,
    pub edges_max: usize,
    pub label_degree_max: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WElem<L> {
    /// The 0-ary operation.
    Star,
    /// A normal-form tree; `Leaf(1)` is the unit.
    T(Tree<L>),
}

impl<L: fmt::Display> fmt::Display for WElem<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WElem::Star => write!(f, "*"),
            WElem::T(t) => write!(f, "{}", t),
        }
    }
}

impl<L> WElem<L> {
    pub fn tree(&self) -> Option<&Tree<L>> {
        match self {
            WElem::Star => None,
            WElem::T(t) => Some(t),
        }
    }
}

/// μ on lengths of internal edges; `None` stands for an external edge, which counts as x1.
fn mu(a: Option<Len>, b: Option<Len>) -> Option<Option<Len>> {
    use Len::*;
    let ext = a.is_none() || b.is_none();
    let a = a.unwrap_or(X1);
    let b = b.unwrap_or(X1);
    let v = match (a, b) {
        (X0, X0) => X0,
        (X01, X0) | (X0, X01) => X01,
        (X0, X1) | (X1, X0) | (X1, X1) => X1,
        _ => return None,
    };
    if ext {
        // an external edge only absorbs lengths that merge to x1
        (v == X1).then_some(None)
    } else {
        Some(Some(v))
    }
}

pub struct WOperad<P: DgOperad> {
    inner: P,
    bounds: WBounds,
}

type Raw<L> = Tree<Fac<L>>;

fn node_mut<'a, L>(t: &'a mut Raw<L>, path: &[usize]) -> &'a mut Raw<L> {
    let mut cur = t;
    for &k in path {
        cur = match cur {
            Tree::Node { children, .. } => &mut children[k].1,
            Tree::Leaf(_) => unreachable!("paths address vertices"),
        };
    }
    cur
}

/// First vertex (preorder) satisfying `pred(parent edge, vertex)`, as a path of child indices.
fn find_vertex<L, F>(t: &Raw<L>, pred: &F) -> Option<Vec<usize>>
where
    F: Fn(Option<Len>, &Raw<L>) -> bool,
{
    fn rec<L, F: Fn(Option<Len>, &Raw<L>) -> bool>(
        t: &Raw<L>,
        edge: Option<Len>,
        pred: &F,
        path: &mut Vec<usize>,
    ) -> bool {
        if let Tree::Node { children, .. } = t {
            if pred(edge, t) {
                return true;
            }
            for (k, (l, c)) in children.iter().enumerate() {
                path.push(k);
                if rec(c, Some(*l), pred, path) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let mut path = Vec::new();
    rec(t, None, pred, &mut path).then_some(path)
}

/// Parity of the odd factors whose ids lie strictly between a and b.
fn odd_between<L>(t: &Raw<L>, a: u32, b: u32) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    factor_sequence(t).iter().filter(|(id, odd)| *odd && *id > lo && *id < hi).count() % 2 == 1
}

impl<P: DgOperad> WOperad<P> {
    pub fn new(inner: P, bounds: WBounds) -> OpResult<Self> {
        if inner.unit().is_none() || inner.star().is_none() {
            return Err(OperadError::Unsupported(format!("W needs a unital operad, {} is not", inner.name())));
        }
        if bounds.arity_max < 2 {
            return Err(OperadError::Unsupported("W truncation needs arity ≥ 2".into()));
        }
        Ok(WOperad { inner, bounds })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn bounds(&self) -> WBounds {
        self.bounds
    }

    pub fn unit_elem(&self) -> WElem<P::B> {
        WElem::T(Tree::Leaf(1))
    }

    fn p(&self) -> Prime {
        self.inner.prime()
    }

    fn odd(&self, l: &P::B) -> bool {
        self.inner.degree(l) % 2 != 0
    }

    pub fn label_degree(&self, x: &WElem<P::B>) -> i64 {
        match x {
            WElem::Star => 0,
            WElem::T(t) => t.labels().iter().map(|l| self.inner.degree(l)).sum(),
        }
    }

    /// η(p): the corolla labeled p; * and the unit go to their W counterparts.
    pub fn section(&self, p: &P::B) -> WElem<P::B> {
        match self.inner.arity(p) {
            0 => WElem::Star,
            1 => self.unit_elem(),
            r => WElem::T(Tree::corolla(p.clone(), r)),
        }
    }

    fn tag(&self, t: &Tree<P::B>, start: u32) -> (Raw<P::B>, u32) {
        tag_preorder(t, start, &|l: &P::B| self.odd(l))
    }

    /// Normal form of a labeled tree whose internal edges may have any length.
    pub fn normalize(&self, t: &Tree<P::B>) -> OpResult<Lin<WElem<P::B>>> {
        self.check_arities(t)?;
        let (raw, _) = self.tag(t, 0);
        let mut out = Lin::zero(self.p());
        self.reduce(raw, 1, &mut out)?;
        Ok(out)
    }

    fn check_arities(&self, t: &Tree<P::B>) -> OpResult<()> {
        if let Tree::Node { label, children } = t {
            if self.inner.arity(label) != children.len() {
                return Err(OperadError::Arity(format!(
                    "vertex labeled {} has {} inputs",
                    label,
                    children.len()
                )));
            }
            for (_, c) in children {
                self.check_arities(c)?;
            }
        }
        Ok(())
    }

    /// Rewrites a tagged tree to normal form, adding `coef` times the result to `out`.
    fn reduce(&self, mut t: Raw<P::B>, coef: u32, out: &mut Lin<WElem<P::B>>) -> OpResult<()> {
        let p = self.p();
        if coef == 0 {
            return Ok(());
        }
        // x0 edges
        if let Some(path) = find_vertex(&t, &|_, v: &Raw<P::B>| match v {
            Tree::Node { children, .. } => children.iter().any(|(l, c)| *l == Len::X0 && !c.is_leaf()),
            _ => false,
        }) {
            let (j, a, b, aodd, bodd) = {
                let node = node_mut(&mut t, &path);
                let Tree::Node { label, children } = &*node else { unreachable!() };
                let j = children.iter().position(|(l, c)| *l == Len::X0 && !c.is_leaf()).unwrap();
                let Tree::Node { label: cl, .. } = &children[j].1 else { unreachable!() };
                (j, label.id, cl.id, label.odd, cl.odd)
            };
            let between = odd_between(&t, a, b);
            // the factor moved next to its partner crosses the odd factors in between
            let flip = if a < b { bodd && between } else { (aodd && between) ^ (aodd && bodd) };
            let node = node_mut(&mut t, &path);
            let Tree::Node { label, children } = std::mem::replace(node, Tree::Leaf(0)) else { unreachable!() };
            let mut children = children;
            let (_, child) = children.remove(j);
            let Tree::Node { label: cl, children: cch } = child else { unreachable!() };
            let comp = self.inner.compose(&label.label, j + 1, &cl.label)?;
            let mut merged_children = children;
            for (k, c) in cch.into_iter().enumerate() {
                merged_children.insert(j + k, c);
            }
            let sign = p.sign(flip);
            for (w, c) in comp.iter() {
                let mut t2 = t.clone();
                *node_mut(&mut t2, &path) = Tree::Node {
                    label: Fac { label: w.clone(), id: a.min(b), odd: self.odd(w), edge_id: label.edge_id },
                    children: merged_children.clone(),
                };
                self.reduce(t2, p.mul(coef, p.mul(c, sign)), out)?;
            }
            return Ok(());
        }
        // arity-0 vertices below a parent
        if let Some(path) = find_vertex(&t, &|_, v: &Raw<P::B>| match v {
            Tree::Node { children, .. } => children.iter().any(|(_, c)| matches!(c, Tree::Node { children: g, .. } if g.is_empty())),
            _ => false,
        }) {
            let node = node_mut(&mut t, &path);
            let Tree::Node { label, children } = std::mem::replace(node, Tree::Leaf(0)) else { unreachable!() };
            let mut children = children;
            let j = children.iter().position(|(_, c)| matches!(c, Tree::Node { children: g, .. } if g.is_empty())).unwrap();
            let (len, child) = children.remove(j);
            if len == Len::X01 {
                return Ok(());
            }
            let Tree::Node { label: cl, .. } = child else { unreachable!() };
            let comp = self.inner.compose(&label.label, j + 1, &cl.label)?;
            for (w, c) in comp.iter() {
                let mut t2 = t.clone();
                *node_mut(&mut t2, &path) = Tree::Node {
                    label: Fac { label: w.clone(), id: label.id, odd: self.odd(w), edge_id: label.edge_id },
                    children: children.clone(),
                };
                self.reduce(t2, p.mul(coef, c), out)?;
            }
            return Ok(());
        }
        // unit vertices
        if let Some(path) = find_vertex(&t, &|_, v: &Raw<P::B>| match v {
            Tree::Node { children, .. } => children.len() == 1,
            _ => false,
        }) {
            if path.is_empty() {
                let Tree::Node { mut children, .. } = t else { unreachable!() };
                let (l1, c) = children.pop().unwrap();
                let ext = if c.is_leaf() { None } else { Some(l1) };
                return match mu(None, ext) {
                    Some(_) => self.reduce(c, coef, out),
                    None => Ok(()),
                };
            }
            let (parent_path, k) = path.split_at(path.len() - 1);
            let parent = node_mut(&mut t, parent_path);
            let Tree::Node { children: pch, .. } = parent else { unreachable!() };
            let (l0, v) = std::mem::replace(&mut pch[k[0]], (Len::X1, Tree::Leaf(0)));
            let Tree::Node { label: vl, children: mut vch } = v else { unreachable!() };
            let (l1, c) = vch.pop().unwrap();
            let inner_edge = if c.is_leaf() { None } else { Some(l1) };
            match mu(Some(l0), inner_edge) {
                None => return Ok(()),
                Some(merged) => {
                    let c = match c {
                        Tree::Node { mut label, children } => {
                            if l0 == Len::X01 {
                                label.edge_id = vl.edge_id;
                            }
                            Tree::Node { label, children }
                        }
                        leaf => leaf,
                    };
                    pch[k[0]] = (merged.unwrap_or(Len::X1), c);
                }
            }
            return self.reduce(t, coef, out);
        }
        // normal form up to ordering
        if let Tree::Node { children, .. } = &t {
            if children.is_empty() {
                out.add_term(WElem::Star, coef);
                return Ok(());
            }
        }
        let inner = &self.inner;
        let mut err = None;
        let res = canonicalize(p, t, &mut |l: &P::B, w: &Permutation| match inner.act(w, l) {
            Ok(v) => {
                let mut it = v.iter();
                match (it.next(), it.next()) {
                    (Some((b, c)), None) => Some((c, b.clone())),
                    (None, _) => None,
                    _ => {
                        err = Some(OperadError::Unsupported("W needs a monomial symmetric action".into()));
                        None
                    }
                }
            }
            Err(e) => {
                err = Some(e);
                None
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if let Some((c, tree)) = res {
            out.add_term(WElem::T(tree), p.mul(coef, c));
        }
        Ok(())
    }

    /// ε: W(P) → P; kills x01 edges and composes labels along x1 edges.
    pub fn augmentation(&self, x: &WElem<P::B>) -> OpResult<Lin<P::B>> {
        let p = self.p();
        match x {
            WElem::Star => Ok(Lin::basis(p, self.inner.star().unwrap())),
            WElem::T(t) => {
                if t.internal_lengths().contains(&Len::X01) {
                    return Ok(Lin::zero(p));
                }
                evaluate_tree(&self.inner, t, &mut |l: &P::B| Ok(Lin::basis(p, l.clone())))
            }
        }
    }

    /// Checks that ε is a chain map, commutes with the symmetric groups and with composites,
    /// and that εη = id, on basis elements of arity ≤ `arity_max` and degree ≤ `degree_max`.
    /// Returns the number of checks and the failures.
    pub fn check_augmentation(&self, arity_max: usize, degree_max: i64) -> (usize, Vec<String>) {
        let inner = &self.inner;
        let mut checks = 0;
        let mut fails = Vec::new();
        let mut elems: Vec<Vec<WElem<P::B>>> = vec![Vec::new(); arity_max + 1];
        for (r, slot) in elems.iter_mut().enumerate() {
            for d in 0..=degree_max {
                if let Ok(b) = self.basis(r, d) {
                    slot.extend(b);
                }
            }
        }
        let mut check = |ok: OpResult<bool>, what: &dyn Fn() -> String| {
            checks += 1;
            match ok {
                Ok(true) => {}
                Ok(false) => fails.push(what()),
                Err(e) => fails.push(format!("{}: {}", what(), e)),
            }
        };
        for (r, xs) in elems.iter().enumerate() {
            for d in 0..=degree_max {
                for e in inner.basis(r, d).unwrap_or_default() {
                    check(self.augmentation(&self.section(&e)).map(|v| v == Lin::basis(self.p(), e.clone())), &|| {
                        format!("εη ≠ id at {}", e)
                    });
                }
            }
            for x in xs {
                check(
                    (|| Ok(d_lin(inner, &self.augmentation(x)?)? == self.augmentation_lin(&self.differential(x)?)?))(),
                    &|| format!("dε ≠ εd at {}", x),
                );
                for w in Permutation::all(r) {
                    check(
                        (|| Ok(act_lin(inner, &w, &self.augmentation(x)?)? == self.augmentation_lin(&self.act(&w, x)?)?))(),
                        &|| format!("ε not equivariant at {} under {}", x, w),
                    );
                }
            }
        }
        for (ra, xs) in elems.iter().enumerate() {
            for (rb, ys) in elems.iter().enumerate() {
                if ra == 0 || ra + rb - 1 > arity_max {
                    continue;
                }
                for x in xs {
                    for y in ys {
                        if self.degree(x) + self.degree(y) > degree_max {
                            continue;
                        }
                        for i in 1..=ra {
                            check(
                                (|| {
                                    let l = self.augmentation_lin(&self.compose(x, i, y)?)?;
                                    let r = crate::operad::operad_compose(inner, &self.augmentation(x)?, i, &self.augmentation(y)?)?;
                                    Ok(l == r)
                                })(),
                                &|| format!("ε(x ∘_{} y) ≠ ε(x) ∘_{} ε(y) at {}, {}", i, i, x, y),
                            );
                        }
                    }
                }
            }
        }
        (checks, fails)
    }

    pub fn augmentation_lin(&self, x: &Lin<WElem<P::B>>) -> OpResult<Lin<P::B>> {
        x.try_flat_map(|b| self.augmentation(b))
    }

    /// Generators of cell degree d in arity r: trees with exactly d internal edges, all of
    /// length x01, with label degree within bounds.
    pub fn cells(&self, d: usize, r: usize) -> OpResult<Vec<WElem<P::B>>> {
        if r < 2 {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for total in 0..=self.bounds.label_degree_max {
            for t in self.labelings(r, total, d)? {
                if t.num_internal_edges() == d {
                    let lens = vec![Len::X01; d];
                    out.push(WElem::T(t.with_lengths(&lens)));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Whether x is a generator, i.e. has no x1 edge.
    pub fn is_generator(&self, x: &WElem<P::B>) -> bool {
        match x {
            WElem::T(t @ Tree::Node { .. }) => !t.internal_lengths().contains(&Len::X1),
            _ => false,
        }
    }

    /// Trees with at most `edges` internal edges and total label degree exactly `total`,
    /// all lengths x1.
    fn labelings(&self, r: usize, total: i64, edges: usize) -> OpResult<Vec<Tree<P::B>>> {
        let leaves: Vec<u8> = (1..=r as u8).collect();
        let mut out = Vec::new();
        for shape in reduced_shapes(&leaves, edges) {
            let arities = vertex_arities(&shape);
            let mut choices: Vec<Vec<P::B>> = vec![Vec::new()];
            // assign degrees vertex by vertex
            let mut partial: Vec<(i64, Vec<P::B>)> = vec![(0, Vec::new())];
            for &k in &arities {
                let mut next = Vec::new();
                for (used, labels) in &partial {
                    for dv in 0..=total - used {
                        for b in self.inner.basis(k, dv)? {
                            let mut l = labels.clone();
                            l.push(b);
                            next.push((used + dv, l));
                        }
                    }
                }
                partial = next;
            }
            choices.clear();
            for (used, labels) in partial {
                if used == total {
                    out.push(fill_labels(&shape, &mut labels.into_iter()));
                }
            }
        }
        Ok(out)
    }

    /// Cuts the x1 edges of x. Returns c and a tree of generators whose composite, evaluated
    /// with [`evaluate_tree`], equals c·x.
    pub fn split(&self, x: &WElem<P::B>) -> OpResult<(u32, Tree<WElem<P::B>>)> {
        let p = self.p();
        let t = match x {
            WElem::T(t @ Tree::Node { .. }) => t,
            _ => return Err(OperadError::Unsupported(format!("{} is not decomposable into generators", x))),
        };
        let blocks = cut_blocks(t);
        let composite = evaluate_tree(self, &blocks, &mut |g: &WElem<P::B>| Ok(Lin::basis(p, g.clone())))?;
        let c = composite.coeff(x);
        if c == 0 || composite.len() != 1 {
            return Err(OperadError::Unsupported(format!("generator split of {} did not close up", x)));
        }
        Ok((p.inv(c), blocks))
    }

    /// The chain complex W(P)(r) in degrees 0..=d_max+1 of the truncation.
    pub fn complex(&self, r: usize, d_max: i64) -> OpResult<ChainComplex<WElem<P::B>>> {
        let mut labels = Vec::new();
        if let Some((lo, hi)) = self.degree_range(r) {
            for d in lo..=hi.min(d_max + 1) {
                labels.extend(self.basis(r, d)?.into_iter().map(|b| (d, b)));
            }
        }
        let module = GradedBasedModule::from_labels(labels);
        let mut err = None;
        let c = ChainComplex::from_fn(self.p(), module, |x| match self.differential(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                Lin::zero(self.p())
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        c.map_err(|e| OperadError::OutOfTruncation(e.to_string()))
    }

    pub fn to_dot(&self, name: &str, x: &WElem<P::B>) -> String {
        match x {
            WElem::Star => format!("digraph \"{}\" {{\n  star [label=\"*\"];\n}}\n", name),
            WElem::T(t) => to_dot(name, t),
        }
    }

    /// Parses the display form, given a parser for labels.
    pub fn parse<F>(&self, s: &str, label: F) -> Result<WElem<P::B>, TreeError>
    where
        F: Fn(&str) -> Option<P::B>,
    {
        let s = s.trim();
        if s == "*" {
            return Ok(WElem::Star);
        }
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || TreeError::Malformed(s.to_string());
        let mut pos = 0;
        fn rec<B, F: Fn(&str) -> Option<B>>(
            b: &[char],
            pos: &mut usize,
            label: &F,
            bad: &dyn Fn() -> TreeError,
        ) -> Result<Tree<B>, TreeError> {
            let start = *pos;
            let mut depth = 0i32;
            while *pos < b.len() {
                match b[*pos] {
                    '[' => depth += 1,
                    ']' => depth -= 1,
                    '(' | ',' | ')' if depth == 0 => break,
                    _ => {}
                }
                *pos += 1;
            }
            let tok: String = b[start..*pos].iter().collect();
            if b.get(*pos) != Some(&'(') {
                return tok.parse::<u8>().map(Tree::Leaf).map_err(|_| bad());
            }
            let l = label(&tok).ok_or_else(bad)?;
            *pos += 1;
            let mut children = Vec::new();
            loop {
                let mut len = Len::X1;
                let rest: String = b[*pos..].iter().take(4).collect();
                if rest.starts_with("x01:") {
                    len = Len::X01;
                    *pos += 4;
                } else if rest.starts_with("x0:") {
                    len = Len::X0;
                    *pos += 3;
                }
                children.push((len, rec(b, pos, label, bad)?));
                match b.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(')') => {
                        *pos += 1;
                        break;
                    }
                    _ => return Err(bad()),
                }
            }
            Ok(Tree::Node { label: l, children })
        }
        let t = rec(&chars, &mut pos, &label, &bad)?;
        if pos != chars.len() {
            return Err(bad());
        }
        let mut leaves = t.leaves();
        leaves.sort_unstable();
        if leaves != (1..=leaves.len() as u8).collect::<Vec<_>>() {
            return Err(bad());
        }
        let n = self.normalize(&t).map_err(|_| bad())?;
        let mut it = n.iter();
        match (it.next(), it.next()) {
            (Some((b, 1)), None) if n.coeff(b) == 1 => Ok(b.clone()),
            _ => Err(bad()),
        }
    }
}

fn vertex_arities<V>(t: &Tree<V>) -> Vec<usize> {
    let mut out = Vec::new();
    fn rec<V>(t: &Tree<V>, out: &mut Vec<usize>) {
        if let Tree::Node { children, .. } = t {
            out.push(children.len());
            for (_, c) in children {
                rec(c, out);
            }
        }
    }
    rec(t, &mut out);
    out
}

fn fill_labels<L, I: Iterator<Item = L>>(shape: &Tree<()>, it: &mut I) -> Tree<L> {
    match shape {
        Tree::Leaf(l) => Tree::Leaf(*l),
        Tree::Node { children, .. } => {
            let label = it.next().expect("one label per vertex");
            Tree::Node { label, children: children.iter().map(|(l, c)| (*l, fill_labels(c, it))).collect() }
        }
    }
}

/// The tree of x01-connected blocks of a normal-form tree. Each block becomes a generator
/// whose inputs are numbered by the order of the minimal leaves below them.
fn cut_blocks<L: Clone>(t: &Tree<L>) -> Tree<WElem<L>> {
    // collect the block rooted at t: its x01-internal structure and its x1 / leaf exits
    fn block<L: Clone>(t: &Tree<L>, exits: &mut Vec<Tree<L>>) -> Tree<L> {
        match t {
            Tree::Leaf(_) => {
                exits.push(t.clone());
                Tree::Leaf(exits.len() as u8)
            }
            Tree::Node { label, children } => Tree::Node {
                label: label.clone(),
                children: children
                    .iter()
                    .map(|(l, c)| {
                        if *l == Len::X01 && !c.is_leaf() {
                            (*l, block(c, exits))
                        } else {
                            exits.push(c.clone());
                            (Len::X1, Tree::Leaf(exits.len() as u8))
                        }
                    })
                    .collect(),
            },
        }
    }
    match t {
        Tree::Leaf(l) => Tree::Leaf(*l),
        Tree::Node { .. } => {
            let mut exits = Vec::new();
            let shape = block(t, &mut exits);
            // exits appear in preorder; renumber them by minimal leaf
            let mins: Vec<u8> = exits.iter().map(|e| e.min_leaf()).collect();
            let mut order: Vec<usize> = (0..exits.len()).collect();
            order.sort_by_key(|&k| mins[k]);
            let mut rank = vec![0u8; exits.len()];
            for (pos, &k) in order.iter().enumerate() {
                rank[k] = pos as u8 + 1;
            }
            let gen = shape.map_leaves(|l| rank[l as usize - 1]);
            let children = order.iter().map(|&k| (Len::X1, cut_blocks(&exits[k]))).collect();
            Tree::Node { label: WElem::T(gen), children }
        }
    }
}

impl<P: DgOperad> DgOperad for WOperad<P> {
    type B = WElem<P::B>;

    fn prime(&self) -> Prime {
        self.p()
    }

    fn name(&self) -> String {
        format!("W({})", self.inner.name())
    }

    fn degree_range(&self, arity: usize) -> Option<(i64, i64)> {
        match arity {
            _ if arity > self.bounds.arity_max => None,
            0 | 1 => Some((0, 0)),
            _ => Some((0, self.bounds.label_degree_max + self.bounds.edges_max.min(arity - 2) as i64)),
        }
    }

    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<Self::B>> {
        if arity > self.bounds.arity_max {
            return Err(OperadError::OutOfTruncation(format!(
                "W arity {} beyond {}",
                arity, self.bounds.arity_max
            )));
        }
        match arity {
            0 => return Ok(if degree == 0 { vec![WElem::Star] } else { Vec::new() }),
            1 => return Ok(if degree == 0 { vec![self.unit_elem()] } else { Vec::new() }),
            _ => {}
        }
        let mut out = Vec::new();
        for total in 0..=self.bounds.label_degree_max.min(degree) {
            let k = (degree - total) as usize;
            if k > self.bounds.edges_max {
                continue;
            }
            for t in self.labelings(arity, total, self.bounds.edges_max)? {
                let e = t.num_internal_edges();
                if k > e {
                    continue;
                }
                // choose which k edges carry x01
                for mask in 0u32..(1 << e) {
                    if mask.count_ones() as usize == k {
                        let lens: Vec<Len> =
                            (0..e).map(|b| if mask >> b & 1 == 1 { Len::X01 } else { Len::X1 }).collect();
                        out.push(WElem::T(t.with_lengths(&lens)));
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn degree(&self, x: &Self::B) -> i64 {
        match x {
            WElem::Star => 0,
            WElem::T(t) => {
                self.label_degree(x) + t.internal_lengths().iter().map(|l| l.degree()).sum::<i64>()
            }
        }
    }

    fn arity(&self, x: &Self::B) -> usize {
        match x {
            WElem::Star => 0,
            WElem::T(t) => t.arity(),
        }
    }

    fn unit(&self) -> Option<Self::B> {
        Some(self.unit_elem())
    }

    fn star(&self) -> Option<Self::B> {
        Some(WElem::Star)
    }

    fn compose(&self, x: &Self::B, i: usize, y: &Self::B) -> OpResult<Lin<Self::B>> {
        let p = self.p();
        let s = self.arity(x);
        if i == 0 || i > s {
            return Err(OperadError::Arity(format!("∘_{} on W arity {}", i, s)));
        }
        let WElem::T(tx) = x else { unreachable!() };
        if tx.is_leaf() {
            return Ok(Lin::basis(p, y.clone()));
        }
        let (rx, next) = self.tag(tx, 0);
        let grafted = match y {
            WElem::T(Tree::Leaf(_)) => return Ok(Lin::basis(p, x.clone())),
            WElem::T(ty) => {
                let (ry, _) = self.tag(ty, next);
                rx.graft_raw(i, &ry, Len::X1)
            }
            WElem::Star => {
                let star = self.inner.star().unwrap();
                let sv: Raw<P::B> =
                    Tree::Node { label: Fac { label: star, id: next, odd: false, edge_id: next + 1 }, children: vec![] };
                graft_star(&rx, i as u8, &sv)
            }
        };
        let mut out = Lin::zero(p);
        self.reduce(grafted, 1, &mut out)?;
        Ok(out)
    }

    fn act(&self, w: &Permutation, x: &Self::B) -> OpResult<Lin<Self::B>> {
        let p = self.p();
        let r = self.arity(x);
        if w.len() != r {
            return Err(OperadError::Arity(format!("Σ_{} acting on W arity {}", w.len(), r)));
        }
        match x {
            WElem::Star => Ok(Lin::basis(p, WElem::Star)),
            WElem::T(Tree::Leaf(_)) => Ok(Lin::basis(p, x.clone())),
            WElem::T(t) => {
                // (w·x)(y_1,…) = x(y_{w(1)},…): input k of x is fed by input w(k)
                let moved = t.map_leaves(|l| w.apply(l as usize) as u8);
                let (raw, _) = self.tag(&moved, 0);
                let mut out = Lin::zero(p);
                self.reduce(raw, 1, &mut out)?;
                Ok(out)
            }
        }
    }

    fn differential(&self, x: &Self::B) -> OpResult<Lin<Self::B>> {
        let p = self.p();
        let mut out = Lin::zero(p);
        let WElem::T(t @ Tree::Node { .. }) = x else { return Ok(out) };
        let (raw, _) = self.tag(t, 0);
        let seq = factor_sequence(&raw);
        let n = seq.len();
        // preorder walk of factors: (edge or label) positions match `seq`
        for pos in 0..n {
            let before = seq[..pos].iter().filter(|f| f.1).count() % 2 == 1;
            let sign = p.sign(before);
            let id = seq[pos].0;
            let mut cur = raw.clone();
            if let Some((is_edge, slot)) = locate(&mut cur, id) {
                if is_edge {
                    let FactorSlot::Edge(len) = slot else { unreachable!() };
                    if *len != Len::X01 {
                        continue;
                    }
                    *len = Len::X1;
                    let t1 = cur.clone();
                    self.reduce(t1, sign, &mut out)?;
                    let mut t0 = raw.clone();
                    if let Some((_, FactorSlot::Edge(l))) = locate(&mut t0, id) {
                        *l = Len::X0;
                    }
                    self.reduce(t0, p.neg(sign), &mut out)?;
                } else {
                    let FactorSlot::Label(fac) = slot else { unreachable!() };
                    let dl = self.inner.differential(&fac.label)?;
                    for (b, c) in dl.iter() {
                        let mut t2 = raw.clone();
                        if let Some((_, FactorSlot::Label(f))) = locate(&mut t2, id) {
                            f.label = b.clone();
                            f.odd = self.odd(b);
                        }
                        self.reduce(t2, p.mul(sign, c), &mut out)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

enum FactorSlot<'a, L> {
    Edge(&'a mut Len),
    Label(&'a mut Fac<L>),
}

/// Finds the factor with a given id: either a vertex label or the length of its outgoing edge.
fn locate<L>(t: &mut Raw<L>, id: u32) -> Option<(bool, FactorSlot<'_, L>)> {
    match t {
        Tree::Leaf(_) => None,
        Tree::Node { label, children } => {
            if label.id == id {
                return Some((false, FactorSlot::Label(label)));
            }
            for (l, c) in children.iter_mut() {
                if let Tree::Node { label: cl, .. } = c {
                    if cl.edge_id == id {
                        return Some((true, FactorSlot::Edge(l)));
                    }
                }
                if let Some(found) = locate(c, id) {
                    return Some(found);
                }
            }
            None
        }
    }
}

/// Replaces leaf i by an arity-0 vertex on an x1 edge and renumbers the later leaves.
fn graft_star<L: Clone>(t: &Raw<L>, i: u8, sv: &Raw<L>) -> Raw<L> {
    match t {
        Tree::Leaf(l) if *l == i => sv.clone(),
        Tree::Leaf(l) if *l > i => Tree::Leaf(l - 1),
        Tree::Leaf(l) => Tree::Leaf(*l),
        Tree::Node { label, children } => Tree::Node {
            label: label.clone(),
            children: children
                .iter()
                .map(|(l, c)| {
                    let nc = graft_star(c, i, sv);
                    let nl = if c.is_leaf() { Len::X1 } else { *l };
                    (nl, nc)
                })
                .collect(),
        },
    }
}

impl<P: HopfOperad> WOperad<P> {
    /// Factors of a normal-form tree in preorder, each with its diagonal.
    fn factor_diagonals(&self, t: &Tree<P::B>) -> OpResult<Vec<Vec<(u32, Factor<P::B>, Factor<P::B>)>>> {
        let mut out = Vec::new();
        fn rec<P: HopfOperad>(
            w: &WOperad<P>,
            t: &Tree<P::B>,
            edge: Option<Len>,
            out: &mut Vec<Vec<(u32, Factor<P::B>, Factor<P::B>)>>,
        ) -> OpResult<()> {
            if let Tree::Node { label, children } = t {
                if let Some(l) = edge {
                    out.push(match l {
                        Len::X01 => vec![
                            (1, Factor::Edge(Len::X0), Factor::Edge(Len::X01)),
                            (1, Factor::Edge(Len::X01), Factor::Edge(Len::X1)),
                        ],
                        l => vec![(1, Factor::Edge(l), Factor::Edge(l))],
                    });
                }
                let d = w.inner.diagonal(label)?;
                out.push(d.iter().map(|(pr, c)| (c, Factor::Label(pr.0.clone()), Factor::Label(pr.1.clone()))).collect());
                for (l, c) in children {
                    if !c.is_leaf() {
                        rec(w, c, Some(*l), out)?;
                    }
                }
            }
            Ok(())
        }
        rec(self, t, None, &mut out)?;
        Ok(out)
    }

    fn factor_degree(&self, f: &Factor<P::B>) -> i64 {
        match f {
            Factor::Edge(l) => l.degree(),
            Factor::Label(b) => self.inner.degree(b),
        }
    }
}

#[derive(Clone, Debug)]
enum Factor<L> {
    Edge(Len),
    Label(L),
}

/// Rebuilds a tree from preorder factors, keeping the shape of `t`.
fn rebuild<L: Clone>(t: &Tree<L>, factors: &mut std::slice::Iter<'_, Factor<L>>) -> Tree<L> {
    match t {
        Tree::Leaf(l) => Tree::Leaf(*l),
        Tree::Node { children, .. } => {
            let Some(Factor::Label(label)) = factors.next() else { unreachable!("label factor expected") };
            let label = label.clone();
            let children = children
                .iter()
                .map(|(l, c)| {
                    if c.is_leaf() {
                        (*l, c.clone())
                    } else {
                        let Some(Factor::Edge(e)) = factors.next() else { unreachable!("edge factor expected") };
                        (*e, rebuild(c, factors))
                    }
                })
                .collect();
            Tree::Node { label, children }
        }
    }
}

impl<P: HopfOperad> HopfOperad for WOperad<P> {
    fn diagonal(&self, x: &Self::B) -> OpResult<Lin<Pair<Self::B, Self::B>>> {
        let p = self.p();
        let t = match x {
            WElem::T(t @ Tree::Node { .. }) => t,
            _ => return Ok(Lin::basis(p, Pair(x.clone(), x.clone()))),
        };
        let facs = self.factor_diagonals(t)?;
        let mut out = Lin::zero(p);
        let mut idx = vec![0usize; facs.len()];
        loop {
            let mut coef = 1u32;
            let mut left = Vec::with_capacity(facs.len());
            let mut right = Vec::with_capacity(facs.len());
            let mut parity = false;
            // Σ_{i<j} |f_i''| |f_j'|
            let mut right_odd = false;
            for (k, &j) in idx.iter().enumerate() {
                let (c, a, b) = &facs[k][j];
                coef = p.mul(coef, *c);
                if right_odd && self.factor_degree(a) % 2 != 0 {
                    parity = !parity;
                }
                if self.factor_degree(b) % 2 != 0 {
                    right_odd = !right_odd;
                }
                left.push(a.clone());
                right.push(b.clone());
            }
            if coef != 0 {
                let lt = rebuild(t, &mut left.iter());
                let rt = rebuild(t, &mut right.iter());
                let ln = self.normalize(&lt)?;
                let rn = self.normalize(&rt)?;
                let c0 = p.mul(coef, p.sign(parity));
                for (a, ca) in ln.iter() {
                    for (b, cb) in rn.iter() {
                        out.add_term(Pair(a.clone(), b.clone()), p.mul(c0, p.mul(ca, cb)));
                    }
                }
            }
            // next multi-index
            let mut k = facs.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < facs[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    fn counit(&self, x: &Self::B) -> u32 {
        match x {
            WElem::Star => 1,
            WElem::T(t) => {
                if t.internal_lengths().contains(&Len::X01) {
                    return 0;
                }
                let p = self.p();
                t.labels().iter().fold(1, |acc, l| p.mul(acc, self.inner.counit(l)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operad::axioms::{check_hopf, check_operad_axioms, AxiomBounds};
    use crate::operad::operad_compose;
    use crate::zoo::barratt_eccles::{BarrattEccles, BeWord};
    use crate::zoo::commutative::Commutative;

    fn we(p: Prime) -> WOperad<BarrattEccles> {
        WOperad::new(BarrattEccles::new(p, 6, 5), WBounds { arity_max: 3, edges_max: 2, label_degree_max: 2 }).unwrap()
    }

    fn w(s: &str) -> BeWord {
        BeWord::parse(s).unwrap()
    }

    fn el(op: &WOperad<BarrattEccles>, s: &str) -> WElem<BeWord> {
        op.parse(s, |l| BeWord::parse(l).ok()).unwrap()
    }

    #[test]
    fn x0_edges_contract() {
        let op = we(Prime::TWO);
        let t = Tree::Node {
            label: w("[12]"),
            children: vec![
                (Len::X0, Tree::Node { label: w("[12]"), children: vec![(Len::X1, Tree::Leaf(1)), (Len::X1, Tree::Leaf(2))] }),
                (Len::X1, Tree::Leaf(3)),
            ],
        };
        let n = op.normalize(&t).unwrap();
        assert_eq!(n.render(), "[123](1,2,3)");
        let lens = op.normalize(&t.with_lengths(&[Len::X01])).unwrap();
        assert_eq!(lens.render(), "[12](x01:[12](1,2),3)");
    }

    #[test]
    fn unit_vertices_merge_with_max() {
        assert_eq!(mu(Some(Len::X01), Some(Len::X0)), Some(Some(Len::X01)));
        assert_eq!(mu(Some(Len::X0), Some(Len::X1)), Some(Some(Len::X1)));
        assert_eq!(mu(Some(Len::X01), Some(Len::X1)), None);
        assert_eq!(mu(Some(Len::X1), None), Some(None));
        assert_eq!(mu(Some(Len::X01), None), None);
        let op = we(Prime::THREE);
        let c = Tree::Node { label: w("[21]"), children: vec![(Len::X1, Tree::Leaf(1)), (Len::X1, Tree::Leaf(2))] };
        let t = Tree::Node {
            label: w("[12]"),
            children: vec![
                (Len::X1, Tree::Node { label: w("[1]"), children: vec![(Len::X1, c.clone())] }),
                (Len::X1, Tree::Leaf(3)),
            ],
        };
        assert_eq!(op.normalize(&t).unwrap().render(), "[12]([21](1,2),3)");
        let t01 = Tree::Node {
            label: w("[12]"),
            children: vec![
                (Len::X01, Tree::Node { label: w("[1]"), children: vec![(Len::X01, c)] }),
                (Len::X1, Tree::Leaf(3)),
            ],
        };
        assert!(op.normalize(&t01).unwrap().is_zero());
    }

    #[test]
    fn compositions_and_units() {
        let p = Prime::THREE;
        let op = we(p);
        let a = op.section(&w("[12|21]"));
        let b = op.section(&w("[21]"));
        let c = op.compose(&a, 1, &b).unwrap();
        assert_eq!(c.render(), "[12|21]([21](1,2),3)");
        assert_eq!(op.compose(&a, 2, &op.unit_elem()).unwrap(), Lin::basis(p, a.clone()));
        assert_eq!(op.compose(&op.unit_elem(), 1, &a).unwrap(), Lin::basis(p, a.clone()));
        // ∂_2 of a corolla in W(E)(2) is the unit, since E(1) = F
        let d2 = op.partial(&op.section(&w("[12]")), 2).unwrap();
        assert_eq!(d2, Lin::basis(p, op.unit_elem()));
        assert!(op.partial(&a, 2).unwrap().is_zero());
        assert_eq!(op.partial(&op.unit_elem(), 1).unwrap(), Lin::basis(p, WElem::Star));
        // a star creating a unit vertex next to an x01 edge kills the term
        let g = el(&op, "[12](x01:[21](1,2),3)");
        assert!(op.partial(&g, 2).unwrap().is_zero());
        assert!(op.partial(&g, 3).unwrap().is_zero());
        let g = el(&op, "[12]([21](1,2),3)");
        assert_eq!(op.partial(&g, 2).unwrap().render(), "[12](1,2)");
        assert_eq!(op.partial(&g, 3).unwrap().render(), "[21](1,2)");
    }

    #[test]
    fn differential_of_one_edge() {
        let op = we(Prime::TWO);
        let x = el(&op, "[12](x01:[12](1,2),3)");
        assert_eq!(op.differential(&x).unwrap().render(), "[12]([12](1,2),3) + [123](1,2,3)");
    }

    #[test]
    fn d_squared_vanishes_on_we3() {
        for p in [Prime::TWO, Prime::THREE] {
            let op = we(p);
            for d in 0..=4 {
                for x in op.basis(3, d).unwrap() {
                    let dx = op.differential(&x).unwrap();
                    assert!(dx.keys().all(|y| op.degree(y) == d - 1), "degree of d{}", x);
                    assert!(d_lin(&op, &dx).unwrap().is_zero(), "d² {} at p = {}", x, p);
                }
            }
        }
    }

    #[test]
    fn d_squared_vanishes_with_two_edges() {
        let op = WOperad::new(BarrattEccles::new(Prime::THREE, 6, 5), WBounds { arity_max: 4, edges_max: 2, label_degree_max: 1 })
            .unwrap();
        for d in 0..=3 {
            for x in op.basis(4, d).unwrap() {
                assert!(d_lin(&op, &op.differential(&x).unwrap()).unwrap().is_zero(), "d² {}", x);
            }
        }
    }

    #[test]
    fn augmentation_and_section() {
        for p in [Prime::TWO, Prime::THREE] {
            let op = we(p);
            let e = op.inner();
            for r in 0..=3 {
                for d in 0..=2 {
                    for b in e.basis(r, d).unwrap() {
                        assert_eq!(op.augmentation(&op.section(&b)).unwrap(), Lin::basis(p, b));
                    }
                }
            }
            for d in 0..=3 {
                for x in op.basis(3, d).unwrap() {
                    let de = d_lin(e, &op.augmentation(&x).unwrap()).unwrap();
                    let ed = op.augmentation_lin(&op.differential(&x).unwrap()).unwrap();
                    assert_eq!(de, ed, "ε chain map at {}", x);
                }
            }
            for a in op.basis(2, 1).unwrap().iter().chain(&op.basis(2, 0).unwrap()) {
                for b in op.basis(2, 1).unwrap() {
                    for i in 1..=2 {
                        let l = op.augmentation_lin(&op.compose(a, i, &b).unwrap()).unwrap();
                        let r = operad_compose(e, &op.augmentation(a).unwrap(), i, &op.augmentation(&b).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn augmentation_is_an_operad_morphism() {
        for p in [Prime::TWO, Prime::THREE] {
            let (n, fails) = we(p).check_augmentation(3, 3);
            assert!(n > 1000 && fails.is_empty(), "{:?}", fails);
        }
    }

    #[test]
    fn cells_and_split() {
        let op = WOperad::new(BarrattEccles::new(Prime::TWO, 4, 0), WBounds { arity_max: 4, edges_max: 2, label_degree_max: 0 })
            .unwrap();
        assert_eq!(op.cells(0, 3).unwrap().len(), 6);
        // three shapes, two labels per binary vertex
        assert_eq!(op.cells(1, 3).unwrap().len(), 3 * 2 * 2);
        let a = op.section(&w("[21]"));
        let g = op.compose(&a, 2, &a).unwrap();
        let x = g.keys().next().unwrap().clone();
        let (c, blocks) = op.split(&x).unwrap();
        assert_eq!(c, 1);
        assert_eq!(blocks.num_vertices(), 2);
        assert!(blocks.labels().iter().all(|g| op.is_generator(g)));
        let q = WOperad::new(BarrattEccles::new(Prime::THREE, 6, 3), WBounds { arity_max: 4, edges_max: 3, label_degree_max: 2 })
            .unwrap();
        for d in 0..=4 {
            for x in q.basis(4, d).unwrap() {
                let (c, blocks) = q.split(&x).unwrap();
                let back = evaluate_tree(&q, &blocks, &mut |g: &WElem<BeWord>| Ok(Lin::basis(Prime::THREE, g.clone()))).unwrap();
                assert_eq!(back.scaled(c), Lin::basis(Prime::THREE, x.clone()));
            }
        }
    }

    #[test]
    fn we_axioms() {
        for p in [Prime::TWO, Prime::THREE] {
            let op = we(p);
            let report = check_operad_axioms(&op, AxiomBounds::new(3, 4));
            assert!(report.passed(), "{}", report.render());
            let report = check_hopf(&op, AxiomBounds::new(3, 3));
            assert!(report.passed(), "{}", report.render());
        }
    }

    #[test]
    fn wc_is_acyclic() {
        let op = WOperad::new(Commutative::new(Prime::TWO, 4), WBounds { arity_max: 4, edges_max: 3, label_degree_max: 0 })
            .unwrap();
        let report = check_operad_axioms(&op, AxiomBounds::new(4, 3));
        assert!(report.passed(), "{}", report.render());
        assert_eq!(op.basis(3, 1).unwrap().len(), 3);
        assert_eq!(op.basis(3, 0).unwrap().len(), 4);
        for r in 2..=4 {
            let c = op.complex(r, 3).unwrap();
            assert_eq!(c.homology_ranks(0, 3).unwrap(), vec![(0, 1), (1, 0), (2, 0), (3, 0)], "W(C)({})", r);
        }
    }

    #[test]
    fn dot_and_parse() {
        let op = we(Prime::TWO);
        let x = el(&op, "[12](x01:[21](1,2),3)");
        assert_eq!(x.to_string(), "[12](x01:[21](1,2),3)");
        let dot = op.to_dot("g", &x);
        assert!(dot.contains("label=\"x01\""));
        assert!(op.parse("[12](1,1)", |l| BeWord::parse(l).ok()).is_err());
        assert_eq!(el(&op, "*"), WElem::Star);
    }
}
