//! Leaf-labeled rooted trees: r-trees, edge contraction, grafting, enumeration of
//! 1-reduced trees, cube complexes on internal edges and DOT export.
//!
//! A tree is stored from its root vertex down. Each child slot records the length
//! of the edge leading into the vertex; leaf edges and the root edge are external
//! and carry no length. Vertices are identified by their depth-first preorder index,
//! and an internal edge by the index of its source vertex.

use std::collections::BTreeMap;
use std::fmt::{self, Display};

use thiserror::Error;

use crate::field::{Lin, Prime};
use crate::linear::{ChainComplex, GradedBasedModule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("edge {0} is not an internal edge")]
    NotInternal(String),
    #[error("leaf index {0} out of range 1..={1}")]
    LeafOutOfRange(usize, usize),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

/// Edge lengths of the chain interval: x0 and x1 in degree 0, x01 in degree 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Len {
    X0,
    X1,
    X01,
}

impl Len {
    pub fn degree(self) -> i64 {
        match self {
            Len::X01 => 1,
            _ => 0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Len::X0 => "x0",
            Len::X1 => "x1",
            Len::X01 => "x01",
        }
    }
}

impl Display for Len {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree<V> {
    Leaf(u8),
    Node { label: V, children: Vec<(Len, Tree<V>)> },
}

impl<V> Tree<V> {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf(_))
    }
}

impl<V: Clone> Tree<V> {
    pub fn corolla(label: V, r: usize) -> Tree<V> {
        Tree::Node { label, children: (1..=r).map(|i| (Len::X1, Tree::Leaf(i as u8))).collect() }
    }

    pub fn min_leaf(&self) -> u8 {
        match self {
            Tree::Leaf(l) => *l,
            Tree::Node { children, .. } => children.iter().map(|c| c.1.min_leaf()).min().unwrap_or(u8::MAX),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node { children, .. } => children.iter().map(|c| c.1.arity()).sum(),
        }
    }

    pub fn leaves(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<u8>) {
        match self {
            Tree::Leaf(l) => out.push(*l),
            Tree::Node { children, .. } => children.iter().for_each(|c| c.1.collect_leaves(out)),
        }
    }

    pub fn num_vertices(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node { children, .. } => 1 + children.iter().map(|c| c.1.num_vertices()).sum::<usize>(),
        }
    }

    pub fn num_internal_edges(&self) -> usize {
        self.num_vertices().saturating_sub(1)
    }

    /// Vertex labels in preorder.
    pub fn labels(&self) -> Vec<&V> {
        let mut out = Vec::new();
        fn rec<'a, V>(t: &'a Tree<V>, out: &mut Vec<&'a V>) {
            if let Tree::Node { label, children } = t {
                out.push(label);
                children.iter().for_each(|c| rec(&c.1, out));
            }
        }
        rec(self, &mut out);
        out
    }

    /// Lengths of internal edges in preorder of their source vertices.
    pub fn internal_lengths(&self) -> Vec<Len> {
        let mut out = Vec::new();
        fn rec<V>(t: &Tree<V>, out: &mut Vec<Len>) {
            if let Tree::Node { children, .. } = t {
                for (l, c) in children {
                    if !c.is_leaf() {
                        out.push(*l);
                        rec(c, out);
                    }
                }
            }
        }
        rec(self, &mut out);
        out
    }

    pub fn map_leaves<F: Fn(u8) -> u8 + Copy>(&self, f: F) -> Tree<V> {
        match self {
            Tree::Leaf(l) => Tree::Leaf(f(*l)),
            Tree::Node { label, children } => Tree::Node {
                label: label.clone(),
                children: children.iter().map(|(l, c)| (*l, c.map_leaves(f))).collect(),
            },
        }
    }

    pub fn map_labels<W, F: FnMut(&V) -> W>(&self, f: &mut F) -> Tree<W> {
        match self {
            Tree::Leaf(l) => Tree::Leaf(*l),
            Tree::Node { label, children } => Tree::Node {
                label: f(label),
                children: children.iter().map(|(l, c)| (*l, c.map_labels(f))).collect(),
            },
        }
    }

    /// Replaces every internal edge length.
    pub fn with_lengths(&self, lens: &[Len]) -> Tree<V> {
        let mut it = lens.iter();
        fn rec<'a, V: Clone, I: Iterator<Item = &'a Len>>(t: &Tree<V>, it: &mut I) -> Tree<V> {
            match t {
                Tree::Leaf(l) => Tree::Leaf(*l),
                Tree::Node { label, children } => Tree::Node {
                    label: label.clone(),
                    children: children
                        .iter()
                        .map(|(l, c)| {
                            if c.is_leaf() {
                                (*l, c.clone())
                            } else {
                                let nl = *it.next().expect("length list too short");
                                (nl, rec(c, it))
                            }
                        })
                        .collect(),
                },
            }
        }
        rec(self, &mut it)
    }

    /// Grafts `t` on leaf i, with standard ∘_i relabeling of leaves; the new edge gets length `len`.
    /// Children are not re-sorted.
    pub fn graft_raw(&self, i: usize, t: &Tree<V>, len: Len) -> Tree<V> {
        let ta = t.arity() as u8;
        let i8 = i as u8;
        let shifted_t = t.map_leaves(|l| l + i8 - 1);
        fn rec<V: Clone>(s: &Tree<V>, i: u8, ta: u8, t: &Tree<V>, len: Len) -> (Len, Tree<V>) {
            match s {
                Tree::Leaf(l) if *l == i => (if t.is_leaf() { Len::X1 } else { len }, t.clone()),
                Tree::Leaf(l) if *l > i => (Len::X1, Tree::Leaf(l + ta - 1)),
                Tree::Leaf(l) => (Len::X1, Tree::Leaf(*l)),
                Tree::Node { label, children } => (
                    Len::X1,
                    Tree::Node {
                        label: label.clone(),
                        children: children
                            .iter()
                            .map(|(l, c)| {
                                let (nl, nc) = rec(c, i, ta, t, len);
                                if matches!(c, Tree::Leaf(x) if *x == i) {
                                    (nl, nc)
                                } else {
                                    (*l, nc)
                                }
                            })
                            .collect(),
                    },
                ),
            }
        }
        rec(self, i8, ta, &shifted_t, len).1
    }
}

/// `label(child,…)`, with internal edges other than x1 written as `len:child`.
impl<V: Display> Display for Tree<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(l) => write!(f, "{}", l),
            Tree::Node { label, children } => {
                write!(f, "{}(", label)?;
                for (k, (l, c)) in children.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    if !c.is_leaf() && *l != Len::X1 {
                        write!(f, "{}:", l)?;
                    }
                    write!(f, "{}", c)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Tree<()> {
    /// Sorts children recursively by minimal leaf.
    pub fn canonical(&self) -> Tree<()> {
        match self {
            Tree::Leaf(l) => Tree::Leaf(*l),
            Tree::Node { children, .. } => {
                let mut ch: Vec<(Len, Tree<()>)> = children.iter().map(|(l, c)| (*l, c.canonical())).collect();
                ch.sort_by_key(|c| c.1.min_leaf());
                Tree::Node { label: (), children: ch }
            }
        }
    }
}

/// Where an edge sits in a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeRef {
    Root,
    Leaf(usize),
    /// The internal edge leaving the vertex with this preorder index.
    Internal(usize),
}

impl Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeRef::Root => write!(f, "root"),
            EdgeRef::Leaf(i) => write!(f, "leaf {}", i),
            EdgeRef::Internal(v) => write!(f, "v{}->parent", v),
        }
    }
}

/// An abstract r-tree in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RTree {
    pub r: usize,
    pub shape: Tree<()>,
}

/// An entry of a vertex: a leaf or another vertex (preorder index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Entry {
    Leaf(usize),
    Vertex(usize),
}

impl RTree {
    pub fn new(shape: Tree<()>) -> Result<RTree, TreeError> {
        let mut leaves = shape.leaves();
        let r = leaves.len();
        leaves.sort_unstable();
        if leaves.iter().enumerate().any(|(i, &l)| l as usize != i + 1) {
            return Err(TreeError::Malformed(format!("leaves {:?} are not 1..{}", leaves, r)));
        }
        Ok(RTree { r, shape: shape.canonical() })
    }

    /// The unit tree: one leaf, no vertex.
    pub fn unit() -> RTree {
        RTree { r: 1, shape: Tree::Leaf(1) }
    }

    /// The terminal r-tree with a single vertex.
    pub fn corolla(r: usize) -> RTree {
        RTree { r, shape: Tree::corolla((), r) }
    }

    pub fn num_vertices(&self) -> usize {
        self.shape.num_vertices()
    }

    pub fn internal_edges(&self) -> Vec<EdgeRef> {
        (1..self.num_vertices()).map(EdgeRef::Internal).collect()
    }

    /// Entry sets I_v of each vertex in preorder, children in canonical order.
    pub fn entries(&self) -> Vec<Vec<Entry>> {
        let mut out: Vec<Vec<Entry>> = Vec::new();
        fn rec(t: &Tree<()>, out: &mut Vec<Vec<Entry>>) -> usize {
            let me = out.len();
            out.push(Vec::new());
            if let Tree::Node { children, .. } = t {
                for (_, c) in children {
                    match c {
                        Tree::Leaf(l) => out[me].push(Entry::Leaf(*l as usize)),
                        _ => {
                            let id = rec(c, out);
                            out[me].push(Entry::Vertex(id));
                        }
                    }
                }
            }
            me
        }
        if !self.shape.is_leaf() {
            rec(&self.shape, &mut out);
        }
        out
    }

    /// Contracts an internal edge; returns the contracted tree and the map from old to new
    /// vertex preorder indices.
    pub fn contract_edge(&self, e: EdgeRef) -> Result<(RTree, Vec<usize>), TreeError> {
        let EdgeRef::Internal(v) = e else { return Err(TreeError::NotInternal(e.to_string())) };
        if v == 0 || v >= self.num_vertices() {
            return Err(TreeError::NotInternal(e.to_string()));
        }
        // tag each vertex with its old index, contract, re-canonicalize
        let mut counter = 0usize;
        let tagged = self.shape.map_labels(&mut |_| {
            counter += 1;
            counter - 1
        });
        fn rec(t: &Tree<usize>, v: usize) -> Tree<usize> {
            match t {
                Tree::Leaf(l) => Tree::Leaf(*l),
                Tree::Node { label, children } => {
                    let mut ch = Vec::new();
                    for (l, c) in children {
                        match c {
                            Tree::Node { label: cl, children: cc } if *cl == v => {
                                for (l2, c2) in cc {
                                    ch.push((*l2, rec(c2, v)));
                                }
                            }
                            _ => ch.push((*l, rec(c, v))),
                        }
                    }
                    ch.sort_by_key(|c| c.1.min_leaf());
                    Tree::Node { label: *label, children: ch }
                }
            }
        }
        let contracted = rec(&tagged, v);
        let mut map = vec![usize::MAX; self.num_vertices()];
        for (new, old) in contracted.labels().into_iter().enumerate() {
            map[*old] = new;
        }
        // the merged source maps to its target's new index
        let parent = self.parent_of(v).unwrap();
        map[v] = map[parent];
        let shape = contracted.map_labels(&mut |_| ());
        Ok((RTree { r: self.r, shape }, map))
    }

    /// Preorder index of the parent of vertex v.
    pub fn parent_of(&self, v: usize) -> Option<usize> {
        let ent = self.entries();
        ent.iter().position(|e| e.contains(&Entry::Vertex(v)))
    }

    /// Grafts the root of t onto leaf i, relabeling leaves as for ∘_i.
    pub fn graft(&self, i: usize, t: &RTree) -> Result<RTree, TreeError> {
        if i == 0 || i > self.r {
            return Err(TreeError::LeafOutOfRange(i, self.r));
        }
        let g = self.shape.graft_raw(i, &t.shape, Len::X1);
        Ok(RTree { r: self.r + t.r - 1, shape: g.canonical() })
    }

    /// Relabels leaf k to w(k).
    pub fn relabel(&self, w: &crate::perm::Permutation) -> RTree {
        RTree { r: self.r, shape: self.shape.map_leaves(|l| w.apply(l as usize) as u8).canonical() }
    }

    pub fn is_reduced(&self) -> bool {
        self.entries().iter().all(|e| e.len() >= 2)
    }
}

impl Display for RTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rec(t: &Tree<()>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                Tree::Leaf(l) => write!(f, "{}", l),
                Tree::Node { children, .. } => {
                    write!(f, "(")?;
                    for (k, (_, c)) in children.iter().enumerate() {
                        if k > 0 {
                            write!(f, ",")?;
                        }
                        rec(c, f)?;
                    }
                    write!(f, ")")
                }
            }
        }
        rec(&self.shape, f)
    }
}

/// All set partitions of `set` into at least two blocks, blocks ordered by minimum.
fn partitions_min2(set: &[u8]) -> Vec<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    fn rec(set: &[u8], k: usize, cur: &mut Vec<Vec<u8>>, out: &mut Vec<Vec<Vec<u8>>>) {
        if k == set.len() {
            if cur.len() >= 2 {
                out.push(cur.clone());
            }
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(set[k]);
            rec(set, k + 1, cur, out);
            cur[b].pop();
        }
        cur.push(vec![set[k]]);
        rec(set, k + 1, cur, out);
        cur.pop();
    }
    rec(set, 0, &mut Vec::new(), &mut out);
    out
}

/// Canonical 1-reduced trees on a given leaf set with at most `max_edges` internal edges.
pub fn reduced_shapes(leaves: &[u8], max_edges: usize) -> Vec<Tree<()>> {
    if leaves.len() == 1 {
        return vec![Tree::Leaf(leaves[0])];
    }
    let mut out = Vec::new();
    for part in partitions_min2(leaves) {
        // each block of size ≥ 2 is a subtree costing one edge plus its own edges
        let mut partial: Vec<(usize, Vec<(Len, Tree<()>)>)> = vec![(0, Vec::new())];
        for block in &part {
            let mut next = Vec::new();
            if block.len() == 1 {
                for (used, ch) in &partial {
                    let mut ch = ch.clone();
                    ch.push((Len::X1, Tree::Leaf(block[0])));
                    next.push((*used, ch));
                }
            } else {
                for (used, ch) in &partial {
                    if used + 1 > max_edges {
                        continue;
                    }
                    for sub in reduced_shapes(block, max_edges - used - 1) {
                        let e = sub.num_internal_edges() + 1;
                        if used + e <= max_edges {
                            let mut ch = ch.clone();
                            ch.push((Len::X1, sub.clone()));
                            next.push((used + e, ch));
                        }
                    }
                }
            }
            partial = next;
        }
        for (_, ch) in partial {
            out.push(Tree::Node { label: (), children: ch });
        }
    }
    out.sort();
    out
}

/// One representative per isomorphism class of 1-reduced r-trees with at most `max_edges`
/// internal edges, in canonical form and deterministic order.
pub fn enumerate_reduced_trees(r: usize, max_edges: usize) -> Vec<RTree> {
    assert!(r >= 1);
    let leaves: Vec<u8> = (1..=r as u8).collect();
    reduced_shapes(&leaves, max_edges).into_iter().map(|shape| RTree { r, shape }).collect()
}

/// A basis element of Cube(τ): one length per internal edge, in preorder.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeElement {
    pub tree: RTree,
    pub lengths: Vec<Len>,
}

impl CubeElement {
    pub fn degree(&self) -> i64 {
        self.lengths.iter().map(|l| l.degree()).sum()
    }
}

impl Display for CubeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.tree)?;
        for (i, l) in self.lengths.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l)?;
        }
        write!(f, "]")
    }
}

/// The cube complex ⊗_{e ∈ E'(τ)} I with the Koszul rule in preorder of edges.
pub fn cube_complex(tree: &RTree, p: Prime) -> ChainComplex<CubeElement> {
    let k = tree.num_vertices().saturating_sub(1);
    let mut labels = Vec::new();
    let mut cur = vec![Len::X0; k];
    let total = 3usize.pow(k as u32);
    for mut code in 0..total {
        for slot in cur.iter_mut() {
            *slot = [Len::X0, Len::X1, Len::X01][code % 3];
            code /= 3;
        }
        let c = CubeElement { tree: tree.clone(), lengths: cur.clone() };
        labels.push((c.degree(), c));
    }
    let module = GradedBasedModule::from_labels(labels);
    ChainComplex::from_fn(p, module, |c| {
        let mut out = Lin::zero(p);
        let mut before = 0;
        for (i, l) in c.lengths.iter().enumerate() {
            if *l == Len::X01 {
                let s = p.sign_of(before);
                let mut a = c.clone();
                a.lengths[i] = Len::X1;
                out.add_term(a, s);
                let mut b = c.clone();
                b.lengths[i] = Len::X0;
                out.add_term(b, p.neg(s));
            }
            before += l.degree();
        }
        out
    })
    .expect("cube differential has degree -1")
}

/// DOT rendering of a labeled tree; internal edges are decorated with their lengths.
pub fn to_dot<V: Display>(name: &str, t: &Tree<V>) -> String {
    let mut s = format!("digraph \"{}\" {{\n  rankdir=BT;\n  root [label=\"0\", shape=plaintext];\n", name);
    let mut counter = 0usize;
    fn rec<V: Display>(t: &Tree<V>, s: &mut String, counter: &mut usize) -> String {
        match t {
            Tree::Leaf(l) => {
                let id = format!("leaf{}", l);
                s.push_str(&format!("  {} [label=\"{}\", shape=plaintext];\n", id, l));
                id
            }
            Tree::Node { label, children } => {
                let id = format!("v{}", *counter);
                *counter += 1;
                s.push_str(&format!("  {} [label=\"{}\", shape=circle];\n", id, label));
                for (l, c) in children {
                    let cid = rec(c, s, counter);
                    if c.is_leaf() {
                        s.push_str(&format!("  {} -> {};\n", cid, id));
                    } else {
                        s.push_str(&format!("  {} -> {} [label=\"{}\"];\n", cid, id, l));
                    }
                }
                id
            }
        }
    }
    let top = rec(t, &mut s, &mut counter);
    s.push_str(&format!("  {} -> root;\n}}\n", top));
    s
}

/// Helper for tests and parsers: builds a shape from nested leaf lists.
pub fn shape_from_string(s: &str) -> Result<Tree<()>, TreeError> {
    let bytes: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    fn parse(b: &[char], pos: &mut usize) -> Result<Tree<()>, TreeError> {
        if *pos < b.len() && b[*pos] == '(' {
            *pos += 1;
            let mut children = Vec::new();
            loop {
                children.push((Len::X1, parse(b, pos)?));
                match b.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(')') => {
                        *pos += 1;
                        break;
                    }
                    _ => return Err(TreeError::Malformed(b.iter().collect())),
                }
            }
            Ok(Tree::Node { label: (), children })
        } else {
            let start = *pos;
            while *pos < b.len() && b[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let n: String = b[start..*pos].iter().collect();
            n.parse::<u8>().map(Tree::Leaf).map_err(|_| TreeError::Malformed(b.iter().collect()))
        }
    }
    let t = parse(&bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(TreeError::Malformed(s.to_string()));
    }
    Ok(t)
}

/// Counts of canonical reduced trees by arity, for quick reference in tests.
pub fn reduced_tree_counts(rmax: usize) -> BTreeMap<usize, usize> {
    (1..=rmax).map(|r| (r, enumerate_reduced_trees(r, r).len())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutation;

    fn rt(s: &str) -> RTree {
        RTree::new(shape_from_string(s).unwrap()).unwrap()
    }

    #[test]
    fn contraction_to_corolla() {
        let t = rt("((1,2),3)");
        let (c, map) = t.contract_edge(EdgeRef::Internal(1)).unwrap();
        assert_eq!(c, RTree::corolla(3));
        assert_eq!(map, vec![0, 0]);
        assert!(RTree::corolla(4).contract_edge(EdgeRef::Internal(1)).is_err());
        assert!(t.contract_edge(EdgeRef::Root).is_err());
        assert!(t.contract_edge(EdgeRef::Leaf(2)).is_err());
    }

    #[test]
    fn figure_tree_contraction() {
        // v1 = {1, v2, v3}, v2 = {4,5}, v3 = {3, v4}, v4 = {2,6}
        let t = rt("(1,(4,5),(3,(2,6)))");
        // preorder: v1=0, v3=1, v4=2, v2=3
        assert_eq!(t.to_string(), "(1,((2,6),3),(4,5))");
        let (c, map) = t.contract_edge(EdgeRef::Internal(1)).unwrap();
        assert_eq!(c.to_string(), "(1,(2,6),3,(4,5))");
        assert_eq!(c.num_vertices(), 3);
        assert_eq!(map, vec![0, 0, 1, 2]);
        let ent = c.entries();
        assert_eq!(ent[0], vec![Entry::Leaf(1), Entry::Vertex(1), Entry::Leaf(3), Entry::Vertex(2)]);
    }

    #[test]
    fn graft_examples() {
        let t2 = RTree::corolla(2);
        let g = t2.graft(1, &t2).unwrap();
        assert_eq!(g.to_string(), "((1,2),3)");
        let ent = g.entries();
        assert_eq!(ent[0], vec![Entry::Vertex(1), Entry::Leaf(3)]);
        assert_eq!(ent[1], vec![Entry::Leaf(1), Entry::Leaf(2)]);
        let t = rt("(1,(2,3))");
        assert_eq!(RTree::unit().graft(1, &t).unwrap(), t);
        for i in 1..=3 {
            assert_eq!(t.graft(i, &RTree::unit()).unwrap(), t);
        }
        assert!(t.graft(4, &t2).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_reduced_trees(1, 0), vec![RTree::unit()]);
        assert_eq!(enumerate_reduced_trees(2, 0), vec![RTree::corolla(2)]);
        assert_eq!(enumerate_reduced_trees(3, 1).len(), 4);
        // all 1-reduced leaf-labeled trees: 1, 1, 4, 26, 236
        let counts = reduced_tree_counts(5);
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![1, 1, 4, 26, 236]);
        for t in enumerate_reduced_trees(4, 3) {
            assert!(t.is_reduced());
            assert_eq!(RTree::new(t.shape.clone()).unwrap(), t);
        }
    }

    #[test]
    fn contractions_commute() {
        for t in enumerate_reduced_trees(5, 4) {
            let n = t.num_vertices();
            for a in 1..n {
                for b in 1..n {
                    if a == b {
                        continue;
                    }
                    let (ta, ma) = t.contract_edge(EdgeRef::Internal(a)).unwrap();
                    let (tb, mb) = t.contract_edge(EdgeRef::Internal(b)).unwrap();
                    let ab = ta.contract_edge(EdgeRef::Internal(ma[b])).map(|x| x.0);
                    let ba = tb.contract_edge(EdgeRef::Internal(mb[a])).map(|x| x.0);
                    // edges a and b stay distinct after contracting the other unless they collapse
                    if ma[b] != 0 && mb[a] != 0 {
                        assert_eq!(ab.unwrap(), ba.unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn graft_associativity() {
        let small: Vec<RTree> = (1..=3).flat_map(|r| enumerate_reduced_trees(r, 3)).collect();
        for a in &small {
            for b in &small {
                for c in &small {
                    let (s, t) = (a.r, b.r);
                    for i in 1..=s {
                        for j in 1..=t {
                            // sequential
                            let l = a.graft(i, b).unwrap().graft(i + j - 1, c).unwrap();
                            let r = a.graft(i, &b.graft(j, c).unwrap()).unwrap();
                            assert_eq!(l, r);
                        }
                        for k in i + 1..=s {
                            // parallel
                            let l = a.graft(i, b).unwrap().graft(k + t - 1, c).unwrap();
                            let r = a.graft(k, c).unwrap().graft(i, b).unwrap();
                            assert_eq!(l, r);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn relabel_is_action() {
        let t = rt("((1,2),3)");
        let w = Permutation::from_images(&[3, 1, 2]).unwrap();
        assert_eq!(t.relabel(&w).to_string(), "((1,3),2)");
        let v = Permutation::from_images(&[2, 1, 3]).unwrap();
        assert_eq!(t.relabel(&w.compose(&v)), t.relabel(&v).relabel(&w));
    }

    #[test]
    fn cubes_are_contractible() {
        for p in [Prime::TWO, Prime::THREE] {
            for t in enumerate_reduced_trees(4, 3) {
                let c = cube_complex(&t, p);
                let k = t.num_vertices() as i64 - 1;
                let h = c.homology_ranks(0, k).unwrap();
                assert_eq!(h[0], (0, 1));
                assert!(h[1..].iter().all(|x| x.1 == 0));
            }
        }
    }

    #[test]
    fn dot_has_all_edges() {
        let t = rt("((1,2),3)");
        let dot = to_dot("t", &t.shape.with_lengths(&[Len::X01]).map_labels(&mut |_| "v"));
        assert!(dot.contains("label=\"x01\""));
        assert_eq!(dot.matches("->").count(), 5);
    }
}
