//! Treewise tensors with Koszul bookkeeping.
//!
//! A labeled tree stands for the tensor of its factors taken in preorder: for each
//! vertex, the length of its outgoing internal edge (if any) followed by its label.
//! Operations that rebuild a tree tag every factor with its position in the source
//! tensor; after re-sorting children, the sign is the Koszul sign of the permutation
//! from source order to the new preorder.

use crate::field::Prime;
use crate::perm::Permutation;
use crate::tree::{Len, Tree};

/// A vertex label tagged with source positions of the label and of its outgoing edge.
#[derive(Clone, Debug)]
pub struct Fac<L> {
    pub label: L,
    pub id: u32,
    pub odd: bool,
    pub edge_id: u32,
}

/// Tags a tree's factors with consecutive ids in preorder starting at `start`.
/// Returns the tagged tree and the next free id.
pub fn tag_preorder<L: Clone, F: Fn(&L) -> bool>(t: &Tree<L>, start: u32, odd: &F) -> (Tree<Fac<L>>, u32) {
    let mut next = start;
    fn rec<L: Clone, F: Fn(&L) -> bool>(t: &Tree<L>, next: &mut u32, odd: &F, has_edge: bool) -> Tree<Fac<L>> {
        match t {
            Tree::Leaf(l) => Tree::Leaf(*l),
            Tree::Node { label, children } => {
                let edge_id = if has_edge {
                    *next += 1;
                    *next - 1
                } else {
                    u32::MAX
                };
                let id = *next;
                *next += 1;
                let children = children.iter().map(|(l, c)| (*l, rec(c, next, odd, true))).collect();
                Tree::Node { label: Fac { label: label.clone(), id, odd: odd(label), edge_id }, children }
            }
        }
    }
    let t = rec(t, &mut next, odd, false);
    (t, next)
}

/// Preorder factor list (id, odd) of a tagged tree.
pub fn factor_sequence<L>(t: &Tree<Fac<L>>) -> Vec<(u32, bool)> {
    let mut out = Vec::new();
    fn rec<L>(t: &Tree<Fac<L>>, edge: Option<Len>, out: &mut Vec<(u32, bool)>) {
        if let Tree::Node { label, children } = t {
            if let Some(e) = edge {
                out.push((label.edge_id, e == Len::X01));
            }
            out.push((label.id, label.odd));
            for (l, c) in children {
                rec(c, Some(*l), out);
            }
        }
    }
    rec(t, None, &mut out);
    out
}

/// Parity of the Koszul sign taking factors from id order to the listed order.
pub fn koszul_parity(seq: &[(u32, bool)]) -> bool {
    let odd: Vec<u32> = seq.iter().filter(|x| x.1).map(|x| x.0).collect();
    let mut inv = 0usize;
    for a in 0..odd.len() {
        for b in a + 1..odd.len() {
            if odd[a] > odd[b] {
                inv += 1;
            }
        }
    }
    inv % 2 == 1
}

/// Re-sorts children by minimal leaf at every vertex. When the children of a vertex are
/// reordered so that new child j is old child π(j), its label is replaced by π^{-1}·label
/// through `relabel`, which returns a coefficient (zero kills the term).
/// Returns the total coefficient, including the Koszul sign of the factor reordering.
pub fn canonicalize<L: Clone, F>(p: Prime, t: Tree<Fac<L>>, relabel: &mut F) -> Option<(u32, Tree<L>)>
where
    F: FnMut(&L, &Permutation) -> Option<(u32, L)>,
{
    let mut coef = 1u32;
    let sorted = sort_rec(p, t, relabel, &mut coef)?;
    if koszul_parity(&factor_sequence(&sorted)) {
        coef = p.neg(coef);
    }
    Some((coef, strip(&sorted)))
}

fn sort_rec<L: Clone, F>(p: Prime, t: Tree<Fac<L>>, relabel: &mut F, coef: &mut u32) -> Option<Tree<Fac<L>>>
where
    F: FnMut(&L, &Permutation) -> Option<(u32, L)>,
{
    match t {
        Tree::Leaf(l) => Some(Tree::Leaf(l)),
        Tree::Node { mut label, children } => {
            let mut ch = Vec::with_capacity(children.len());
            for (l, c) in children {
                let c = sort_rec(p, c, relabel, coef)?;
                let l = if c.is_leaf() { Len::X1 } else { l };
                ch.push((l, c));
            }
            let keys: Vec<u8> = ch.iter().map(|c| c.1.min_leaf()).collect();
            if keys.windows(2).any(|w| w[0] > w[1]) {
                let mut order: Vec<u8> = (0..ch.len() as u8).collect();
                order.sort_by_key(|&j| keys[j as usize]);
                let pi = Permutation::from_zero_based(order.clone());
                let (c, nl) = relabel(&label.label, &pi.inverse())?;
                *coef = p.mul(*coef, c);
                if *coef == 0 {
                    return None;
                }
                label.label = nl;
                let mut slots: Vec<Option<(Len, Tree<Fac<L>>)>> = ch.into_iter().map(Some).collect();
                ch = order.iter().map(|&j| slots[j as usize].take().unwrap()).collect();
            }
            Some(Tree::Node { label, children: ch })
        }
    }
}

pub fn strip<L: Clone>(t: &Tree<Fac<L>>) -> Tree<L> {
    t.map_labels(&mut |f: &Fac<L>| f.label.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_counts_odd_inversions() {
        assert!(!koszul_parity(&[(0, true), (1, true), (2, false)]));
        assert!(koszul_parity(&[(1, true), (0, true)]));
        assert!(!koszul_parity(&[(1, true), (2, false), (0, false)]));
        assert!(!koszul_parity(&[(2, true), (0, true), (1, true)]));
    }

    #[test]
    fn swap_of_odd_subtrees_is_signed() {
        // root with two odd-labeled children given out of order
        let t: Tree<Fac<&str>> = Tree::Node {
            label: Fac { label: "r", id: 0, odd: false, edge_id: u32::MAX },
            children: vec![
                (
                    Len::X1,
                    Tree::Node {
                        label: Fac { label: "b", id: 1, odd: true, edge_id: 10 },
                        children: vec![(Len::X1, Tree::Leaf(3)), (Len::X1, Tree::Leaf(4))],
                    },
                ),
                (
                    Len::X1,
                    Tree::Node {
                        label: Fac { label: "a", id: 2, odd: true, edge_id: 11 },
                        children: vec![(Len::X1, Tree::Leaf(1)), (Len::X1, Tree::Leaf(2))],
                    },
                ),
            ],
        };
        let p = Prime::THREE;
        let mut seen = None;
        let (c, out) = canonicalize(p, t, &mut |l: &&str, w: &Permutation| {
            seen = Some(w.clone());
            Some((1, *l))
        })
        .unwrap();
        assert_eq!(c, 2);
        assert_eq!(seen.unwrap().images(), vec![2, 1]);
        assert_eq!(out.leaves(), vec![1, 2, 3, 4]);
    }
}
