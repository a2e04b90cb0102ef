//! Differential graded operads over F_p.
//!
//! Conventions: the symmetric group acts on the left by `(σ·p)(x_1,…,x_r) = p(x_{σ(1)},…,x_{σ(r)})`,
//! partial composites `p ∘_i q` plug `q` into the i-th input, and signs follow the Koszul rule
//! of the endomorphism operad. Full composites `γ(p; q_1,…,q_k)` are evaluated left to right.

pub mod axioms;
pub mod free;
pub mod matching;
pub mod suspension;
pub mod treewise;

use std::fmt::{Debug, Display};
use std::hash::Hash;

use thiserror::Error;

use crate::field::{Lin, Prime};
use crate::linear::Pair;
use crate::perm::Permutation;
use crate::tree::Tree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperadError {
    #[error("out of truncation: {0}")]
    OutOfTruncation(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type OpResult<T> = Result<T, OperadError>;

/// Basis labels usable as operad elements.
pub trait BasisLabel: Clone + Ord + Hash + Debug + Display {}
impl<T: Clone + Ord + Hash + Debug + Display> BasisLabel for T {}

/// A dg-operad presented on a basis in each arity.
pub trait DgOperad {
    type B: BasisLabel;

    fn prime(&self) -> Prime;
    fn name(&self) -> String;

    /// Degrees stored in arity r, or None when the arity lies outside the truncation.
    fn degree_range(&self, arity: usize) -> Option<(i64, i64)>;
    /// Basis of P(arity) in the given degree; errors outside the stored truncation.
    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<Self::B>>;

    fn degree(&self, x: &Self::B) -> i64;
    fn arity(&self, x: &Self::B) -> usize;

    /// The operadic unit in P(1), if the operad is unitary.
    fn unit(&self) -> Option<Self::B>;
    /// The 0-ary operation * spanning P(0) for unital operads.
    fn star(&self) -> Option<Self::B> {
        None
    }

    fn compose(&self, x: &Self::B, i: usize, y: &Self::B) -> OpResult<Lin<Self::B>>;
    fn act(&self, w: &Permutation, x: &Self::B) -> OpResult<Lin<Self::B>>;
    fn differential(&self, x: &Self::B) -> OpResult<Lin<Self::B>>;

    /// x ∘_i *, the operation ∂_i of the underlying Λ*-module.
    fn partial(&self, x: &Self::B, i: usize) -> OpResult<Lin<Self::B>> {
        match self.star() {
            Some(s) => self.compose(x, i, &s),
            None => Err(OperadError::Unsupported(format!("{} has no unital operation", self.name()))),
        }
    }
}

/// Operads whose components are coalgebras compatible with composition.
pub trait HopfOperad: DgOperad {
    fn diagonal(&self, x: &Self::B) -> OpResult<Lin<Pair<Self::B, Self::B>>>;
    fn counit(&self, x: &Self::B) -> u32;
}

/// Homogeneous formal sum of basis elements of one arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperadElement<B: Ord> {
    pub arity: usize,
    pub terms: Lin<B>,
}

impl<B: BasisLabel> OperadElement<B> {
    pub fn new<P: DgOperad<B = B>>(op: &P, terms: Lin<B>) -> OpResult<Self> {
        let mut arity = None;
        for (b, _) in terms.iter() {
            let a = op.arity(b);
            if arity.is_some_and(|x| x != a) {
                return Err(OperadError::Arity(format!("mixed arities in {}", terms)));
            }
            arity = Some(a);
        }
        Ok(OperadElement { arity: arity.unwrap_or(0), terms })
    }
}

/// Bilinear extension of ∘_i, with an arity check.
pub fn operad_compose<P: DgOperad>(op: &P, x: &Lin<P::B>, i: usize, y: &Lin<P::B>) -> OpResult<Lin<P::B>> {
    let mut out = Lin::zero(op.prime());
    for (a, c) in x.iter() {
        let s = op.arity(a);
        if i == 0 || i > s {
            return Err(OperadError::Arity(format!("∘_{} on an element of arity {}", i, s)));
        }
        for (b, e) in y.iter() {
            out.add_scaled(&op.compose(a, i, b)?, op.prime().mul(c, e));
        }
    }
    Ok(out)
}

pub fn act_lin<P: DgOperad>(op: &P, w: &Permutation, x: &Lin<P::B>) -> OpResult<Lin<P::B>> {
    x.try_flat_map(|b| op.act(w, b))
}

pub fn d_lin<P: DgOperad>(op: &P, x: &Lin<P::B>) -> OpResult<Lin<P::B>> {
    x.try_flat_map(|b| op.differential(b))
}

pub fn partial_lin<P: DgOperad>(op: &P, x: &Lin<P::B>, i: usize) -> OpResult<Lin<P::B>> {
    x.try_flat_map(|b| op.partial(b, i))
}

/// γ(x; y_1,…,y_k) by successive partial composites from the left.
pub fn full_compose<P: DgOperad>(op: &P, x: &Lin<P::B>, ys: &[Lin<P::B>]) -> OpResult<Lin<P::B>> {
    let mut acc = x.clone();
    let mut pos = 1;
    for y in ys {
        let ar = match y.keys().next() {
            Some(b) => op.arity(b),
            None => return Ok(Lin::zero(op.prime())),
        };
        acc = operad_compose(op, &acc, pos, y)?;
        pos += ar;
    }
    Ok(acc)
}

/// All basis elements of the given arity with degree at most `max_degree`.
pub fn elements_up_to<P: DgOperad>(op: &P, arity: usize, max_degree: i64) -> OpResult<Vec<P::B>> {
    let Some((lo, hi)) = op.degree_range(arity) else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for d in lo..=hi.min(max_degree) {
        out.extend(op.basis(arity, d)?);
    }
    Ok(out)
}

/// Evaluates a labeled tree in an operad: composites from the root in preorder, then the
/// leaf relabeling. `value` sends a vertex label to an element of the target operad whose
/// inputs follow the children order.
pub fn evaluate_tree<P: DgOperad, L, F>(op: &P, t: &Tree<L>, value: &mut F) -> OpResult<Lin<P::B>>
where
    L: Clone,
    F: FnMut(&L) -> OpResult<Lin<P::B>>,
{
    match t {
        Tree::Leaf(_) => Ok(op.unit().map(|u| Lin::basis(op.prime(), u)).unwrap_or_else(|| Lin::zero(op.prime()))),
        Tree::Node { .. } => {
            let raw = eval_rec(op, t, value)?;
            let leaves = t.leaves();
            let mut sorted = leaves.clone();
            sorted.sort_unstable();
            let ranks: Vec<usize> = leaves.iter().map(|l| sorted.binary_search(l).unwrap() + 1).collect();
            let w = Permutation::from_images(&ranks).expect("leaves are distinct");
            if w.is_identity() {
                Ok(raw)
            } else {
                act_lin(op, &w, &raw)
            }
        }
    }
}

fn eval_rec<P: DgOperad, L, F>(op: &P, t: &Tree<L>, value: &mut F) -> OpResult<Lin<P::B>>
where
    L: Clone,
    F: FnMut(&L) -> OpResult<Lin<P::B>>,
{
    match t {
        Tree::Leaf(_) => unreachable!("leaves are handled by the caller"),
        Tree::Node { label, children } => {
            let mut acc = value(label)?;
            let mut pos = 1;
            for (_, c) in children {
                if c.is_leaf() {
                    pos += 1;
                    continue;
                }
                let v = eval_rec(op, c, value)?;
                acc = operad_compose(op, &acc, pos, &v)?;
                pos += c.arity();
            }
            Ok(acc)
        }
    }
}

/// Coxeter generators (i i+1) of Σ_r.
pub fn coxeter_generators(r: usize) -> Vec<Permutation> {
    (1..r).map(|i| Permutation::adjacent(r, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::commutative::Commutative;

    #[test]
    fn full_compose_of_commutative() {
        let c = Commutative::new(Prime::TWO, 6);
        let x = Lin::basis(Prime::TWO, 3usize);
        let ys = vec![Lin::basis(Prime::TWO, 2usize), Lin::basis(Prime::TWO, 1), Lin::basis(Prime::TWO, 2)];
        assert_eq!(full_compose(&c, &x, &ys).unwrap(), Lin::basis(Prime::TWO, 5usize));
        assert!(operad_compose(&c, &x, 4, &ys[0]).is_err());
    }
}
