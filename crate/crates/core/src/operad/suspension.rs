//! Operadic suspension ΛP(r) = Σ^{1-r} P(r) ⊗ sgn(r).
//!
//! An element s⊗e of ΛP(M) has degree |e| + 1 - M. Conventions:
//! (s⊗e) ∘_i (s⊗f) = (-1)^{(1-b)(|e|+i-1)} s⊗(e ∘_i f) with b the arity of f,
//! w·(s⊗e) = sgn(w) s⊗(w·e) and δ(s⊗e) = (-1)^{1-M} s⊗de.

use crate::field::{Lin, Prime};
use crate::perm::Permutation;

use super::{DgOperad, OpResult};

#[derive(Clone, Debug)]
pub struct Suspension<P> {
    inner: P,
}

impl<P: DgOperad> Suspension<P> {
    pub fn new(inner: P) -> Self {
        Suspension { inner }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    /// Degree in ΛP of an element of P.
    pub fn shifted_degree(&self, x: &P::B) -> i64 {
        self.inner.degree(x) + 1 - self.inner.arity(x) as i64
    }

    /// Applies an operator of P, given as a map on basis elements, conjugated by the
    /// suspension: s⊗e ↦ (-1)^{1-M} s⊗f(e). Used for the lift of ν.
    pub fn conjugate_odd<F>(&self, x: &Lin<P::B>, mut f: F) -> OpResult<Lin<P::B>>
    where
        F: FnMut(&P::B) -> OpResult<Lin<P::B>>,
    {
        let p = self.inner.prime();
        x.try_flat_map(|e| Ok(f(e)?.scaled(p.sign_of(1 - self.inner.arity(e) as i64))))
    }
}

impl<P: DgOperad> DgOperad for Suspension<P> {
    type B = P::B;

    fn prime(&self) -> Prime {
        self.inner.prime()
    }

    fn name(&self) -> String {
        format!("Λ{}", self.inner.name())
    }

    fn degree_range(&self, arity: usize) -> Option<(i64, i64)> {
        if arity == 0 {
            return None;
        }
        let s = 1 - arity as i64;
        self.inner.degree_range(arity).map(|(a, b)| (a + s, b + s))
    }

    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<P::B>> {
        if arity == 0 {
            return Ok(Vec::new());
        }
        self.inner.basis(arity, degree - 1 + arity as i64)
    }

    fn degree(&self, x: &P::B) -> i64 {
        self.shifted_degree(x)
    }

    fn arity(&self, x: &P::B) -> usize {
        self.inner.arity(x)
    }

    fn unit(&self) -> Option<P::B> {
        self.inner.unit()
    }

    fn compose(&self, x: &P::B, i: usize, y: &P::B) -> OpResult<Lin<P::B>> {
        let p = self.inner.prime();
        let b = self.inner.arity(y) as i64;
        let e = self.inner.degree(x);
        let c = self.inner.compose(x, i, y)?;
        Ok(c.scaled(p.sign_of((1 - b) * (e + i as i64 - 1))))
    }

    fn act(&self, w: &Permutation, x: &P::B) -> OpResult<Lin<P::B>> {
        Ok(self.inner.act(w, x)?.scaled(w.sign(self.inner.prime())))
    }

    fn differential(&self, x: &P::B) -> OpResult<Lin<P::B>> {
        let p = self.inner.prime();
        Ok(self.inner.differential(x)?.scaled(p.sign_of(1 - self.inner.arity(x) as i64)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operad::axioms::{check_operad_axioms, AxiomBounds};
    use crate::zoo::commutative::Commutative;

    #[test]
    fn suspended_commutative() {
        let l = Suspension::new(Commutative::new(Prime::THREE, 6));
        for m in 1..=5 {
            assert_eq!(l.degree_range(m), Some((1 - m as i64, 1 - m as i64)));
            assert_eq!(l.basis(m, 1 - m as i64).unwrap().len(), 1);
        }
        let t = Permutation::adjacent(2, 1);
        assert_eq!(l.act(&t, &2).unwrap(), Lin::single(Prime::THREE, 2usize, 2));
        assert_eq!(l.degree(&1), 0);
        let rep = check_operad_axioms(&l, AxiomBounds::new(5, 0));
        assert!(rep.passed(), "{}", rep.render());
    }
}
