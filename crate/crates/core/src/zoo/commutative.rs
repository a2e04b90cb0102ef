//! The commutative operad: C(r) = F for every r ≥ 0, with trivial actions.

use crate::field::{Lin, Prime};
use crate::linear::Pair;
use crate::operad::{DgOperad, HopfOperad, OpResult, OperadError};
use crate::perm::Permutation;

/// Basis element of C(r) is written as r.
#[derive(Clone, Copy, Debug)]
pub struct Commutative {
    prime: Prime,
    arity_max: usize,
}

impl Commutative {
    pub fn new(prime: Prime, arity_max: usize) -> Self {
        Commutative { prime, arity_max }
    }
}

impl DgOperad for Commutative {
    type B = usize;

    fn prime(&self) -> Prime {
        self.prime
    }

    fn name(&self) -> String {
        "C".to_string()
    }

    fn degree_range(&self, arity: usize) -> Option<(i64, i64)> {
        (arity <= self.arity_max).then_some((0, 0))
    }

    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<usize>> {
        if arity > self.arity_max {
            return Err(OperadError::OutOfTruncation(format!("C({}) beyond arity {}", arity, self.arity_max)));
        }
        Ok(if degree == 0 { vec![arity] } else { Vec::new() })
    }

    fn degree(&self, _x: &usize) -> i64 {
        0
    }

    fn arity(&self, x: &usize) -> usize {
        *x
    }

    fn unit(&self) -> Option<usize> {
        Some(1)
    }

    fn star(&self) -> Option<usize> {
        Some(0)
    }

    fn compose(&self, x: &usize, i: usize, y: &usize) -> OpResult<Lin<usize>> {
        if i == 0 || i > *x {
            return Err(OperadError::Arity(format!("∘_{} on C({})", i, x)));
        }
        Ok(Lin::basis(self.prime, x + y - 1))
    }

    fn act(&self, w: &Permutation, x: &usize) -> OpResult<Lin<usize>> {
        if w.len() != *x {
            return Err(OperadError::Arity(format!("Σ_{} acting on C({})", w.len(), x)));
        }
        Ok(Lin::basis(self.prime, *x))
    }

    fn differential(&self, _x: &usize) -> OpResult<Lin<usize>> {
        Ok(Lin::zero(self.prime))
    }
}

impl HopfOperad for Commutative {
    fn diagonal(&self, x: &usize) -> OpResult<Lin<Pair<usize, usize>>> {
        Ok(Lin::basis(self.prime, Pair(*x, *x)))
    }

    fn counit(&self, _x: &usize) -> u32 {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operad::axioms::{check_hopf, check_operad_axioms, AxiomBounds};

    #[test]
    fn commutative_axioms() {
        for p in [Prime::TWO, Prime::THREE] {
            let c = Commutative::new(p, 6);
            let rep = check_operad_axioms(&c, AxiomBounds::new(6, 4));
            assert!(rep.passed(), "{}", rep.render());
            assert!(rep.checks > 100);
            assert!(check_hopf(&c, AxiomBounds::new(5, 0)).passed());
            assert_eq!(c.compose(&3, 2, &4).unwrap(), Lin::basis(p, 6));
        }
    }
}
