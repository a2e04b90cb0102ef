//! Λ*-modules and their matching objects.
//!
//! Match(M)(r) is the equalizer of d⁰, d¹: ∏_i M(r-1) ⇉ ∏_{i<j} M(r-2), where
//! d⁰(x)_{ij} = ∂_i x_j and d¹(x)_{ij} = ∂_{j-1} x_i. The matching map sends x to (∂_i x)_i.

use std::collections::BTreeMap;

use crate::field::{Lin, Prime};
use crate::linear::kernel_mod_p;

use super::BasisLabel;

pub trait LambdaModule {
    type B: BasisLabel;
    fn prime(&self) -> Prime;
    /// Basis of M(r) in the given degree.
    fn basis(&self, r: usize, degree: i64) -> Vec<Self::B>;
    /// ∂_i : M(r) → M(r-1), 1 ≤ i ≤ r.
    fn partial(&self, x: &Self::B, r: usize, i: usize) -> Lin<Self::B>;
}

/// A tuple (x_1, …, x_r) of elements of M(r-1).
pub type MatchingTuple<B> = Vec<Lin<B>>;

#[derive(Clone, Debug)]
pub struct Matching<B: Ord> {
    pub r: usize,
    pub degree: i64,
    pub basis: Vec<MatchingTuple<B>>,
}

impl<B: Ord> Matching<B> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Computes Match(M)(r) in one degree as the kernel of d⁰ - d¹.
pub fn lambda_matching<M: LambdaModule>(m: &M, r: usize, degree: i64) -> Matching<M::B> {
    let p = m.prime();
    assert!(r >= 1);
    let lower = m.basis(r - 1, degree);
    let n = lower.len();
    let ncols = r * n;
    let mut rows = Vec::new();
    if r >= 2 {
        let target = m.basis(r - 2, degree);
        let tpos: BTreeMap<&M::B, usize> = target.iter().enumerate().map(|(k, b)| (b, k)).collect();
        for i in 1..=r {
            for j in i + 1..=r {
                let mut block = vec![vec![0u32; ncols]; target.len()];
                for (k, b) in lower.iter().enumerate() {
                    // coefficient of x_j[b] in ∂_i x_j and of x_i[b] in -∂_{j-1} x_i
                    for (t, c) in m.partial(b, r - 1, i).iter() {
                        let row = tpos[t];
                        block[row][(j - 1) * n + k] = p.add(block[row][(j - 1) * n + k], c);
                    }
                    for (t, c) in m.partial(b, r - 1, j - 1).iter() {
                        let row = tpos[t];
                        block[row][(i - 1) * n + k] = p.sub(block[row][(i - 1) * n + k], c);
                    }
                }
                rows.extend(block);
            }
        }
    }
    let basis = kernel_mod_p(p, ncols, rows)
        .into_iter()
        .map(|v| {
            (0..r)
                .map(|i| Lin::from_terms(p, (0..n).map(|k| (lower[k].clone(), v[i * n + k]))))
                .collect()
        })
        .collect();
    Matching { r, degree, basis }
}

/// μ(x) = (∂_1 x, …, ∂_r x).
pub fn matching_map<M: LambdaModule>(m: &M, r: usize, x: &Lin<M::B>) -> MatchingTuple<M::B> {
    (1..=r).map(|i| x.flat_map(|b| m.partial(b, r, i))).collect()
}

/// Whether a tuple satisfies the equalizer relations ∂_i x_j = ∂_{j-1} x_i.
pub fn in_matching<M: LambdaModule>(m: &M, r: usize, x: &MatchingTuple<M::B>) -> bool {
    for i in 1..=r {
        for j in i + 1..=r {
            let a = x[j - 1].flat_map(|b| m.partial(b, r - 1, i));
            let b = x[i - 1].flat_map(|b| m.partial(b, r - 1, j - 1));
            if a != b {
                return false;
            }
        }
    }
    true
}

/// The constant Λ*-module F underlying the commutative operad: one basis element per arity.
pub struct ConstantModule {
    pub prime: Prime,
}

impl LambdaModule for ConstantModule {
    type B = usize;
    fn prime(&self) -> Prime {
        self.prime
    }
    fn basis(&self, r: usize, degree: i64) -> Vec<usize> {
        if degree == 0 {
            vec![r]
        } else {
            Vec::new()
        }
    }
    fn partial(&self, x: &usize, _r: usize, _i: usize) -> Lin<usize> {
        Lin::basis(self.prime, x - 1)
    }
}

/// A weight vector (m_1, …, m_r).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightVector(pub Vec<usize>);

impl WeightVector {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl std::fmt::Display for WeightVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Truncation of the module ∏_{m} ΛC(m_1+…+m_r) of bar operations over the commutative
/// operad: one basis element per weight vector m with 0 < Σm ≤ `weight_max`, of degree 1 - Σm.
/// ∂_i reads off the components with m_i = 0.
pub struct TruncatedPrimOp {
    pub prime: Prime,
    pub weight_max: usize,
}

impl LambdaModule for TruncatedPrimOp {
    type B = WeightVector;
    fn prime(&self) -> Prime {
        self.prime
    }
    fn basis(&self, r: usize, degree: i64) -> Vec<WeightVector> {
        let total = 1 - degree;
        if total < 1 || total as usize > self.weight_max {
            return Vec::new();
        }
        compositions(total as usize, r).into_iter().map(WeightVector).collect()
    }
    fn partial(&self, x: &WeightVector, _r: usize, i: usize) -> Lin<WeightVector> {
        if x.0[i - 1] == 0 {
            let mut y = x.clone();
            y.0.remove(i - 1);
            Lin::basis(self.prime, y)
        } else {
            Lin::zero(self.prime)
        }
    }
}

/// Weak compositions of n into r parts, in lexicographic order.
pub fn compositions(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, r - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_module_matches_itself() {
        let m = ConstantModule { prime: Prime::THREE };
        for r in 1..=5 {
            let mt = lambda_matching(&m, r, 0);
            assert_eq!(mt.dim(), 1);
            let mu = matching_map(&m, r, &Lin::basis(Prime::THREE, r));
            assert!(in_matching(&m, r, &mu));
            assert!(mu.iter().all(|x| *x == Lin::basis(Prime::THREE, r - 1)));
        }
        assert_eq!(lambda_matching(&m, 3, 1).dim(), 0);
    }

    #[test]
    fn primop_matching_is_restricted_product() {
        for p in [Prime::TWO, Prime::THREE] {
            let m = TruncatedPrimOp { prime: p, weight_max: 4 };
            for r in 1..=4 {
                for k in 1..=4usize {
                    let deg = 1 - k as i64;
                    let with_zero = compositions(k, r).into_iter().filter(|v| v.contains(&0)).count();
                    let mt = lambda_matching(&m, r, deg);
                    assert_eq!(mt.dim(), with_zero, "r = {}, weight = {}", r, k);
                    for v in compositions(k, r) {
                        let mu = matching_map(&m, r, &Lin::basis(p, WeightVector(v.clone())));
                        assert!(in_matching(&m, r, &mu));
                        assert_eq!(mu.iter().all(|x| x.is_zero()), !v.contains(&0));
                    }
                }
            }
        }
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(compositions(0, 2), vec![vec![0, 0]]);
    }
}
