//! The A∞ operad K: quasi-free on Σ-free generators μ_n (n ≥ 2) of degree n - 2 with
//!
//! dμ_N = Σ_{n+k-1=N} Σ_{t=1..n} (-1)^{N + (k-1)(n+t-1)} μ_n ∘_t μ_k.

use crate::field::{Lin, Prime};
use crate::operad::free::{FTree, FreeOperad, Generator, Symmetry};
use crate::operad::DgOperad;

/// Builds K up to the given arity. The generator μ_n has index n - 2.
pub fn build_ainf(prime: Prime, arity_max: usize) -> FreeOperad {
    assert!(arity_max >= 2);
    let gens: Vec<Generator> = (2..=arity_max)
        .map(|n| Generator { name: format!("μ{}", n), arity: n, degree: n as i64 - 2, symmetry: Symmetry::Free })
        .collect();
    let mut k = FreeOperad::new(prime, "K", gens, arity_max, arity_max as i64 - 2);
    let diffs = (2..=arity_max).map(|n| ainf_differential(&k, n)).collect();
    k.set_generator_differentials(diffs);
    k
}

/// The right-hand side dμ_N as an element of the free operad.
pub fn ainf_differential(k: &FreeOperad, big_n: usize) -> Lin<FTree> {
    let p = k.prime();
    let mut out = Lin::zero(p);
    for n in 2..big_n {
        let kk = big_n + 1 - n;
        for t in 1..=n {
            let sign = p.sign_of((big_n + (kk - 1) * (n + t - 1)) as i64);
            let c = k.compose(&mu(k, n), t, &mu(k, kk)).expect("composite of generators");
            out.add_scaled(&c, sign);
        }
    }
    out
}

pub fn mu(k: &FreeOperad, n: usize) -> FTree {
    k.generator(n - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operad::d_lin;

    #[test]
    fn low_arity_differentials() {
        let k = build_ainf(Prime::TWO, 4);
        assert!(k.differential(&mu(&k, 2)).unwrap().is_zero());
        let d3 = k.differential(&mu(&k, 3)).unwrap();
        let mut expect = k.compose(&mu(&k, 2), 1, &mu(&k, 2)).unwrap();
        expect.add_assign(&k.compose(&mu(&k, 2), 2, &mu(&k, 2)).unwrap());
        assert_eq!(d3, expect);
        assert_eq!(d3.render(), "μ2(1,μ2(2,3)) + μ2(μ2(1,2),3)");
    }

    #[test]
    fn d_squared_vanishes_on_generators() {
        for p in [Prime::TWO, Prime::THREE] {
            let k = build_ainf(p, 6);
            for n in 2..=6 {
                let d = k.differential(&mu(&k, n)).unwrap();
                assert!(d_lin(&k, &d).unwrap().is_zero(), "d²μ{} at p = {}", n, p);
            }
        }
    }

    #[test]
    fn basis_sizes() {
        let k = build_ainf(Prime::TWO, 5);
        // n! times the number of planar trees with given vertex count
        assert_eq!(k.basis(3, 0).unwrap().len(), 12);
        assert_eq!(k.basis(3, 1).unwrap().len(), 6);
        assert_eq!(k.basis(4, 2).unwrap().len(), 24);
        assert_eq!(k.basis(4, 1).unwrap().len(), 24 * 5);
        assert_eq!(k.basis(4, 0).unwrap().len(), 24 * 5);
    }
}
