//! The morphism φ: K → E with φ(μ_2) = id_2 and φ(μ_n) = ν(φ(dμ_n)) for n ≥ 3.

use crate::field::Lin;
use crate::operad::free::{FTree, FreeOperad, GenLabel};
use crate::operad::{d_lin, evaluate_tree, DgOperad, OpResult};

use super::ainf::mu;
use super::barratt_eccles::{BarrattEccles, BeWord};

pub struct KToE {
    images: Vec<Lin<BeWord>>,
}

impl KToE {
    pub fn build(k: &FreeOperad, e: &BarrattEccles) -> OpResult<KToE> {
        let p = e.prime();
        let (arity_max, _) = k.bounds();
        let mut map = KToE { images: vec![Lin::basis(p, e.id(2))] };
        for n in 3..=arity_max {
            let dmu = k.differential(&mu(k, n))?;
            let image = map.apply_lin(e, &dmu)?;
            let lifted = e.nu_lin(&image)?;
            map.images.push(lifted);
        }
        Ok(map)
    }

    /// φ(μ_n).
    pub fn image(&self, n: usize) -> &Lin<BeWord> {
        &self.images[n - 2]
    }

    pub fn apply(&self, e: &BarrattEccles, x: &FTree) -> OpResult<Lin<BeWord>> {
        evaluate_tree(e, x, &mut |l: &GenLabel| {
            let img = &self.images[l.gen as usize];
            if l.perm.is_identity() {
                Ok(img.clone())
            } else {
                img.try_flat_map(|w| e.act(&l.perm, w))
            }
        })
    }

    pub fn apply_lin(&self, e: &BarrattEccles, x: &Lin<FTree>) -> OpResult<Lin<BeWord>> {
        x.try_flat_map(|t| self.apply(e, t))
    }

    /// Checks dφ = φd on every basis element of K within its bounds and returns the witnesses.
    pub fn check_chain_map(&self, k: &FreeOperad, e: &BarrattEccles) -> OpResult<Vec<String>> {
        let mut bad = Vec::new();
        let (arity_max, degree_max) = k.bounds();
        for r in 1..=arity_max {
            for d in 0..=degree_max {
                for x in k.basis(r, d)? {
                    let lhs = d_lin(e, &self.apply(e, &x)?)?;
                    let rhs = self.apply_lin(e, &k.differential(&x)?)?;
                    if lhs != rhs {
                        bad.push(format!("dφ({}) = {} but φ(d{}) = {}", x, lhs, x, rhs));
                    }
                }
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Prime;
    use crate::zoo::ainf::build_ainf;

    #[test]
    fn phi_is_a_chain_map() {
        for p in [Prime::TWO, Prime::THREE] {
            let k = build_ainf(p, 5);
            let e = BarrattEccles::new(p, 5, 4);
            let phi = KToE::build(&k, &e).unwrap();
            assert_eq!(phi.image(2), &Lin::basis(p, e.id(2)));
            for n in 3..=5 {
                assert!(phi.image(n).is_zero());
                // positive-degree images are killed by the augmentation
                assert!(phi.image(n).iter().all(|(w, _)| e.augmentation(w) == 0));
            }
            assert!(phi.check_chain_map(&k, &e).unwrap().is_empty());
            let m3 = k.differential(&mu(&k, 3)).unwrap();
            assert!(phi.apply_lin(&e, &m3).unwrap().is_zero());
        }
    }
}
