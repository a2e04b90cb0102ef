//! Concrete operads: the commutative operad C, the A∞ operad K, the chain Barratt–Eccles
//! operad E with its contraction, and the morphism K → E.

pub mod ainf;
pub mod barratt_eccles;
pub mod commutative;
pub mod k_to_e;
