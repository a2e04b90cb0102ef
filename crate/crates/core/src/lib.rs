//! Differential graded operads, the Boardman–Vogt W-construction, bar complexes and
//! an explicit Hopf operad action of W(E) on the bar complex of an E-algebra, all over
//! prime fields.

pub mod field;
pub mod linear;
pub mod perm;
pub mod tree;
pub mod operad;
pub mod zoo;
pub mod bar;
pub mod wcon;
pub mod action;
pub mod cli;
