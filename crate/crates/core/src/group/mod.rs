//! Finitely generated groups, their integral group rings and matrices over `ℓ¹(G)`.

mod element;
mod matrix;
mod ring;
pub mod text;

pub use element::{GroupElement, GroupKind, GroupSpec};
pub use matrix::{l1_inverse, l1_inverse_with, NeumannInverse, NeumannSplit, RingMatrix};
pub use ring::{Coefficients, GroupRingElement};
