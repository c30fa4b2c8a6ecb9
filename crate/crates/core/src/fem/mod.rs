//! Finite-element building blocks: quadrature, affine element maps, P1 and
//! BDM1 bases, Piola transforms and global numbering.

pub mod bdm;
pub mod dofs;
pub mod element;
pub mod piola;
pub mod quadrature;

pub use bdm::BdmElement;
pub use dofs::DofMap;
pub use element::{p1_strain_matrices, p1_values, ElementMap};
pub use piola::{l2_transform, piola_contravariant, transported_strain};
pub use quadrature::{edge_rule, triangle_rule, TriangleRule};
