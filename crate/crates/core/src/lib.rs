//! Two-dimensional linear elasticity in displacement and weak-symmetry mixed
//! form, shape gradients of compliance and volume, and a boundary variation
//! optimizer for cantilever benchmarks.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bva;
pub mod check;
pub mod config;
pub mod displacement;
pub mod error;
pub mod fem;
pub mod gradient;
pub mod linalg;
pub mod loads;
pub mod material;
pub mod mesh;
pub mod mixed;

pub use error::{Error, Result};
pub use material::MaterialParams;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
