//! Body forces and boundary tractions as closed-form vector fields.
//!
//! Both volumetric shape gradients need the Jacobians of the loads, so every
//! field provides its gradient alongside its value.

use std::fmt;
use std::sync::Arc;

use crate::{Mat2, Vec2};

/// A smooth vector field on the plane.
pub trait VectorField: Send + Sync {
    fn value(&self, x: Vec2) -> Vec2;
    /// Jacobian `J_ij = ∂f_i / ∂x_j`.
    fn gradient(&self, x: Vec2) -> Mat2;
    /// True when the field vanishes identically; lets assembly skip work.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub Vec2);

impl VectorField for ConstantField {
    fn value(&self, _x: Vec2) -> Vec2 {
        self.0
    }

    fn gradient(&self, _x: Vec2) -> Mat2 {
        Mat2::zeros()
    }

    fn is_zero(&self) -> bool {
        self.0 == Vec2::zeros()
    }
}

/// Affine field `a + M x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    pub offset: Vec2,
    pub jacobian: Mat2,
}

impl VectorField for AffineField {
    fn value(&self, x: Vec2) -> Vec2 {
        self.offset + self.jacobian * x
    }

    fn gradient(&self, _x: Vec2) -> Mat2 {
        self.jacobian
    }

    fn is_zero(&self) -> bool {
        self.offset == Vec2::zeros() && self.jacobian == Mat2::zeros()
    }
}

/// Field given by a pair of closures for value and Jacobian.
pub struct ClosureField<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> VectorField for ClosureField<F, G>
where
    F: Fn(Vec2) -> Vec2 + Send + Sync,
    G: Fn(Vec2) -> Mat2 + Send + Sync,
{
    fn value(&self, x: Vec2) -> Vec2 {
        (self.value)(x)
    }

    fn gradient(&self, x: Vec2) -> Mat2 {
        (self.gradient)(x)
    }
}

pub type SharedField = Arc<dyn VectorField>;

/// Body force `f` on the domain and traction `g` on the loaded boundary.
#[derive(Clone)]
pub struct LoadSpec {
    pub f: SharedField,
    pub g: SharedField,
}

impl LoadSpec {
    pub fn new(f: impl VectorField + 'static, g: impl VectorField + 'static) -> Self {
        LoadSpec {
            f: Arc::new(f),
            g: Arc::new(g),
        }
    }

    pub fn zero() -> Self {
        Self::traction(Vec2::zeros())
    }

    /// Constant traction and no body force.
    pub fn traction(g: Vec2) -> Self {
        Self::new(ConstantField(Vec2::zeros()), ConstantField(g))
    }

    pub fn constant(f: Vec2, g: Vec2) -> Self {
        Self::new(ConstantField(f), ConstantField(g))
    }

    /// Same loads multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let (f, g) = (Arc::clone(&self.f), Arc::clone(&self.g));
        let (f2, g2) = (Arc::clone(&f), Arc::clone(&g));
        LoadSpec::new(
            ClosureField {
                value: move |x| f.value(x) * s,
                gradient: move |x| f2.gradient(x) * s,
            },
            ClosureField {
                value: move |x| g.value(x) * s,
                gradient: move |x| g2.gradient(x) * s,
            },
        )
    }
}

impl fmt::Debug for LoadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadSpec")
            .field("f_zero", &self.f.is_zero())
            .field("g_zero", &self.g.is_zero())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_field_gradient_matches_difference_quotient() {
        let f = AffineField {
            offset: Vec2::new(1.0, -2.0),
            jacobian: Mat2::new(0.5, 1.0, -1.0, 2.0),
        };
        let x = Vec2::new(0.3, 0.7);
        let h = 1e-6;
        let dx = (f.value(x + Vec2::new(h, 0.0)) - f.value(x)) / h;
        assert!((dx - f.gradient(x).column(0)).norm() < 1e-8);
    }

    #[test]
    fn scaling_multiplies_values_and_gradients() {
        let loads = LoadSpec::new(
            AffineField {
                offset: Vec2::new(1.0, 0.0),
                jacobian: Mat2::identity(),
            },
            ConstantField(Vec2::new(0.0, -1.0)),
        );
        let s = loads.scaled(2.0);
        let x = Vec2::new(1.0, 2.0);
        assert_eq!(s.f.value(x), loads.f.value(x) * 2.0);
        assert_eq!(s.f.gradient(x), Mat2::identity() * 2.0);
        assert_eq!(s.g.value(x), Vec2::new(0.0, -2.0));
        assert!(LoadSpec::zero().g.is_zero());
    }
}
