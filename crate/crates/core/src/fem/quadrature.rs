//! Quadrature on the reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}` and
//! on the unit interval.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    /// Reference coordinates `(ξ, η)`.
    pub points: Vec<[f64; 2]>,
    /// Weights summing to the reference area `1/2`.
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Symmetric rule exact for polynomials of total degree `order` (1 to 4).
pub fn triangle_rule(order: usize) -> Result<TriangleRule> {
    match order {
        1 => Ok(TriangleRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
        }),
        2 => Ok(TriangleRule {
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 6.0; 3],
        }),
        3 | 4 => {
            // Dunavant degree-4 rule
            let a = 0.445_948_490_915_965;
            let wa = 0.223_381_589_678_011_5 * 0.5;
            let b = 0.091_576_213_509_770_74;
            let wb = 0.109_951_743_655_321_9 * 0.5;
            Ok(TriangleRule {
                points: vec![
                    [a, a],
                    [1.0 - 2.0 * a, a],
                    [a, 1.0 - 2.0 * a],
                    [b, b],
                    [1.0 - 2.0 * b, b],
                    [b, 1.0 - 2.0 * b],
                ],
                weights: vec![wa, wa, wa, wb, wb, wb],
            })
        }
        _ => Err(Error::QuadratureOrder(order)),
    }
}

/// Three-point Gauss–Legendre rule on `[0, 1]` as `(s, weight)`; exact to degree 5.
pub fn edge_rule() -> [(f64, f64); 3] {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
