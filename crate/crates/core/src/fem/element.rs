//! Affine element maps and P1 Lagrange shape functions.

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Affine map `x = B x̂ + b` from the reference triangle with vertices
/// `(0,0)`, `(1,0)`, `(0,1)` onto a physical triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMap {
    pub b: Mat2,
    pub origin: Vec2,
    pub det: f64,
    pub inv: Mat2,
}

impl ElementMap {
    pub fn new(points: [Vec2; 3]) -> Result<Self> {
        Self::for_element(points, 0)
    }

    /// As [`ElementMap::new`], tagging a degenerate-element error with `element`.
    pub fn for_element(points: [Vec2; 3], element: usize) -> Result<Self> {
        let [p0, p1, p2] = points;
        let b = Mat2::from_columns(&[p1 - p0, p2 - p0]);
        let det = b.determinant();
        if !(det > 0.0) {
            return Err(Error::DegenerateElement {
                element,
                area: 0.5 * det,
            });
        }
        let inv = Mat2::new(b[(1, 1)], -b[(0, 1)], -b[(1, 0)], b[(0, 0)]) / det;
        Ok(ElementMap {
            b,
            origin: p0,
            det,
            inv,
        })
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> Vec2 {
        self.origin + self.b * Vec2::new(xi[0], xi[1])
    }

    pub fn to_reference(&self, x: Vec2) -> [f64; 2] {
        let r = self.inv * (x - self.origin);
        [r.x, r.y]
    }

    /// Physical gradients of the three barycentric coordinates.
    pub fn p1_gradients(&self) -> [Vec2; 3] {
        let it = self.inv.transpose();
        [
            it * Vec2::new(-1.0, -1.0),
            it * Vec2::new(1.0, 0.0),
            it * Vec2::new(0.0, 1.0),
        ]
    }
}

/// Barycentric coordinates at a reference point.
pub fn p1_values(xi: [f64; 2]) -> [f64; 3] {
    [1.0 - xi[0] - xi[1], xi[0], xi[1]]
}

/// Constant displacement gradient of each local P1 vector basis function,
/// ordered `2a + c` for vertex `a` and component `c`.
pub fn p1_gradient_matrices(map: &ElementMap) -> [Mat2; 6] {
    let grads = map.p1_gradients();
    let mut out = [Mat2::zeros(); 6];
    for a in 0..3 {
        for c in 0..2 {
            // row c carries ∇λ_a
            out[2 * a + c].set_row(c, &grads[a].transpose());
        }
    }
    out
}

/// Symmetrized gradients `e(φ)` of the six local P1 vector basis functions.
pub fn p1_strain_matrices(points: [Vec2; 3]) -> Result<[Mat2; 6]> {
    let map = ElementMap::new(points)?;
    Ok(p1_gradient_matrices(&map).map(|g| (g + g.transpose()) * 0.5))
}

/// `∇u` on an element from its six local coefficients.
pub fn local_gradient(map: &ElementMap, coeffs: &[f64; 6]) -> Mat2 {
    p1_gradient_matrices(map)
        .iter()
        .zip(coeffs)
        .fold(Mat2::zeros(), |acc, (g, c)| acc + g * *c)
}
