//! Smooth admissible velocity fields for checking and studying gradients.

use crate::loads::VectorField;
use crate::mesh::Mesh;
use crate::{Mat2, Vec2};

/// `θ(x) = b(x) m(x) e_c` with the bubble `b = 4 s (1 − s)`, `s = x / width`,
/// which vanishes on the clamped and loaded ends `x = 0` and `x = width`,
/// and the monomial `m = (x / width)^px (y / height)^py`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleField {
    pub width: f64,
    pub height: f64,
    pub px: i32,
    pub py: i32,
    pub component: usize,
}

pub type TestField = BubbleField;

impl BubbleField {
    fn parts(&self, x: Vec2) -> (f64, Vec2) {
        let s = x.x / self.width;
        let r = x.y / self.height;
        let b = 4.0 * s * (1.0 - s);
        let db = Vec2::new(4.0 * (1.0 - 2.0 * s) / self.width, 0.0);
        let m = s.powi(self.px) * r.powi(self.py);
        let dm = Vec2::new(
            if self.px > 0 {
                self.px as f64 * s.powi(self.px - 1) * r.powi(self.py) / self.width
            } else {
                0.0
            },
            if self.py > 0 {
                self.py as f64 * s.powi(self.px) * r.powi(self.py - 1) / self.height
            } else {
                0.0
            },
        );
        (b * m, db * m + dm * b)
    }
}

impl VectorField for BubbleField {
    fn value(&self, x: Vec2) -> Vec2 {
        let mut v = Vec2::zeros();
        v[self.component] = self.parts(x).0;
        v
    }

    fn gradient(&self, x: Vec2) -> Mat2 {
        let mut g = Mat2::zeros();
        g.set_row(self.component, &self.parts(x).1.transpose());
        g
    }
}

/// The fixed catalog of ten fields: monomials `1, x, y, x², y²` in both directions.
pub fn test_field_catalog(width: f64, height: f64) -> Vec<TestField> {
    let monomials = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)];
    monomials
        .iter()
        .flat_map(|&(px, py)| {
            (0..2).map(move |component| BubbleField {
                width,
                height,
                px,
                py,
                component,
            })
        })
        .collect()
}

/// Nodal P1 interpolant.
pub fn interpolate(mesh: &Mesh, field: &dyn VectorField) -> Vec<Vec2> {
    mesh.vertices().iter().map(|x| field.value(*x)).collect()
}
