//! Lowest-order Brezzi–Douglas–Marini element (BDM1).
//!
//! The six degrees of freedom of a triangle are the edge moments
//! `∫_e φ·n q ds` for `q ∈ {1, s − 1/2}`, where `s ∈ [0, 1]` runs along the
//! edge and `n` is its right-hand unit normal. On the reference element the
//! edges run counterclockwise; physical basis functions are obtained with the
//! contravariant Piola map and then re-signed so that every moment refers to
//! the global edge orientation. Flipping an edge flips both `n` and
//! `s − 1/2`, so only the first moment changes sign.

use std::sync::OnceLock;

use nalgebra::{Matrix6, Vector6};

use super::element::ElementMap;
use super::quadrature::edge_rule;
use crate::Vec2;

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Endpoints of local edge `i`, running from vertex `i + 1` to vertex `i + 2`.
pub fn local_edge(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

fn monomials(x: [f64; 2]) -> [Vec2; 6] {
    [
        Vec2::new(1.0, 0.0),
        Vec2::new(x[0], 0.0),
        Vec2::new(x[1], 0.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(0.0, x[0]),
        Vec2::new(0.0, x[1]),
    ]
}

const MONOMIAL_DIV: [f64; 6] = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

/// Edge-moment weight `q_k(s)`.
pub fn moment_weight(k: usize, s: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        s - 0.5
    }
}

struct ReferenceBasis {
    /// Column `j` holds the monomial coefficients of basis function `j`.
    coeffs: Matrix6<f64>,
    div: [f64; 6],
}

fn reference() -> &'static ReferenceBasis {
    static BASIS: OnceLock<ReferenceBasis> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut moments = Matrix6::<f64>::zeros();
        for i in 0..3 {
            let (a, b) = local_edge(i);
            let pa = Vec2::from(REF_VERTICES[a]);
            let pb = Vec2::from(REF_VERTICES[b]);
            let d = pb - pa;
            let len = d.norm();
            let n = Vec2::new(d.y, -d.x) / len;
            for (s, w) in edge_rule() {
                let p = pa + d * s;
                let mono = monomials([p.x, p.y]);
                for k in 0..2 {
                    for (m, v) in mono.iter().enumerate() {
                        moments[(2 * i + k, m)] += w * len * v.dot(&n) * moment_weight(k, s);
                    }
                }
            }
        }
        let coeffs = moments.try_inverse().expect("BDM1 moment matrix is unisolvent");
        let mut div = [0.0; 6];
        for (j, d) in div.iter_mut().enumerate() {
            *d = (0..6).map(|m| coeffs[(m, j)] * MONOMIAL_DIV[m]).sum();
        }
        ReferenceBasis { coeffs, div }
    })
}

/// Reference basis values at `x̂`, ordered `2i + k` for local edge `i` and moment `k`.
pub fn reference_values(xi: [f64; 2]) -> [Vec2; 6] {
    let r = reference();
    let mono = monomials(xi);
    let mut out = [Vec2::zeros(); 6];
    for (j, o) in out.iter_mut().enumerate() {
        let c = Vector6::from(r.coeffs.column(j));
        *o = mono
            .iter()
            .zip(c.iter())
            .fold(Vec2::zeros(), |acc, (m, ci)| acc + m * *ci);
    }
    out
}

pub fn reference_divergences() -> [f64; 6] {
    reference().div
}

/// BDM1 basis on a physical triangle, expressed in the global edge orientation.
#[derive(Debug, Clone, Copy)]
pub struct BdmElement {
    pub map: ElementMap,
    factors: [f64; 6],
}

impl BdmElement {
    /// `signs[i]` is `+1` when local edge `i` runs along its global orientation.
    pub fn new(map: ElementMap, signs: [f64; 3]) -> Self {
        let mut factors = [1.0; 6];
        for i in 0..3 {
            factors[2 * i] = signs[i];
        }
        BdmElement { map, factors }
    }

    /// Basis values at reference point `x̂`: `(1/det B) B φ̂(x̂)` with orientation factors.
    pub fn values(&self, xi: [f64; 2]) -> [Vec2; 6] {
        let mut v = reference_values(xi);
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = self.map.b * *vj * (self.factors[j] / self.map.det);
        }
        v
    }

    pub fn values_at(&self, x: Vec2) -> [Vec2; 6] {
        self.values(self.map.to_reference(x))
    }

    /// Constant divergences `div φ̂ / det B` with orientation factors.
    pub fn divergences(&self) -> [f64; 6] {
        let d = reference_divergences();
        std::array::from_fn(|j| d[j] * self.factors[j] / self.map.det)
    }

    /// Gradient of each (linear) basis function.
    pub fn gradients(&self) -> [crate::Mat2; 6] {
        let r = reference();
        std::array::from_fn(|j| {
            let c = r.coeffs.column(j);
            let g_ref = crate::Mat2::new(c[1], c[2], c[4], c[5]);
            self.map.b * g_ref * self.map.inv * (self.factors[j] / self.map.det)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Moments of `field` on the edge from `a` to `b` against `{1, s - 1/2}`.
    fn moments(a: Vec2, b: Vec2, field: impl Fn(Vec2) -> Vec2) -> [f64; 2] {
        let d = b - a;
        let len = d.norm();
        let n = Vec2::new(d.y, -d.x) / len;
        let mut m = [0.0; 2];
        for (s, w) in edge_rule() {
            let v = field(a + d * s).dot(&n);
            m[0] += w * len * v;
            m[1] += w * len * v * (s - 0.5);
        }
        m
    }

    #[test]
    fn reference_basis_is_dual_to_moments() {
        for j in 0..6 {
            for i in 0..3 {
                let (a, b) = local_edge(i);
                let m = moments(Vec2::from(REF_VERTICES[a]), Vec2::from(REF_VERTICES[b]), |p| {
                    reference_values([p.x, p.y])[j]
                });
                for k in 0..2 {
                    let expect = if 2 * i + k == j { 1.0 } else { 0.0 };
                    assert_relative_eq!(m[k], expect, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn identity_map_reproduces_reference_basis() {
        let map = ElementMap::new(REF_VERTICES.map(Vec2::from)).unwrap();
        let el = BdmElement::new(map, [1.0; 3]);
        for xi in [[0.2, 0.3], [0.6, 0.1]] {
            let v = el.values(xi);
            let r = reference_values(xi);
            for j in 0..6 {
                assert_relative_eq!(v[j], r[j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn physical_moments_follow_global_orientation() {
        let pts = [Vec2::new(0.3, -0.2), Vec2::new(1.7, 0.4), Vec2::new(0.1, 1.3)];
        let map = ElementMap::new(pts).unwrap();
        let signs = [1.0, -1.0, -1.0];
        let el = BdmElement::new(map, signs);
        for j in 0..6 {
            for i in 0..3 {
                let (a, b) = local_edge(i);
                let (a, b) = if signs[i] > 0.0 { (a, b) } else { (b, a) };
                let m = moments(pts[a], pts[b], |p| el.values_at(p)[j]);
                for k in 0..2 {
                    let expect = if 2 * i + k == j { 1.0 } else { 0.0 };
                    assert!((m[k] - expect).abs() < 1e-13, "basis {j} edge {i} moment {k}: {}", m[k]);
                }
            }
        }
    }

    #[test]
    fn divergence_is_constant_and_matches_gradient_trace() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.5), Vec2::new(0.4, 1.5)];
        let el = BdmElement::new(ElementMap::new(pts).unwrap(), [1.0, 1.0, -1.0]);
        let div = el.divergences();
        let grads = el.gradients();
        let h = 1e-6;
        for xi in [[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]] {
            let x = el.map.to_physical(xi);
            for j in 0..6 {
                let dx = (el.values_at(x + Vec2::new(h, 0.0))[j] - el.values_at(x - Vec2::new(h, 0.0))[j]) / (2.0 * h);
                let dy = (el.values_at(x + Vec2::new(0.0, h))[j] - el.values_at(x - Vec2::new(0.0, h))[j]) / (2.0 * h);
                assert_relative_eq!(dx.x + dy.y, div[j], epsilon = 1e-8);
                assert_relative_eq!(grads[j].trace(), div[j], epsilon = 1e-13);
                assert_relative_eq!(grads[j][(0, 0)], dx.x, epsilon = 1e-8);
                assert_relative_eq!(grads[j][(1, 1)], dy.y, epsilon = 1e-8);
                assert_relative_eq!(grads[j][(0, 1)], dy.x, epsilon = 1e-8);
            }
        }
    }
}
