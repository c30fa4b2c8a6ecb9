//! Shape gradients of volume and compliance as linear functionals on velocity fields.
//!
//! Every gradient is stored in two equivalent ways:
//!
//! * as a list of weighted density points `(x, w, K, k)` whose pairing with a
//!   velocity `θ` is `Σ w (K : ∇θ(x) + k · θ(x))`, which can be evaluated for
//!   any closed-form `θ` without interpolation;
//! * as the coefficient vector obtained by pairing those points with every
//!   P1 vector basis function, which is what the descent solve consumes.

mod compliance;
mod fd;
mod fields;
mod riesz;
mod study;
mod volume;

pub use compliance::{
    assemble_dj_surface, assemble_dj_vol_disp, assemble_dj_vol_mixed_strong, assemble_dj_vol_mixed_transport,
    assemble_dj_vol_mixed_transport_fields, assemble_dj_vol_mixed_weak, assemble_dj_vol_mixed_weak_fields, symmetrize,
    GRADIENT_QUADRATURE_ORDER,
};
pub use fd::central_difference;
pub use fields::{interpolate, test_field_catalog, BubbleField, TestField};
pub use riesz::{h1_norm_squared, riesz_descent, DescentField};
pub use study::{fitted_slopes, gradient_error_study, StudyConfig, StudyRow};
pub use volume::{assemble_dv_surface, assemble_dv_volumetric};

use crate::error::{Error, Result};
use crate::fem::element::{p1_values, ElementMap};
use crate::loads::VectorField;
use crate::mesh::Mesh;
use crate::{Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradientKind {
    VolumeVolumetric,
    VolumeSurface,
    ComplianceSurface,
    ComplianceVolDisp,
    ComplianceVolMixedStrong,
    ComplianceVolMixedWeak,
    ComplianceVolMixedTransport,
    PenalizedL,
}

/// One weighted sample of a gradient density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint {
    pub element: usize,
    pub x: Vec2,
    pub weight: f64,
    /// Coefficient of `∇θ`.
    pub k_mat: Mat2,
    /// Coefficient of `θ`.
    pub k_vec: Vec2,
}

#[derive(Debug, Clone)]
pub struct GradientFunctional {
    pub kind: GradientKind,
    /// One entry per P1 velocity DOF, `2v + c`.
    pub coeffs: Vec<f64>,
    pub points: Vec<DensityPoint>,
}

impl GradientFunctional {
    /// Builds the functional and its P1 coefficients from density points.
    pub fn from_points(mesh: &Mesh, kind: GradientKind, points: Vec<DensityPoint>) -> Result<Self> {
        let mut coeffs = vec![0.0; 2 * mesh.num_vertices()];
        let mut maps: Vec<Option<ElementMap>> = vec![None; mesh.num_triangles()];
        for p in &points {
            let map = match maps[p.element] {
                Some(m) => m,
                None => {
                    let m = ElementMap::for_element(mesh.triangle_points(p.element), p.element)?;
                    maps[p.element] = Some(m);
                    m
                }
            };
            let grads = map.p1_gradients();
            let lam = p1_values(map.to_reference(p.x));
            let tri = mesh.triangles()[p.element];
            for a in 0..3 {
                let kg = p.k_mat * grads[a];
                for c in 0..2 {
                    coeffs[2 * tri[a] + c] += p.weight * (kg[c] + p.k_vec[c] * lam[a]);
                }
            }
        }
        Ok(GradientFunctional { kind, coeffs, points })
    }

    pub fn zero(mesh: &Mesh, kind: GradientKind) -> Self {
        GradientFunctional {
            kind,
            coeffs: vec![0.0; 2 * mesh.num_vertices()],
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Pairing with a P1 velocity given by nodal values.
    pub fn pair(&self, theta: &[Vec2]) -> f64 {
        assert_eq!(2 * theta.len(), self.coeffs.len(), "velocity must be nodal");
        theta
            .iter()
            .enumerate()
            .map(|(v, t)| self.coeffs[2 * v] * t.x + self.coeffs[2 * v + 1] * t.y)
            .sum()
    }

    /// Pairing with a closed-form velocity, evaluated at the density points.
    pub fn pair_field(&self, theta: &dyn VectorField) -> f64 {
        self.points
            .iter()
            .map(|p| p.weight * (p.k_mat.dot(&theta.gradient(p.x)) + p.k_vec.dot(&theta.value(p.x))))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        GradientFunctional {
            kind: self.kind,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            points: self
                .points
                .iter()
                .map(|p| DensityPoint {
                    weight: p.weight * s,
                    ..*p
                })
                .collect(),
        }
    }
}

/// `dL = dJ + γ dV`.
pub fn combine_penalized(dj: &GradientFunctional, dv: &GradientFunctional, gamma: f64) -> Result<GradientFunctional> {
    if dj.len() != dv.len() {
        return Err(Error::MeshMismatch(dj.len(), dv.len()));
    }
    let scaled = dv.scaled(gamma);
    let mut points = dj.points.clone();
    points.extend(scaled.points);
    Ok(GradientFunctional {
        kind: GradientKind::PenalizedL,
        coeffs: dj.coeffs.iter().zip(&scaled.coeffs).map(|(a, b)| a + b).collect(),
        points,
    })
}

/// The matrix `Ñ(M) = M + Mᵀ − ½ tr(M) I`, so that
/// `N(θ) : M = ∇θ : Ñ(M)` with `N(θ) = ∇θ + ∇θᵀ − ½(∇·θ) I`.
pub fn n_adjoint(m: &Mat2) -> Mat2 {
    m + m.transpose() - Mat2::identity() * (0.5 * m.trace())
}

/// `N(θ)` from the velocity gradient.
pub fn n_theta(grad: &Mat2) -> Mat2 {
    grad + grad.transpose() - Mat2::identity() * (0.5 * grad.trace())
}
