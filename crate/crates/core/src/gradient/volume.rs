//! Shape gradient of the volume.

use super::{DensityPoint, GradientFunctional, GradientKind};
use crate::error::Result;
use crate::fem::edge_rule;
use crate::mesh::{BoundaryLabel, Mesh};
use crate::{Mat2, Vec2};

/// `θ ↦ ∫_Ω ∇·θ dx`, one centroid point per element (the integrand is constant).
pub fn assemble_dv_volumetric(mesh: &Mesh) -> Result<GradientFunctional> {
    let points = (0..mesh.num_triangles())
        .map(|t| DensityPoint {
            element: t,
            x: mesh.centroid(t),
            weight: mesh.signed_area(t),
            k_mat: Mat2::identity(),
            k_vec: Vec2::zeros(),
        })
        .collect();
    GradientFunctional::from_points(mesh, GradientKind::VolumeVolumetric, points)
}

/// `θ ↦ ∫_Γ θ·n ds` over the free boundary.
pub fn assemble_dv_surface(mesh: &Mesh) -> Result<GradientFunctional> {
    let points = free_edge_points(mesh, |_, _, n| n);
    GradientFunctional::from_points(mesh, GradientKind::VolumeSurface, points)
}

/// Gauss points on every free boundary edge, with `k_vec = density(edge, x, n)`.
pub(super) fn free_edge_points(mesh: &Mesh, density: impl Fn(usize, Vec2, Vec2) -> Vec2) -> Vec<DensityPoint> {
    let topo = mesh.topology();
    let mut points = Vec::new();
    for b in mesh.boundary_edges_with(BoundaryLabel::Free) {
        let element = topo.edge_triangles[b.edge][0].expect("boundary edge has a triangle");
        let [p, q] = mesh.edge_points(b.edge);
        let len = (q - p).norm();
        let n = mesh.edge_normal(b.edge);
        for (s, w) in edge_rule() {
            let x = p + (q - p) * s;
            points.push(DensityPoint {
                element,
                x,
                weight: w * len,
                k_mat: Mat2::zeros(),
                k_vec: density(element, x, n),
            });
        }
    }
    points
}
