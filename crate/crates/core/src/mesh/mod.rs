//! Conforming triangular meshes with labeled boundaries.
//!
//! A [`Mesh`] owns vertex coordinates and shares its connectivity (the
//! [`Topology`]) with every mesh obtained from it by [`Mesh::deform`]. The
//! topology carries the global edge table used by the H(div) degrees of
//! freedom: every edge has a fixed orientation, and for boundary edges that
//! orientation follows the counterclockwise traversal of the adjacent
//! triangle, so the right-hand normal of a boundary edge is the outward normal.

mod generate;
mod io;
mod vtk;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use generate::{build_bulky_cantilever, build_holed_cantilever, GeometryConfig, Hole, SIX_HOLE_RADIUS};
pub use io::{read_mesh, read_mesh_file, write_mesh, write_mesh_file};
pub use vtk::{write_vtk, write_vtk_file, VtkField, VtkFieldData};

use crate::error::{Error, Result};
use crate::Vec2;

/// Boundary part an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryLabel {
    /// Clamped part, `u = 0`.
    Dirichlet,
    /// Loaded part, `σn = g`.
    Neumann,
    /// Traction-free part that is allowed to move during optimization.
    Free,
}

impl BoundaryLabel {
    pub fn code(self) -> char {
        match self {
            BoundaryLabel::Dirichlet => 'D',
            BoundaryLabel::Neumann => 'N',
            BoundaryLabel::Free => 'F',
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "D" => Some(BoundaryLabel::Dirichlet),
            "N" => Some(BoundaryLabel::Neumann),
            "F" => Some(BoundaryLabel::Free),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Vertex pair, ordered counterclockwise with respect to the domain.
    pub vertices: [usize; 2],
    pub label: BoundaryLabel,
    /// Index into [`Topology::edges`].
    pub edge: usize,
}

/// Connectivity shared by a mesh and all of its deformations.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Globally oriented edges.
    pub edges: Vec<[usize; 2]>,
    /// The one or two triangles adjacent to each edge.
    pub edge_triangles: Vec<[Option<usize>; 2]>,
    /// Local edge `i` of a triangle is opposite local vertex `i`.
    pub triangle_edges: Vec<[usize; 3]>,
    /// `+1` where the local counterclockwise direction agrees with the global
    /// orientation, `-1` otherwise.
    pub triangle_edge_signs: Vec<[f64; 3]>,
    /// Boundary record index for boundary edges.
    pub edge_boundary: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    topology: Arc<Topology>,
}

pub(crate) fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant: index ranges,
    /// strictly positive counterclockwise triangles, a manifold and
    /// consistently oriented edge table, and a boundary labeling that tiles
    /// the topological boundary exactly once. Boundary pairs may be given in
    /// either order.
    pub fn new(
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], BoundaryLabel)>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::Mesh(format!(
                    "triangle {t} references vertex {bad} but there are {nv} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement { element: t, area });
            }
        }

        // directed half-edges: (from, to) -> (triangle, local edge)
        let mut half: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let key = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if half.insert(key, (t, i)).is_some() {
                    return Err(Error::Mesh(format!(
                        "edge {:?} is traversed twice in the same direction (inconsistent orientation or non-manifold)",
                        key
                    )));
                }
            }
        }

        let mut edges = Vec::new();
        let mut edge_triangles = Vec::new();
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut triangle_edge_signs = vec![[0.0; 3]; triangles.len()];
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&e) = edge_index.get(&key) {
                    triangle_edges[t][i] = e;
                    let [ga, _] = edges[e];
                    triangle_edge_signs[t][i] = if ga == a { 1.0 } else { -1.0 };
                    let slot: &mut [Option<usize>; 2] = &mut edge_triangles[e];
                    slot[1] = Some(t);
                    continue;
                }
                let e = edges.len();
                let twin = half.contains_key(&(b, a));
                // interior edges run low -> high, boundary edges keep the ccw direction
                let oriented = if twin { [key.0, key.1] } else { [a, b] };
                edges.push(oriented);
                edge_triangles.push([Some(t), None]);
                edge_index.insert(key, e);
                triangle_edges[t][i] = e;
                triangle_edge_signs[t][i] = if oriented[0] == a { 1.0 } else { -1.0 };
            }
        }

        let mut edge_boundary = vec![None; edges.len()];
        let mut records = Vec::with_capacity(boundary.len());
        for (pair, label) in boundary {
            let key = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            let Some(&e) = edge_index.get(&key) else {
                return Err(Error::Mesh(format!(
                    "boundary edge {:?} is not an edge of the mesh",
                    pair
                )));
            };
            if edge_triangles[e][1].is_some() {
                return Err(Error::Mesh(format!("boundary edge {:?} is an interior edge", pair)));
            }
            if edge_boundary[e].is_some() {
                return Err(Error::Mesh(format!("boundary edge {:?} labeled twice", pair)));
            }
            edge_boundary[e] = Some(records.len());
            records.push(BoundaryEdge {
                vertices: edges[e],
                label,
                edge: e,
            });
        }
        if let Some(e) = (0..edges.len()).find(|&e| edge_triangles[e][1].is_none() && edge_boundary[e].is_none()) {
            return Err(Error::Mesh(format!("boundary edge {:?} carries no label", edges[e])));
        }

        Ok(Mesh {
            vertices,
            triangles,
            boundary: records,
            topology: Arc::new(Topology {
                edges,
                edge_triangles,
                triangle_edges,
                triangle_edge_signs,
                edge_boundary,
            }),
        })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.topology.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn edge_points(&self, e: usize) -> [Vec2; 2] {
        let [a, b] = self.topology.edges[e];
        [self.vertices[a], self.vertices[b]]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_points(e);
        (b - a).norm()
    }

    /// Unit right-hand normal of the globally oriented edge; outward on the boundary.
    pub fn edge_normal(&self, e: usize) -> Vec2 {
        let [a, b] = self.edge_points(e);
        let d = b - a;
        Vec2::new(d.y, -d.x) / d.norm()
    }

    pub fn boundary_edges_with(&self, label: BoundaryLabel) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(move |b| b.label == label)
    }

    pub fn has_label(&self, label: BoundaryLabel) -> bool {
        self.boundary.iter().any(|b| b.label == label)
    }

    /// Flags vertices touching an edge whose label is in `labels`.
    pub fn vertices_on(&self, labels: &[BoundaryLabel]) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for b in self.boundary.iter().filter(|b| labels.contains(&b.label)) {
            on[b.vertices[0]] = true;
            on[b.vertices[1]] = true;
        }
        on
    }

    pub fn volume(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary.iter().map(|b| self.edge_length(b.edge)).sum()
    }

    /// Largest edge length.
    pub fn max_edge_length(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Moves every vertex by `step * field[v]`. Connectivity, labels and edge
    /// orientation are shared with `self`; validity is not checked here.
    pub fn deform(&self, field: &[Vec2], step: f64) -> Mesh {
        assert_eq!(field.len(), self.vertices.len(), "field must be nodal");
        Mesh {
            vertices: self.vertices.iter().zip(field).map(|(x, d)| x + d * step).collect(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            topology: Arc::clone(&self.topology),
        }
    }

    /// Minimum over triangles of the determinant of the affine map from the
    /// reference triangle (twice the signed area). Non-positive values flag
    /// inverted or collapsed elements.
    pub fn min_jacobian(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| 2.0 * self.signed_area(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum elementwise area ratio `deformed / self`, i.e. the smallest
    /// Jacobian determinant of the piecewise-affine map between the two
    /// meshes. Both meshes must share connectivity.
    pub fn min_area_ratio(&self, deformed: &Mesh) -> f64 {
        assert_eq!(self.triangles.len(), deformed.triangles.len());
        (0..self.triangles.len())
            .map(|t| deformed.signed_area(t) / self.signed_area(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn shares_topology(&self, other: &Mesh) -> bool {
        Arc::ptr_eq(&self.topology, &other.topology)
    }

    /// Red refinement: every triangle is split into four through its edge
    /// midpoints, boundary edges into two halves with the parent label. The
    /// polygonal domain is unchanged.
    pub fn refine_uniform(&self) -> Mesh {
        let nv = self.vertices.len();
        let topo = &*self.topology;
        let mut vertices = self.vertices.clone();
        for &[a, b] in &topo.edges {
            vertices.push((self.vertices[a] + self.vertices[b]) * 0.5);
        }
        let mid = |e: usize| nv + e;
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[v0, v1, v2]) in self.triangles.iter().enumerate() {
            let [e0, e1, e2] = topo.triangle_edges[t];
            let (m0, m1, m2) = (mid(e0), mid(e1), mid(e2));
            triangles.push([v0, m2, m1]);
            triangles.push([m2, v1, m0]);
            triangles.push([m1, m0, v2]);
            triangles.push([m0, m1, m2]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for b in &self.boundary {
            let m = mid(b.edge);
            boundary.push(([b.vertices[0], m], b.label));
            boundary.push(([m, b.vertices[1]], b.label));
        }
        Mesh::new(vertices, triangles, boundary).expect("refinement of a valid mesh is valid")
    }

    /// Per-triangle centroid.
    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn unit_square() -> Mesh {
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let b = vec![
            ([0, 1], BoundaryLabel::Free),
            ([1, 2], BoundaryLabel::Neumann),
            ([2, 3], BoundaryLabel::Free),
            ([3, 0], BoundaryLabel::Dirichlet),
        ];
        Mesh::new(v, t, b).unwrap()
    }

    #[test]
    fn unit_square_volume_and_normals() {
        let m = unit_square();
        assert_relative_eq!(m.volume(), 1.0, epsilon = 1e-15);
        assert_eq!(m.num_edges(), 5);
        for b in m.boundary() {
            let [p, q] = m.edge_points(b.edge);
            let mid = (p + q) * 0.5;
            let out = m.edge_normal(b.edge);
            // outward: moving along the normal leaves the unit square
            let probe = mid + out * 0.1;
            assert!(probe.x < 0.0 || probe.x > 1.0 || probe.y < 0.0 || probe.y > 1.0);
        }
    }

    #[test]
    fn interior_edge_signs_are_opposite() {
        let m = unit_square();
        let topo = m.topology();
        let interior = (0..m.num_edges())
            .find(|&e| topo.edge_triangles[e][1].is_some())
            .unwrap();
        let mut signs = Vec::new();
        for t in 0..2 {
            for i in 0..3 {
                if topo.triangle_edges[t][i] == interior {
                    signs.push(topo.triangle_edge_signs[t][i]);
                }
            }
        }
        assert_eq!(signs.len(), 2);
        assert_eq!(signs[0], -signs[1]);
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let err = Mesh::new(
            v,
            vec![[0, 2, 1]],
            vec![
                ([0, 1], BoundaryLabel::Dirichlet),
                ([1, 2], BoundaryLabel::Free),
                ([2, 0], BoundaryLabel::Free),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateElement { .. }));
    }

    #[test]
    fn rejects_unlabeled_boundary() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let err = Mesh::new(
            v,
            vec![[0, 1, 2]],
            vec![([0, 1], BoundaryLabel::Dirichlet), ([1, 2], BoundaryLabel::Free)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("no label"));
    }

    #[test]
    fn deform_semantics() {
        let m = unit_square();
        let zero = vec![Vec2::zeros(); 4];
        let same = m.deform(&zero, 1.0);
        assert_eq!(same.vertices(), m.vertices());

        let shift = vec![Vec2::new(1.0, 0.0); 4];
        let moved = m.deform(&shift, 1.0);
        assert!(moved.shares_topology(&m));
        for (a, b) in moved.vertices().iter().zip(m.vertices()) {
            assert_eq!(a.x, b.x + 1.0);
        }
        assert_relative_eq!(moved.volume(), m.volume(), epsilon = 1e-12);
        assert_eq!(moved.boundary(), m.boundary());

        // position field: (1 + t)^2 area scaling
        let pos: Vec<Vec2> = m.vertices().to_vec();
        let scaled = m.deform(&pos, 0.1);
        assert_relative_eq!(scaled.volume(), 1.21 * m.volume(), epsilon = 1e-12);
    }

    #[test]
    fn min_jacobian_detects_inversion_and_decreases_monotonically() {
        let m = unit_square();
        assert!(m.min_jacobian() > 0.0);
        // drag vertex 1 of triangle [0,1,2] towards and across the diagonal 0-2
        let mut field = vec![Vec2::zeros(); 4];
        field[1] = Vec2::new(-1.0, 1.0);
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let t = 0.1 * k as f64;
            let j = m.deform(&field, t).min_jacobian();
            assert!(j <= last);
            last = j;
        }
        // at t = 0.5 vertex 1 sits on the diagonal, beyond it the triangle inverts
        assert!(m.deform(&field, 0.5).min_jacobian().abs() < 1e-14);
        assert!(m.deform(&field, 0.75).min_jacobian() < 0.0);
        // hand value: det of [0,0],[1-t,t],[1,1] is 1 - 2t for t = 0.25
        assert_relative_eq!(m.deform(&field, 0.25).min_jacobian(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn uniform_refinement_preserves_domain() {
        let m = unit_square();
        let r = m.refine_uniform();
        assert_eq!(r.num_triangles(), 8);
        assert_relative_eq!(r.volume(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.boundary_length(), 4.0, epsilon = 1e-14);
        assert_eq!(r.boundary_edges_with(BoundaryLabel::Dirichlet).count(), 2);
    }
}
