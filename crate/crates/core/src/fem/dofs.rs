//! Global degree-of-freedom numbering shared by the solvers.

use crate::mesh::Mesh;

/// Numbering of the discrete fields on one mesh.
///
/// * P1 vector: `2v + c` for vertex `v`, component `c`.
/// * BDM1 stress: `r · 2E + 2e + k` for row `r`, edge `e`, moment `k`.
/// * P0 vector: `2t + c`; P0 scalar: `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_triangles: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        DofMap {
            n_vertices: mesh.num_vertices(),
            n_edges: mesh.num_edges(),
            n_triangles: mesh.num_triangles(),
        }
    }

    pub fn p1(&self, vertex: usize, comp: usize) -> usize {
        2 * vertex + comp
    }

    pub fn n_p1(&self) -> usize {
        2 * self.n_vertices
    }

    pub fn stress(&self, row: usize, edge: usize, moment: usize) -> usize {
        row * 2 * self.n_edges + 2 * edge + moment
    }

    pub fn n_stress(&self) -> usize {
        4 * self.n_edges
    }

    pub fn p0_vector(&self, tri: usize, comp: usize) -> usize {
        2 * tri + comp
    }

    pub fn n_p0_vector(&self) -> usize {
        2 * self.n_triangles
    }

    /// Local stress DOFs of a triangle in the order `6r + 2i + k`.
    pub fn local_stress(&self, mesh: &Mesh, tri: usize) -> [usize; 12] {
        let edges = mesh.topology().triangle_edges[tri];
        std::array::from_fn(|l| {
            let (r, rest) = (l / 6, l % 6);
            self.stress(r, edges[rest / 2], rest % 2)
        })
    }

    pub fn local_p1(&self, mesh: &Mesh, tri: usize) -> [usize; 6] {
        let t = mesh.triangles()[tri];
        std::array::from_fn(|l| self.p1(t[l / 2], l % 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_bulky_cantilever, GeometryConfig};
    use std::collections::HashSet;

    #[test]
    fn numberings_are_contiguous_and_collision_free() {
        let mesh = build_bulky_cantilever(&GeometryConfig {
            h: 1.0,
            ..Default::default()
        })
        .unwrap();
        let map = DofMap::new(&mesh);
        let mut seen = HashSet::new();
        for r in 0..2 {
            for e in 0..map.n_edges {
                for k in 0..2 {
                    assert!(seen.insert(map.stress(r, e, k)));
                }
            }
        }
        assert_eq!(seen.len(), map.n_stress());
        assert_eq!(*seen.iter().max().unwrap(), map.n_stress() - 1);

        let p1: HashSet<_> = (0..map.n_vertices).flat_map(|v| [map.p1(v, 0), map.p1(v, 1)]).collect();
        assert_eq!(p1.len(), map.n_p1());
        assert_eq!(*p1.iter().max().unwrap(), map.n_p1() - 1);

        // each interior edge's stress DOFs appear in exactly two triangles
        let mut count = vec![0; map.n_stress()];
        for t in 0..map.n_triangles {
            for d in map.local_stress(&mesh, t) {
                count[d] += 1;
            }
        }
        for e in 0..map.n_edges {
            let expect = if mesh.topology().edge_triangles[e][1].is_some() {
                2
            } else {
                1
            };
            assert_eq!(count[map.stress(0, e, 0)], expect);
        }
    }
}
