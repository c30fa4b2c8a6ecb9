//! Pure-displacement elasticity with continuous P1 vector elements.
//!
//! Find `u` with `u = 0` on ΓD such that
//! `∫ A e(u) : e(v) = ∫ f·v + ∫_ΓN g·v` for all admissible `v`.

use crate::error::{Error, Result};
use crate::fem::element::{p1_gradient_matrices, p1_values, ElementMap};
use crate::fem::quadrature::{edge_rule, triangle_rule};
use crate::fem::DofMap;
use crate::linalg::{relative_residual, SparseMatrix, SpdSolver, TripletBuilder};
use crate::loads::LoadSpec;
use crate::material::MaterialParams;
use crate::mesh::{BoundaryLabel, Mesh};
use crate::{Mat2, Vec2};

/// Reduced linear system after eliminating constrained degrees of freedom.
#[derive(Debug, Clone)]
pub struct DisplacementSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Reduced index of every full degree of freedom, `None` when constrained.
    pub free: Vec<Option<usize>>,
    /// Values of the constrained degrees of freedom (zero on free ones).
    pub prescribed: Vec<f64>,
}

impl DisplacementSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    /// Expands a reduced solution to all degrees of freedom.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(&self.prescribed)
            .map(|(f, p)| f.map_or(*p, |i| reduced[i]))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DisplacementSolution {
    pub mesh: Mesh,
    /// Nodal values, `2v + c`.
    pub u: Vec<f64>,
    pub material: MaterialParams,
    pub loads: LoadSpec,
    /// Relative residual of the reduced system.
    pub residual: f64,
}

/// Energy and external-work forms of the compliance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compliance {
    pub energy: f64,
    pub work: f64,
}

pub(crate) fn element_maps(mesh: &Mesh) -> Result<Vec<ElementMap>> {
    (0..mesh.num_triangles())
        .map(|t| ElementMap::for_element(mesh.triangle_points(t), t))
        .collect()
}

/// Element stiffness matrix in the local order `2a + c`.
pub fn stiffness_local(map: &ElementMap, material: &MaterialParams) -> [[f64; 6]; 6] {
    let grads = p1_gradient_matrices(map);
    let strains = grads.map(|g| (g + g.transpose()) * 0.5);
    let stresses = strains.map(|e| material.apply_a(&e));
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            k[i][j] = map.area() * stresses[i].dot(&strains[j]);
        }
    }
    k
}

/// `∫ f·φ + ∫_ΓN g·φ` for every P1 vector basis function.
pub fn load_vector(mesh: &Mesh, loads: &LoadSpec) -> Result<Vec<f64>> {
    let dofs = DofMap::new(mesh);
    let mut rhs = vec![0.0; dofs.n_p1()];
    if !loads.f.is_zero() {
        let rule = triangle_rule(2)?;
        for t in 0..mesh.num_triangles() {
            let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
            let tri = mesh.triangles()[t];
            for (xi, w) in rule.iter() {
                let f = loads.f.value(map.to_physical(xi));
                let lam = p1_values(xi);
                for a in 0..3 {
                    for c in 0..2 {
                        rhs[dofs.p1(tri[a], c)] += w * map.det * f[c] * lam[a];
                    }
                }
            }
        }
    }
    if !loads.g.is_zero() {
        for b in mesh.boundary_edges_with(BoundaryLabel::Neumann) {
            let [p, q] = mesh.edge_points(b.edge);
            let len = (q - p).norm();
            for (s, w) in edge_rule() {
                let g = loads.g.value(p + (q - p) * s);
                for (v, phi) in [(b.vertices[0], 1.0 - s), (b.vertices[1], s)] {
                    for c in 0..2 {
                        rhs[dofs.p1(v, c)] += w * len * g[c] * phi;
                    }
                }
            }
        }
    }
    Ok(rhs)
}

fn assemble_with(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    prescribed: Vec<Option<Vec2>>,
) -> Result<DisplacementSystem> {
    let dofs = DofMap::new(mesh);
    let mut free = vec![None; dofs.n_p1()];
    let mut values = vec![0.0; dofs.n_p1()];
    let mut n_free = 0;
    for (v, p) in prescribed.iter().enumerate() {
        for c in 0..2 {
            match p {
                Some(val) => values[dofs.p1(v, c)] = val[c],
                None => {
                    free[dofs.p1(v, c)] = Some(n_free);
                    n_free += 1;
                }
            }
        }
    }

    let full_rhs = load_vector(mesh, loads)?;
    let mut rhs: Vec<f64> = vec![0.0; n_free];
    for (i, f) in free.iter().enumerate() {
        if let Some(r) = f {
            rhs[*r] = full_rhs[i];
        }
    }
    let mut builder = TripletBuilder::new(n_free, n_free);
    for (t, map) in element_maps(mesh)?.iter().enumerate() {
        let k = stiffness_local(map, material);
        let local = dofs.local_p1(mesh, t);
        for i in 0..6 {
            let Some(ri) = free[local[i]] else { continue };
            for j in 0..6 {
                match free[local[j]] {
                    Some(rj) => builder.add(ri, rj, k[i][j]),
                    None => rhs[ri] -= k[i][j] * values[local[j]],
                }
            }
        }
    }
    Ok(DisplacementSystem {
        matrix: builder.build()?,
        rhs,
        free,
        prescribed: values,
    })
}

/// Assembles the system with homogeneous Dirichlet conditions on ΓD.
pub fn assemble_displacement(mesh: &Mesh, material: &MaterialParams, loads: &LoadSpec) -> Result<DisplacementSystem> {
    if !mesh.has_label(BoundaryLabel::Dirichlet) {
        return Err(Error::EmptyDirichlet);
    }
    let on_d = mesh.vertices_on(&[BoundaryLabel::Dirichlet]);
    let prescribed = on_d.iter().map(|&d| d.then(Vec2::zeros)).collect();
    assemble_with(mesh, material, loads, prescribed)
}

fn solve_system(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    system: DisplacementSystem,
) -> Result<DisplacementSolution> {
    let (reduced, residual) = if system.size() == 0 {
        (Vec::new(), 0.0)
    } else {
        let x = SpdSolver::new(&system.matrix)?.solve(&system.rhs);
        let res = relative_residual(&system.matrix, &x, &system.rhs);
        if !(res <= 1e-10) {
            return Err(Error::Solver(format!(
                "displacement solve residual {res:e} exceeds 1e-10 ({} unknowns)",
                system.size()
            )));
        }
        (x, res)
    };
    Ok(DisplacementSolution {
        mesh: mesh.clone(),
        u: system.expand(&reduced),
        material: *material,
        loads: loads.clone(),
        residual,
    })
}

/// Solves the clamped problem (`u = 0` on ΓD).
pub fn solve_displacement(mesh: &Mesh, material: &MaterialParams, loads: &LoadSpec) -> Result<DisplacementSolution> {
    let system = assemble_displacement(mesh, material, loads)?;
    solve_system(mesh, material, loads, system)
}

/// Solves with `u = data(x)` at every ΓD vertex.
pub fn solve_displacement_with_dirichlet(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    data: impl Fn(Vec2) -> Vec2,
) -> Result<DisplacementSolution> {
    if !mesh.has_label(BoundaryLabel::Dirichlet) {
        return Err(Error::EmptyDirichlet);
    }
    let on_d = mesh.vertices_on(&[BoundaryLabel::Dirichlet]);
    let prescribed = on_d
        .iter()
        .zip(mesh.vertices())
        .map(|(&d, x)| d.then(|| data(*x)))
        .collect();
    let system = assemble_with(mesh, material, loads, prescribed)?;
    solve_system(mesh, material, loads, system)
}

impl DisplacementSolution {
    pub fn displacement(&self, vertex: usize) -> Vec2 {
        Vec2::new(self.u[2 * vertex], self.u[2 * vertex + 1])
    }

    pub fn nodal_vectors(&self) -> Vec<Vec2> {
        (0..self.mesh.num_vertices()).map(|v| self.displacement(v)).collect()
    }

    pub fn local_coefficients(&self, t: usize) -> [f64; 6] {
        let tri = self.mesh.triangles()[t];
        std::array::from_fn(|l| self.u[2 * tri[l / 2] + l % 2])
    }

    /// Constant displacement gradient on triangle `t`.
    pub fn gradient(&self, t: usize) -> Mat2 {
        let map = ElementMap::new(self.mesh.triangle_points(t)).expect("solved mesh is valid");
        crate::fem::element::local_gradient(&map, &self.local_coefficients(t))
    }

    pub fn strain(&self, t: usize) -> Mat2 {
        let g = self.gradient(t);
        (g + g.transpose()) * 0.5
    }

    /// Value at reference point `x̂` of triangle `t`.
    pub fn value(&self, t: usize, xi: [f64; 2]) -> Vec2 {
        let lam = p1_values(xi);
        let tri = self.mesh.triangles()[t];
        (0..3).fold(Vec2::zeros(), |acc, a| acc + self.displacement(tri[a]) * lam[a])
    }

    /// Per-element `A e(u) : e(u)`.
    pub fn energy_density(&self) -> Vec<f64> {
        (0..self.mesh.num_triangles())
            .map(|t| self.material.energy(&self.strain(t)))
            .collect()
    }
}

/// `J = ∫ A e(u) : e(u)` together with `∫ f·u + ∫_ΓN g·u`.
pub fn compliance_displacement(sol: &DisplacementSolution) -> Result<Compliance> {
    let energy = sol
        .energy_density()
        .iter()
        .enumerate()
        .map(|(t, d)| d * sol.mesh.signed_area(t))
        .sum();
    let load = load_vector(&sol.mesh, &sol.loads)?;
    let work = load.iter().zip(&sol.u).map(|(a, b)| a * b).sum();
    Ok(Compliance { energy, work })
}
