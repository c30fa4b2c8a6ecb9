//! Descent directions from the H¹ Riesz representation of a gradient.

use super::GradientFunctional;
use crate::displacement::element_maps;
use crate::error::{Error, Result};
use crate::linalg::{dot, SpdSolver, TripletBuilder};
use crate::mesh::{BoundaryLabel, Mesh};
use crate::Vec2;

#[derive(Debug, Clone)]
pub struct DescentField {
    /// Nodal velocity, zero on the clamped and loaded boundary.
    pub theta: Vec<Vec2>,
    /// `⟨dL, θ⟩ = −‖θ‖²`.
    pub pairing: f64,
    pub norm: f64,
}

/// Solves `∫∇θ:∇δθ + θ·δθ = −⟨dL, δθ⟩` for a P1 velocity with `θ = 0` on ΓD ∪ ΓN.
pub fn riesz_descent(mesh: &Mesh, dl: &GradientFunctional) -> Result<DescentField> {
    let nv = mesh.num_vertices();
    if dl.len() != 2 * nv {
        return Err(Error::MeshMismatch(dl.len(), 2 * nv));
    }
    let fixed = mesh.vertices_on(&[BoundaryLabel::Dirichlet, BoundaryLabel::Neumann]);
    let mut index = vec![usize::MAX; nv];
    let mut n_free = 0;
    for (v, f) in fixed.iter().enumerate() {
        if !f {
            index[v] = n_free;
            n_free += 1;
        }
    }
    if n_free == 0 {
        return Err(Error::EmptyVelocitySpace);
    }

    // The scalar H¹ matrix acts on both components independently.
    let mut builder = TripletBuilder::new(n_free, n_free);
    for (t, map) in element_maps(mesh)?.iter().enumerate() {
        let tri = mesh.triangles()[t];
        let grads = map.p1_gradients();
        let area = map.area();
        for a in 0..3 {
            let ia = index[tri[a]];
            if ia == usize::MAX {
                continue;
            }
            for b in 0..3 {
                let ib = index[tri[b]];
                if ib == usize::MAX {
                    continue;
                }
                let mass = if a == b { area / 6.0 } else { area / 12.0 };
                builder.add(ia, ib, area * grads[a].dot(&grads[b]) + mass);
            }
        }
    }
    let matrix = builder.build()?;
    let solver = SpdSolver::new(&matrix)?;

    let mut theta = vec![Vec2::zeros(); nv];
    for c in 0..2 {
        let mut rhs = vec![0.0; n_free];
        for v in 0..nv {
            if index[v] != usize::MAX {
                rhs[index[v]] = -dl.coeffs[2 * v + c];
            }
        }
        let x = solver.solve(&rhs);
        for v in 0..nv {
            if index[v] != usize::MAX {
                theta[v][c] = x[index[v]];
            }
        }
    }
    let pairing = dl.pair(&theta);
    let norm_sq = h1_norm_squared(mesh, &theta)?;
    Ok(DescentField {
        theta,
        pairing,
        norm: norm_sq.sqrt(),
    })
}

/// `∫ |∇θ|² + |θ|²` for a P1 field.
pub fn h1_norm_squared(mesh: &Mesh, theta: &[Vec2]) -> Result<f64> {
    let mut total = 0.0;
    for (t, map) in element_maps(mesh)?.iter().enumerate() {
        let tri = mesh.triangles()[t];
        let grads = map.p1_gradients();
        let area = map.area();
        let vals = tri.map(|v| theta[v]);
        for c in 0..2 {
            let g: Vec2 = (0..3).fold(Vec2::zeros(), |acc, a| acc + grads[a] * vals[a][c]);
            let local = [vals[0][c], vals[1][c], vals[2][c]];
            let sum: f64 = local.iter().sum();
            let mass = area / 12.0 * (dot(&local, &local) + sum * sum);
            total += area * g.norm_squared() + mass;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::solve_displacement;
    use crate::gradient::{assemble_dj_surface, assemble_dv_volumetric, GradientKind};
    use crate::loads::LoadSpec;
    use crate::material::MaterialParams;
    use crate::mesh::{build_bulky_cantilever, GeometryConfig};
    use approx::assert_relative_eq;

    fn beam() -> Mesh {
        build_bulky_cantilever(&GeometryConfig {
            h: 0.75,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_gradient_gives_zero_field() {
        let mesh = beam();
        let d = riesz_descent(&mesh, &GradientFunctional::zero(&mesh, GradientKind::PenalizedL)).unwrap();
        assert!(d.theta.iter().all(|t| *t == Vec2::zeros()));
        assert_eq!(d.pairing, 0.0);
    }

    #[test]
    fn pairing_is_minus_norm_squared_and_scales_linearly() {
        let mesh = beam();
        let sol = solve_displacement(
            &mesh,
            &MaterialParams::default(),
            &LoadSpec::traction(Vec2::new(0.0, -1.0)),
        )
        .unwrap();
        let dj = assemble_dj_surface(&sol).unwrap();
        let dv = assemble_dv_volumetric(&mesh).unwrap();
        for dl in [dj.clone(), dv, dj.scaled(3.0)] {
            let d = riesz_descent(&mesh, &dl).unwrap();
            assert!(d.pairing < 0.0);
            assert_relative_eq!(d.pairing, -d.norm * d.norm, max_relative = 1e-10);
        }
        let a = riesz_descent(&mesh, &dj).unwrap();
        let b = riesz_descent(&mesh, &dj.scaled(2.5)).unwrap();
        for (p, q) in a.theta.iter().zip(&b.theta) {
            assert_relative_eq!(*q, p * 2.5, epsilon = 1e-12 * (1.0 + p.norm()));
        }
        let fixed = mesh.vertices_on(&[BoundaryLabel::Dirichlet, BoundaryLabel::Neumann]);
        for (v, f) in fixed.iter().enumerate() {
            if *f {
                assert_eq!(a.theta[v], Vec2::zeros());
            }
        }
    }

    #[test]
    fn rejects_fully_constrained_meshes() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let b = vec![
            ([0, 1], BoundaryLabel::Dirichlet),
            ([1, 2], BoundaryLabel::Neumann),
            ([2, 0], BoundaryLabel::Free),
        ];
        let mesh = Mesh::new(v, vec![[0, 1, 2]], b).unwrap();
        let dl = GradientFunctional::zero(&mesh, GradientKind::PenalizedL);
        assert!(matches!(riesz_descent(&mesh, &dl), Err(Error::EmptyVelocitySpace)));
    }
}
