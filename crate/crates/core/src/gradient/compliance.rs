//! Shape gradients of the compliance: the boundary expression and the
//! volumetric expressions of the displacement and mixed formulations.

use super::volume::free_edge_points;
use super::{n_adjoint, DensityPoint, GradientFunctional, GradientKind};
use crate::displacement::DisplacementSolution;
use crate::error::{Error, Result};
use crate::fem::element::p1_values;
use crate::fem::{edge_rule, triangle_rule, ElementMap};
use crate::loads::LoadSpec;
use crate::material::MaterialParams;
use crate::mesh::{BoundaryLabel, Mesh};
use crate::mixed::MixedSolution;
use crate::{Mat2, Vec2};

/// Triangle quadrature order used by the volumetric gradients.
pub const GRADIENT_QUADRATURE_ORDER: usize = 4;

/// `θ ↦ −∫_Γ (2μ e:e + λ tr(e)²) θ·n ds`.
pub fn assemble_dj_surface(sol: &DisplacementSolution) -> Result<GradientFunctional> {
    let density = sol.energy_density();
    let points = free_edge_points(&sol.mesh, |t, _, n| -n * density[t]);
    GradientFunctional::from_points(&sol.mesh, GradientKind::ComplianceSurface, points)
}

/// Adds the body-force terms `c ∫ (∇f θ·u + f·u ∇·θ − s f·(∇θᵀu))` of one element,
/// where `u(x)` is supplied pointwise.
#[allow(clippy::too_many_arguments)]
fn push_body_force_points(
    points: &mut Vec<DensityPoint>,
    map: &ElementMap,
    element: usize,
    loads: &LoadSpec,
    order: usize,
    scale: f64,
    with_transpose_term: bool,
    u_at: impl Fn([f64; 2]) -> Vec2,
) -> Result<()> {
    if loads.f.is_zero() {
        return Ok(());
    }
    for (xi, w) in triangle_rule(order)?.iter() {
        let x = map.to_physical(xi);
        let (f, jf, u) = (loads.f.value(x), loads.f.gradient(x), u_at(xi));
        let mut k_mat = Mat2::identity() * f.dot(&u);
        if with_transpose_term {
            k_mat -= u * f.transpose();
        }
        points.push(DensityPoint {
            element,
            x,
            weight: w * map.det * scale,
            k_mat,
            k_vec: jf.transpose() * u,
        });
    }
    Ok(())
}

/// Volumetric gradient of the displacement formulation:
/// `θ ↦ ∫ Ae:(∇u∇θ + ∇θᵀ∇uᵀ) − ∫ Ae:e ∇·θ + 2∫ (∇fθ·u + f·u ∇·θ)
///      + 2∫_ΓN (∇gθ·u + g·u (∇·θ − ∇θn·n))`.
pub fn assemble_dj_vol_disp(sol: &DisplacementSolution, order: usize) -> Result<GradientFunctional> {
    let mesh = &sol.mesh;
    triangle_rule(order)?;
    let mut points = Vec::new();
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
        let grad = sol.gradient(t);
        let e = (grad + grad.transpose()) * 0.5;
        let sigma = sol.material.apply_a(&e);
        points.push(DensityPoint {
            element: t,
            x: mesh.centroid(t),
            weight: map.area(),
            k_mat: grad.transpose() * sigma * 2.0 - Mat2::identity() * sigma.dot(&e),
            k_vec: Vec2::zeros(),
        });
        push_body_force_points(&mut points, &map, t, &sol.loads, order, 2.0, false, |xi| {
            sol.value(t, xi)
        })?;
    }
    if !sol.loads.g.is_zero() {
        let topo = mesh.topology();
        for b in mesh.boundary_edges_with(BoundaryLabel::Neumann) {
            let t = topo.edge_triangles[b.edge][0].expect("boundary edge has a triangle");
            let [p, q] = mesh.edge_points(b.edge);
            let len = (q - p).norm();
            let n = mesh.edge_normal(b.edge);
            let tangential = Mat2::identity() - n * n.transpose();
            let [a, c] = b.vertices;
            let (ua, uc) = (sol.displacement(a), sol.displacement(c));
            for (s, w) in edge_rule() {
                let x = p + (q - p) * s;
                let u = ua * (1.0 - s) + uc * s;
                let (g, jg) = (sol.loads.g.value(x), sol.loads.g.gradient(x));
                points.push(DensityPoint {
                    element: t,
                    x,
                    weight: 2.0 * w * len,
                    k_mat: tangential * g.dot(&u),
                    k_vec: jg.transpose() * u,
                });
            }
        }
    }
    GradientFunctional::from_points(mesh, GradientKind::ComplianceVolDisp, points)
}

/// Stress at reference point `x̂` from its three vertex values.
fn linear_stress(vertex: &[Mat2; 3], xi: [f64; 2]) -> Mat2 {
    let lam = p1_values(xi);
    vertex[0] * lam[0] + vertex[1] * lam[1] + vertex[2] * lam[2]
}

fn skew(w: f64) -> Mat2 {
    Mat2::new(0.0, w, -w, 0.0)
}

fn check_lengths(mesh: &Mesh, sigma: &[[Mat2; 3]], u: &[Vec2], eta: Option<&[f64]>) -> Result<()> {
    let nt = mesh.num_triangles();
    let check = |name: &str, got: usize| {
        if got == nt {
            Ok(())
        } else {
            Err(Error::FieldLength {
                name: name.to_string(),
                expected: nt,
                got,
            })
        }
    };
    check("sigma", sigma.len())?;
    check("u", u.len())?;
    if let Some(eta) = eta {
        check("eta", eta.len())?;
    }
    Ok(())
}

/// Volumetric gradient of the mixed formulation with weakly imposed symmetry,
/// evaluated for explicit stress, displacement and rotation multipliers:
/// `θ ↦ (1/2μ)∫(N(θ)σ:σ + σN(θ):σ) − λ/(μ(2λ+2μ)) ∫tr(N(θ)σ)tr(σ)
///      + (1/2μ)∫(N(θ)σ:η + σN(θ):η) + ∫(∇fθ·u + f·u ∇·θ − f·(∇θᵀu))`.
///
/// `sigma` holds the vertex values of the linear stress on each element,
/// `u` the elementwise displacement and `eta` the rotation `w` of `η = w [[0, 1], [−1, 0]]`.
pub fn assemble_dj_vol_mixed_weak_fields(
    mesh: &Mesh,
    sigma: &[[Mat2; 3]],
    u: &[Vec2],
    eta: &[f64],
    material: &MaterialParams,
    loads: &LoadSpec,
    order: usize,
) -> Result<GradientFunctional> {
    check_lengths(mesh, sigma, u, Some(eta))?;
    let rule = triangle_rule(order)?;
    let inv_2mu = 0.5 / material.mu;
    let c2 = 2.0 * material.trace_coupling();
    let mut points = Vec::with_capacity(mesh.num_triangles() * rule.len());
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
        let e = skew(eta[t]);
        for (xi, w) in rule.iter() {
            let s = linear_stress(&sigma[t], xi);
            let st = s.transpose();
            let m = (s * st + st * s) * inv_2mu - st * (c2 * s.trace()) + (e * st + st * e) * inv_2mu;
            points.push(DensityPoint {
                element: t,
                x: map.to_physical(xi),
                weight: w * map.det,
                k_mat: n_adjoint(&m),
                k_vec: Vec2::zeros(),
            });
        }
        push_body_force_points(&mut points, &map, t, loads, order, 1.0, true, |_| u[t])?;
    }
    GradientFunctional::from_points(mesh, GradientKind::ComplianceVolMixedWeak, points)
}

/// Volumetric gradient of the mixed formulation for a solved state.
///
/// The gradient is the partial shape derivative of the Lagrangian
/// `∫A⁻¹σ:σ + ∫(∇·σ + f)·u + (1/2μ)∫σ:η`, whose multipliers are twice the
/// displacement and rotation of the solved system.
pub fn assemble_dj_vol_mixed_weak(sol: &MixedSolution, order: usize) -> Result<GradientFunctional> {
    let (sigma, u, eta) = lagrangian_fields(sol);
    assemble_dj_vol_mixed_weak_fields(&sol.mesh, &sigma, &u, &eta, &sol.material, &sol.loads, order)
}

/// Elementwise symmetric part of the solved stress, as vertex values.
pub fn symmetrize(sol: &MixedSolution) -> Vec<[Mat2; 3]> {
    (0..sol.mesh.num_triangles())
        .map(|t| sol.vertex_stress(t).map(|s| (s + s.transpose()) * 0.5))
        .collect()
}

/// Volumetric gradient of the mixed formulation for a symmetric stress:
/// `θ ↦ (1/μ)∫N(θ)σ:σ − λ/(μ(2λ+2μ)) ∫tr(N(θ)σ)tr(σ) + ∫(∇fθ·u + f·u ∇·θ − f·(∇θᵀu))`.
pub fn assemble_dj_vol_mixed_strong(
    mesh: &Mesh,
    sigma_s: &[[Mat2; 3]],
    u: &[Vec2],
    material: &MaterialParams,
    loads: &LoadSpec,
    order: usize,
) -> Result<GradientFunctional> {
    check_lengths(mesh, sigma_s, u, None)?;
    let rule = triangle_rule(order)?;
    let c2 = 2.0 * material.trace_coupling();
    let mut points = Vec::with_capacity(mesh.num_triangles() * rule.len());
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
        for (xi, w) in rule.iter() {
            let s = linear_stress(&sigma_s[t], xi);
            let m = s * s / material.mu - s * (c2 * s.trace());
            points.push(DensityPoint {
                element: t,
                x: map.to_physical(xi),
                weight: w * map.det,
                k_mat: n_adjoint(&m),
                k_vec: Vec2::zeros(),
            });
        }
        push_body_force_points(&mut points, &map, t, loads, order, 1.0, true, |_| u[t])?;
    }
    GradientFunctional::from_points(mesh, GradientKind::ComplianceVolMixedStrong, points)
}

/// Shape derivative of the mixed compliance obtained by transporting the stress
/// row by row, `σ ↦ σDᵀ/I`, which keeps divergence and normal traces intact
/// for any map and so maps the discrete stress space onto itself:
/// `θ ↦ ∫ ((1/μ)σᵀσ − λ/(μ(2λ+2μ)) tr(σ)σ − (A⁻¹σ:σ) Id − (1/2μ)ησ) : ∇θ
///      + ∫ (∇fθ·u + f·u ∇·θ)`.
///
/// For affine velocity fields it agrees with the two-sided transport above.
pub fn assemble_dj_vol_mixed_transport_fields(
    mesh: &Mesh,
    sigma: &[[Mat2; 3]],
    u: &[Vec2],
    eta: &[f64],
    material: &MaterialParams,
    loads: &LoadSpec,
    order: usize,
) -> Result<GradientFunctional> {
    check_lengths(mesh, sigma, u, Some(eta))?;
    let rule = triangle_rule(order)?;
    let c2 = 2.0 * material.trace_coupling();
    let mut points = Vec::with_capacity(mesh.num_triangles() * rule.len());
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
        let e = skew(eta[t]);
        for (xi, w) in rule.iter() {
            let s = linear_stress(&sigma[t], xi);
            let density = material.apply_a_inv(&s).dot(&s);
            let k_mat = s.transpose() * s / material.mu
                - s * (c2 * s.trace())
                - Mat2::identity() * density
                - e * s * (0.5 / material.mu);
            points.push(DensityPoint {
                element: t,
                x: map.to_physical(xi),
                weight: w * map.det,
                k_mat,
                k_vec: Vec2::zeros(),
            });
        }
        push_body_force_points(&mut points, &map, t, loads, order, 1.0, false, |_| u[t])?;
    }
    GradientFunctional::from_points(mesh, GradientKind::ComplianceVolMixedTransport, points)
}

/// Row-transport volumetric gradient for a solved mixed state, with the
/// Lagrangian multipliers `2u` and `2η`.
pub fn assemble_dj_vol_mixed_transport(sol: &MixedSolution, order: usize) -> Result<GradientFunctional> {
    let (sigma, u, eta) = lagrangian_fields(sol);
    assemble_dj_vol_mixed_transport_fields(&sol.mesh, &sigma, &u, &eta, &sol.material, &sol.loads, order)
}

type MixedFields = (Vec<[Mat2; 3]>, Vec<Vec2>, Vec<f64>);

/// Stress vertex values and the multipliers `2u`, `2η` of the compliance Lagrangian.
fn lagrangian_fields(sol: &MixedSolution) -> MixedFields {
    let nt = sol.mesh.num_triangles();
    (
        (0..nt).map(|t| sol.vertex_stress(t)).collect(),
        (0..nt).map(|t| sol.displacement(t) * 2.0).collect(),
        sol.eta.iter().map(|w| 2.0 * w).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::{compliance_displacement, solve_displacement};
    use crate::gradient::{central_difference, interpolate, test_field_catalog};
    use crate::loads::{AffineField, ConstantField};
    use crate::mesh::{build_bulky_cantilever, GeometryConfig};
    use crate::mixed::{compliance_mixed, solve_mixed};
    use approx::assert_relative_eq;

    fn beam(h: f64) -> Mesh {
        build_bulky_cantilever(&GeometryConfig {
            h,
            ..Default::default()
        })
        .unwrap()
    }

    fn nodal(mesh: &Mesh, f: impl Fn(Vec2) -> Vec2) -> Vec<Vec2> {
        mesh.vertices().iter().map(|x| f(*x)).collect()
    }

    fn manufactured_loads() -> LoadSpec {
        LoadSpec::new(
            AffineField {
                offset: Vec2::new(0.05, -0.1),
                jacobian: Mat2::new(0.01, -0.02, 0.03, 0.01),
            },
            ConstantField(Vec2::new(0.0, -1.0)),
        )
    }

    fn relative(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn zero_states_give_zero_functionals() {
        let mesh = beam(1.5);
        let mat = MaterialParams::default();
        let sol = solve_displacement(&mesh, &mat, &LoadSpec::zero()).unwrap();
        let theta = nodal(&mesh, |x| Vec2::new(x.y, x.x * x.y));
        assert_eq!(assemble_dj_surface(&sol).unwrap().pair(&theta), 0.0);
        assert_eq!(assemble_dj_vol_disp(&sol, 4).unwrap().pair(&theta), 0.0);
        let nt = mesh.num_triangles();
        let zero_s = vec![[Mat2::zeros(); 3]; nt];
        let zero_u = vec![Vec2::zeros(); nt];
        let weak =
            assemble_dj_vol_mixed_weak_fields(&mesh, &zero_s, &zero_u, &vec![0.0; nt], &mat, &LoadSpec::zero(), 4)
                .unwrap();
        assert_eq!(weak.pair(&theta), 0.0);
        let strong = assemble_dj_vol_mixed_strong(&mesh, &zero_s, &zero_u, &mat, &LoadSpec::zero(), 4).unwrap();
        assert_eq!(strong.pair(&theta), 0.0);
        assert!(matches!(
            assemble_dj_vol_mixed_strong(&mesh, &zero_s[1..], &zero_u, &mat, &LoadSpec::zero(), 4),
            Err(Error::FieldLength { .. })
        ));
    }

    #[test]
    fn constant_velocity_pairs_to_zero_without_body_force() {
        let mesh = beam(1.5);
        let sol = solve_mixed(
            &mesh,
            &MaterialParams::default(),
            &LoadSpec::traction(Vec2::new(0.0, -1.0)),
        )
        .unwrap();
        let g = assemble_dj_vol_mixed_weak(&sol, 4).unwrap();
        assert!(g.pair(&nodal(&mesh, |_| Vec2::new(0.3, -0.7))).abs() < 1e-12);
    }

    #[test]
    fn strong_and_weak_agree_on_symmetric_stress() {
        let mesh = beam(1.5);
        let mat = MaterialParams::from_young_poisson(2.0, 0.25).unwrap();
        let loads = manufactured_loads();
        let nt = mesh.num_triangles();
        let sigma: Vec<[Mat2; 3]> = (0..nt)
            .map(|t| {
                let c = mesh.centroid(t);
                [0.0, 1.0, 2.0].map(|k: f64| {
                    let a = (c.x + k).sin();
                    let b = (c.y * (1.0 + k)).cos();
                    Mat2::new(a, a * b, a * b, b - 0.5)
                })
            })
            .collect();
        let u: Vec<Vec2> = (0..nt).map(|t| mesh.centroid(t) * 0.1).collect();
        let weak = assemble_dj_vol_mixed_weak_fields(&mesh, &sigma, &u, &vec![0.0; nt], &mat, &loads, 4).unwrap();
        let strong = assemble_dj_vol_mixed_strong(&mesh, &sigma, &u, &mat, &loads, 4).unwrap();
        for f in test_field_catalog(10.0, 4.5) {
            let (a, b) = (weak.pair_field(&f), strong.pair_field(&f));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} {b}");
        }
        for (a, b) in weak.coeffs.iter().zip(&strong.coeffs) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn identity_stress_under_dilation() {
        let mesh = beam(1.5);
        let mat = MaterialParams::from_young_poisson(1.0, 0.3).unwrap();
        let nt = mesh.num_triangles();
        let sigma = vec![[Mat2::identity(); 3]; nt];
        let u = vec![Vec2::zeros(); nt];
        let g = assemble_dj_vol_mixed_strong(&mesh, &sigma, &u, &mat, &LoadSpec::zero(), 4).unwrap();
        let (l, m) = (mat.lambda, mat.mu);
        let expected = mesh.volume() * (2.0 / m - 4.0 * l / (m * (2.0 * l + 2.0 * m)));
        assert_relative_eq!(g.pair(&nodal(&mesh, |x| x)), expected, max_relative = 1e-12);
    }

    #[test]
    fn surface_gradient_is_negative_for_outward_fields() {
        let mesh = beam(0.75);
        let sol = solve_displacement(
            &mesh,
            &MaterialParams::default(),
            &LoadSpec::traction(Vec2::new(0.0, -1.0)),
        )
        .unwrap();
        let g = assemble_dj_surface(&sol).unwrap();
        let outward = nodal(&mesh, |x| {
            let b = x.x * (10.0 - x.x);
            Vec2::new(0.0, b * (x.y - 2.25))
        });
        assert!(g.pair(&outward) < 0.0);
        let tangential = nodal(&mesh, |x| {
            let b = x.x * (10.0 - x.x) * x.y * (4.5 - x.y);
            Vec2::new(b, b)
        });
        assert!(g.pair(&tangential).abs() < 1e-14);
    }

    #[test]
    fn displacement_gradient_matches_finite_differences_with_loads() {
        let mesh = beam(1.0);
        let mat = MaterialParams::default();
        let loads = LoadSpec::new(
            AffineField {
                offset: Vec2::new(0.05, -0.1),
                jacobian: Mat2::new(0.01, -0.02, 0.03, 0.01),
            },
            AffineField {
                offset: Vec2::new(0.1, -1.0),
                jacobian: Mat2::new(0.0, 0.05, -0.02, 0.1),
            },
        );
        let sol = solve_displacement(&mesh, &mat, &loads).unwrap();
        let g = assemble_dj_vol_disp(&sol, 4).unwrap();
        // moves the loaded end so the traction terms take part
        let theta = nodal(&mesh, |x| Vec2::new(0.02 * x.x * x.y, 0.03 * x.x * x.x));
        let fd = central_difference(&mesh, &theta, 1e-3, |m| {
            Ok(compliance_displacement(&solve_displacement(m, &mat, &loads)?)?.work)
        })
        .unwrap();
        assert!(relative(g.pair(&theta), fd) < 1e-6, "{} {fd}", g.pair(&theta));
    }

    #[test]
    fn two_sided_mixed_gradient_is_exact_for_affine_velocities() {
        let mesh = beam(1.0);
        let mat = MaterialParams::default();
        let loads = manufactured_loads();
        let sol = solve_mixed(&mesh, &mat, &loads).unwrap();
        let g = assemble_dj_vol_mixed_weak(&sol, 4).unwrap();
        let theta = nodal(&mesh, |x| Vec2::new(0.0, 0.05 * x.x));
        let fd = central_difference(&mesh, &theta, 1e-3, |m| {
            Ok(compliance_mixed(&solve_mixed(m, &mat, &loads)?))
        })
        .unwrap();
        assert!(relative(g.pair(&theta), fd) < 1e-6, "{} {fd}", g.pair(&theta));
    }

    #[test]
    fn row_transport_gradient_matches_finite_differences() {
        let mesh = beam(1.0);
        let mat = MaterialParams::default();
        let loads = manufactured_loads();
        let sol = solve_mixed(&mesh, &mat, &loads).unwrap();
        let g = assemble_dj_vol_mixed_transport(&sol, 4).unwrap();
        for f in test_field_catalog(10.0, 4.5).iter().take(3) {
            let theta = interpolate(&mesh, f);
            let fd = central_difference(&mesh, &theta, 1e-3, |m| {
                Ok(compliance_mixed(&solve_mixed(m, &mat, &loads)?))
            })
            .unwrap();
            assert!(relative(g.pair(&theta), fd) < 1e-5, "{} {fd}", g.pair(&theta));
        }
    }
}
