//! Dual mixed elasticity with weakly imposed stress symmetry.
//!
//! Unknowns are the stress `σ` (each row in BDM1), the displacement `u`
//! (piecewise constant vector) and the rotation multiplier `η = w [[0, 1], [−1, 0]]`
//! (piecewise constant `w`). The saddle-point system is
//!
//! ```text
//! ∫ A⁻¹σ : δσ + ∫ (∇·δσ)·u + 1/(2μ) ∫ δσ : η = 0
//! ∫ (∇·σ)·δu + 1/(2μ) ∫ σ : δη             = −∫ f·δu
//! ```
//!
//! with `σn = g` on ΓN and `σn = 0` on the free boundary imposed on the edge
//! moments. Global numbering: stress first (see [`DofMap`]), then `u` at
//! `4E + 2t + c`, then `w` at `4E + 2T + t`.

use crate::error::{Error, Result};
use crate::fem::bdm::{moment_weight, BdmElement};
use crate::fem::element::ElementMap;
use crate::fem::quadrature::{edge_rule, triangle_rule};
use crate::fem::DofMap;
use crate::linalg::{condition_estimate, relative_residual, KktSolver, LuSolver, SparseMatrix, TripletBuilder};
use crate::loads::{LoadSpec, VectorField};
use crate::material::MaterialParams;
use crate::mesh::{BoundaryLabel, Mesh};
use crate::{Mat2, Vec2};

/// Layout of the mixed unknown vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixedLayout {
    pub dofs: DofMap,
}

impl MixedLayout {
    pub fn new(mesh: &Mesh) -> Self {
        MixedLayout {
            dofs: DofMap::new(mesh),
        }
    }

    pub fn u(&self, t: usize, c: usize) -> usize {
        self.dofs.n_stress() + self.dofs.p0_vector(t, c)
    }

    pub fn eta(&self, t: usize) -> usize {
        self.dofs.n_stress() + self.dofs.n_p0_vector() + t
    }

    pub fn size(&self) -> usize {
        self.dofs.n_stress() + 3 * self.dofs.n_triangles
    }
}

/// Reduced saddle-point system after eliminating prescribed unknowns.
#[derive(Debug, Clone)]
pub struct MixedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub free: Vec<Option<usize>>,
    pub prescribed: Vec<f64>,
    pub layout: MixedLayout,
}

impl MixedSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(&self.prescribed)
            .map(|(f, p)| f.map_or(*p, |i| reduced[i]))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MixedSolution {
    pub mesh: Mesh,
    /// BDM1 coefficients of both stress rows.
    pub sigma: Vec<f64>,
    /// Piecewise-constant displacement, `2t + c`.
    pub u: Vec<f64>,
    /// Piecewise-constant rotation multiplier `w`.
    pub eta: Vec<f64>,
    pub material: MaterialParams,
    pub loads: LoadSpec,
    pub residual: f64,
    /// One-norm condition estimate, computed when debug logging is enabled.
    pub condition: Option<f64>,
}

/// Edge moments `∫_e g_r q_k ds` for every traction-carrying stress DOF:
/// `traction(x, n)` on ΓN edges and zero on free edges.
pub fn impose_traction_dofs(mesh: &Mesh, traction: &dyn Fn(Vec2, Vec2) -> Vec2) -> Vec<(usize, f64)> {
    let dofs = DofMap::new(mesh);
    let mut fixed = Vec::new();
    for b in mesh.boundary() {
        let moments = match b.label {
            BoundaryLabel::Dirichlet => continue,
            BoundaryLabel::Free => [[0.0; 2]; 2],
            BoundaryLabel::Neumann => {
                let [p, q] = mesh.edge_points(b.edge);
                let len = (q - p).norm();
                let n = mesh.edge_normal(b.edge);
                let mut m = [[0.0; 2]; 2];
                for (s, w) in edge_rule() {
                    let g = traction(p + (q - p) * s, n);
                    for (r, mr) in m.iter_mut().enumerate() {
                        for (k, mk) in mr.iter_mut().enumerate() {
                            *mk += w * len * g[r] * moment_weight(k, s);
                        }
                    }
                }
                m
            }
        };
        for (r, mr) in moments.iter().enumerate() {
            for (k, mk) in mr.iter().enumerate() {
                fixed.push((dofs.stress(r, b.edge, k), *mk));
            }
        }
    }
    fixed
}

pub(crate) fn bdm_element(mesh: &Mesh, t: usize) -> Result<BdmElement> {
    let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
    Ok(BdmElement::new(map, mesh.topology().triangle_edge_signs[t]))
}

/// Element blocks: compliance form (12×12), divergence rows (2×12) and skew row (12).
struct ElementBlocks {
    a: [[f64; 12]; 12],
    div: [[f64; 12]; 2],
    skew: [f64; 12],
}

fn element_blocks(el: &BdmElement, material: &MaterialParams) -> Result<ElementBlocks> {
    let rule = triangle_rule(2)?;
    let inv2mu = 1.0 / (2.0 * material.mu);
    let c = material.trace_coupling();
    let mut a = [[0.0; 12]; 12];
    let mut skew = [0.0; 12];
    for (xi, w) in rule.iter() {
        let wt = w * el.map.det;
        let phi = el.values(xi);
        for r in 0..2 {
            for i in 0..6 {
                let li = 6 * r + i;
                skew[li] += wt * inv2mu * if r == 0 { phi[i][1] } else { -phi[i][0] };
                for s in 0..2 {
                    for j in 0..6 {
                        let mut v = -c * phi[i][r] * phi[j][s];
                        if r == s {
                            v += inv2mu * phi[i].dot(&phi[j]);
                        }
                        a[li][6 * s + j] += wt * v;
                    }
                }
            }
        }
    }
    let divs = el.divergences();
    let mut div = [[0.0; 12]; 2];
    for r in 0..2 {
        for i in 0..6 {
            div[r][6 * r + i] = divs[i] * el.map.area();
        }
    }
    Ok(ElementBlocks { a, div, skew })
}

fn assemble_with(
    mesh: &Mesh,
    material: &MaterialParams,
    f: &dyn VectorField,
    traction: &dyn Fn(Vec2, Vec2) -> Vec2,
) -> Result<MixedSystem> {
    let layout = MixedLayout::new(mesh);
    let dofs = layout.dofs;
    let n = layout.size();
    let mut prescribed = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for (d, v) in impose_traction_dofs(mesh, traction) {
        prescribed[d] = v;
        is_fixed[d] = true;
    }
    if !mesh.has_label(BoundaryLabel::Dirichlet) {
        // pure traction: remove the rigid-motion kernel by pinning one element
        is_fixed[layout.u(0, 0)] = true;
        is_fixed[layout.u(0, 1)] = true;
        is_fixed[layout.eta(0)] = true;
    }
    let mut free = vec![None; n];
    let mut n_free = 0;
    for (d, fx) in is_fixed.iter().enumerate() {
        if !fx {
            free[d] = Some(n_free);
            n_free += 1;
        }
    }

    let mut full_rhs = vec![0.0; n];
    if !f.is_zero() {
        let rule = triangle_rule(2)?;
        for t in 0..mesh.num_triangles() {
            let map = ElementMap::for_element(mesh.triangle_points(t), t)?;
            for (xi, w) in rule.iter() {
                let fv = f.value(map.to_physical(xi));
                for c in 0..2 {
                    full_rhs[layout.u(t, c)] -= w * map.det * fv[c];
                }
            }
        }
    }
    let mut rhs = vec![0.0; n_free];
    for (d, fr) in free.iter().enumerate() {
        if let Some(i) = fr {
            rhs[*i] = full_rhs[d];
        }
    }

    let mut builder = TripletBuilder::new(n_free, n_free);
    let mut add = |i: usize, j: usize, v: f64, rhs: &mut Vec<f64>| match (free[i], free[j]) {
        (Some(ri), Some(rj)) => builder.add(ri, rj, v),
        (Some(ri), None) => rhs[ri] -= v * prescribed[j],
        _ => {}
    };
    for t in 0..mesh.num_triangles() {
        let el = bdm_element(mesh, t)?;
        let blocks = element_blocks(&el, material)?;
        let local = dofs.local_stress(mesh, t);
        for i in 0..12 {
            for j in 0..12 {
                add(local[i], local[j], blocks.a[i][j], &mut rhs);
            }
            for c in 0..2 {
                let ud = layout.u(t, c);
                add(ud, local[i], blocks.div[c][i], &mut rhs);
                add(local[i], ud, blocks.div[c][i], &mut rhs);
            }
            let ed = layout.eta(t);
            add(ed, local[i], blocks.skew[i], &mut rhs);
            add(local[i], ed, blocks.skew[i], &mut rhs);
        }
    }
    Ok(MixedSystem {
        matrix: builder.build()?,
        rhs,
        free,
        prescribed,
        layout,
    })
}

/// Assembles the saddle-point system with the traction `g` of `loads` on ΓN.
pub fn assemble_mixed(mesh: &Mesh, material: &MaterialParams, loads: &LoadSpec) -> Result<MixedSystem> {
    let g = loads.g.clone();
    assemble_with(mesh, material, loads.f.as_ref(), &move |x, _| g.value(x))
}

pub fn solve_mixed(mesh: &Mesh, material: &MaterialParams, loads: &LoadSpec) -> Result<MixedSolution> {
    let system = assemble_mixed(mesh, material, loads)?;
    solve_system(mesh, material, loads, system)
}

/// Solves with a traction that may depend on the outward normal; the
/// traction of `loads` is ignored and only its body force is used.
pub fn solve_mixed_with_traction(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    traction: &dyn Fn(Vec2, Vec2) -> Vec2,
) -> Result<MixedSolution> {
    let system = assemble_with(mesh, material, loads.f.as_ref(), traction)?;
    solve_system(mesh, material, loads, system)
}

fn solve_system(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    system: MixedSystem,
) -> Result<MixedSolution> {
    let ns = system.layout.dofs.n_stress();
    let mut positive = vec![false; system.size()];
    for (full, reduced) in system.free.iter().enumerate() {
        if let Some(i) = reduced {
            positive[*i] = full < ns;
        }
    }
    let x = KktSolver::new(&system.matrix, &positive)?.solve(&system.rhs);
    let residual = relative_residual(&system.matrix, &x, &system.rhs);
    let condition = log::log_enabled!(log::Level::Debug)
        .then(|| LuSolver::new(&system.matrix))
        .transpose()?
        .map(|lu| {
            let c = condition_estimate(&system.matrix, &lu);
            log::debug!("mixed system: {} unknowns, condition estimate {c:.3e}", system.size());
            c
        });
    if !(residual <= 1e-9) {
        return Err(Error::Solver(format!(
            "mixed solve residual {residual:e} exceeds 1e-9 ({} unknowns); the saddle point may be singular",
            system.size()
        )));
    }
    let full = system.expand(&x);
    let layout = system.layout;
    let nt = layout.dofs.n_triangles;
    Ok(MixedSolution {
        mesh: mesh.clone(),
        sigma: full[..ns].to_vec(),
        u: full[ns..ns + 2 * nt].to_vec(),
        eta: full[ns + 2 * nt..].to_vec(),
        material: *material,
        loads: loads.clone(),
        residual,
        condition,
    })
}

impl MixedSolution {
    fn layout(&self) -> DofMap {
        DofMap::new(&self.mesh)
    }

    /// Local stress coefficients of triangle `t` in the order `6r + 2i + k`.
    pub fn local_sigma(&self, t: usize) -> [f64; 12] {
        self.layout().local_stress(&self.mesh, t).map(|d| self.sigma[d])
    }

    /// Stress at reference point `x̂` of triangle `t`; row `r` is the BDM1 field of row `r`.
    pub fn stress(&self, t: usize, xi: [f64; 2]) -> Mat2 {
        let el = bdm_element(&self.mesh, t).expect("solved mesh is valid");
        stress_from(&el, &self.local_sigma(t), xi)
    }

    /// Stress values at the three vertices of `t`; the stress is linear on each element.
    pub fn vertex_stress(&self, t: usize) -> [Mat2; 3] {
        let el = bdm_element(&self.mesh, t).expect("solved mesh is valid");
        let c = self.local_sigma(t);
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]].map(|xi| stress_from(&el, &c, xi))
    }

    /// Constant row-wise divergence of the stress on `t`.
    pub fn divergence(&self, t: usize) -> Vec2 {
        let el = bdm_element(&self.mesh, t).expect("solved mesh is valid");
        let d = el.divergences();
        let c = self.local_sigma(t);
        Vec2::new((0..6).map(|i| c[i] * d[i]).sum(), (0..6).map(|i| c[6 + i] * d[i]).sum())
    }

    pub fn displacement(&self, t: usize) -> Vec2 {
        Vec2::new(self.u[2 * t], self.u[2 * t + 1])
    }

    /// Skew multiplier `η = w [[0, 1], [−1, 0]]` on `t`.
    pub fn rotation(&self, t: usize) -> Mat2 {
        let w = self.eta[t];
        Mat2::new(0.0, w, -w, 0.0)
    }

    /// Per-element mean of `A⁻¹σ : σ`.
    pub fn energy_density(&self) -> Vec<f64> {
        let rule = triangle_rule(2).expect("order 2 is supported");
        (0..self.mesh.num_triangles())
            .map(|t| {
                let s: f64 = rule
                    .iter()
                    .map(|(xi, w)| {
                        let sig = self.stress(t, xi);
                        w * self.material.apply_a_inv(&sig).dot(&sig)
                    })
                    .sum();
                2.0 * s
            })
            .collect()
    }

    /// Largest per-element `|∫_T (∇·σ + f)·e_c|`.
    pub fn momentum_residual(&self) -> f64 {
        let rule = triangle_rule(2).expect("order 2 is supported");
        (0..self.mesh.num_triangles())
            .map(|t| {
                let map = ElementMap::new(self.mesh.triangle_points(t)).expect("valid mesh");
                let f_int = rule.iter().fold(Vec2::zeros(), |acc, (xi, w)| {
                    acc + self.loads.f.value(map.to_physical(xi)) * (w * map.det)
                });
                let r = self.divergence(t) * map.area() + f_int;
                r.amax()
            })
            .fold(0.0, f64::max)
    }

    /// Largest per-element `|∫_T (σ₁₂ − σ₂₁)|`.
    pub fn weak_symmetry_residual(&self) -> f64 {
        let rule = triangle_rule(2).expect("order 2 is supported");
        (0..self.mesh.num_triangles())
            .map(|t| {
                let det = 2.0 * self.mesh.signed_area(t);
                rule.iter()
                    .map(|(xi, w)| {
                        let s = self.stress(t, xi);
                        w * det * (s[(0, 1)] - s[(1, 0)])
                    })
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

fn stress_from(el: &BdmElement, c: &[f64; 12], xi: [f64; 2]) -> Mat2 {
    let phi = el.values(xi);
    let mut s = Mat2::zeros();
    for r in 0..2 {
        let row = (0..6).fold(Vec2::zeros(), |acc, i| acc + phi[i] * c[6 * r + i]);
        s.set_row(r, &row.transpose());
    }
    s
}

/// `J = ∫ A⁻¹σ : σ`, exact for BDM1 with the order-2 rule.
pub fn compliance_mixed(sol: &MixedSolution) -> f64 {
    sol.energy_density()
        .iter()
        .enumerate()
        .map(|(t, d)| d * sol.mesh.signed_area(t))
        .sum()
}

/// `‖σ₁₂ − σ₂₁‖_{L²(Ω)}`.
pub fn symmetry_defect(sol: &MixedSolution) -> f64 {
    let rule = triangle_rule(2).expect("order 2 is supported");
    (0..sol.mesh.num_triangles())
        .map(|t| {
            let det = 2.0 * sol.mesh.signed_area(t);
            rule.iter()
                .map(|(xi, w)| {
                    let s = sol.stress(t, xi);
                    w * det * (s[(0, 1)] - s[(1, 0)]).powi(2)
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// BDM1 coefficients of the interpolant of a stress field (edge moments of `σ n`).
pub fn interpolate_stress(mesh: &Mesh, sigma: impl Fn(Vec2) -> Mat2) -> Vec<f64> {
    let dofs = DofMap::new(mesh);
    let mut out = vec![0.0; dofs.n_stress()];
    for e in 0..mesh.num_edges() {
        let [p, q] = mesh.edge_points(e);
        let len = (q - p).norm();
        let n = mesh.edge_normal(e);
        for (s, w) in edge_rule() {
            let tn = sigma(p + (q - p) * s) * n;
            for r in 0..2 {
                for k in 0..2 {
                    out[dofs.stress(r, e, k)] += w * len * tn[r] * moment_weight(k, s);
                }
            }
        }
    }
    out
}
