//! On-demand consistency checks: patch tests, finite-difference agreement of
//! the compliance gradients, strong/weak equivalence, volume identities and
//! the Piola transport identities.
//!
//! The measuring functions are public so that tests can apply their own
//! thresholds; [`run_checks`] applies the default ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::displacement::{compliance_displacement, solve_displacement, solve_displacement_with_dirichlet};
use crate::error::Result;
use crate::fem::piola::{divergence_fd, piola_contravariant, transported_divergence, transported_strain};
use crate::gradient::{
    assemble_dj_vol_disp, assemble_dj_vol_mixed_strong, assemble_dj_vol_mixed_transport, assemble_dj_vol_mixed_weak,
    assemble_dj_vol_mixed_weak_fields, assemble_dv_surface, assemble_dv_volumetric, central_difference, interpolate,
    test_field_catalog, GradientFunctional,
};
use crate::loads::{ClosureField, LoadSpec, VectorField};
use crate::material::MaterialParams;
use crate::mesh::{build_holed_cantilever, BoundaryLabel, GeometryConfig, Mesh};
use crate::mixed::{compliance_mixed, solve_mixed, solve_mixed_with_traction, symmetry_defect};
use crate::{Mat2, Vec2};

/// Element size of the coarse six-hole mesh used by the gradient checks.
pub const COARSE_H: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Copy of `mesh` with every boundary edge relabeled.
pub fn relabel(mesh: &Mesh, label: BoundaryLabel) -> Result<Mesh> {
    let boundary = mesh.boundary().iter().map(|b| (b.vertices, label)).collect();
    Mesh::new(mesh.vertices().to_vec(), mesh.triangles().to_vec(), boundary)
}

/// Largest nodal error of the displacement solution for affine boundary data
/// on a fully clamped copy of `mesh`.
pub fn displacement_patch_error(mesh: &Mesh, material: &MaterialParams) -> Result<f64> {
    let clamped = relabel(mesh, BoundaryLabel::Dirichlet)?;
    let exact = |p: Vec2| Vec2::new(0.1 * p.x + 0.2 * p.y - 0.3, 0.05 * p.x - 0.1 * p.y + 0.7);
    let sol = solve_displacement_with_dirichlet(&clamped, material, &LoadSpec::zero(), exact)?;
    Ok(clamped
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, x)| (sol.displacement(v) - exact(*x)).norm())
        .fold(0.0, f64::max))
}

/// Largest stress error and the symmetry defect of the mixed solution for a
/// constant symmetric stress imposed as traction on the whole boundary.
pub fn mixed_patch_errors(mesh: &Mesh, material: &MaterialParams) -> Result<(f64, f64)> {
    let loaded = relabel(mesh, BoundaryLabel::Neumann)?;
    let target = Mat2::new(1.0, 0.3, 0.3, -0.5);
    let sol = solve_mixed_with_traction(&loaded, material, &LoadSpec::zero(), &|_, n| target * n)?;
    let err = (0..loaded.num_triangles())
        .flat_map(|t| sol.vertex_stress(t))
        .map(|s| (s - target).amax())
        .fold(0.0, f64::max);
    Ok((err, symmetry_defect(&sol)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplianceGradient {
    VolumetricDisplacement,
    VolumetricMixed,
    TransportMixed,
}

impl ComplianceGradient {
    pub fn label(self) -> &'static str {
        match self {
            ComplianceGradient::VolumetricDisplacement => "volumetric displacement",
            ComplianceGradient::VolumetricMixed => "volumetric mixed",
            ComplianceGradient::TransportMixed => "transport mixed",
        }
    }
}

/// Analytic pairing of one velocity field against central differences at
/// steps `4t`, `2t` and `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdRow {
    pub pairing: f64,
    pub steps: [f64; 3],
    pub differences: [f64; 3],
}

impl FdRow {
    /// Relative gap at the smallest step.
    pub fn relative_error(&self) -> f64 {
        (self.pairing - self.differences[2]).abs() / self.differences[2].abs()
    }

    pub fn defects(&self) -> [f64; 3] {
        self.differences.map(|d| (d - self.pairing).abs())
    }

    /// Defect reduction between the two smallest steps.
    pub fn defect_ratio(&self) -> f64 {
        let d = self.defects();
        d[1] / d[2]
    }
}

/// FD probe fields on `mesh`: the first `count` catalog fields, scaled to the
/// beam width so that the truncation error dominates solver roundoff.
pub fn fd_probe_fields(mesh: &Mesh, width: f64, height: f64, count: usize) -> Vec<Vec<Vec2>> {
    test_field_catalog(width, height)
        .iter()
        .take(count)
        .map(|f| interpolate(mesh, f).into_iter().map(|v| v * width).collect())
        .collect()
}

/// Compares a compliance gradient with central differences of the discrete
/// compliance of the same formulation, at steps `4t`, `2t` and `t`.
pub fn fd_consistency(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    which: ComplianceGradient,
    fields: &[Vec<Vec2>],
    t: f64,
    order: usize,
) -> Result<Vec<FdRow>> {
    let gradient = match which {
        ComplianceGradient::VolumetricDisplacement => {
            assemble_dj_vol_disp(&solve_displacement(mesh, material, loads)?, order)?
        }
        ComplianceGradient::VolumetricMixed => assemble_dj_vol_mixed_weak(&solve_mixed(mesh, material, loads)?, order)?,
        ComplianceGradient::TransportMixed => {
            assemble_dj_vol_mixed_transport(&solve_mixed(mesh, material, loads)?, order)?
        }
    };
    let compliance = |m: &Mesh| -> Result<f64> {
        match which {
            ComplianceGradient::VolumetricDisplacement => {
                Ok(compliance_displacement(&solve_displacement(m, material, loads)?)?.energy)
            }
            _ => Ok(compliance_mixed(&solve_mixed(m, material, loads)?)),
        }
    };
    let steps = [4.0 * t, 2.0 * t, t];
    fields
        .iter()
        .map(|theta| {
            let mut differences = [0.0; 3];
            for (d, s) in differences.iter_mut().zip(steps) {
                *d = central_difference(mesh, theta, s, compliance)?;
            }
            Ok(FdRow {
                pairing: gradient.pair(theta),
                steps,
                differences,
            })
        })
        .collect()
}

/// Largest gap between the strong-form and weak-form mixed gradients over
/// random symmetric stress fields, displacement fields and catalog velocities,
/// relative to the absolute size of the pairing terms.
pub fn strong_weak_gap(mesh: &Mesh, material: &MaterialParams, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nt = mesh.num_triangles();
    let loads = LoadSpec::zero();
    let (lo, hi) = bounding_box(mesh);
    let fields: Vec<Vec<Vec2>> = test_field_catalog(hi.x - lo.x, hi.y - lo.y)
        .iter()
        .map(|f| interpolate(mesh, f))
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let sigma: Vec<[Mat2; 3]> = (0..nt)
            .map(|_| {
                [(); 3].map(|_| {
                    let off = rng.random_range(-1.0..1.0);
                    Mat2::new(rng.random_range(-1.0..1.0), off, off, rng.random_range(-1.0..1.0))
                })
            })
            .collect();
        let u: Vec<Vec2> = (0..nt)
            .map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let eta = vec![0.0; nt];
        let order = crate::gradient::GRADIENT_QUADRATURE_ORDER;
        let strong = assemble_dj_vol_mixed_strong(mesh, &sigma, &u, material, &loads, order)?;
        let weak = assemble_dj_vol_mixed_weak_fields(mesh, &sigma, &u, &eta, material, &loads, order)?;
        for theta in &fields {
            let (a, b) = (strong.pair(theta), weak.pair(theta));
            // random fields make some pairings cancel to far below their terms
            let scale = absolute_pairing(&strong, theta).max(absolute_pairing(&weak, theta));
            worst = worst.max((a - b).abs() / scale.max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// `Σ |g_i θ_i|`, the magnitude that bounds roundoff in the pairing sum.
fn absolute_pairing(g: &GradientFunctional, theta: &[Vec2]) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(v, t)| (g.coeffs[2 * v] * t.x).abs() + (g.coeffs[2 * v + 1] * t.y).abs())
        .sum()
}

fn bounding_box(mesh: &Mesh) -> (Vec2, Vec2) {
    mesh.vertices().iter().fold(
        (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)),
        |(lo, hi), x| (lo.inf(x), hi.sup(x)),
    )
}

/// `|⟨dV, x⟩ − 2|Ω||` for the identity velocity, relative to `2|Ω|`, and the
/// largest relative gap between volumetric and surface volume gradients over
/// the catalog fields, which vanish on the clamped and loaded ends.
pub fn volume_identity_gaps(mesh: &Mesh) -> Result<(f64, f64)> {
    let vol = assemble_dv_volumetric(mesh)?;
    let surf = assemble_dv_surface(mesh)?;
    let two_area = 2.0 * mesh.volume();
    let identity = (vol.pair(mesh.vertices()) - two_area).abs() / two_area;
    let (lo, hi) = bounding_box(mesh);
    let scale = vol
        .pair(&interpolate(mesh, &test_field_catalog(hi.x - lo.x, hi.y - lo.y)[0]))
        .abs();
    let gap = test_field_catalog(hi.x - lo.x, hi.y - lo.y)
        .iter()
        .map(|f| {
            let theta = interpolate(mesh, f);
            (vol.pair(&theta) - surf.pair(&theta)).abs() / scale.max(1.0)
        })
        .fold(0.0, f64::max);
    Ok((identity, gap))
}

/// Gap between the transported strain and the strain of the transported
/// displacement, differentiated on the image of an affine map.
pub fn transported_strain_gap() -> Result<f64> {
    let d = Mat2::new(1.1, 0.2, -0.3, 0.95);
    let b = Vec2::new(0.4, -0.1);
    let inv = d.try_inverse().expect("invertible");
    let u = |x: Vec2| Vec2::new(x.x * x.x - x.y, x.x * x.y + 2.0 * x.y * x.y);
    let grad_u = |x: Vec2| Mat2::new(2.0 * x.x, -1.0, x.y, x.x + 4.0 * x.y);
    let u_image = |y: Vec2| u(inv * (y - b));
    let h = 1e-2;
    let mut worst: f64 = 0.0;
    for x in [Vec2::new(0.3, 0.7), Vec2::new(-0.5, 0.2), Vec2::new(1.0, -1.0)] {
        let y = d * x + b;
        let mut g = Mat2::zeros();
        for j in 0..2 {
            let mut e = Vec2::zeros();
            e[j] = h;
            g.set_column(j, &((u_image(y + e) - u_image(y - e)) / (2.0 * h)));
        }
        let direct = (g + g.transpose()) * 0.5;
        worst = worst.max((transported_strain(&grad_u(x), &d)? - direct).amax());
    }
    Ok(worst)
}

/// `X(x) = (x + a x y, y + a (x² − y²))`.
pub fn quadratic_map(a: f64) -> impl VectorField {
    ClosureField {
        value: move |x: Vec2| Vec2::new(x.x + a * x.x * x.y, x.y + a * (x.x * x.x - x.y * x.y)),
        gradient: move |x: Vec2| Mat2::new(1.0 + a * x.y, a * x.x, 2.0 * a * x.x, 1.0 - 2.0 * a * x.y),
    }
}

fn quadratic_stress(x: Vec2) -> Mat2 {
    Mat2::new(1.0 + x.x * x.y, x.x - x.y * x.y, x.x - x.y * x.y, 2.0 - x.x * x.x)
}

/// Largest gap between the divergence of the two-sided Piola image of a
/// quadratic stress under a quadratic map, differentiated with step `h`,
/// and `(1/I) D ∇·τ`.
pub fn piola_divergence_gap(a: f64, h: f64) -> Result<f64> {
    let map = quadratic_map(a);
    let mut worst: f64 = 0.0;
    for x in [Vec2::new(0.4, 0.3), Vec2::new(-0.2, 0.5), Vec2::new(0.1, -0.6)] {
        let d = map.gradient(x);
        let div = divergence_fd(&|p| Ok(quadratic_stress(p)), x, h)?;
        let expected = d * div / d.determinant();
        let got = transported_divergence(&map, &quadratic_stress, piola_contravariant, x, h)?;
        worst = worst.max((got - expected).norm());
    }
    Ok(worst)
}

/// Runs every check with its default tolerance.
pub fn run_checks(material: &MaterialParams, fd_step: f64, quad_order: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut push = |name, passed, detail: String| {
        out.push(CheckOutcome { name, passed, detail });
    };
    let geometry = GeometryConfig::six_holes(COARSE_H);
    let mesh = build_holed_cantilever(&geometry)?;

    let e = displacement_patch_error(&mesh, material)?;
    push(
        "displacement patch",
        e <= 1e-10,
        format!("max nodal error {e:.2e} (tol 1e-10)"),
    );
    let (e, sym) = mixed_patch_errors(&mesh, material)?;
    push(
        "mixed patch",
        e <= 1e-9 && sym <= 1e-9,
        format!("max stress error {e:.2e}, symmetry defect {sym:.2e} (tol 1e-9)"),
    );

    let loads = LoadSpec::traction(Vec2::new(0.0, -1.0));
    let fields = fd_probe_fields(&mesh, geometry.width, geometry.height, 5);
    for which in [
        ComplianceGradient::VolumetricDisplacement,
        ComplianceGradient::VolumetricMixed,
        ComplianceGradient::TransportMixed,
    ] {
        let rows = fd_consistency(&mesh, material, &loads, which, &fields, fd_step, quad_order)?;
        let rel = rows.iter().map(FdRow::relative_error).fold(0.0, f64::max);
        let ratios: Vec<f64> = rows.iter().map(FdRow::defect_ratio).collect();
        let ratio_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
        let name = match which {
            ComplianceGradient::VolumetricDisplacement => "fd volumetric displacement",
            ComplianceGradient::VolumetricMixed => "fd volumetric mixed",
            ComplianceGradient::TransportMixed => "fd transport mixed",
        };
        push(
            name,
            rel <= 1e-2 && ratio_ok,
            format!(
                "max relative gap {rel:.2e} (tol 1e-2), defect ratios {}",
                ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")
            ),
        );
    }

    let gap = strong_weak_gap(&mesh, material, 20, seed)?;
    push(
        "strong/weak equivalence",
        gap <= 1e-12,
        format!("max relative gap {gap:.2e} (tol 1e-12)"),
    );

    let (identity, surface) = volume_identity_gaps(&mesh)?;
    push(
        "volume identities",
        identity <= 1e-12 && surface <= 1e-10,
        format!("identity field {identity:.2e} (tol 1e-12), volumetric vs surface {surface:.2e} (tol 1e-10)"),
    );

    let strain = transported_strain_gap()?;
    push(
        "transported strain",
        strain <= 1e-12,
        format!("max gap {strain:.2e} (tol 1e-12)"),
    );
    let div = piola_divergence_gap(0.1, 1e-5)?;
    push("piola divergence", div <= 1e-8, format!("max gap {div:.2e} (tol 1e-8)"));
    Ok(out)
}
