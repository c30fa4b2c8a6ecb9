//! Convergence of the discrete compliance gradients under uniform refinement.

use super::{
    assemble_dj_surface, assemble_dj_vol_disp, assemble_dj_vol_mixed_weak, test_field_catalog, GradientFunctional,
    TestField,
};
use crate::displacement::solve_displacement;
use crate::error::{Error, Result};
use crate::loads::{LoadSpec, VectorField};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::mixed::solve_mixed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyConfig {
    /// Number of studied levels; level `l` is the base mesh refined `l` times.
    pub levels: usize,
    /// Refinement count of the reference mesh; at least `levels − 1`.
    pub reference_level: usize,
    pub quad_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    /// Displacement degrees of freedom at this level.
    pub ndof: usize,
    pub err_surface: f64,
    pub err_vol_disp: f64,
    pub err_vol_mixed: f64,
}

impl StudyRow {
    pub const CSV_HEADER: &'static str = "level,ndof,err_surface,err_vol_disp,err_vol_mixed";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{:.12e}",
            self.level, self.ndof, self.err_surface, self.err_vol_disp, self.err_vol_mixed
        )
    }
}

/// Pairings of the three compliance gradients with every catalog field.
struct Pairings {
    surface: Vec<f64>,
    vol_disp: Vec<f64>,
    vol_mixed: Vec<f64>,
}

fn pairings(
    mesh: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    fields: &[TestField],
    order: usize,
) -> Result<Pairings> {
    let disp = solve_displacement(mesh, material, loads)?;
    let mixed = solve_mixed(mesh, material, loads)?;
    let pair =
        |g: &GradientFunctional| -> Vec<f64> { fields.iter().map(|f| g.pair_field(f as &dyn VectorField)).collect() };
    Ok(Pairings {
        surface: pair(&assemble_dj_surface(&disp)?),
        vol_disp: pair(&assemble_dj_vol_disp(&disp, order)?),
        vol_mixed: pair(&assemble_dj_vol_mixed_weak(&mixed, order)?),
    })
}

/// Largest pairing error over the catalog relative to the largest reference
/// pairing; several catalog pairings tend to zero, so per-field ratios are
/// meaningless.
fn max_relative_error(values: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let err = values
        .iter()
        .zip(reference)
        .map(|(v, r)| (v - r).abs())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Compares each gradient expression on levels `0..levels` against the same
/// expression on the reference level, pairing with closed-form test fields.
///
/// The error of a level is the largest pairing error over the catalog divided
/// by the largest reference pairing.
pub fn gradient_error_study(
    base: &Mesh,
    material: &MaterialParams,
    loads: &LoadSpec,
    cfg: &StudyConfig,
) -> Result<Vec<StudyRow>> {
    if cfg.levels == 0 || cfg.reference_level + 1 < cfg.levels {
        return Err(Error::StudyReference(format!(
            "{} levels need a reference level of at least {}, got {}",
            cfg.levels,
            cfg.levels.saturating_sub(1),
            cfg.reference_level
        )));
    }
    let (lo, hi) = base.vertices().iter().fold(
        (
            crate::Vec2::repeat(f64::INFINITY),
            crate::Vec2::repeat(f64::NEG_INFINITY),
        ),
        |(lo, hi), x| (lo.inf(x), hi.sup(x)),
    );
    let size = hi - lo;
    let fields = test_field_catalog(size.x, size.y);

    let mut meshes = vec![base.clone()];
    while meshes.len() <= cfg.reference_level.max(cfg.levels - 1) {
        let next = meshes.last().expect("non-empty").refine_uniform();
        meshes.push(next);
    }
    let reference = pairings(&meshes[cfg.reference_level], material, loads, &fields, cfg.quad_order)?;
    let mut rows = Vec::with_capacity(cfg.levels);
    for (level, mesh) in meshes.iter().enumerate().take(cfg.levels) {
        let p = if level == cfg.reference_level {
            Pairings {
                surface: reference.surface.clone(),
                vol_disp: reference.vol_disp.clone(),
                vol_mixed: reference.vol_mixed.clone(),
            }
        } else {
            pairings(mesh, material, loads, &fields, cfg.quad_order)?
        };
        let row = StudyRow {
            level,
            ndof: 2 * mesh.num_vertices(),
            err_surface: max_relative_error(&p.surface, &reference.surface),
            err_vol_disp: max_relative_error(&p.vol_disp, &reference.vol_disp),
            err_vol_mixed: max_relative_error(&p.vol_mixed, &reference.vol_mixed),
        };
        log::info!("study level {level}: {}", row.csv_line());
        rows.push(row);
    }
    Ok(rows)
}

/// Least-squares slope of `log(err)` against `log(ndof)` per column.
pub fn fitted_slopes(rows: &[StudyRow]) -> [f64; 3] {
    let fit = |get: &dyn Fn(&StudyRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| get(r) > 0.0)
            .map(|r| ((r.ndof as f64).ln(), get(r).ln()))
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    [
        fit(&|r| r.err_surface),
        fit(&|r| r.err_vol_disp),
        fit(&|r| r.err_vol_mixed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_bulky_cantilever, GeometryConfig};
    use crate::Vec2;

    fn beam() -> Mesh {
        build_bulky_cantilever(&GeometryConfig {
            h: 1.5,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn reference_equal_to_level_gives_zero_error() {
        let rows = gradient_error_study(
            &beam(),
            &MaterialParams::default(),
            &LoadSpec::traction(Vec2::new(0.0, -1.0)),
            &StudyConfig {
                levels: 1,
                reference_level: 0,
                quad_order: 4,
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(
            (rows[0].err_surface, rows[0].err_vol_disp, rows[0].err_vol_mixed),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn coarse_reference_is_rejected() {
        let err = gradient_error_study(
            &beam(),
            &MaterialParams::default(),
            &LoadSpec::traction(Vec2::new(0.0, -1.0)),
            &StudyConfig {
                levels: 3,
                reference_level: 1,
                quad_order: 4,
            },
        );
        assert!(matches!(err, Err(Error::StudyReference(_))));
    }

    #[test]
    fn slopes_of_exact_power_laws() {
        let rows: Vec<StudyRow> = [100usize, 400, 1600]
            .iter()
            .enumerate()
            .map(|(level, &ndof)| StudyRow {
                level,
                ndof,
                err_surface: (ndof as f64).powf(-0.5),
                err_vol_disp: (ndof as f64).powf(-1.0),
                err_vol_mixed: 3.0 * (ndof as f64).powf(-1.0),
            })
            .collect();
        let s = fitted_slopes(&rows);
        assert!((s[0] + 0.5).abs() < 1e-12 && (s[1] + 1.0).abs() < 1e-12 && (s[2] + 1.0).abs() < 1e-12);
    }
}
