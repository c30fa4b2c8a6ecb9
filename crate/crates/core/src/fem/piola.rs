//! Transport of fields under a domain map `X` with Jacobian `D`.
//!
//! These maps and probes check the transformation identities behind the
//! volumetric shape gradients; the solvers apply the per-row Piola map inside
//! [`super::bdm::BdmElement`].

use crate::error::{Error, Result};
use crate::loads::VectorField;
use crate::{Mat2, Vec2};

fn checked_det(d: &Mat2) -> Result<f64> {
    let det = d.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Solver(format!(
            "transformation Jacobian is not invertible with positive orientation (det = {det:e})"
        )));
    }
    Ok(det)
}

/// Contravariant transform of a tensor value: `(1/det D) D τ Dᵀ`.
pub fn piola_contravariant(tau: &Mat2, d: &Mat2) -> Result<Mat2> {
    let det = checked_det(d)?;
    Ok(d * tau * d.transpose() / det)
}

/// Transform of an L² vector value: `D⁻ᵀ v`.
pub fn l2_transform(v: &Vec2, d: &Mat2) -> Result<Vec2> {
    checked_det(d)?;
    let inv = d.try_inverse().expect("positive determinant");
    Ok(inv.transpose() * v)
}

/// Strain of the transported displacement `u ∘ X⁻¹` written with the
/// reference gradient: `½(∇u D⁻¹ + D⁻ᵀ ∇uᵀ)`.
pub fn transported_strain(grad_u: &Mat2, d: &Mat2) -> Result<Mat2> {
    checked_det(d)?;
    let inv = d.try_inverse().expect("positive determinant");
    let g = grad_u * inv;
    Ok((g + g.transpose()) * 0.5)
}

/// Row-wise contravariant transform `(1/det D) τ Dᵀ`, applying the vector
/// Piola map to each row.
pub fn piola_rows(tau: &Mat2, d: &Mat2) -> Result<Mat2> {
    let det = checked_det(d)?;
    Ok(tau * d.transpose() / det)
}

/// Preimage of `y` under the map `X`, by Newton iteration from `start`.
pub fn invert_map(map: &dyn VectorField, y: Vec2, start: Vec2) -> Result<Vec2> {
    let mut x = start;
    for _ in 0..50 {
        let r = map.value(x) - y;
        if r.norm() <= 1e-15 * (1.0 + y.norm()) {
            return Ok(x);
        }
        let d = map.gradient(x);
        checked_det(&d)?;
        x -= d.try_inverse().expect("positive determinant") * r;
    }
    let r = (map.value(x) - y).norm();
    if r <= 1e-13 * (1.0 + y.norm()) {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "map inversion did not converge (residual {r:e})"
        )))
    }
}

/// Row-wise divergence of a tensor field by the fourth-order central stencil.
pub fn divergence_fd(field: &dyn Fn(Vec2) -> Result<Mat2>, x: Vec2, h: f64) -> Result<Vec2> {
    let mut div = Vec2::zeros();
    for j in 0..2 {
        let mut e = Vec2::zeros();
        e[j] = h;
        let d = (field(x - e * 2.0)? - field(x + e * 2.0)? + (field(x + e)? - field(x - e)?) * 8.0) / (12.0 * h);
        div += d.column(j);
    }
    Ok(div)
}

/// Divergence, in the deformed coordinates, of the field obtained by
/// transporting `tau` with `transport` through the map `X`, evaluated at `X(x)`.
pub fn transported_divergence(
    map: &dyn VectorField,
    tau: &dyn Fn(Vec2) -> Mat2,
    transport: fn(&Mat2, &Mat2) -> Result<Mat2>,
    x: Vec2,
    h: f64,
) -> Result<Vec2> {
    let pushed = |y: Vec2| -> Result<Mat2> {
        let xr = invert_map(map, y, x)?;
        transport(&tau(xr), &map.gradient(xr))
    };
    divergence_fd(&pushed, map.value(x), h)
}
