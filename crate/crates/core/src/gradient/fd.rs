//! Finite-difference reference for shape gradients.

use crate::error::Result;
use crate::mesh::Mesh;
use crate::Vec2;

/// `(J(Ω + tθ) − J(Ω − tθ)) / 2t` for a discrete shape functional `J`.
pub fn central_difference(
    mesh: &Mesh,
    theta: &[Vec2],
    t: f64,
    functional: impl Fn(&Mesh) -> Result<f64>,
) -> Result<f64> {
    let plus = functional(&mesh.deform(theta, t))?;
    let minus = functional(&mesh.deform(theta, -t))?;
    Ok((plus - minus) / (2.0 * t))
}
