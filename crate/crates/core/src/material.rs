//! Isotropic Hooke's law: elasticity tensor `A` and compliance tensor `A⁻¹`
//! acting on 2×2 tensors.

use crate::error::{Error, Result};
use crate::Mat2;

/// Lamé pair of an isotropic material in two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub lambda: f64,
    pub mu: f64,
}

impl Default for MaterialParams {
    /// `E = 1`, `ν = 0.3`.
    fn default() -> Self {
        MaterialParams::from_young_poisson(1.0, 0.3).expect("default material is admissible")
    }
}

impl MaterialParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::Material("Lamé constants must be finite".into()));
        }
        if mu <= 0.0 {
            return Err(Error::Material(format!("mu must be positive, got {mu}")));
        }
        if 2.0 * lambda + 2.0 * mu <= 0.0 {
            return Err(Error::Material(format!(
                "2 lambda + 2 mu must be positive, got lambda = {lambda}, mu = {mu}"
            )));
        }
        Ok(MaterialParams { lambda, mu })
    }

    /// Plane-strain conversion from Young's modulus and Poisson's ratio.
    pub fn from_young_poisson(e: f64, nu: f64) -> Result<Self> {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Material(format!("Young's modulus must be positive, got {e}")));
        }
        if !(nu > -1.0 && nu < 0.5) {
            return Err(Error::Material(format!(
                "Poisson's ratio must lie in (-1, 0.5), got {nu}"
            )));
        }
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        MaterialParams::new(lambda, mu)
    }

    /// `A e = 2μ e + λ tr(e) I`.
    pub fn apply_a(&self, e: &Mat2) -> Mat2 {
        e * (2.0 * self.mu) + Mat2::identity() * (self.lambda * e.trace())
    }

    /// `A⁻¹ s = s / (2μ) − λ / (2μ(2λ + 2μ)) tr(s) I`.
    pub fn apply_a_inv(&self, s: &Mat2) -> Mat2 {
        s / (2.0 * self.mu) - Mat2::identity() * (self.trace_coupling() * s.trace())
    }

    /// Coefficient `λ / (2μ(2λ + 2μ))` of the trace term in `A⁻¹`.
    pub fn trace_coupling(&self) -> f64 {
        self.lambda / (2.0 * self.mu * (2.0 * self.lambda + 2.0 * self.mu))
    }

    /// Energy density `A e : e`.
    pub fn energy(&self, e: &Mat2) -> f64 {
        self.apply_a(e).dot(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn conversion_values() {
        let m = MaterialParams::from_young_poisson(1.0, 0.0).unwrap();
        assert_eq!(m.lambda, 0.0);
        assert_eq!(m.mu, 0.5);
        let m = MaterialParams::from_young_poisson(1.0, 0.3).unwrap();
        // 0.3 / (1.3 * 0.4) and 1 / 2.6
        assert_relative_eq!(m.lambda, 0.576_923_076_923_077, epsilon = 1e-12);
        assert_relative_eq!(m.mu, 0.384_615_384_615_384_6, epsilon = 1e-12);
        let m2 = MaterialParams::from_young_poisson(2.0, 0.3).unwrap();
        assert_relative_eq!(m2.lambda, 2.0 * m.lambda, epsilon = 1e-15);
        assert_relative_eq!(m2.mu, 2.0 * m.mu, epsilon = 1e-15);
    }

    #[test]
    fn rejects_incompressible_and_bad_pairs() {
        assert!(MaterialParams::from_young_poisson(1.0, 0.5).is_err());
        assert!(MaterialParams::from_young_poisson(0.0, 0.3).is_err());
        assert!(MaterialParams::new(1.0, 0.0).is_err());
        assert!(MaterialParams::new(-2.0, 1.0).is_err());
    }

    #[test]
    fn hooke_examples() {
        let m = MaterialParams::new(0.7, 0.4).unwrap();
        assert_relative_eq!(
            m.apply_a(&Mat2::identity()),
            Mat2::identity() * (2.0 * 0.4 + 2.0 * 0.7),
            epsilon = 1e-15
        );
        assert_eq!(m.apply_a(&Mat2::zeros()), Mat2::zeros());
        let dev = Mat2::new(1.0, 0.0, 0.0, -1.0);
        assert_eq!(m.apply_a(&dev), dev * 0.8);
        assert_eq!(m.apply_a_inv(&Mat2::zeros()), Mat2::zeros());
        let m0 = MaterialParams::new(0.0, 0.4).unwrap();
        assert_relative_eq!(
            m0.apply_a_inv(&Mat2::identity()),
            Mat2::identity() / 0.8,
            epsilon = 1e-15
        );
    }

    fn sym() -> impl Strategy<Value = Mat2> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| Mat2::new(a, b, b, c))
    }

    fn lame() -> impl Strategy<Value = MaterialParams> {
        (0.01..10.0f64, -0.9..10.0f64).prop_map(|(mu, r)| MaterialParams::new(r * mu, mu).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn compliance_inverts_elasticity(m in lame(), e in sym()) {
            let back = m.apply_a_inv(&m.apply_a(&e));
            let scale = e.norm().max(1e-300);
            prop_assert!((back - e).norm() / scale <= 1e-13);
        }

        #[test]
        fn elasticity_is_coercive(mu in 0.01..10.0f64, lambda in 0.0..100.0f64, e in sym()) {
            let m = MaterialParams::new(lambda, mu).unwrap();
            prop_assert!(m.energy(&e) >= 2.0 * m.mu * e.norm_squared() * (1.0 - 1e-12));
        }
    }
}
