//! The Barbot surface: the flat maximal surface realizing equality in the Ishihara bound.
//!
//! ```text
//!   ι(t, s) = (sinh t, sinh s, cosh t, cosh s, 0) / √2
//! ```
//!
//! The induced metric of the literal formula is `½(dt² + ds²)`, so unit-speed coordinates
//! are `τ = t/√2`. In the conformal gauge of the solver with `q ≡ 1` the metric is
//! `e^{2λ}|dz|²` with `e^{4λ} = 8`, which gives `t = 2^{5/4} x`, `s = 2^{5/4} y`
//! (see [`pde_to_barbot`]).

use crate::pseudo_hyperbolic_core::{eta, HPoint, Vec5};
use nalgebra::Matrix5;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarbotError {
    #[error("isometry does not preserve the bilinear form: defect {0:e}")]
    NotAnIsometry(f64),
}

/// The Barbot surface post-composed with an isometry of `R^{2,3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarbotSurface {
    isometry: Matrix5<f64>,
}

impl Default for BarbotSurface {
    fn default() -> Self {
        Self { isometry: Matrix5::identity() }
    }
}

/// Values of the second fundamental form on the unit frame `(e1, e2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondFundamentalForm {
    pub ii11: Vec5,
    pub ii12: Vec5,
    pub ii22: Vec5,
}

impl BarbotSurface {
    pub fn new(isometry: Matrix5<f64>) -> Result<Self, BarbotError> {
        let defect = (isometry.transpose() * eta() * isometry - eta()).amax();
        if defect > 1e-12 * isometry.amax().powi(2).max(1.0) {
            return Err(BarbotError::NotAnIsometry(defect));
        }
        Ok(Self { isometry })
    }

    pub fn isometry(&self) -> &Matrix5<f64> {
        &self.isometry
    }
}

/// Scale between solver coordinates (`q ≡ 1` gauge) and the literal `(t, s)` coordinates.
pub fn pde_scale() -> f64 {
    2f64.powf(1.25)
}

/// Maps solver coordinates `(x, y)` to Barbot coordinates `(t, s)`.
pub fn pde_to_barbot(x: f64, y: f64) -> (f64, f64) {
    (pde_scale() * x, pde_scale() * y)
}

/// The Barbot point `isometry · ι(t, s)`.
pub fn barbot_point(surf: &BarbotSurface, t: f64, s: f64) -> HPoint {
    let v = Vec5::new(t.sinh(), s.sinh(), t.cosh(), s.cosh(), 0.0) / std::f64::consts::SQRT_2;
    HPoint::from_raw(surf.isometry * v)
}

/// The adapted frame with columns `(σ, e1, e2, n1, n2)`.
pub fn barbot_frame(surf: &BarbotSurface, t: f64, s: f64) -> Matrix5<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (ct, st, cs, ss) = (t.cosh(), t.sinh(), s.cosh(), s.sinh());
    let sigma = Vec5::new(st, ss, ct, cs, 0.0) * r;
    let e1 = Vec5::new(ct, 0.0, st, 0.0, 0.0);
    let e2 = Vec5::new(0.0, cs, 0.0, ss, 0.0);
    let n1 = Vec5::new(st, -ss, ct, -cs, 0.0) * r;
    let n2 = Vec5::new(0.0, 0.0, 0.0, 0.0, 1.0);
    surf.isometry * Matrix5::from_columns(&[sigma, e1, e2, n1, n2])
}

/// The second fundamental form: `II(e1,e1) = n1 = −II(e2,e2)`, `II(e1,e2) = 0`.
pub fn barbot_second_fundamental_form(surf: &BarbotSurface, t: f64, s: f64) -> SecondFundamentalForm {
    let f = barbot_frame(surf, t, s);
    let n1: Vec5 = f.column(3).into_owned();
    SecondFundamentalForm { ii11: n1, ii12: Vec5::zeros(), ii22: -n1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudo_hyperbolic_core::{minkowski_inner, quadratic_form, random_isometry};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame_gram(f: &Matrix5<f64>) -> Matrix5<f64> {
        f.transpose() * eta() * f
    }

    fn target() -> Matrix5<f64> {
        Matrix5::from_diagonal(&Vec5::new(-1.0, 1.0, 1.0, -1.0, -1.0))
    }

    #[test]
    fn origin_and_quadric() {
        let b = BarbotSurface::default();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(*barbot_point(&b, 0.0, 0.0).vector(), Vec5::new(0.0, 0.0, r, r, 0.0), epsilon = 1e-15);
        for i in -2..=2 {
            for j in -2..=2 {
                let p = barbot_point(&b, i as f64, j as f64);
                assert_abs_diff_eq!(quadratic_form(p.vector()), -1.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn pinned_inner_product() {
        // Oracle: direct expansion ½(sinh0 sinh2 + 0 − cosh0 cosh2 − 1) = −(cosh 2 + 1)/2.
        let b = BarbotSurface::default();
        let p = minkowski_inner(barbot_point(&b, 0.0, 0.0).vector(), barbot_point(&b, 2.0, 0.0).vector());
        let oracle = -(2f64.cosh() + 1.0) / 2.0;
        assert_abs_diff_eq!(p, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(p, -2.381097845541816, epsilon = 1e-12);
    }

    #[test]
    fn frame_at_origin() {
        let b = BarbotSurface::default();
        let f = barbot_frame(&b, 0.0, 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(f.column(3).into_owned(), Vec5::new(0.0, 0.0, r, -r, 0.0), epsilon = 1e-16);
        assert_abs_diff_eq!(frame_gram(&f), target(), epsilon = 1e-15);
    }

    #[test]
    fn induced_metric_is_half_flat() {
        let b = BarbotSurface::default();
        let h = 1e-5;
        for &(t, s) in &[(0.3, -0.7), (1.5, 0.2), (-2.0, 1.0)] {
            let dt = (barbot_point(&b, t + h, s).into_vector() - barbot_point(&b, t - h, s).into_vector()) / (2.0 * h);
            let ds = (barbot_point(&b, t, s + h).into_vector() - barbot_point(&b, t, s - h).into_vector()) / (2.0 * h);
            assert_abs_diff_eq!(minkowski_inner(&dt, &dt), 0.5, epsilon = 1e-8);
            assert_abs_diff_eq!(minkowski_inner(&ds, &ds), 0.5, epsilon = 1e-8);
            assert_abs_diff_eq!(minkowski_inner(&dt, &ds), 0.0, epsilon = 1e-8);
        }
    }

    /// Second fundamental form from second derivatives of ι projected on the normals, then
    /// Gauss equation for K; both from finite differences.
    #[test]
    fn finite_difference_second_fundamental_form_and_curvature() {
        let b = BarbotSurface::default();
        let h = 1e-4;
        let p = |t: f64, s: f64| barbot_point(&b, t, s).into_vector();
        for &(t, s) in &[(0.0, 0.0), (0.8, -0.4), (-1.2, 1.7)] {
            let f = barbot_frame(&b, t, s);
            let (n1, n2): (Vec5, Vec5) = (f.column(3).into(), f.column(4).into());
            let dtt = (p(t + h, s) - 2.0 * p(t, s) + p(t - h, s)) / (h * h);
            let dss = (p(t, s + h) - 2.0 * p(t, s) + p(t, s - h)) / (h * h);
            let dts = (p(t + h, s + h) - p(t + h, s - h) - p(t - h, s + h) + p(t - h, s - h)) / (4.0 * h * h);
            // Unit tangents are √2 ∂_t and √2 ∂_s; normal parts use ⟨n_k, n_k⟩ = −1.
            let nproj = |w: &Vec5| -> [f64; 2] { [-minkowski_inner(w, &n1) * 2.0, -minkowski_inner(w, &n2) * 2.0] };
            let (a, c, bb) = (nproj(&dtt), nproj(&dss), nproj(&dts));
            assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(a[1], 0.0, epsilon = 1e-6);
            assert_abs_diff_eq!(c[0], -1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(bb[0], 0.0, epsilon = 1e-6);
            // Gauss: K = −1 + ⟨II11, II22⟩ − ⟨II12, II12⟩, and ⟨·,·⟩ = −(dot of coefficients)
            // on the normal plane.
            let k = -1.0 - (a[0] * c[0] + a[1] * c[1]) + (bb[0] * bb[0] + bb[1] * bb[1]);
            assert_abs_diff_eq!(k, 0.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn norm_and_mean_curvature() {
        let b = BarbotSurface::default();
        let ii = barbot_second_fundamental_form(&b, 0.4, -0.9);
        let norm2 =
            -(minkowski_inner(&ii.ii11, &ii.ii11) + 2.0 * minkowski_inner(&ii.ii12, &ii.ii12) + minkowski_inner(&ii.ii22, &ii.ii22));
        assert_abs_diff_eq!(norm2, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!((ii.ii11 + ii.ii22).amax(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn isometry_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_isometry(&mut rng);
        let b = BarbotSurface::new(g).unwrap();
        let f = barbot_frame(&b, 0.5, 1.2);
        assert!((frame_gram(&f) - target()).amax() < 1e-11);
        assert!(BarbotSurface::new(Matrix5::identity() * 2.0).is_err());
    }
}
