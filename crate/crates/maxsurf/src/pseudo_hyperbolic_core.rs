//! Closed-form primitives for `R^{2,3}`, the hyperboloid `Ĥ^{2,2}`, its geodesics and
//! Fermi charts.
//!
//! The signature ordering is fixed once and for all as `(+, +, −, −, −)`:
//!
//! ```text
//!   ⟨a, b⟩ = a1 b1 + a2 b2 − a3 b3 − a4 b4 − a5 b5        Q(x) = ⟨x, x⟩
//!   Ĥ^{2,2} = { x : Q(x) = −1 }        (double cover of H^{2,2})
//! ```
//!
//! Every other module inherits this ordering.

use nalgebra::{Matrix5, Vector2, Vector3, Vector5};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// A vector of `R^{2,3}`.
pub type Vec5 = Vector5<f64>;

/// Diagonal of the signature matrix `η`.
pub const SIGNATURE: [f64; 5] = [1.0, 1.0, -1.0, -1.0, -1.0];

/// Construction tolerance for [`HPoint`] and [`TangentVec`].
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Tolerance used to classify a tangent as unit spacelike, null or unit timelike.
pub const UNIT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("point is off the hyperboloid: |Q + 1| = {0:e}")]
    NotOnHyperboloid(f64),
    #[error("vector is not tangent: |<base, dir>| = {0:e}")]
    NotTangent(f64),
    #[error("tangent has <w,w> = {0}, expected one of -1, 0, +1")]
    NonUnitTangent(f64),
    #[error("disc coordinate has norm {0} >= 1")]
    OutOfDisc(f64),
    #[error("fibre coordinate has norm {0}, expected 1")]
    NotUnit(f64),
    #[error("point lies on the opposite sheet of the chart")]
    WrongSheet,
    #[error("chart basis is not orthonormal: defect {0:e}")]
    BadBasis(f64),
}

/// The signature matrix `η = diag(1, 1, −1, −1, −1)`.
pub fn eta() -> Matrix5<f64> {
    Matrix5::from_diagonal(&Vec5::from(SIGNATURE))
}

/// The bilinear form `a1b1 + a2b2 − a3b3 − a4b4 − a5b5`.
#[inline]
pub fn minkowski_inner(a: &Vec5, b: &Vec5) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2] - a[3] * b[3] - a[4] * b[4]
}

/// The quadratic form `Q(x) = ⟨x, x⟩`.
#[inline]
pub fn quadratic_form(x: &Vec5) -> f64 {
    minkowski_inner(x, x)
}

/// A point of `Ĥ^{2,2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    v: Vec5,
}

impl HPoint {
    /// Checked constructor: `|Q(v) + 1| ≤ 1e−12`.
    pub fn new(v: Vec5) -> Result<Self, CoreError> {
        Self::with_tolerance(v, CONSTRUCTION_TOL)
    }

    /// Checked constructor with a caller-chosen tolerance, scaled by `max(1, |v|²)` so that
    /// far-away points whose quadratic form suffers cancellation are still accepted.
    pub fn with_tolerance(v: Vec5, tol: f64) -> Result<Self, CoreError> {
        let defect = (quadratic_form(&v) + 1.0).abs();
        if defect <= tol * v.norm_squared().max(1.0) {
            Ok(Self { v })
        } else {
            Err(CoreError::NotOnHyperboloid(defect))
        }
    }

    /// Rescales a timelike vector onto the hyperboloid.
    pub fn normalize(v: Vec5) -> Result<Self, CoreError> {
        let q = quadratic_form(&v);
        if q >= 0.0 {
            return Err(CoreError::NotOnHyperboloid((q + 1.0).abs()));
        }
        Ok(Self { v: v / (-q).sqrt() })
    }

    /// Wraps a vector produced by a closed-form map known to land on `Ĥ^{2,2}`.
    pub(crate) fn from_raw(v: Vec5) -> Self {
        Self { v }
    }

    pub fn vector(&self) -> &Vec5 {
        &self.v
    }

    pub fn into_vector(self) -> Vec5 {
        self.v
    }
}

/// A tangent vector `dir ∈ base^⊥`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVec {
    pub base: HPoint,
    pub dir: Vec5,
}

impl TangentVec {
    pub fn new(base: HPoint, dir: Vec5) -> Result<Self, CoreError> {
        let d = minkowski_inner(base.vector(), &dir).abs();
        let scale = (base.vector().norm() * dir.norm()).max(1.0);
        if d <= CONSTRUCTION_TOL * scale {
            Ok(Self { base, dir })
        } else {
            Err(CoreError::NotTangent(d))
        }
    }
}

/// Causal type of the geodesic joining two points of `Ĥ^{2,2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GeodesicClass {
    Spacelike,
    Lightlike,
    Timelike,
    None,
}

/// Classifies the pair `(u, v)` from `⟨u, v⟩` alone.
pub fn classify_pair(u: &HPoint, v: &HPoint, tol: f64) -> GeodesicClass {
    let p = minkowski_inner(u.vector(), v.vector());
    if (p + 1.0).abs() <= tol {
        GeodesicClass::Lightlike
    } else if p < -1.0 {
        GeodesicClass::Spacelike
    } else if p < 1.0 {
        GeodesicClass::Timelike
    } else {
        GeodesicClass::None
    }
}

/// Distance along the spacelike geodesic joining `u` and `v`, `cosh⁻¹(−⟨u,v⟩)`.
pub fn spacelike_distance(u: &Vec5, v: &Vec5) -> f64 {
    (-minkowski_inner(u, v)).max(1.0).acosh()
}

/// Evaluates the geodesic through `x` with initial velocity `w` at time `t`.
///
/// The caller normalizes `w`: the branch is chosen from `⟨w, w⟩ ∈ {+1, 0, −1}`.
pub fn geodesic_eval(x: &HPoint, w: &TangentVec, t: f64) -> Result<HPoint, CoreError> {
    let x = x.vector();
    let n = quadratic_form(&w.dir);
    let p = if (n - 1.0).abs() <= UNIT_TOL {
        x * t.cosh() + w.dir * t.sinh()
    } else if n.abs() <= UNIT_TOL {
        x + w.dir * t
    } else if (n + 1.0).abs() <= UNIT_TOL {
        x * t.cos() + w.dir * t.sin()
    } else {
        return Err(CoreError::NonUnitTangent(n));
    };
    Ok(HPoint::from_raw(p))
}

/// `η`-Gram–Schmidt on the columns of `m`, in column order, with target signs `signs`.
///
/// Returns `None` when a column is degenerate or has the wrong causal character.
pub fn eta_gram_schmidt(m: &Matrix5<f64>, signs: &[f64; 5]) -> Option<Matrix5<f64>> {
    let mut out = Matrix5::zeros();
    for k in 0..5 {
        let mut v: Vec5 = m.column(k).into_owned();
        for j in 0..k {
            let b: Vec5 = out.column(j).into_owned();
            v -= b * (minkowski_inner(&v, &b) * signs[j]);
        }
        let n = quadratic_form(&v);
        let scale = m.column(k).norm_squared().max(1.0);
        if n * signs[k] <= 1e-8 * scale {
            return None;
        }
        out.set_column(k, &(v / (n.abs()).sqrt()));
    }
    Some(out)
}

/// Draws an element of `O(2,3)` by `η`-Gram–Schmidt on Gaussian columns, retrying on
/// near-degenerate draws.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R) -> Matrix5<f64> {
    loop {
        let m = Matrix5::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        if let Some(g) = eta_gram_schmidt(&m, &SIGNATURE) {
            // Reject badly conditioned draws so that invariance tests stay well scaled.
            if g.amax() < 20.0 {
                return g;
            }
        }
    }
}

/// Fermi chart around the spacelike plane `E` with timelike complement `F`.
///
/// ```text
///   ψ(u, s) = 2/(1−|u|²) · u  +  (1+|u|²)/(1−|u|²) · s,   u ∈ disc ⊂ E, s ∈ unit sphere ⊂ F
/// ```
///
/// The chart axis is `basis_f[0]`: points whose `F`-direction has a negative component
/// along it belong to the other sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct FermiChart {
    pub basis_e: [Vec5; 2],
    pub basis_f: [Vec5; 3],
    pub tolerance: f64,
}

impl FermiChart {
    pub fn new(basis_e: [Vec5; 2], basis_f: [Vec5; 3], tolerance: f64) -> Result<Self, CoreError> {
        let all = [basis_e[0], basis_e[1], basis_f[0], basis_f[1], basis_f[2]];
        let expect = [1.0, 1.0, -1.0, -1.0, -1.0];
        let mut defect: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let target = if i == j { expect[i] } else { 0.0 };
                defect = defect.max((minkowski_inner(&all[i], &all[j]) - target).abs());
            }
        }
        if defect > 1e-9 {
            return Err(CoreError::BadBasis(defect));
        }
        Ok(Self { basis_e, basis_f, tolerance })
    }

    /// The chart built on the coordinate axes: `E = span(e1, e2)`, `F = span(e3, e4, e5)`.
    pub fn standard() -> Self {
        let e = |i: usize| {
            let mut v = Vec5::zeros();
            v[i] = 1.0;
            v
        };
        Self { basis_e: [e(0), e(1)], basis_f: [e(2), e(3), e(4)], tolerance: UNIT_TOL }
    }
}

/// The forward Fermi map `ψ(u, s)`; `u` and `s` are coordinates in `basis_e`, `basis_f`.
pub fn fermi_forward(chart: &FermiChart, u: &Vector2<f64>, s: &Vector3<f64>) -> Result<HPoint, CoreError> {
    let r2 = u.norm_squared();
    if r2 >= 1.0 {
        return Err(CoreError::OutOfDisc(r2.sqrt()));
    }
    let sn = s.norm();
    if (sn - 1.0).abs() > chart.tolerance {
        return Err(CoreError::NotUnit(sn));
    }
    let a = 2.0 / (1.0 - r2);
    let b = (1.0 + r2) / (1.0 - r2);
    let mut p = Vec5::zeros();
    for i in 0..2 {
        p += chart.basis_e[i] * (a * u[i]);
    }
    for j in 0..3 {
        p += chart.basis_f[j] * (b * s[j]);
    }
    Ok(HPoint::from_raw(p))
}

/// Inverse of [`fermi_forward`].
pub fn fermi_inverse(chart: &FermiChart, p: &HPoint) -> Result<(Vector2<f64>, Vector3<f64>), CoreError> {
    let p = p.vector();
    let pe = Vector2::new(minkowski_inner(p, &chart.basis_e[0]), minkowski_inner(p, &chart.basis_e[1]));
    let pf = Vector3::new(
        -minkowski_inner(p, &chart.basis_f[0]),
        -minkowski_inner(p, &chart.basis_f[1]),
        -minkowski_inner(p, &chart.basis_f[2]),
    );
    let c = pf.norm();
    if c == 0.0 {
        return Err(CoreError::WrongSheet);
    }
    let s = pf / c;
    if s[0] < -chart.tolerance {
        return Err(CoreError::WrongSheet);
    }
    Ok((pe / (1.0 + c), s))
}

/// Great-circle distance on the round sphere `S²` between unit vectors.
pub fn sphere_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    // atan2 form is accurate for both tiny and near-antipodal separations.
    a.cross(b).norm().atan2(a.dot(b))
}

/// Distance in the disc for the metric `(2/(1+|u|²))² g_E`, i.e. the open hemisphere
/// seen through stereographic projection.
pub fn disc_distance(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    let lift = |w: &Vector2<f64>| {
        let r2 = w.norm_squared();
        Vector3::new(2.0 * w[0], 2.0 * w[1], 1.0 - r2) / (1.0 + r2)
    };
    sphere_distance(&lift(u), &lift(v))
}
