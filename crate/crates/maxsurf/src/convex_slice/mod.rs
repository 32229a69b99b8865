//! Convex hull of the reconstructed surface and its normal slices.
//!
//! The hull `Conv(S)` is the projectivization of the Euclidean convex hull of the lift
//! `Ŝ ⊂ R^{2,3}`, so `p ∈ Conv(S)` exactly when `p` lies in the cone spanned by `Ŝ`. The
//! slice `N⁰ₓ` at a point `x` is the star-shaped set of normal vectors `τ n̂` whose timelike
//! geodesic `cos τ x + sin τ n̂` stays in the hull. Since the cone is convex, each ray meets
//! it in an interval, and the extent along `n̂` is one linear program:
//!
//! ```text
//!   maximize b   subject to   x + b n̂ = Σ w_i ŷ_i,  w ≥ 0       (τ = atan b)
//! ```
//!
//! A finite cloud under-samples `Conv(S)`, so every extent here is a lower bound.

pub mod simplex;
pub mod wolfe;

use nalgebra::Matrix5;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame_integration::{integrate_frame_region, scaled_gram_error, standard_seed, ConnectionForm, FrameError, FrameField};
use crate::pseudo_hyperbolic_core::{minkowski_inner, Vec5};
use simplex::{DenseLp, LpOutcome};

/// Feasibility tolerance of every membership program (on unit-normalized columns).
pub const LP_TOL: f64 = 1e-9;

/// Slice volumes below this come from extents under about `1e−6`, where the extremal
/// programs on clouds with coordinates of size `cosh(distance)` no longer resolve the
/// boundary of the hull. Decay fits of `V̄` discard them.
pub const VOLUME_NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SliceError {
    #[error("cloud is empty")]
    EmptyCloud,
    #[error("cloud points {0} and {1} are not spacelike separated: ⟨x,y⟩ = {2}")]
    NotSpacelike(usize, usize, f64),
    #[error("the origin lies in the convex hull of the lift")]
    OriginInHull,
    #[error("at least 16 directions are required, got {0}")]
    TooFewDirections(usize),
    #[error("seppi probe needs at least 8 tangent directions, got {0}")]
    TooFewTangentDirections(usize),
    #[error("ray-march step must lie in (0, 0.02], got {0}")]
    BadStep(f64),
    #[error("frame at the base point violates the Gram structure by {0:e}")]
    FrameMismatch(f64),
    #[error("base point is not a cloud point")]
    BaseNotInCloud,
    #[error("linear program failed to terminate")]
    LpFailure,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Sampled lift of the reconstructed surface.
#[derive(Debug, Clone)]
pub struct LiftedCloud {
    points: Vec<Vec5>,
    indices: Vec<(usize, usize)>,
    unit: Vec<Vec5>,
}

impl LiftedCloud {
    /// Validates pairwise spacelike separation and that the origin is outside the hull.
    pub fn new(points: Vec<Vec5>, indices: Vec<(usize, usize)>) -> Result<Self, SliceError> {
        if points.is_empty() {
            return Err(SliceError::EmptyCloud);
        }
        assert_eq!(points.len(), indices.len());
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                let v = minkowski_inner(&points[a], &points[b]);
                let slack = 1e-6 + 1e-12 * points[a].norm() * points[b].norm();
                if v > -1.0 + slack {
                    return Err(SliceError::NotSpacelike(a, b, v));
                }
            }
        }
        let unit = points.iter().map(|p| p / p.norm()).collect();
        let cloud = Self { points, indices, unit };
        if cloud.origin_in_hull() {
            return Err(SliceError::OriginInHull);
        }
        Ok(cloud)
    }

    pub fn points(&self) -> &[Vec5] {
        &self.points
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One program: `Σ w_i ŷ_i = 0`, `Σ w_i = 1`, `w ≥ 0`.
    pub fn origin_in_hull(&self) -> bool {
        let mut b = vec![0.0; 6];
        b[5] = 1.0;
        let mut lp = DenseLp::new(6, b);
        for u in &self.unit {
            lp.push_column(&[u[0], u[1], u[2], u[3], u[4], 1.0]);
        }
        lp.feasible(LP_TOL)
    }

    /// Membership of `p` in the cone spanned by the lift, i.e. of `[p]` in `Conv(S)`.
    pub fn cone_contains(&self, p: &Vec5) -> bool {
        let n = p.norm();
        if n == 0.0 {
            return true;
        }
        let target = p / n;
        let mut lp = DenseLp::new(5, target.iter().copied().collect());
        for u in &self.unit {
            lp.push_column(u.as_slice());
        }
        lp.feasible(LP_TOL)
    }

    /// Extent `τ ∈ [0, π/2]` of the timelike geodesic from `x` along the unit normal `n`
    /// inside `Conv(S)`, from the extremal program in the module docs. Returns `None` when
    /// `x` itself is not in the cone.
    pub fn ray_extent(&self, x: &Vec5, n: &Vec5) -> Result<Option<f64>, SliceError> {
        let s = x.norm();
        let (xs, ns) = (x / s, n / s);
        let mut lp = DenseLp::new(5, xs.iter().copied().collect());
        for u in &self.unit {
            lp.push_column(u.as_slice());
        }
        lp.push_column((-ns).as_slice());
        let mut c = vec![0.0; self.unit.len() + 1];
        c[self.unit.len()] = -1.0;
        match lp.solve(&c, LP_TOL) {
            LpOutcome::Optimal { support, .. } => {
                let b = support.iter().find(|p| p.0 == self.unit.len()).map_or(0.0, |p| p.1);
                Ok(Some(b.atan()))
            }
            LpOutcome::Unbounded => Ok(Some(std::f64::consts::FRAC_PI_2)),
            LpOutcome::Infeasible(_) => Ok(None),
            LpOutcome::Failed => Err(SliceError::LpFailure),
        }
    }
}

/// Whether `p` is within Euclidean distance `tol` of the convex hull of the cloud points.
pub fn hull_contains(cloud: &LiftedCloud, p: &Vec5, tol: f64) -> bool {
    let shifted: Vec<Vec5> = cloud.points.iter().map(|y| y - p).collect();
    let (x, _) = wolfe::min_norm_point(&shifted);
    x.norm() <= tol
}

/// Measured normal slice at one base point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceProfile {
    pub base: (usize, usize),
    /// Direction angles `θ_j` in the `(n1, n2)` plane.
    pub angles: Vec<f64>,
    pub extents: Vec<f64>,
    /// `Σ ½ τ_j² Δθ`.
    pub volume: f64,
    /// Directions where membership re-entered after the first exit (ray-march only).
    pub reentries: usize,
}

fn midpoint_angles(m: usize) -> Vec<f64> {
    (0..m).map(|j| std::f64::consts::TAU * (j as f64 + 0.5) / m as f64).collect()
}

fn check_frame(frame: &Matrix5<f64>) -> Result<(), SliceError> {
    let e = scaled_gram_error(frame);
    if e > 1e-8 {
        return Err(SliceError::FrameMismatch(e));
    }
    Ok(())
}

fn normal_direction(frame: &Matrix5<f64>, theta: f64) -> Vec5 {
    frame.column(3) * theta.cos() + frame.column(4) * theta.sin()
}

fn volume_of(angles: &[f64], extents: &[f64]) -> f64 {
    let d = std::f64::consts::TAU / angles.len() as f64;
    extents.iter().map(|t| 0.5 * t * t * d).sum()
}

/// Slice by the extremal program, one per direction.
pub fn slice_profile_lp(cloud: &LiftedCloud, frame: &Matrix5<f64>, base: (usize, usize), m: usize) -> Result<SliceProfile, SliceError> {
    if m < 16 {
        return Err(SliceError::TooFewDirections(m));
    }
    check_frame(frame)?;
    let x: Vec5 = frame.column(0).into_owned();
    let angles = midpoint_angles(m);
    let mut extents = Vec::with_capacity(m);
    for &t in &angles {
        let e = cloud.ray_extent(&x, &normal_direction(frame, t))?.ok_or(SliceError::BaseNotInCloud)?;
        extents.push(e);
    }
    let volume = volume_of(&angles, &extents);
    Ok(SliceProfile { base, angles, extents, volume, reentries: 0 })
}

/// Slice by marching `τ` in steps of `step` with one bisection at the exit crossing, then
/// marching on to the end of the range to detect re-entry.
pub fn slice_profile(
    cloud: &LiftedCloud,
    frame: &Matrix5<f64>,
    base: (usize, usize),
    m: usize,
    step: f64,
) -> Result<SliceProfile, SliceError> {
    if m < 16 {
        return Err(SliceError::TooFewDirections(m));
    }
    if !(step > 0.0 && step <= 0.02) {
        return Err(SliceError::BadStep(step));
    }
    check_frame(frame)?;
    let x: Vec5 = frame.column(0).into_owned();
    if !cloud.cone_contains(&x) {
        return Err(SliceError::BaseNotInCloud);
    }
    let angles = midpoint_angles(m);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut extents = Vec::with_capacity(m);
    let mut reentries = 0;
    for &t in &angles {
        let n = normal_direction(frame, t);
        let inside = |tau: f64| cloud.cone_contains(&(x * tau.cos() + n * tau.sin()));
        let mut last_in = 0.0;
        let mut exit = None;
        let mut tau = step;
        while tau <= half_pi + 1e-12 {
            if inside(tau) {
                if exit.is_some() {
                    reentries += 1;
                    break;
                }
                last_in = tau;
            } else if exit.is_none() {
                exit = Some(tau);
            }
            tau += step;
        }
        let extent = match exit {
            Some(out) => {
                let mid = 0.5 * (last_in + out);
                if inside(mid) {
                    mid
                } else {
                    last_in
                }
            }
            None => last_in,
        };
        extents.push(extent.min(half_pi));
    }
    let volume = volume_of(&angles, &extents);
    Ok(SliceProfile { base, angles, extents, volume, reentries })
}

/// `|sin τ/τ|^{q−1} · |cos²τ − sin²τ (a² + b²)|`, with the limit 1 for `τ < 1e−8`.
pub fn normal_jacobian(a: f64, b: f64, tau: f64, q: u32) -> f64 {
    assert!(q >= 1, "normal codimension must be positive");
    if tau < 1e-8 {
        return 1.0;
    }
    let (s, c) = tau.sin_cos();
    (s / tau).abs().powi(q as i32 - 1) * (c * c - s * s * (a * a + b * b)).abs()
}

/// Largest `s` with `(sin s/s)(cos²s − (8/3) sin²s) = ½`, by bisection.
pub fn jacobian_bound_root() -> f64 {
    let f = |s: f64| (s.sin() / s) * (s.cos().powi(2) - 8.0 / 3.0 * s.sin().powi(2)) - 0.5;
    let (mut lo, mut hi) = (1e-6, 0.6);
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ν(s) = cos|s| σ + (sin|s|/|s|)(s1 n1 + s2 n2)` for a frame `F = (σ, ê1, ê2, n1, n2)`.
pub fn normal_exponential(frame: &Matrix5<f64>, s1: f64, s2: f64) -> Vec5 {
    let tau = s1.hypot(s2);
    let sinc = if tau < 1e-12 { 1.0 } else { tau.sin() / tau };
    frame.column(0) * tau.cos() + (frame.column(3) * s1 + frame.column(4) * s2) * sinc
}

/// Finite-difference Jacobian of the normal exponential at node `(i, j)` and normal
/// coordinates `(s1, s2)`: `√|det(dνᵀ η dν)| / e^{2λ}`, with fourth-order differences of the
/// frame in `x, y` and analytic derivatives in `s`.
pub fn normal_jacobian_fd(frame: &FrameField, node: (usize, usize), lambda: f64, h: f64, s: (f64, f64)) -> Option<f64> {
    let (i, j) = node;
    if i < frame.i0 + 2 || j < frame.j0 + 2 || i + 2 >= frame.i0 + frame.nx || j + 2 >= frame.j0 + frame.ny {
        return None;
    }
    let nu = |f: &Matrix5<f64>| normal_exponential(f, s.0, s.1);
    let d4 = |m2: Vec5, m1: Vec5, p1: Vec5, p2: Vec5| (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
    let fx = |di: isize| nu(frame.at((i as isize + di) as usize, j).unwrap());
    let fy = |dj: isize| nu(frame.at(i, (j as isize + dj) as usize).unwrap());
    let dx = d4(fx(-2), fx(-1), fx(1), fx(2));
    let dy = d4(fy(-2), fy(-1), fy(1), fy(2));
    let f = frame.at(i, j).unwrap();
    let (sigma, n1, n2): (Vec5, Vec5, Vec5) = (f.column(0).into(), f.column(3).into(), f.column(4).into());
    let tau = s.0.hypot(s.1);
    let (sn, cs) = tau.sin_cos();
    let (sinc, dsinc) = if tau < 1e-6 { (1.0 - tau * tau / 6.0, -tau / 3.0) } else { (sn / tau, (tau * cs - sn) / (tau * tau)) };
    let normal = n1 * s.0 + n2 * s.1;
    let (u1, u2) = if tau < 1e-12 { (0.0, 0.0) } else { (s.0 / tau, s.1 / tau) };
    let ds1 = -sigma * (sn * u1) + normal * (dsinc * u1) + n1 * sinc;
    let ds2 = -sigma * (sn * u2) + normal * (dsinc * u2) + n2 * sinc;
    let cols = [dx, dy, ds1, ds2];
    let mut g = nalgebra::Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            g[(a, b)] = minkowski_inner(&cols[a], &cols[b]);
        }
    }
    Some(g.determinant().abs().sqrt() / (2.0 * lambda).exp())
}

/// Components `(a, b) = (⟨II(ê1,ê1), n̂⟩, ⟨II(ê1,ê2), n̂⟩)` up to sign, for
/// `n̂ = cos θ n1 + sin θ n2` and coefficients `[a1, a2, b1, b2]`.
pub fn ii_components(coeffs: &[f64; 4], theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (coeffs[0] * c + coeffs[1] * s, coeffs[2] * c + coeffs[3] * s)
}

/// Jacobian-weighted measure `Σ_j Δθ ∫_0^{τ_j} J(a_j, b_j, τ) τ dτ` of a measured slice
/// (normal codimension 2), by Simpson's rule in `τ`.
pub fn weighted_slice_volume(profile: &SliceProfile, coeffs: &[f64; 4]) -> f64 {
    let d = std::f64::consts::TAU / profile.angles.len() as f64;
    let mut total = 0.0;
    for (&th, &ext) in profile.angles.iter().zip(&profile.extents) {
        if ext <= 0.0 {
            continue;
        }
        let (a, b) = ii_components(coeffs, th);
        let g = |t: f64| normal_jacobian(a, b, t, 2) * t;
        let n = 64;
        let hh = ext / n as f64;
        let mut s = g(0.0) + g(ext);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * hh);
        }
        total += d * s * hh / 3.0;
    }
    total
}

/// Empirical Seppi constant: the largest `C` with `exp_x(C II(v,v)) ∈ Conv(S)` for the
/// sampled unit tangents `v = cos φ ê1 + sin φ ê2`, `φ = πj/k`. Since membership along each
/// geodesic is an interval, this is `min_v τ(n̂_v) / ‖II(v,v)‖` exactly. Returns `+∞` when
/// `‖II(v,v)‖ < 1e−9` for every sampled `v`.
pub fn seppi_probe(cloud: &LiftedCloud, frame: &Matrix5<f64>, coeffs: &[f64; 4], k: usize) -> Result<f64, SliceError> {
    if k < 8 {
        return Err(SliceError::TooFewTangentDirections(k));
    }
    check_frame(frame)?;
    let x: Vec5 = frame.column(0).into_owned();
    let [a1, a2, b1, b2] = *coeffs;
    let mut best = f64::INFINITY;
    for j in 0..k {
        let phi = std::f64::consts::PI * j as f64 / k as f64;
        let (s2, c2) = (2.0 * phi).sin_cos();
        // II(v,v) = cos 2φ II(ê1,ê1) + sin 2φ II(ê1,ê2) since II is traceless.
        let (c1, c2n) = (c2 * a1 + s2 * b1, c2 * a2 + s2 * b2);
        let norm = c1.hypot(c2n);
        if norm < 1e-9 {
            continue;
        }
        let n = normal_direction(frame, c2n.atan2(c1));
        let tau = cloud.ray_extent(&x, &n)?.ok_or(SliceError::BaseNotInCloud)?;
        best = best.min(tau / norm);
    }
    Ok(best)
}

/// Lift cloud on the node block within `half_width` nodes of `base`, sampled every
/// `stride` nodes (always including `base`), with the frame seeded to [`standard_seed`] at
/// `base` to keep coordinates well scaled. Returns the cloud and the local frame field.
pub fn local_cloud(
    conn: &ConnectionForm,
    base: (usize, usize),
    half_width: usize,
    stride: usize,
) -> Result<(LiftedCloud, FrameField), SliceError> {
    let g = &conn.grid;
    let stride = stride.max(1);
    let i0 = base.0.saturating_sub(half_width);
    let j0 = base.1.saturating_sub(half_width);
    let i1 = (base.0 + half_width).min(g.nx - 1);
    let j1 = (base.1 + half_width).min(g.ny - 1);
    let frame = integrate_frame_region(conn, base, &standard_seed(), (i0, i1, j0, j1))?;
    let mut points = Vec::new();
    let mut indices = Vec::new();
    for j in j0..=j1 {
        if (j as isize - base.1 as isize).rem_euclid(stride as isize) != 0 {
            continue;
        }
        for i in i0..=i1 {
            if (i as isize - base.0 as isize).rem_euclid(stride as isize) != 0 {
                continue;
            }
            points.push(frame.sigma(i, j).unwrap());
            indices.push((i, j));
        }
    }
    Ok((LiftedCloud::new(points, indices)?, frame))
}

/// [`slice_profile_lp`] on a [`local_cloud`] at every base point, in parallel. Results keep
/// the order of `bases`.
pub fn local_profiles(
    conn: &ConnectionForm,
    bases: &[(usize, usize)],
    half_width: usize,
    stride: usize,
    m: usize,
) -> Vec<Result<SliceProfile, SliceError>> {
    bases
        .par_iter()
        .map(|&b| {
            let (cloud, frame) = local_cloud(conn, b, half_width, stride)?;
            slice_profile_lp(&cloud, frame.at(b.0, b.1).ok_or(SliceError::BaseNotInCloud)?, b, m)
        })
        .collect()
}
