//! The coupled elliptic system for maximal surfaces in the conformal gauge.
//!
//! The induced metric is written `g = e^{2λ}|dz|²` over a flat background and the pair
//! `(λ, μ₂)` is the unknown. With `μ₁ = ½ ln|q| + ln 2 − 2λ` the system reads
//!
//! ```text
//!   R_λ = Δ₀λ  − e^{2λ} + 8|q| e^{−2λ} cosh μ₂ = 0
//!   R_μ = Δ₀μ₂ − 16|q| e^{−2λ} sinh μ₂           = 0
//! ```
//!
//! and the Barbot state `e^{4λ} = 8|q|, μ₂ = 0` is an exact root. The discrete `R_λ` also
//! subtracts [`barbot_balance`] so that this stays true on the grid. Everything geometric
//! (`u, v, K, det II, ‖II‖², axes`) is derived from `(λ, μ₂)` by closed forms that stay
//! finite at zeros of `q`.

mod grid;
pub mod io;
mod linear;
mod newton;
mod quartic;

pub use grid::{BoundaryKind, Grid2D};
pub use linear::LinearSolver;
pub use newton::{solve, solve_with, BoundaryData, Solution, SolveOptions, SolveReport};
pub use quartic::QuarticDifferential;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("grid needs at least 8 nodes per side, got {nx} x {ny}")]
    GridTooSmall { nx: usize, ny: usize },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("field arrays have length {got}, grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite entry in {field} at node {node}")]
    NonFinite { field: &'static str, node: usize },
    #[error("node ({x}, {y}) lies within {radius} of a zero of q")]
    ZeroOfQOnGrid { x: f64, y: f64, radius: f64 },
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("damped Newton step stalled below the step-size floor at residual {residual:e}")]
    SingularJacobian { residual: f64 },
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

/// How nodes close to zeros of `q` are treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroPolicy {
    /// Reject nodes within `3h` of a zero.
    Strict,
    /// Reject nodes within the given radius of a zero.
    StrictRadius(f64),
    /// Accept every node; all closed forms used are regular at zeros.
    Tolerant,
}

impl ZeroPolicy {
    pub(crate) fn check(&self, q: &QuarticDifferential, grid: &Grid2D) -> Result<(), SolverError> {
        let radius = match *self {
            ZeroPolicy::Strict => 3.0 * grid.h,
            ZeroPolicy::StrictRadius(r) => r,
            ZeroPolicy::Tolerant => return Ok(()),
        };
        if q.roots().is_empty() {
            return Ok(());
        }
        for k in 0..grid.len() {
            let z = grid.z(k);
            if q.distance_to_roots(z) < radius {
                return Err(SolverError::ZeroOfQOnGrid { x: z.re, y: z.im, radius });
            }
        }
        Ok(())
    }
}

/// Grid fields `(λ, μ₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub lambda: Vec<f64>,
    pub mu2: Vec<f64>,
}

impl FieldState {
    pub fn constant(grid: &Grid2D, lambda: f64, mu2: f64) -> Self {
        Self { lambda: vec![lambda; grid.len()], mu2: vec![mu2; grid.len()] }
    }

    /// Checks shape and finiteness.
    pub fn validate(&self, grid: &Grid2D) -> Result<(), SolverError> {
        for (name, f) in [("lambda", &self.lambda), ("mu2", &self.mu2)] {
            if f.len() != grid.len() {
                return Err(SolverError::ShapeMismatch { expected: grid.len(), got: f.len() });
            }
            if let Some(node) = f.iter().position(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite { field: name, node });
            }
        }
        Ok(())
    }
}

/// Geometric fields derived from a [`FieldState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFields {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub mu1: Vec<f64>,
    /// Sectional curvature, algebraic route.
    pub k: Vec<f64>,
    pub det_ii: Vec<f64>,
    pub norm_ii2: Vec<f64>,
    /// Major axis `‖A‖` of the second fundamental form.
    pub axis_major: Vec<f64>,
    /// Minor axis `‖a‖`.
    pub axis_minor: Vec<f64>,
    /// Independent curvature estimate `−e^{−2λ}Δλ` on the fourth-order wide stencil; `NaN`
    /// where the stencil does not fit.
    pub k_fd: Vec<f64>,
}

/// `|q|` at every node.
pub fn q_abs(q: &QuarticDifferential, grid: &Grid2D) -> Vec<f64> {
    (0..grid.len()).map(|k| q.eval(grid.z(k)).norm()).collect()
}

/// Residual pair on interior nodes (zero rows on the Dirichlet boundary), strict policy.
pub fn residual(state: &FieldState, q: &QuarticDifferential, grid: &Grid2D) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    residual_with(state, q, grid, ZeroPolicy::Strict)
}

pub fn residual_with(
    state: &FieldState,
    q: &QuarticDifferential,
    grid: &Grid2D,
    policy: ZeroPolicy,
) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    state.validate(grid)?;
    policy.check(q, grid)?;
    Ok(residual_raw(state, &q_abs(q, grid), &barbot_balance(q, grid), grid))
}

/// Background radii between which [`barbot_balance`] is switched on around each zero of `q`.
pub const BALANCE_RAMP: (f64, f64) = (1.0, 2.0);

/// `χ·Δ_h φ` for the Barbot profile `φ = ¼ ln(8|q|)` at interior nodes, where `χ` ramps
/// smoothly from 0 at distance [`BALANCE_RAMP`]`.0` from the nearest zero of `q` to 1 at
/// distance `.1`.
///
/// `φ` is harmonic away from zeros, so `Δ_h φ` is pure truncation error of size `O(h²/r⁴)`.
/// Where the solution is close to `φ` (away from the curvature domains around zeros) that
/// error is also the truncation error of the solution, and subtracting it from `R_λ`
/// makes the Barbot state an exact discrete root. The discrete maximum principle then
/// gives `K ≤ 0` on the grid and not just in the limit `h → 0`. Close to a zero `λ` and `φ`
/// differ at leading order, so the correction is switched off there. The ramp is smooth,
/// which keeps the scheme second-order consistent. For constant `q` the correction
/// vanishes identically.
pub fn barbot_balance(q: &QuarticDifferential, grid: &Grid2D) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    if q.roots().is_empty() {
        return out;
    }
    let (r1, r2) = BALANCE_RAMP;
    let phi: Vec<f64> = q_abs(q, grid).iter().map(|a| 0.25 * (8.0 * a).ln()).collect();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary(i, j) {
                continue;
            }
            let k = grid.idx(i, j);
            let s = ((q.distance_to_roots(grid.z(k)) - r1) / (r2 - r1)).clamp(0.0, 1.0);
            let chi = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
            if chi > 0.0 {
                out[k] = chi * grid.laplacian(&phi, i, j).unwrap_or(0.0);
            }
        }
    }
    out
}

pub(crate) fn residual_raw(state: &FieldState, qa: &[f64], balance: &[f64], grid: &Grid2D) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let mut rl = vec![0.0; n];
    let mut rm = vec![0.0; n];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary(i, j) {
                continue;
            }
            let k = grid.idx(i, j);
            let (l, m) = (state.lambda[k], state.mu2[k]);
            let em = qa[k] * (-2.0 * l).exp();
            rl[k] = grid.laplacian(&state.lambda, i, j).unwrap() - balance[k] - (2.0 * l).exp() + 8.0 * em * m.cosh();
            rm[k] = grid.laplacian(&state.mu2, i, j).unwrap() - 16.0 * em * m.sinh();
        }
    }
    (rl, rm)
}

/// Derived fields, strict policy.
pub fn derived_fields(state: &FieldState, q: &QuarticDifferential, grid: &Grid2D) -> Result<GeometryFields, SolverError> {
    derived_fields_with(state, q, grid, ZeroPolicy::Strict)
}

pub fn derived_fields_with(
    state: &FieldState,
    q: &QuarticDifferential,
    grid: &Grid2D,
    policy: ZeroPolicy,
) -> Result<GeometryFields, SolverError> {
    state.validate(grid)?;
    policy.check(q, grid)?;
    let qa = q_abs(q, grid);
    let n = grid.len();
    let mut f = GeometryFields {
        u: vec![0.0; n],
        v: vec![0.0; n],
        mu1: vec![0.0; n],
        k: vec![0.0; n],
        det_ii: vec![0.0; n],
        norm_ii2: vec![0.0; n],
        axis_major: vec![0.0; n],
        axis_minor: vec![0.0; n],
        k_fd: vec![f64::NAN; n],
    };
    let ln2 = std::f64::consts::LN_2;
    for k in 0..n {
        let (l, m) = (state.lambda[k], state.mu2[k]);
        // e^{2μ₁} = 4|q|e^{−4λ}, kept in product form so zeros of q stay finite.
        let e2mu1 = 4.0 * qa[k] * (-4.0 * l).exp();
        let emu1 = 2.0 * qa[k].sqrt() * (-2.0 * l).exp();
        let mu1 = 0.5 * qa[k].ln() + ln2 - 2.0 * l;
        f.mu1[k] = mu1;
        f.u[k] = 2.0 * mu1 + m;
        f.v[k] = 2.0 * mu1 - m;
        let sum = 2.0 * e2mu1 * m.cosh();
        f.k[k] = -1.0 + sum;
        f.det_ii[k] = 2.0 * e2mu1 * m.sinh();
        f.norm_ii2[k] = 2.0 * sum;
        f.axis_major[k] = std::f64::consts::SQRT_2 * emu1 * (0.5 * m).cosh();
        f.axis_minor[k] = std::f64::consts::SQRT_2 * emu1 * (0.5 * m.abs()).sinh();
        let (i, j) = grid.ij(k);
        let interior = grid.bc == BoundaryKind::Periodic || (i >= 2 && j >= 2 && i + 2 < grid.nx && j + 2 < grid.ny);
        if interior {
            if let Some(lap) = grid.laplacian_wide(&state.lambda, i, j) {
                f.k_fd[k] = -(-2.0 * l).exp() * lap;
            }
        }
    }
    Ok(f)
}

/// The Barbot state `λ = ¼ ln(8|q|)`, `μ₂ = 0` (infinite at zeros of `q`).
pub fn barbot_state(q: &QuarticDifferential, grid: &Grid2D) -> FieldState {
    let qa = q_abs(q, grid);
    FieldState { lambda: qa.iter().map(|a| 0.25 * (8.0 * a).ln()).collect(), mu2: vec![0.0; grid.len()] }
}

/// Barbot-like state with `|q|` replaced by `√(|q|² + δ²)`, finite everywhere; a starting
/// guess for differentials with zeros in the domain.
pub fn regularized_barbot_state(q: &QuarticDifferential, grid: &Grid2D, delta: f64) -> FieldState {
    let qa = q_abs(q, grid);
    FieldState { lambda: qa.iter().map(|a| 0.25 * (8.0 * (a * a + delta * delta).sqrt()).ln()).collect(), mu2: vec![0.0; grid.len()] }
}

/// Perturbed boundary data: on the boundary `μ₂ = amplitude · cos(2π·mode·s/P)` with `s`
/// the boundary arclength and `P` the perimeter, and `λ` chosen so that the sectional
/// curvature there equals `−kappa`:
///
/// ```text
///   e^{4λ} = 8|q| cosh μ₂ / (1 − kappa)
/// ```
///
/// Interior values are the Barbot state. With `kappa = 0` and `amplitude = 0` this is the
/// Barbot state itself.
pub fn perturbed_boundary_state(q: &QuarticDifferential, grid: &Grid2D, amplitude: f64, mode: u32, kappa: f64) -> FieldState {
    let mut st = barbot_state(q, grid);
    let qa = q_abs(q, grid);
    let (w, hgt) = ((grid.nx - 1) as f64 * grid.h, (grid.ny - 1) as f64 * grid.h);
    let perimeter = 2.0 * (w + hgt);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_boundary(i, j) {
                continue;
            }
            let (x, y) = (i as f64 * grid.h, j as f64 * grid.h);
            // Arclength counter-clockwise from the lower-left corner.
            let s = if j == 0 {
                x
            } else if i + 1 == grid.nx {
                w + y
            } else if j + 1 == grid.ny {
                w + hgt + (w - x)
            } else {
                2.0 * w + hgt + (hgt - y)
            };
            let m = amplitude * (std::f64::consts::TAU * mode as f64 * s / perimeter).cos();
            let k = grid.idx(i, j);
            st.mu2[k] = m;
            st.lambda[k] = 0.25 * (8.0 * qa[k] * m.cosh() / (1.0 - kappa)).ln();
        }
    }
    st
}

/// Outcome of the bound suite on a converged state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub k_max: f64,
    pub norm_ii2_max: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub mu1_max: f64,
    pub eps_h: f64,
    pub k_tol: f64,
    pub norm_ii2_tol: f64,
    pub uv_bound: f64,
    pub mu1_bound: f64,
    pub pass: bool,
}

/// Pointwise bounds `K ≤ 1e−8`, `‖II‖² ≤ 2 + 1e−8`, `u, v ≤ ln(2/3) + ε_h`,
/// `μ₁ ≤ ½ ln ½ + ε_h` with `ε_h = 10h²`.
pub fn bound_suite(fields: &GeometryFields, h: f64) -> BoundReport {
    let max = |v: &[f64]| v.iter().copied().filter(|x| !x.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    let eps_h = 10.0 * h * h;
    let k_tol = 1e-8;
    let norm_ii2_tol = 2.0 + 1e-8;
    let uv_bound = (2.0f64 / 3.0).ln() + eps_h;
    let mu1_bound = 0.5 * 0.5f64.ln() + eps_h;
    let (k_max, n_max, u_max, v_max, m_max) = (max(&fields.k), max(&fields.norm_ii2), max(&fields.u), max(&fields.v), max(&fields.mu1));
    BoundReport {
        k_max,
        norm_ii2_max: n_max,
        u_max,
        v_max,
        mu1_max: m_max,
        eps_h,
        k_tol,
        norm_ii2_tol,
        uv_bound,
        mu1_bound,
        pass: k_max <= k_tol && n_max <= norm_ii2_tol && u_max <= uv_bound && v_max <= uv_bound && m_max <= mu1_bound,
    }
}

/// `max |K − (−1 + e^u + e^v)|` over all nodes.
pub fn gauss_identity_defect(fields: &GeometryFields) -> f64 {
    (0..fields.k.len()).map(|k| (fields.k[k] - (-1.0 + fields.u[k].exp() + fields.v[k].exp())).abs()).fold(0.0, f64::max)
}

/// `max |K − K_fd|` over nodes where the wide stencil fits, skipping `margin` extra rings
/// next to the boundary.
pub fn curvature_route_defect(fields: &GeometryFields, grid: &Grid2D, margin: usize) -> f64 {
    let mut m: f64 = 0.0;
    for j in margin..grid.ny.saturating_sub(margin) {
        for i in margin..grid.nx.saturating_sub(margin) {
            let k = grid.idx(i, j);
            if fields.k_fd[k].is_finite() {
                m = m.max((fields.k[k] - fields.k_fd[k]).abs());
            }
        }
    }
    m
}
