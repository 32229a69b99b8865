//! Curvature sublevel domains, intrinsic distance to them, and exponential decay.
//!
//! With `D = D^k = {K < k}` and `ρ = d_g(·, D)` under `g = e^{2λ}|dz|²`, geometric
//! quantities `f` are expected to satisfy `|f| ≤ C e^{−αρ}`. The growing domains
//! `D_t = {ρ < t}` obey
//!
//! ```text
//!   Vol(∂D_s) − Vol(∂D_t) ≤ (4π #π₀(D) + ∫|K| dA)(s − t),    t ≤ s,
//! ```
//!
//! which is checked here on grid contours, together with the co-area identity
//! `∫ φ(ρ) dA = ∫ φ(t) Vol(∂D_t) dt`.

pub mod contour;
pub mod fmm;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vortex_solver::{FieldState, GeometryFields, Grid2D, QuarticDifferential};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayError {
    #[error("curvature threshold k = {0} must lie in (-1/3, 0)")]
    BadThreshold(f64),
    #[error("decay fit needs at least {needed} usable samples, found {found}")]
    InsufficientData { found: usize, needed: usize },
    #[error("diagnostics need at least 5 t-levels, got {0}")]
    TooFewLevels(usize),
    #[error("array of length {found} does not match grid of {expected} nodes")]
    ShapeMismatch { expected: usize, found: usize },
}

/// Minimum number of samples for a decay fit.
pub const MIN_FIT_SAMPLES: usize = 30;

/// Intrinsic distance to a source set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceField {
    pub rho: Vec<f64>,
    /// Empty source: every distance is `+∞` (the Barbot situation where `D^k` is empty).
    pub degenerate: bool,
}

impl DistanceField {
    pub fn max_finite(&self) -> f64 {
        self.rho.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max)
    }
}

/// First-order fast-marching distance to `source` under `e^{2λ}|dz|²`.
pub fn distance_field(lambda: &[f64], grid: &Grid2D, source: &[bool]) -> DistanceField {
    if !source.iter().any(|&s| s) {
        return DistanceField { rho: vec![f64::INFINITY; grid.len()], degenerate: true };
    }
    DistanceField { rho: fmm::fast_march(lambda, grid, source), degenerate: false }
}

/// `|‖∇ρ‖_g − 1|` by central differences at interior nodes (NaN elsewhere).
pub fn eikonal_residual(df: &DistanceField, lambda: &[f64], grid: &Grid2D) -> Vec<f64> {
    let mut out = vec![f64::NAN; grid.len()];
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let k = grid.idx(i, j);
            let gx = (df.rho[grid.idx(i + 1, j)] - df.rho[grid.idx(i - 1, j)]) / (2.0 * grid.h);
            let gy = (df.rho[grid.idx(i, j + 1)] - df.rho[grid.idx(i, j - 1)]) / (2.0 * grid.h);
            out[k] = ((gx.hypot(gy)) * (-lambda[k]).exp() - 1.0).abs();
        }
    }
    out
}

/// Sublevel set, its growth and its curvature mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainStats {
    pub k: f64,
    pub mask: Vec<bool>,
    pub component_count: usize,
    /// Levels actually used (requested `t` shifted by `h/7` off the grid).
    pub t_levels: Vec<f64>,
    pub boundary_lengths: Vec<f64>,
    /// `∫|K| dA` with `dA = e^{2λ} dx dy`.
    pub total_abs_k: f64,
    pub rho: DistanceField,
}

fn check_len(n: usize, grid: &Grid2D) -> Result<(), DecayError> {
    if n != grid.len() {
        return Err(DecayError::ShapeMismatch { expected: grid.len(), found: n });
    }
    Ok(())
}

/// Number of 4-connected components of `mask`.
pub fn count_components(mask: &[bool], grid: &Grid2D) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = grid.ij(k);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < grid.nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - grid.nx);
            }
            if j + 1 < grid.ny {
                visit(k + grid.nx);
            }
        }
    }
    count
}

/// `∫ f dA` by node-centred cells with area element `e^{2λ}`.
pub fn area_integral(f: impl Fn(usize) -> f64, lambda: &[f64], grid: &Grid2D) -> f64 {
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            f(k) * (2.0 * lambda[k]).exp() * grid.cell_weight(i, j)
        })
        .sum()
}

/// `∫|K| dA` over nodes farther than `radius` from every point in `exclude`.
pub fn total_abs_k_excluding(curvature: &[f64], lambda: &[f64], grid: &Grid2D, exclude: &[Complex64], radius: f64) -> f64 {
    area_integral(
        |k| {
            let z = grid.z(k);
            if exclude.iter().any(|c| (z - c).norm() < radius) || !curvature[k].is_finite() {
                0.0
            } else {
                curvature[k].abs()
            }
        },
        lambda,
        grid,
    )
}

/// Extrapolation to radius 0 assuming `I(r) = I₀ − c r²`.
pub fn richardson_zero_radius(r1: f64, i1: f64, r2: f64, i2: f64) -> f64 {
    (r2 * r2 * i1 - r1 * r1 * i2) / (r2 * r2 - r1 * r1)
}

/// Curvature mass with discs around the zeros of `q` removed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PuncturedMass {
    pub radius: f64,
    /// `∫|K|` outside discs of `radius` and of `2·radius`.
    pub outside_radius: f64,
    pub outside_double: f64,
    /// Richardson extrapolation of the pair to radius zero.
    pub extrapolated: f64,
}

/// `∫|K|` punctured at `radius` and `2·radius` around `zeros`, extrapolated to zero radius.
pub fn punctured_curvature_mass(curvature: &[f64], lambda: &[f64], grid: &Grid2D, zeros: &[Complex64], radius: f64) -> PuncturedMass {
    let a = total_abs_k_excluding(curvature, lambda, grid, zeros, radius);
    let b = total_abs_k_excluding(curvature, lambda, grid, zeros, 2.0 * radius);
    PuncturedMass { radius, outside_radius: a, outside_double: b, extrapolated: richardson_zero_radius(radius, a, 2.0 * radius, b) }
}

/// `D^k`, its components, `∂D_t` lengths at `t + h/7` and `∫|K|`.
pub fn sublevel_boundary_lengths(
    curvature: &[f64],
    lambda: &[f64],
    grid: &Grid2D,
    k: f64,
    t_levels: &[f64],
) -> Result<DomainStats, DecayError> {
    if !(k > -1.0 / 3.0 && k < 0.0) {
        return Err(DecayError::BadThreshold(k));
    }
    check_len(curvature.len(), grid)?;
    check_len(lambda.len(), grid)?;
    let mask: Vec<bool> = curvature.iter().map(|&c| c < k).collect();
    let component_count = count_components(&mask, grid);
    let rho = distance_field(lambda, grid, &mask);
    let shifted: Vec<f64> = t_levels.iter().map(|t| t + grid.h / 7.0).collect();
    let boundary_lengths =
        shifted.iter().map(|&t| if rho.degenerate { 0.0 } else { contour::level_length(&rho.rho, lambda, grid, t) }).collect();
    let total_abs_k = total_abs_k_excluding(curvature, lambda, grid, &[], 0.0);
    Ok(DomainStats { k, mask, component_count, t_levels: shifted, boundary_lengths, total_abs_k, rho })
}

/// The rate `min(√κ, (−(n−1)√κ + √((n−1)²κ + 4c))/2)` from the barrier argument.
pub fn barrier_rate(n: u32, kappa: f64, c: f64) -> f64 {
    assert!(n >= 2 && kappa > 0.0 && c > 0.0, "barrier_rate needs n ≥ 2, κ > 0, c > 0");
    let s = kappa.sqrt();
    let m = (n - 1) as f64;
    let root = (-m * s + (m * m * kappa + 4.0 * c).sqrt()) / 2.0;
    s.min(root)
}

/// Barrier constant `c = 4(1/3 + k)` for the `|μ₂|` equation at threshold `k`.
pub fn mu2_barrier_constant(k: f64) -> f64 {
    4.0 * (1.0 / 3.0 + k)
}

/// Least-squares fit `ln|f| ≈ ln C − αρ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub alpha: f64,
    pub rmse: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// The default fit window `[2, 0.8·max ρ]`.
pub fn default_window(rho: &DistanceField) -> (f64, f64) {
    (2.0, 0.8 * rho.max_finite())
}

/// Fit over `(ρ, f)` samples with `ρ` in the window and `|f| > 1e−14`.
pub fn fit_decay_samples(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, DecayError> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, f)| r.is_finite() && *r >= window.0 && *r <= window.1 && f.abs() > 1e-14 && f.is_finite())
        .map(|&(r, f)| (r, f.abs().ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(DecayError::InsufficientData { found: pts.len(), needed: MIN_FIT_SAMPLES });
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(DecayError::InsufficientData { found: 1, needed: MIN_FIT_SAMPLES });
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rmse = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { c: icpt.exp(), alpha: -slope, rmse, window, samples: pts.len() })
}

/// Fit of a node field against the distance field.
pub fn fit_decay(field: &[f64], rho: &DistanceField, window: (f64, f64)) -> Result<DecayFit, DecayError> {
    let samples: Vec<(f64, f64)> = rho.rho.iter().copied().zip(field.iter().copied()).collect();
    fit_decay_samples(&samples, window)
}

/// `e^{−λ}·√(|∇e^{u/2}|² + |∇e^{v/2}|²)`, a proxy for `‖∇II‖` (zero on Barbot), with
/// central differences at interior nodes and NaN on the boundary.
pub fn grad_ii_proxy(fields: &GeometryFields, state: &FieldState, grid: &Grid2D) -> Vec<f64> {
    let a: Vec<f64> = fields.u.iter().map(|u| (0.5 * u).exp()).collect();
    let b: Vec<f64> = fields.v.iter().map(|v| (0.5 * v).exp()).collect();
    let mut out = vec![f64::NAN; grid.len()];
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let k = grid.idx(i, j);
            let d = |f: &[f64]| {
                let gx = (f[grid.idx(i + 1, j)] - f[grid.idx(i - 1, j)]) / (2.0 * grid.h);
                let gy = (f[grid.idx(i, j + 1)] - f[grid.idx(i, j - 1)]) / (2.0 * grid.h);
                gx * gx + gy * gy
            };
            out[k] = (-state.lambda[k]).exp() * (d(&a) + d(&b)).sqrt();
        }
    }
    out
}

/// The rough bracket away from `D`: `|μ₂| ≤ ln(½) − ln(1/3 + k)` and
/// `½ln(1/3 + k) ≤ μ₁ ≤ ½ln(½)`, each with allowance `ε_h = 10h²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketReport {
    pub mu2_max: f64,
    pub mu2_bound: f64,
    pub mu1_min: f64,
    pub mu1_lower: f64,
    pub mu1_max: f64,
    pub mu1_upper: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn bracket_check(fields: &GeometryFields, state: &FieldState, rho: &DistanceField, k: f64, h: f64) -> BracketReport {
    let eps = 10.0 * h * h;
    let c0 = 1.0 / 3.0 + k;
    let (mut m2, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..rho.rho.len() {
        if rho.rho[i] > 0.0 && fields.mu1[i].is_finite() {
            m2 = m2.max(state.mu2[i].abs());
            lo = lo.min(fields.mu1[i]);
            hi = hi.max(fields.mu1[i]);
        }
    }
    let mu2_bound = 0.5f64.ln() - c0.ln();
    let (mu1_lower, mu1_upper) = (0.5 * c0.ln(), 0.5 * 0.5f64.ln());
    let pass = m2 <= mu2_bound + eps && (lo.is_infinite() || (lo >= mu1_lower - eps && hi <= mu1_upper + eps));
    BracketReport { mu2_max: m2, mu2_bound, mu1_min: lo, mu1_lower, mu1_max: hi, mu1_upper, tolerance: eps, pass }
}

/// Cross-check results of the integral inequalities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Smallest `(4π N + ∫|K|)(s − t) + ε − (L_s − L_t)` over sampled `t < s`.
    pub growth_min_slack: f64,
    pub growth_tolerance: f64,
    pub growth_pass: bool,
    /// `∫_{ρ > t₀} e^{−ρ} dA` and `∫_{t₀} e^{−t} L(t) dt`.
    pub coarea_area_side: f64,
    pub coarea_level_side: f64,
    pub coarea_relative_error: Option<f64>,
    pub coarea_pass: bool,
    pub zero_count: usize,
    /// `∫|K| / (2π Z)` and `∫|K| / (4π Z)`; `None` when `Z = 0`.
    pub curvature_mass_ratio_2pi: Option<f64>,
    pub curvature_mass_ratio_4pi: Option<f64>,
    /// `max |K(x)|/|K(y)|` over pairs within intrinsic distance 1 (`None` if `K ≡ 0`).
    pub harnack_constant: Option<f64>,
    /// `∫|K|^{1/2} / ∫|K|`, `∫|K|² / ∫|K|`, sampled `⟨V̄⟩·Area / ∫|K|`.
    pub ratio_abs_k_half: Option<f64>,
    pub ratio_abs_k_two: Option<f64>,
    pub ratio_vbar: Option<f64>,
    /// Set when `∫|K| = 0`, which leaves every ratio above undefined.
    pub ratios_undefined: bool,
}

/// Largest `|K(x)|/|K(y)|` over node pairs with `|x − y|·max e^λ ≤ 1` (hence `d_g ≤ 1`),
/// skipping nodes with `|K| ≤ 1e−10`.
pub fn harnack_constant(curvature: &[f64], lambda: &[f64], grid: &Grid2D) -> Option<f64> {
    let emax = lambda.iter().map(|l| l.exp()).fold(0.0, f64::max);
    let r = 1.0 / (grid.h * emax);
    let ri = r.floor() as isize;
    let mut best: Option<f64> = None;
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let ky = grid.idx(i as usize, j as usize);
            let y = curvature[ky].abs();
            if !(y > 1e-10) {
                continue;
            }
            for dj in -ri..=ri {
                for di in -ri..=ri {
                    if (di * di + dj * dj) as f64 > r * r {
                        continue;
                    }
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= grid.nx as isize || b >= grid.ny as isize {
                        continue;
                    }
                    let x = curvature[grid.idx(a as usize, b as usize)].abs();
                    if x > 1e-10 {
                        let ratio = x / y;
                        best = Some(best.map_or(ratio, |c: f64| c.max(ratio)));
                    }
                }
            }
        }
    }
    best
}

/// Co-area sides for `φ = e^{−ρ}` above `t0`: the area integral uses 8×8 sub-samples per
/// cell with bilinear `ρ` and `λ`, the level integral uses `levels` contour lengths and the
/// trapezoid rule up to `max ρ`.
pub fn coarea_sides(rho: &DistanceField, lambda: &[f64], grid: &Grid2D, t0: f64, levels: usize) -> (f64, f64) {
    let sub = 8usize;
    let mut area = 0.0;
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let c = [grid.idx(i, j), grid.idx(i + 1, j), grid.idx(i, j + 1), grid.idx(i + 1, j + 1)];
            let r = c.map(|k| rho.rho[k]);
            if r.iter().any(|v| !v.is_finite()) || r.iter().all(|&v| v <= t0) {
                continue;
            }
            let l = c.map(|k| lambda[k]);
            for b in 0..sub {
                for a in 0..sub {
                    let (fx, fy) = ((a as f64 + 0.5) / sub as f64, (b as f64 + 0.5) / sub as f64);
                    let w = [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy];
                    let rv: f64 = (0..4).map(|q| w[q] * r[q]).sum();
                    if rv > t0 {
                        let lv: f64 = (0..4).map(|q| w[q] * l[q]).sum();
                        area += (-rv).exp() * (2.0 * lv).exp();
                    }
                }
            }
        }
    }
    area *= grid.h * grid.h / (sub * sub) as f64;
    let tmax = rho.max_finite();
    if tmax <= t0 {
        return (area, 0.0);
    }
    let dt = (tmax - t0) / levels as f64;
    let mut level_side = 0.0;
    for q in 0..=levels {
        let t = t0 + q as f64 * dt;
        let w = if q == 0 || q == levels { 0.5 } else { 1.0 };
        level_side += w * (-t).exp() * contour::level_length(&rho.rho, lambda, grid, t);
    }
    (area, level_side * dt)
}

/// Growth, co-area, curvature-mass, Harnack and integral-ratio checks.
pub fn diagnostics_report(
    curvature: &[f64],
    lambda: &[f64],
    grid: &Grid2D,
    stats: &DomainStats,
    vbar: &[f64],
    q: Option<&QuarticDifferential>,
) -> Result<DiagnosticsReport, DecayError> {
    if stats.t_levels.len() < 5 {
        return Err(DecayError::TooFewLevels(stats.t_levels.len()));
    }
    check_len(curvature.len(), grid)?;
    let slope = 4.0 * std::f64::consts::PI * stats.component_count as f64 + stats.total_abs_k;
    let lmax = stats.boundary_lengths.iter().copied().fold(0.0, f64::max);
    // Contour lengths of a first-order distance field carry O(h) relative error.
    let tol = grid.h * (1.0 + 2.0 * lmax);
    let mut min_slack = f64::INFINITY;
    for a in 0..stats.t_levels.len() {
        for b in a + 1..stats.t_levels.len() {
            let (t, s) = (stats.t_levels[a], stats.t_levels[b]);
            let slack = slope * (s - t) + tol - (stats.boundary_lengths[b] - stats.boundary_lengths[a]);
            min_slack = min_slack.min(slack);
        }
    }

    let (area_side, level_side) =
        if stats.rho.degenerate { (0.0, 0.0) } else { coarea_sides(&stats.rho, lambda, grid, stats.t_levels[0], 400) };
    let coarea_rel = (area_side > 0.0).then(|| (level_side - area_side).abs() / area_side);

    let zero_count = q.map_or(0, |q| q.zero_count_in(grid.x0, grid.x1, grid.y0, grid.y1));
    let tk = stats.total_abs_k;
    let defined = tk > 0.0;
    let ratio = |num: f64| defined.then(|| num / tk);
    let half = area_integral(|k| if curvature[k].is_finite() { curvature[k].abs().sqrt() } else { 0.0 }, lambda, grid);
    let two = area_integral(|k| if curvature[k].is_finite() { curvature[k].powi(2) } else { 0.0 }, lambda, grid);
    let total_area = area_integral(|_| 1.0, lambda, grid);
    let vbar_mean = if vbar.is_empty() { None } else { Some(vbar.iter().sum::<f64>() / vbar.len() as f64) };

    Ok(DiagnosticsReport {
        growth_min_slack: min_slack,
        growth_tolerance: tol,
        growth_pass: min_slack >= 0.0,
        coarea_area_side: area_side,
        coarea_level_side: level_side,
        coarea_relative_error: coarea_rel,
        coarea_pass: coarea_rel.is_none_or(|e| e <= 0.05),
        zero_count,
        curvature_mass_ratio_2pi: (zero_count > 0).then(|| tk / (2.0 * std::f64::consts::PI * zero_count as f64)),
        curvature_mass_ratio_4pi: (zero_count > 0).then(|| tk / (4.0 * std::f64::consts::PI * zero_count as f64)),
        harnack_constant: harnack_constant(curvature, lambda, grid),
        ratio_abs_k_half: ratio(half),
        ratio_abs_k_two: ratio(two),
        ratio_vbar: vbar_mean.and_then(|m| ratio(m * total_area)),
        ratios_undefined: !defined,
    })
}

/// Synthetic curvature: `K = k − 0.1` inside the Euclidean disc of `radius` around
/// `centre`, zero outside (pair it with `λ ≡ 0`).
pub fn synthetic_k_disc(grid: &Grid2D, centre: Complex64, radius: f64, k: f64) -> Vec<f64> {
    (0..grid.len()).map(|n| if (grid.z(n) - centre).norm() < radius { k - 0.1 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_solver::BoundaryKind;

    #[test]
    fn barrier_rate_examples() {
        assert!((barrier_rate(2, 1.0, 2.0) - 1.0).abs() < 1e-15);
        let oracle = (-1.0 + 5.8f64.sqrt()) / 2.0;
        assert!((barrier_rate(2, 1.0, 1.2) - oracle).abs() < 1e-15);
        assert!((barrier_rate(2, 1.0, mu2_barrier_constant(-1.0 / 30.0)) - 0.70416).abs() < 1e-5);
        assert!(barrier_rate(2, 1.0, 1e-12) < 1e-11);
    }

    #[test]
    fn exact_log_linear_fit() {
        let s: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 * 0.2, 3.0 * (-0.7 * i as f64 * 0.2).exp())).collect();
        let f = fit_decay_samples(&s, (0.0, 100.0)).unwrap();
        assert!((f.alpha - 0.7).abs() < 1e-6);
        assert!((f.c - 3.0).abs() < 1e-6);
        assert!(f.rmse < 1e-10);
        let z: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, 0.0)).collect();
        assert!(matches!(fit_decay_samples(&z, (0.0, 100.0)), Err(DecayError::InsufficientData { .. })));
    }

    #[test]
    fn empty_source_is_degenerate() {
        let g = Grid2D::with_spacing(0.0, 1.0, 0.0, 1.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let d = distance_field(&vec![0.0; g.len()], &g, &vec![false; g.len()]);
        assert!(d.degenerate && d.rho.iter().all(|r| r.is_infinite()));
    }

    #[test]
    fn bad_threshold() {
        let g = Grid2D::with_spacing(0.0, 1.0, 0.0, 1.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let z = vec![0.0; g.len()];
        assert!(matches!(sublevel_boundary_lengths(&z, &z, &g, -0.5, &[1.0]), Err(DecayError::BadThreshold(_))));
        let s = sublevel_boundary_lengths(&z, &z, &g, -0.1, &[0.5, 1.0]).unwrap();
        assert_eq!(s.component_count, 0);
        assert_eq!(s.total_abs_k, 0.0);
        assert!(s.boundary_lengths.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn components_four_adjacency() {
        let g = Grid2D::new(0.0, 1.0, 0.0, 1.0, 8, 8, BoundaryKind::Dirichlet).unwrap();
        let mut m = vec![false; g.len()];
        m[g.idx(1, 1)] = true;
        m[g.idx(2, 2)] = true; // diagonal only: separate under 4-adjacency
        m[g.idx(5, 5)] = true;
        m[g.idx(5, 6)] = true;
        assert_eq!(count_components(&m, &g), 3);
    }

    #[test]
    fn richardson_removes_quadratic_term() {
        let i = |r: f64| 5.0 - 2.0 * r * r;
        assert!((richardson_zero_radius(0.1, i(0.1), 0.2, i(0.2)) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn synthetic_disc_lengths_growth_and_coarea() {
        let g = Grid2D::with_spacing(-4.0, 4.0, -4.0, 4.0, 0.02, BoundaryKind::Dirichlet).unwrap();
        let k = -1.0 / 30.0;
        let curv = synthetic_k_disc(&g, Complex64::new(0.0, 0.0), 1.0, k);
        let lambda = vec![0.0; g.len()];
        let levels = [0.25, 0.5, 1.0, 1.5, 2.0, 2.5];
        let st = sublevel_boundary_lengths(&curv, &lambda, &g, k, &levels).unwrap();
        assert_eq!(st.component_count, 1);
        for (t, l) in st.t_levels.iter().zip(&st.boundary_lengths) {
            let exact = std::f64::consts::TAU * (1.0 + t);
            assert!((l / exact - 1.0).abs() < 0.03, "t={t}: {l} vs {exact}");
        }
        let rep = diagnostics_report(&curv, &lambda, &g, &st, &[], None).unwrap();
        assert!(rep.growth_pass, "{rep:?}");
        assert!(rep.coarea_pass, "{rep:?}");
        assert!(rep.curvature_mass_ratio_2pi.is_none());
        // ∫|K| = π·(0.1 − k) over the unit disc.
        assert!((st.total_abs_k / (std::f64::consts::PI * (0.1 - k)) - 1.0).abs() < 0.02);
        assert!((rep.harnack_constant.unwrap() - 1.0).abs() < 1e-12);
    }
}
