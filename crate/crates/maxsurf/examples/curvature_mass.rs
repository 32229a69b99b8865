//! Total curvature around a simple zero of `q(z) = z`.
//!
//! Solves on `[−L, L]²` with Barbot boundary data, integrates `|K|` outside discs of two
//! exclusion radii around the zero, extrapolates to radius zero and prints the ratio of
//! the curvature mass to the zero count against `2π` and `4π`.
//!
//! Run with `cargo run --release --example curvature_mass -- [L] [h]`.

use maxsurf::decay_domains::{richardson_zero_radius, total_abs_k_excluding};
use maxsurf::vortex_solver::{
    barbot_state, derived_fields_with, regularized_barbot_state, solve_with, BoundaryData, BoundaryKind, Grid2D, QuarticDifferential,
    SolveOptions, ZeroPolicy,
};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let half = args.first().copied().unwrap_or(5.0);
    let h = args.get(1).copied().unwrap_or(0.1);

    let q = QuarticDifferential::from_coeffs(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])?;
    let grid = Grid2D::with_spacing(-half, half, -half, half, h, BoundaryKind::Dirichlet)?;
    let mut boundary = barbot_state(&q, &grid);
    let init = regularized_barbot_state(&q, &grid, 0.1);
    // Interior values of the Dirichlet state are ignored; keep them finite.
    boundary.lambda.iter_mut().zip(&init.lambda).for_each(|(b, i)| {
        if !b.is_finite() {
            *b = *i
        }
    });
    let opts = SolveOptions { zero_policy: ZeroPolicy::Tolerant, tol: 1e-10, ..SolveOptions::default() };
    let sol = solve_with(&q, &grid, &BoundaryData::Dirichlet(boundary), &init, &opts)?;
    println!("solve: {} iterations, residual {:.2e}", sol.report.iterations, sol.report.final_residual);
    let fields = derived_fields_with(&sol.state, &q, &grid, ZeroPolicy::Tolerant)?;
    let zeros = [Complex64::new(0.0, 0.0)];
    let kmin = fields.k.iter().copied().fold(f64::INFINITY, f64::min);
    println!("min K = {kmin:.6}");
    for &(r1, r2) in &[(0.2, 0.4), (0.3, 0.6)] {
        let i1 = total_abs_k_excluding(&fields.k, &sol.state.lambda, &grid, &zeros, r1);
        let i2 = total_abs_k_excluding(&fields.k, &sol.state.lambda, &grid, &zeros, r2);
        let i0 = richardson_zero_radius(r1, i1, r2, i2);
        let pi = std::f64::consts::PI;
        println!(
            "radii ({r1}, {r2}): I = {i1:.6}, {i2:.6}; extrapolated {i0:.6}; /2pi = {:.5}, /4pi = {:.5}",
            i0 / (2.0 * pi),
            i0 / (4.0 * pi)
        );
    }
    let full = total_abs_k_excluding(&fields.k, &sol.state.lambda, &grid, &[], 0.0);
    println!("unpunctured: {full:.6}");
    Ok(())
}
