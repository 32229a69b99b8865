//! Boundary lengths of the neighbourhoods `D_t` of the curvature domain `D^k = {K ≤ k}` on a
//! perturbed solution, with the growth and co-area diagnostics.
//!
//! Run with `cargo run --release --example domain_growth -- [L] [k]`.

use maxsurf::decay_domains::{diagnostics_report, sublevel_boundary_lengths};
use maxsurf::vortex_solver::{
    derived_fields, perturbed_boundary_state, solve_with, BoundaryData, BoundaryKind, Grid2D, QuarticDifferential, SolveOptions,
};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let side = args.first().copied().unwrap_or(12.0);
    let k = args.get(1).copied().unwrap_or(-1.0 / 30.0);

    let q = QuarticDifferential::constant(Complex64::new(1.0, 0.0));
    let grid = Grid2D::with_spacing(0.0, side, 0.0, side, 0.1, BoundaryKind::Dirichlet)?;
    let b = perturbed_boundary_state(&q, &grid, 0.2, 1, 0.1);
    let sol = solve_with(&q, &grid, &BoundaryData::Dirichlet(b.clone()), &b, &SolveOptions { tol: 1e-11, ..SolveOptions::default() })?;
    let fields = derived_fields(&sol.state, &q, &grid)?;

    let levels: Vec<f64> = (1..=6).map(|t| 0.5 * t as f64).collect();
    let stats = sublevel_boundary_lengths(&fields.k, &sol.state.lambda, &grid, k, &levels)?;
    println!("D^k for k = {k:.4}: {} component(s), total |K| {:.4}", stats.component_count, stats.total_abs_k);
    for (t, l) in stats.t_levels.iter().zip(&stats.boundary_lengths) {
        println!("  t = {t:.1}: |boundary D_t| = {l:.4}");
    }
    let d = diagnostics_report(&fields.k, &sol.state.lambda, &grid, &stats, &[], Some(&q))?;
    println!("growth slack {:.4} (allowance {:.3}), pass {}", d.growth_min_slack, d.growth_tolerance, d.growth_pass);
    println!("co-area: area side {:.4}, level side {:.4}, pass {}", d.coarea_area_side, d.coarea_level_side, d.coarea_pass);
    if let Some(c) = d.harnack_constant {
        println!("Harnack constant of |K| on the domain: {c:.4}");
    }
    Ok(())
}
