//! Exponential decay away from the curvature domain on a perturbed-boundary solve.
//!
//! Solves on `[0, L]²` with boundary data `μ₂ = 0.2 cos(2πs/P)` and boundary curvature
//! `−0.1`, extracts `D^k` for `k = −1/30`, and fits `|μ₂|`, `μ̃₁`, `|K|` and the `‖∇II‖`
//! proxy against the intrinsic distance to `D^k`.
//!
//! Run with `cargo run --release --example decay_rates -- [L] [h]`.

use std::time::Instant;

use maxsurf::decay_domains::{barrier_rate, default_window, fit_decay, grad_ii_proxy, mu2_barrier_constant, sublevel_boundary_lengths};
use maxsurf::vortex_solver::{
    derived_fields, perturbed_boundary_state, solve_with, BoundaryData, BoundaryKind, Grid2D, QuarticDifferential, SolveOptions,
};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let side = args.first().copied().unwrap_or(30.0);
    let h = args.get(1).copied().unwrap_or(0.1);
    let k = -1.0 / 30.0;

    let q = QuarticDifferential::constant(Complex64::new(1.0, 0.0));
    let grid = Grid2D::with_spacing(0.0, side, 0.0, side, h, BoundaryKind::Dirichlet)?;
    let boundary = perturbed_boundary_state(&q, &grid, 0.2, 1, 0.1);
    let start = Instant::now();
    let sol = solve_with(&q, &grid, &BoundaryData::Dirichlet(boundary.clone()), &boundary, &SolveOptions::default())?;
    println!(
        "solve: {} nodes, {} Newton steps, residual {:.2e}, {:.1?}",
        grid.len(),
        sol.report.iterations,
        sol.report.final_residual,
        start.elapsed()
    );

    let fields = derived_fields(&sol.state, &q, &grid)?;
    let levels: Vec<f64> = (1..=8).map(|i| i as f64).collect();
    let stats = sublevel_boundary_lengths(&fields.k, &sol.state.lambda, &grid, k, &levels)?;
    let window = default_window(&stats.rho);
    println!("D^k: {} component(s), window {:?}", stats.component_count, window);

    let mu1_tilde: Vec<f64> = fields.mu1.iter().map(|m| m - 0.5 * 0.5f64.ln()).collect();
    let abs_mu2: Vec<f64> = sol.state.mu2.iter().map(|m| m.abs()).collect();
    let abs_k: Vec<f64> = fields.k.iter().map(|x| x.abs()).collect();
    let grad = grad_ii_proxy(&fields, &sol.state, &grid);
    for (name, f) in [("|mu2|", &abs_mu2), ("mu1~", &mu1_tilde), ("|K|", &abs_k), ("grad II", &grad)] {
        match fit_decay(f, &stats.rho, window) {
            Ok(fit) => println!("{name:>8}: alpha = {:.4}, C = {:.3e}, rmse = {:.3}, n = {}", fit.alpha, fit.c, fit.rmse, fit.samples),
            Err(e) => println!("{name:>8}: {e}"),
        }
    }
    println!("barrier rate: {:.5}", barrier_rate(2, 1.0, mu2_barrier_constant(k)));
    println!("total: {:.1?}", start.elapsed());
    Ok(())
}
