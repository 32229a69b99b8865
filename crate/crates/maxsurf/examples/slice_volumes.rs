//! Normal slice volumes `V̄` along a perturbed-boundary solve, and their decay with the
//! distance to the curvature domain.
//!
//! Run with `cargo run --release --example slice_volumes -- [L] [h] [samples]`.

use maxsurf::convex_slice::{local_cloud, slice_profile_lp};
use maxsurf::decay_domains::{fit_decay_samples, sublevel_boundary_lengths};
use maxsurf::frame_integration::assemble_connection;
use maxsurf::vortex_solver::{derived_fields, perturbed_boundary_state, solve, BoundaryData, BoundaryKind, Grid2D, QuarticDifferential};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let side = args.first().copied().unwrap_or(12.0);
    let h = args.get(1).copied().unwrap_or(0.1);
    let samples = args.get(2).copied().unwrap_or(60.0) as usize;

    let q = QuarticDifferential::constant(Complex64::new(1.0, 0.0));
    let grid = Grid2D::with_spacing(0.0, side, 0.0, side, h, BoundaryKind::Dirichlet)?;
    let b = perturbed_boundary_state(&q, &grid, 0.2, 1, 0.1);
    let state = solve(&q, &grid, &BoundaryData::Dirichlet(b.clone()), &b, 1e-11, 50)?;
    let fields = derived_fields(&state, &q, &grid)?;
    let stats = sublevel_boundary_lengths(&fields.k, &state.lambda, &grid, -1.0 / 30.0, &[1.0])?;
    let conn = assemble_connection(&state, &q, &grid)?;

    let half_w = args.get(3).copied().unwrap_or(1.0);
    let stride = args.get(4).copied().unwrap_or(1.0) as usize;
    let transect = args.get(5).copied().unwrap_or(1.0) > 0.5;
    let half = (half_w / h).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pts = Vec::new();
    for s in 0..samples {
        let base = if transect {
            (grid.nx / 2, half + s * (grid.ny / 2 - half) / samples)
        } else {
            (rng.gen_range(half..grid.nx - half), rng.gen_range(half..grid.ny - half))
        };
        let prof = match local_cloud(&conn, base, half, stride)
            .and_then(|(cloud, frame)| slice_profile_lp(&cloud, frame.at(base.0, base.1).unwrap(), base, 32))
        {
            Ok(p) => p,
            Err(e) => {
                println!("skipped {base:?}: {e}");
                continue;
            }
        };
        let rho = stats.rho.rho[grid.idx(base.0, base.1)];
        let max_ext = prof.extents.iter().copied().fold(0.0, f64::max);
        println!("rho {rho:7.3}  Vbar {:.3e}  max extent {max_ext:.4}", prof.volume);
        pts.push((rho, prof.volume));
    }
    match fit_decay_samples(&pts, (0.5, f64::INFINITY)) {
        Ok(fit) => println!("Vbar fit: alpha = {:.4}, rmse = {:.3}, n = {}", fit.alpha, fit.rmse, fit.samples),
        Err(e) => println!("Vbar fit: {e}"),
    }
    Ok(())
}
