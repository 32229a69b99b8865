//! The Jacobian of the normal exponential map on a perturbed solution: closed form against
//! finite differences of the reconstructed frame, and the radius below which it stays
//! above one half.
//!
//! Run with `cargo run --release --example normal_jacobian -- [amplitude]`.

use maxsurf::convex_slice::{ii_components, jacobian_bound_root, normal_jacobian, normal_jacobian_fd};
use maxsurf::frame_integration::{assemble_connection, continuous_arg, integrate_frame, second_fundamental_coefficients, standard_seed};
use maxsurf::vortex_solver::{
    perturbed_boundary_state, q_abs, solve_with, BoundaryData, BoundaryKind, Grid2D, QuarticDifferential, SolveOptions,
};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let amplitude = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.4);
    let q = QuarticDifferential::constant(Complex64::new(1.0, 0.0));
    let grid = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, 0.02, BoundaryKind::Dirichlet)?;
    let b = perturbed_boundary_state(&q, &grid, amplitude, 1, 0.1);
    let sol = solve_with(&q, &grid, &BoundaryData::Dirichlet(b.clone()), &b, &SolveOptions::default())?;
    let conn = assemble_connection(&sol.state, &q, &grid)?;
    let (ci, cj) = (grid.nx / 2, grid.ny / 2);
    let frame = integrate_frame(&conn, (ci, cj), &standard_seed())?;

    let qa = q_abs(&q, &grid);
    let arg = continuous_arg(&q, &grid);
    let root = jacobian_bound_root();
    println!("the bound on J stays >= 1/2 for ||n|| <= {root:.6}");
    for (i, j) in [(ci, cj), (ci / 2, cj), (ci, 3 * cj / 2)] {
        let k = grid.idx(i, j);
        let coeffs = second_fundamental_coefficients(sol.state.lambda[k], sol.state.mu2[k], qa[k], 0.5 * arg(grid.z(k)));
        for theta in [0.0, 1.0, 2.5] {
            let (a, bb) = ii_components(&coeffs, theta);
            let tau = 0.3;
            let exact = normal_jacobian(a, bb, tau, 2);
            let fd = normal_jacobian_fd(&frame, (i, j), sol.state.lambda[k], grid.h, (tau * f64::cos(theta), tau * f64::sin(theta)))
                .unwrap_or(f64::NAN);
            println!(
                "node ({:.2}, {:.2}) theta {theta}: J = {exact:.6}, finite differences {fd:.6}, J at the root {:.4}",
                grid.x(i),
                grid.y(j),
                normal_jacobian(a, bb, root, 2)
            );
        }
    }
    Ok(())
}
