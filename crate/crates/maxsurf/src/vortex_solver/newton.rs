use serde::{Deserialize, Serialize};

use super::linear::{LinearSolver, NewtonOperator};
use super::{barbot_balance, q_abs, residual_raw, BoundaryKind, FieldState, Grid2D, QuarticDifferential, SolverError, ZeroPolicy};

/// Boundary treatment of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// Boundary nodes are held at the values of this state.
    Dirichlet(FieldState),
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Stopping threshold on `max(|R_λ|, |R_μ|)` over active nodes.
    pub tol: f64,
    pub max_iter: usize,
    pub linear: LinearSolver,
    pub zero_policy: ZeroPolicy,
    /// Optional manufactured source: the solve targets `R = source` instead of `R = 0`.
    pub source: Option<FieldState>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, linear: LinearSolver::Auto, zero_policy: ZeroPolicy::Strict, source: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: FieldState,
    pub report: SolveReport,
}

/// Solves the gauge-fixed system; see [`solve_with`].
pub fn solve(
    q: &QuarticDifferential,
    grid: &Grid2D,
    boundary: &BoundaryData,
    init: &FieldState,
    tol: f64,
    max_iter: usize,
) -> Result<FieldState, SolverError> {
    let opts = SolveOptions { tol, max_iter, ..SolveOptions::default() };
    solve_with(q, grid, boundary, init, &opts).map(|s| s.state)
}

/// Damped Newton iteration with Armijo backtracking on `‖R̃‖²` (factor ½, floor `2^{−20}`),
/// where `R̃ = (R_λ, R_μ/4)` is the scaling that makes the Jacobian symmetric.
pub fn solve_with(
    q: &QuarticDifferential,
    grid: &Grid2D,
    boundary: &BoundaryData,
    init: &FieldState,
    opts: &SolveOptions,
) -> Result<Solution, SolverError> {
    if !(opts.tol > 0.0) {
        return Err(SolverError::InvalidOption(format!("tol must be positive, got {}", opts.tol)));
    }
    init.validate(grid)?;
    opts.zero_policy.check(q, grid)?;
    let qa = q_abs(q, grid);
    let balance = barbot_balance(q, grid);
    let mut state = init.clone();
    match boundary {
        BoundaryData::Dirichlet(b) => {
            if grid.bc != BoundaryKind::Dirichlet {
                return Err(SolverError::InvalidOption("Dirichlet data on a periodic grid".into()));
            }
            b.validate(grid)?;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    if grid.is_boundary(i, j) {
                        let k = grid.idx(i, j);
                        state.lambda[k] = b.lambda[k];
                        state.mu2[k] = b.mu2[k];
                    }
                }
            }
        }
        BoundaryData::Periodic => {
            if grid.bc != BoundaryKind::Periodic {
                return Err(SolverError::InvalidOption("periodic solve on a Dirichlet grid".into()));
            }
            if let Some(k) = qa.iter().position(|&a| a == 0.0) {
                let z = grid.z(k);
                return Err(SolverError::ZeroOfQOnGrid { x: z.re, y: z.im, radius: 0.0 });
            }
        }
    }
    if let Some(src) = &opts.source {
        src.validate(grid)?;
    }

    let mut nodes = Vec::new();
    let mut active = vec![usize::MAX; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_boundary(i, j) {
                active[grid.idx(i, j)] = nodes.len();
                nodes.push(grid.idx(i, j));
            }
        }
    }

    // Scaled residual on active unknowns, interleaved.
    let eval = |st: &FieldState| -> (Vec<f64>, f64) {
        let (rl, rm) = residual_raw(st, &qa, &balance, grid);
        let mut r = Vec::with_capacity(2 * nodes.len());
        let mut maxabs: f64 = 0.0;
        for &k in &nodes {
            let (mut a, mut b) = (rl[k], rm[k]);
            if let Some(src) = &opts.source {
                a -= src.lambda[k];
                b -= src.mu2[k];
            }
            maxabs = maxabs.max(a.abs()).max(b.abs());
            r.push(a);
            r.push(0.25 * b);
        }
        (r, maxabs)
    };
    let norm2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut report = SolveReport {
        iterations: 0,
        final_residual: f64::NAN,
        residual_history: Vec::new(),
        step_sizes: Vec::new(),
        linear_iterations: Vec::new(),
    };
    let (mut r, mut rmax) = eval(&state);
    report.residual_history.push(rmax);
    for iter in 0..opts.max_iter {
        if rmax <= opts.tol {
            report.iterations = iter;
            report.final_residual = rmax;
            return Ok(Solution { state, report });
        }
        let m = nodes.len();
        let (mut a, mut b, mut c) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for (p, &k) in nodes.iter().enumerate() {
            let (l, mu) = (state.lambda[k], state.mu2[k]);
            let em = qa[k] * (-2.0 * l).exp();
            a[p] = 2.0 * (2.0 * l).exp() + 16.0 * em * mu.cosh();
            b[p] = 8.0 * em * mu.sinh();
            c[p] = 4.0 * em * mu.cosh();
        }
        let op = NewtonOperator { grid, nodes: nodes.clone(), active: active.clone(), a, b, c };
        let (delta, lin_its) = op.solve(&r, opts.linear)?;
        report.linear_iterations.push(lin_its);

        let phi0 = norm2(&r);
        let mut alpha = 1.0;
        loop {
            let mut trial = state.clone();
            for (p, &k) in nodes.iter().enumerate() {
                trial.lambda[k] += alpha * delta[2 * p];
                trial.mu2[k] += alpha * delta[2 * p + 1];
            }
            let finite = trial.lambda.iter().chain(&trial.mu2).all(|v| v.is_finite());
            if finite {
                let (rt, rtmax) = eval(&trial);
                if norm2(&rt) <= (1.0 - 2e-4 * alpha) * phi0 {
                    state = trial;
                    r = rt;
                    rmax = rtmax;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 2f64.powi(-20) {
                return Err(SolverError::SingularJacobian { residual: rmax });
            }
        }
        report.step_sizes.push(alpha);
        report.residual_history.push(rmax);
    }
    if rmax <= opts.tol {
        report.iterations = opts.max_iter;
        report.final_residual = rmax;
        return Ok(Solution { state, report });
    }
    Err(SolverError::NoConvergence { iterations: opts.max_iter, residual: rmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_solver::{barbot_state, derived_fields, perturbed_boundary_state, residual};
    use num_complex::Complex64;

    fn one() -> QuarticDifferential {
        QuarticDifferential::constant(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn barbot_is_a_fixed_point() {
        let g = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let b = barbot_state(&one(), &g);
        let sol =
            solve_with(&one(), &g, &BoundaryData::Dirichlet(b.clone()), &b, &SolveOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(sol.report.iterations <= 2);
        assert!(sol.report.final_residual <= 1e-12);
    }

    #[test]
    fn maximum_principle_from_cold_start() {
        // Barbot boundary data with a perturbed interior start relaxes to the constant state.
        let g = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let b = barbot_state(&one(), &g);
        let mut init = b.clone();
        for (k, v) in init.mu2.iter_mut().enumerate() {
            *v = 0.3 * ((k % 13) as f64 / 13.0);
        }
        let st = solve(&one(), &g, &BoundaryData::Dirichlet(b.clone()), &init, 1e-11, 30).unwrap();
        let dev = st.lambda.iter().zip(&b.lambda).chain(st.mu2.iter().zip(&b.mu2)).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev}");
    }

    #[test]
    fn periodic_barbot_and_perturbation() {
        let g = Grid2D::new(0.0, 1.9, 0.0, 1.9, 20, 20, BoundaryKind::Periodic).unwrap();
        let b = barbot_state(&one(), &g);
        let mut init = b.clone();
        for k in 0..g.len() {
            let z = g.z(k);
            init.mu2[k] = 0.1 * (std::f64::consts::TAU * z.re / 2.0).sin();
        }
        let st = solve(&one(), &g, &BoundaryData::Periodic, &init, 1e-11, 30).unwrap();
        assert!(st.mu2.iter().all(|m| m.abs() < 1e-10));
    }

    #[test]
    fn perturbed_boundary_converges_and_decays() {
        let g = Grid2D::with_spacing(0.0, 6.0, 0.0, 6.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let b = perturbed_boundary_state(&one(), &g, 0.2, 0, 0.1);
        let st = solve(&one(), &g, &BoundaryData::Dirichlet(b.clone()), &b, 1e-10, 30).unwrap();
        let (rl, rm) = residual(&st, &one(), &g).unwrap();
        assert!(rl.iter().chain(&rm).all(|r| r.abs() <= 1e-10));
        let centre = st.mu2[g.idx(30, 30)];
        assert!(centre.abs() < 2e-3, "{centre}");
        assert!(st.mu2[g.idx(1, 30)] > st.mu2[g.idx(5, 30)]);
        let f = derived_fields(&st, &one(), &g).unwrap();
        assert!(f.k.iter().all(|&k| k <= 1e-8));
    }

    #[test]
    fn nan_init_fails_before_iterating() {
        let g = Grid2D::with_spacing(0.0, 1.0, 0.0, 1.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let b = barbot_state(&one(), &g);
        let mut init = b.clone();
        init.mu2[40] = f64::NAN;
        assert!(matches!(solve(&one(), &g, &BoundaryData::Dirichlet(b), &init, 1e-10, 5), Err(SolverError::NonFinite { .. })));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let g = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let b = perturbed_boundary_state(&one(), &g, 0.2, 0, 0.1);
        let init = barbot_state(&one(), &g);
        let e = solve(&one(), &g, &BoundaryData::Dirichlet(b), &init, 1e-14, 1).unwrap_err();
        assert!(matches!(e, SolverError::NoConvergence { iterations: 1, .. }));
    }

    /// Manufactured solution: smooth exact fields, continuum operators give the source;
    /// the discrete solution error must shrink at second order.
    #[test]
    fn manufactured_solution_is_second_order() {
        let q = one();
        let exact = |x: f64, y: f64| -> (f64, f64) { (0.25 * 8f64.ln() + 0.1 * (x * y).sin(), 0.2 * (x - 0.5 * y).cos()) };
        // Continuum Laplacians of the two fields.
        let lap = |x: f64, y: f64| -> (f64, f64) { (-0.1 * (x * x + y * y) * (x * y).sin(), -0.2 * 1.25 * (x - 0.5 * y).cos()) };
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05, 0.025] {
            let g = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, h, BoundaryKind::Dirichlet).unwrap();
            let mut ex = FieldState::constant(&g, 0.0, 0.0);
            let mut src = FieldState::constant(&g, 0.0, 0.0);
            for k in 0..g.len() {
                let z = g.z(k);
                let (l, m) = exact(z.re, z.im);
                let (ll, lm) = lap(z.re, z.im);
                ex.lambda[k] = l;
                ex.mu2[k] = m;
                let em = (-2.0 * l).exp();
                src.lambda[k] = ll - (2.0 * l).exp() + 8.0 * em * m.cosh();
                src.mu2[k] = lm - 16.0 * em * m.sinh();
            }
            let init = barbot_state(&q, &g);
            let opts = SolveOptions { tol: 1e-10, source: Some(src), ..Default::default() };
            let sol = solve_with(&q, &g, &BoundaryData::Dirichlet(ex.clone()), &init, &opts).unwrap();
            let e = sol
                .state
                .lambda
                .iter()
                .zip(&ex.lambda)
                .chain(sol.state.mu2.iter().zip(&ex.mu2))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "order {order}, errors {errs:?}");
        }
    }
}
