use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{nearest_node, BoundarySpec, RunConfig};
use super::io::{atomic_write, fields_csv, frame_csv, slices_csv, table_csv};
use super::report::{Checked, DecayEntry, GridSummary, Report, Severity, SliceEntry, SolverSection};
use super::{CliError, Stage};
use crate::convex_slice::{local_profiles, SliceProfile, VOLUME_NOISE_FLOOR};
use crate::decay_domains::{
    barrier_rate, bracket_check, default_window, diagnostics_report, fit_decay, fit_decay_samples, grad_ii_proxy, mu2_barrier_constant,
    punctured_curvature_mass, sublevel_boundary_lengths, DecayError, DecayFit, DomainStats,
};
use crate::frame_integration::{
    assemble_connection, flatness_defect, immersion_diagnostics, integrate_frame_region, lie_algebra_defect, max_interior_defect,
    standard_seed, ConnectionForm, FrameError,
};
use crate::vortex_solver::io::{grid_from_sidecar, grid_sidecar, state_from_csv, state_to_csv};
use crate::vortex_solver::{
    barbot_state, bound_suite, curvature_route_defect, derived_fields_with, gauss_identity_defect, perturbed_boundary_state,
    regularized_barbot_state, solve_with, BoundaryData, FieldState, GeometryFields, Grid2D, QuarticDifferential, SolveOptions, SolverError,
};

/// Largest slice extent: a timelike geodesic reaches its antipode at `π`, so a normal slice
/// of a convex hull stays within `π/2`.
const EXTENT_LIMIT: f64 = std::f64::consts::FRAC_PI_2 + 1e-6;
const GAUSS_IDENTITY_TOL: f64 = 1e-12;
const GRAM_DRIFT_TOL: f64 = 1e-8;
const FLATNESS_TOL: f64 = 1e-3;
const LIE_ALGEBRA_TOL: f64 = 1e-12;
const FIT_RMSE_MAX: f64 = 0.15;
/// Allowed shortfall of the fitted `|μ₂|` rate below the barrier rate.
const BARRIER_SLACK: f64 = 0.05;
const COAREA_TOL: f64 = 0.05;
const RATIO_SPREAD_TOL: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Soft check failures also produce exit code 3.
    pub strict: bool,
    /// Directory that relative paths inside the config refer to.
    pub config_dir: PathBuf,
    /// Overrides the wall-clock timestamp (for reproducible fixtures).
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: Report,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        atomic_write(&path, contents.as_bytes())?;
        self.written.push(path);
        Ok(())
    }
}

fn config_error(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: message.into() }
}

fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Runs the stages up to and including `stage` and writes every artifact.
///
/// Returns [`CliError::Invariant`] after writing artifacts when a hard check fails, or a
/// soft check fails under `strict`. On solver non-convergence `report.json` still records
/// the failure.
pub fn run_pipeline(cfg: &RunConfig, stage: Stage, opts: &RunOptions) -> Result<RunSummary, CliError> {
    cfg.validate(&opts.config_dir)?;
    let q = cfg.quartic()?;
    let grid = cfg.grid()?;
    let zeros: Vec<(Complex64, usize)> =
        q.roots().iter().copied().filter(|(r, _)| r.re >= grid.x0 && r.re <= grid.x1 && r.im >= grid.y0 && r.im <= grid.y1).collect();
    if !zeros.is_empty() && matches!(stage, Stage::Reconstruct | Stage::Slice) {
        return Err(config_error(
            "quartic.coeffs",
            format!("q has {} zero(s) in the domain; the `{}` stage needs a zero-free domain", zeros.len(), stage.name()),
        ));
    }

    let mut out = Artifacts { dir: opts.out_dir.clone(), written: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = Report::new(opts.seed, opts.timestamp.clone().unwrap_or_else(timestamp_now), stage.name());
    report.grid = Some(GridSummary { x0: grid.x0, x1: grid.x1, y0: grid.y0, y1: grid.y1, nx: grid.nx, ny: grid.ny, h: grid.h });

    // Solve.
    let (boundary, init) = boundary_and_init(cfg, &q, &grid, &opts.config_dir)?;
    let sopts =
        SolveOptions { tol: cfg.solver.tol, max_iter: cfg.solver.max_iter, zero_policy: cfg.zero_policy(), ..SolveOptions::default() };
    let solution = match solve_with(&q, &grid, &BoundaryData::Dirichlet(boundary), &init, &sopts) {
        Ok(s) => s,
        Err(e @ (SolverError::NoConvergence { .. } | SolverError::SingularJacobian { .. })) => {
            report.status.exit_code = 2;
            report.status.error = Some(e.to_string());
            out.write("report.json", &report.to_json())?;
            return Err(CliError::NonConvergence(e));
        }
        Err(e @ SolverError::ZeroOfQOnGrid { .. }) => return Err(config_error("solver.zero_policy", e.to_string())),
        Err(e) => return Err(config_error("boundary", e.to_string())),
    };
    let state = solution.state;
    let fields =
        derived_fields_with(&state, &q, &grid, cfg.zero_policy()).map_err(|e| config_error("solver.zero_policy", e.to_string()))?;
    report.solver = Some(SolverSection {
        iterations: solution.report.iterations,
        residual: Checked::at_most(solution.report.final_residual, cfg.solver.tol, Severity::Hard),
        residual_history: solution.report.residual_history.clone(),
        linear_iterations: solution.report.linear_iterations.clone(),
    });
    solve_checks(&mut report, &fields, &grid);
    out.write("fields.csv", &fields_csv(&state, &fields, &grid))?;
    out.write("state.csv", &state_to_csv(&state, &grid).map_err(|e| config_error("boundary", e.to_string()))?)?;
    out.write("state.json", &grid_sidecar(&grid))?;
    let history = solution.report.residual_history.iter().enumerate().map(|(i, r)| {
        // Entry i > 0 follows the damped step i − 1.
        let step = if i == 0 { f64::NAN } else { solution.report.step_sizes.get(i - 1).copied().unwrap_or(f64::NAN) };
        vec![i as f64, *r, step]
    });
    out.write("plotdata/solver_residuals.csv", &table_csv(&["iteration", "residual", "step"], history))?;

    // Reconstruct.
    let mut conn = None;
    if stage.reconstructs() {
        if zeros.is_empty() {
            match assemble_connection(&state, &q, &grid) {
                Ok(c) => {
                    reconstruct(cfg, &mut report, &mut out, &c, &state, &fields, &grid, &mut rng)?;
                    conn = Some(c);
                }
                Err(FrameError::Solver(e @ SolverError::ZeroOfQOnGrid { .. })) => report.skip("reconstruct", e.to_string()),
                Err(e) => {
                    report.identities.insert("connection".into(), failed_check());
                    report.skip("reconstruct", e.to_string());
                }
            }
        } else {
            report.skip("reconstruct", "q has zeros in the domain");
        }
    }

    // The distance field feeds both slice summaries and the analysis.
    let stats = if stage.slices() || stage.analyzes() {
        Some(
            sublevel_boundary_lengths(&fields.k, &state.lambda, &grid, cfg.analysis.k, &cfg.analysis.t_levels)
                .map_err(|e| config_error("analysis.k", e.to_string()))?,
        )
    } else {
        None
    };

    // Slice.
    let mut profiles = Vec::new();
    if stage.slices() {
        match &conn {
            Some(c) => {
                profiles = slice(cfg, &mut report, c, &grid, stats.as_ref().expect("stats computed"), &mut rng);
                let plain: Vec<SliceProfile> = profiles.iter().map(|p| p.0.clone()).collect();
                out.write("slices.csv", &slices_csv(&plain, &grid))?;
                let rho = &stats.as_ref().expect("stats computed").rho.rho;
                let rows = plain.iter().map(|p| {
                    let k = grid.idx(p.base.0, p.base.1);
                    vec![rho[k], p.volume, grid.x(p.base.0), grid.y(p.base.1)]
                });
                out.write("plotdata/vbar.csv", &table_csv(&["rho", "vbar", "x", "y"], rows))?;
            }
            None => report.skip("slice", "no frame reconstruction available"),
        }
    }

    // Analyze.
    if stage.analyzes() {
        let stats = stats.as_ref().expect("stats computed");
        analyze(cfg, &mut report, &mut out, &q, &zeros, &state, &fields, &grid, stats, &profiles)?;
    }

    let hard = report.failures(Severity::Hard);
    let soft = report.failures(Severity::Soft);
    let fail = !hard.is_empty() || (opts.strict && !soft.is_empty());
    report.status.exit_code = if fail { 3 } else { 0 };
    report.status.hard_failures = hard.clone();
    report.status.soft_failures = soft.clone();
    out.write("report.json", &report.to_json())?;
    if fail {
        let mut all = hard;
        if opts.strict {
            all.extend(soft);
        }
        return Err(CliError::Invariant(all));
    }
    Ok(RunSummary { report, artifacts: out.written })
}

/// A hard check that could not be evaluated because its computation failed; the reason is
/// recorded under `skipped`.
fn failed_check() -> Checked {
    Checked { value: f64::NAN, check: "ok".into(), tolerance: None, pass: Some(false), severity: Severity::Hard }
}

/// Dirichlet data and starting guess. Non-finite Barbot values at zeros of `q` are replaced
/// by the regularized state, whose interior also serves as the starting guess.
fn boundary_and_init(cfg: &RunConfig, q: &QuarticDifferential, grid: &Grid2D, dir: &Path) -> Result<(FieldState, FieldState), CliError> {
    let mut b = match &cfg.boundary {
        BoundarySpec::Barbot => barbot_state(q, grid),
        BoundarySpec::Perturbed { amplitude, mode, kappa } => perturbed_boundary_state(q, grid, *amplitude, *mode, *kappa),
        BoundarySpec::File { .. } => {
            let path = cfg.boundary_path(dir).expect("file boundary");
            let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| config_error("boundary.path", format!("{}: {e}", p.display())));
            let sidecar = path.with_extension("json");
            if sidecar.is_file() {
                let g = grid_from_sidecar(&read(&sidecar)?).map_err(|e| config_error("boundary.path", e.to_string()))?;
                if (g.nx, g.ny) != (grid.nx, grid.ny) || (g.h - grid.h).abs() > 1e-12 * grid.h {
                    return Err(config_error(
                        "boundary.path",
                        format!("sidecar grid {}x{} does not match the configured grid", g.nx, g.ny),
                    ));
                }
            }
            let st = state_from_csv(&read(&path)?, grid).map_err(|e| config_error("boundary.path", e.to_string()))?;
            return Ok((st.clone(), st));
        }
    };
    if b.lambda.iter().any(|l| !l.is_finite()) {
        let reg = regularized_barbot_state(q, grid, 0.1);
        for (x, r) in b.lambda.iter_mut().zip(&reg.lambda) {
            if !x.is_finite() {
                *x = *r;
            }
        }
    }
    Ok((b.clone(), b))
}

fn solve_checks(report: &mut Report, fields: &GeometryFields, grid: &Grid2D) {
    let b = bound_suite(fields, grid.h);
    let bounds = &mut report.bounds;
    bounds.insert("K_max".into(), Checked::at_most(b.k_max, b.k_tol, Severity::Hard));
    bounds.insert("normII2_max".into(), Checked::at_most(b.norm_ii2_max, b.norm_ii2_tol, Severity::Hard));
    bounds.insert("u_max".into(), Checked::at_most(b.u_max, b.uv_bound, Severity::Hard));
    bounds.insert("v_max".into(), Checked::at_most(b.v_max, b.uv_bound, Severity::Hard));
    bounds.insert("mu1_max".into(), Checked::at_most(b.mu1_max, b.mu1_bound, Severity::Hard));
    bounds.insert("eps_h".into(), Checked::at_most(b.eps_h, 10.0 * grid.h * grid.h, Severity::Info));

    let margin = ((1.0 / grid.h).round() as usize).min(grid.nx.min(grid.ny) / 4);
    let ids = &mut report.identities;
    ids.insert("gauss_identity_defect".into(), Checked::at_most(gauss_identity_defect(fields), GAUSS_IDENTITY_TOL, Severity::Hard));
    ids.insert(
        "curvature_route_defect".into(),
        Checked::at_most(curvature_route_defect(fields, grid, margin), 10.0 * grid.h * grid.h, Severity::Soft),
    );
}

#[allow(clippy::too_many_arguments)]
fn reconstruct(
    cfg: &RunConfig,
    report: &mut Report,
    out: &mut Artifacts,
    conn: &ConnectionForm,
    state: &FieldState,
    fields: &GeometryFields,
    grid: &Grid2D,
    rng: &mut ChaCha8Rng,
) -> Result<(), CliError> {
    let ids = &mut report.identities;
    ids.insert("lie_algebra_defect".into(), Checked::at_most(lie_algebra_defect(conn), LIE_ALGEBRA_TOL, Severity::Soft));
    let margin = 1.0f64.min(0.25 * (grid.x1 - grid.x0).min(grid.y1 - grid.y0));
    let flat = max_interior_defect(conn, &flatness_defect(conn), margin);
    ids.insert("flatness_defect".into(), Checked::at_most(flat, FLATNESS_TOL, Severity::Soft));

    let seed = cfg.reconstruct.seed_point.map_or((grid.nx / 2, grid.ny / 2), |p| nearest_node(grid, &p));
    let region = match cfg.reconstruct.half_width {
        Some(w) => {
            let n = (w / grid.h).round() as usize;
            (seed.0.saturating_sub(n), (seed.0 + n).min(grid.nx - 1), seed.1.saturating_sub(n), (seed.1 + n).min(grid.ny - 1))
        }
        None => (0, grid.nx - 1, 0, grid.ny - 1),
    };
    let frame = match integrate_frame_region(conn, seed, &standard_seed(), region) {
        Ok(f) => f,
        Err(e) => {
            ids.insert("gram_drift".into(), failed_check());
            report.skip("frame.csv", e.to_string());
            return Ok(());
        }
    };
    ids.insert("gram_drift".into(), Checked::at_most(frame.max_drift_post(), GRAM_DRIFT_TOL, Severity::Hard));
    ids.insert("gram_drift_before_correction".into(), Checked::info(frame.max_drift_pre()));
    ids.insert("closure_max".into(), Checked::info(frame.closure_max));
    ids.insert("frame_max_entry".into(), Checked::info(frame.frames.iter().map(|f| f.amax()).fold(0.0, f64::max)));
    let imm = immersion_diagnostics(&frame, seed, state, fields, grid, cfg.reconstruct.immersion_pairs, rng);
    // Both mismatches come from finite differences of σ, whose entries grow like cosh of the
    // distance to the seed; they are O(h²) only while those entries stay moderate.
    ids.insert("metric_mismatch".into(), Checked::info(imm.metric_mismatch));
    ids.insert("second_fundamental_form_mismatch".into(), Checked::info(imm.second_fundamental_form_mismatch));
    ids.insert("lipschitz_max_ratio".into(), Checked::at_most(imm.lipschitz_max_ratio, 1.0, Severity::Soft));
    ids.insert("chord_min_margin".into(), Checked::at_least(imm.chord_min_margin, 0.0, Severity::Soft));
    out.write("frame.csv", &frame_csv(&frame, grid))
}

/// Base points: configured points, then random interior nodes, then the centre column,
/// without repeats. The flag marks transect points.
fn slice_bases(cfg: &RunConfig, grid: &Grid2D, half: usize, rng: &mut ChaCha8Rng) -> Vec<((usize, usize), bool)> {
    let mut seen = BTreeSet::new();
    let mut bases = Vec::new();
    let mut push = |b: (usize, usize), transect: bool| {
        if seen.insert(b) {
            bases.push((b, transect));
        }
    };
    for p in &cfg.slices.points {
        push(nearest_node(grid, p), false);
    }
    let range = |n: usize| if n > 2 * half + 1 { half..n - half } else { 0..n };
    for _ in 0..cfg.slices.random {
        push((rng.gen_range(range(grid.nx)), rng.gen_range(range(grid.ny))), false);
    }
    if cfg.slices.transect {
        for j in range(grid.ny) {
            push((grid.nx / 2, j), true);
        }
    }
    bases
}

/// Measured profiles with their transect flags.
fn slice(
    cfg: &RunConfig,
    report: &mut Report,
    conn: &ConnectionForm,
    grid: &Grid2D,
    stats: &DomainStats,
    rng: &mut ChaCha8Rng,
) -> Vec<(SliceProfile, bool)> {
    let half = (cfg.slices.half_width / grid.h).round() as usize;
    let bases = slice_bases(cfg, grid, half, rng);
    let nodes: Vec<(usize, usize)> = bases.iter().map(|b| b.0).collect();
    let results = local_profiles(conn, &nodes, half, cfg.slices.stride, cfg.slices.directions);
    let section = &mut report.slice_volumes;
    let mut profiles = Vec::new();
    for (&(b, transect), r) in bases.iter().zip(results) {
        match r {
            Ok(p) => {
                let ext = p.extents.iter().copied().fold(0.0, f64::max);
                section.profiles.push(SliceEntry {
                    x: grid.x(b.0),
                    y: grid.y(b.1),
                    rho: Checked::info(stats.rho.rho[grid.idx(b.0, b.1)]),
                    volume: Checked::info(p.volume),
                    max_extent: Checked::at_most(ext, EXTENT_LIMIT, Severity::Hard),
                });
                profiles.push((p, transect));
            }
            Err(e) => section.failures.push(format!("({}, {}): {e}", grid.x(b.0), grid.y(b.1))),
        }
    }
    if !profiles.is_empty() {
        let ext = profiles.iter().flat_map(|p| p.0.extents.iter().copied()).fold(0.0, f64::max);
        section.max_extent = Some(Checked::at_most(ext, EXTENT_LIMIT, Severity::Hard));
        let mean = profiles.iter().map(|p| p.0.volume).sum::<f64>() / profiles.len() as f64;
        section.mean_volume = Some(Checked::info(mean));
    }
    profiles
}

fn decay_entry(field: &str, fit: &DecayFit, barrier: f64, alpha_min: Option<f64>, rmse_max: Option<f64>, severity: Severity) -> DecayEntry {
    let alpha_ok = alpha_min.map(|m| if m == 0.0 { fit.alpha > 0.0 } else { fit.alpha >= m });
    let rmse_ok = rmse_max.map(|m| fit.rmse <= m);
    let pass = match (alpha_ok, rmse_ok) {
        (None, None) => None,
        (a, r) => Some(a.unwrap_or(true) && r.unwrap_or(true)),
    };
    DecayEntry {
        field: field.to_string(),
        c: fit.c,
        alpha: fit.alpha,
        rmse: fit.rmse,
        barrier_alpha: barrier,
        window: [fit.window.0, fit.window.1],
        samples: fit.samples,
        alpha_min,
        rmse_max,
        pass,
        severity: if pass.is_some() { severity } else { Severity::Info },
    }
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    cfg: &RunConfig,
    report: &mut Report,
    out: &mut Artifacts,
    q: &QuarticDifferential,
    zeros: &[(Complex64, usize)],
    state: &FieldState,
    fields: &GeometryFields,
    grid: &Grid2D,
    stats: &DomainStats,
    profiles: &[(SliceProfile, bool)],
) -> Result<(), CliError> {
    let k = cfg.analysis.k;
    let rows = stats.t_levels.iter().zip(&stats.boundary_lengths).map(|(t, l)| vec![*t, *l]);
    out.write("plotdata/boundary_lengths.csv", &table_csv(&["t", "length"], rows))?;

    let dc = &mut report.domain_checks;
    dc.insert("component_count".into(), Checked::info(stats.component_count as f64));
    dc.insert("total_abs_K".into(), Checked::info(stats.total_abs_k));

    let barrier = barrier_rate(2, 1.0, mu2_barrier_constant(k));
    let abs_mu2: Vec<f64> = state.mu2.iter().map(|m| m.abs()).collect();
    let mu1_tilde: Vec<f64> = fields.mu1.iter().map(|m| m - 0.5 * 0.5f64.ln()).collect();
    let abs_k: Vec<f64> = fields.k.iter().map(|x| x.abs()).collect();
    let grad = grad_ii_proxy(fields, state, grid);
    if stats.rho.degenerate {
        report.skip("decay_fits", format!("D^k is empty for k = {k}"));
    } else {
        let window = cfg.analysis.fit_window.map_or_else(|| default_window(&stats.rho), |w| (w[0], w[1]));
        let record =
            |report: &mut Report, name: &str, fit: Result<DecayFit, DecayError>, amin: Option<f64>, rmax: Option<f64>, sev: Severity| {
                match fit {
                    Ok(f) => report.decay_fits.push(decay_entry(name, &f, barrier, amin, rmax, sev)),
                    Err(e) => report.skip(&format!("decay_fits.{name}"), e.to_string()),
                }
            };
        record(report, "abs_mu2", fit_decay(&abs_mu2, &stats.rho, window), Some(barrier - BARRIER_SLACK), None, Severity::Soft);
        record(report, "mu1_tilde", fit_decay(&mu1_tilde, &stats.rho, window), Some(0.0), Some(FIT_RMSE_MAX), Severity::Soft);
        record(report, "abs_K", fit_decay(&abs_k, &stats.rho, window), Some(0.0), Some(FIT_RMSE_MAX), Severity::Soft);
        record(report, "grad_II", fit_decay(&grad, &stats.rho, window), None, None, Severity::Info);
        if !profiles.is_empty() {
            // Along a transect ρ varies in one direction only; mixing in scattered base
            // points adds the angular variation of V̄ around D^k to the fit residual.
            let use_transect = profiles.iter().any(|p| p.1);
            let samples: Vec<(f64, f64)> = profiles
                .iter()
                .filter(|p| p.1 || !use_transect)
                .map(|(p, _)| (stats.rho.rho[grid.idx(p.base.0, p.base.1)], p.volume))
                .filter(|s| s.1 > VOLUME_NOISE_FLOOR)
                .collect();
            let vfit = fit_decay_samples(&samples, (window.0, f64::INFINITY));
            record(report, "Vbar", vfit, Some(0.0), Some(FIT_RMSE_MAX), Severity::Soft);
        }
        let rows = (0..grid.len())
            .filter(|&n| stats.rho.rho[n].is_finite() && stats.rho.rho[n] > 0.0)
            .map(|n| vec![stats.rho.rho[n], abs_mu2[n], mu1_tilde[n], abs_k[n], grad[n]]);
        out.write("plotdata/decay.csv", &table_csv(&["rho", "abs_mu2", "mu1_tilde", "abs_K", "grad_II"], rows))?;
    }

    let vbar: Vec<f64> = profiles.iter().map(|p| p.0.volume).collect();
    match diagnostics_report(&fields.k, &state.lambda, grid, stats, &vbar, Some(q)) {
        Ok(d) => {
            let dc = &mut report.domain_checks;
            dc.insert("growth_min_slack".into(), Checked::at_least(d.growth_min_slack, 0.0, Severity::Soft));
            dc.insert("growth_allowance".into(), Checked::info(d.growth_tolerance));
            if let Some(e) = d.coarea_relative_error {
                dc.insert("coarea_relative_error".into(), Checked::at_most(e, COAREA_TOL, Severity::Soft));
            }
            dc.insert("harnack_constant".into(), Checked::info(d.harnack_constant.unwrap_or(f64::NAN)));
            let oq = &mut report.open_question_ratios;
            for (name, v) in [
                ("abs_K_half_over_abs_K", d.ratio_abs_k_half),
                ("abs_K_squared_over_abs_K", d.ratio_abs_k_two),
                ("vbar_area_over_abs_K", d.ratio_vbar),
                ("total_abs_K_over_2pi_Z", d.curvature_mass_ratio_2pi),
                ("total_abs_K_over_4pi_Z", d.curvature_mass_ratio_4pi),
            ] {
                if let Some(v) = v {
                    oq.insert(name.into(), Checked::info(v));
                }
            }
        }
        Err(e) => report.skip("domain_checks", e.to_string()),
    }

    let br = bracket_check(fields, state, &stats.rho, k, grid.h);
    let dc = &mut report.domain_checks;
    dc.insert("bracket_mu2_max".into(), Checked::at_most(br.mu2_max, br.mu2_bound + br.tolerance, Severity::Soft));
    if br.mu1_min.is_finite() {
        dc.insert("bracket_mu1_min".into(), Checked::at_least(br.mu1_min, br.mu1_lower - br.tolerance, Severity::Soft));
        dc.insert("bracket_mu1_max".into(), Checked::at_most(br.mu1_max, br.mu1_upper + br.tolerance, Severity::Soft));
    }

    if zeros.is_empty() {
        report.skip("open_question_ratios.curvature_mass", "q has no zeros in the domain");
    } else {
        let roots: Vec<Complex64> = zeros.iter().map(|z| z.0).collect();
        let count: usize = zeros.iter().map(|z| z.1).sum();
        let two_pi = std::f64::consts::TAU;
        let mut per_zero = Vec::new();
        let oq = &mut report.open_question_ratios;
        oq.insert("zero_count".into(), Checked::info(count as f64));
        for &r in &cfg.analysis.exclusion_radii {
            let m = punctured_curvature_mass(&fields.k, &state.lambda, grid, &roots, r);
            let v = m.extrapolated / count as f64;
            per_zero.push(v);
            oq.insert(format!("mass_per_zero_r{r}"), Checked::info(v));
            oq.insert(format!("mass_per_zero_r{r}_over_2pi"), Checked::info(v / two_pi));
            oq.insert(format!("mass_per_zero_r{r}_over_4pi"), Checked::info(v / (2.0 * two_pi)));
        }
        if per_zero.len() >= 2 {
            let mean = per_zero.iter().sum::<f64>() / per_zero.len() as f64;
            let spread = per_zero.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean.abs();
            oq.insert("mass_per_zero_spread".into(), Checked::at_most(spread, RATIO_SPREAD_TOL, Severity::Soft));
        }
    }
    Ok(())
}
