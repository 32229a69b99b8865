use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::vortex_solver::{BoundaryKind, Grid2D, QuarticDifferential, ZeroPolicy};

/// Largest grid the pipeline accepts, in nodes.
pub const MAX_NODES: usize = 4_000_000;

/// A pipeline run, as read from a JSON config file. The schema is shipped as
/// `schema/config.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub quartic: QuarticSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub slices: SliceSpec,
    #[serde(default)]
    pub reconstruct: ReconstructSpec,
    /// Output directory, relative to the working directory; `--out` overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Seed of the single generator behind every randomized choice; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
}

/// Coefficients `[re, im]` of `q(z) = Σ cᵢ zⁱ`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarticSpec {
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub h: f64,
}

/// Dirichlet data on the boundary of the grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoundarySpec {
    /// The Barbot state `e^{4λ} = 8|q|`, `μ₂ = 0`.
    #[default]
    Barbot,
    /// `μ₂ = amplitude·cos(2π·mode·s/P)` along the boundary with boundary curvature `−kappa`.
    Perturbed {
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: u32,
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// A state CSV (`x,y,lambda,mu2`) on the configured grid, relative to the config file.
    File { path: PathBuf },
}

fn default_mode() -> u32 {
    1
}

fn default_kappa() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicySpec {
    #[default]
    Strict,
    Tolerant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub zero_policy: ZeroPolicySpec,
    /// Exclusion radius for the strict policy; `3h` when absent.
    pub zero_radius: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, zero_policy: ZeroPolicySpec::Strict, zero_radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Curvature threshold of `D^k = {K ≤ k}`; must lie in `(−1/3, 0)`.
    pub k: f64,
    /// Distances `t` at which boundary lengths of `D_t` are sampled; at least five.
    pub t_levels: Vec<f64>,
    /// Exclusion radii around zeros of `q` for the curvature-mass ratios.
    pub exclusion_radii: Vec<f64>,
    /// Fit window `[ρ_min, ρ_max]`; `[2, 0.8·max ρ]` when absent.
    pub fit_window: Option<[f64; 2]>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self { k: -1.0 / 30.0, t_levels: (1..=8).map(|t| t as f64).collect(), exclusion_radii: vec![0.2, 0.3], fit_window: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceSpec {
    /// Explicit base points, snapped to the nearest node.
    pub points: Vec<[f64; 2]>,
    /// Number of base points drawn uniformly from the interior.
    pub random: usize,
    /// Add every node of the centre column as a base point.
    pub transect: bool,
    /// Half width of the local lift cloud around each base point, in background units.
    pub half_width: f64,
    /// Cloud subsampling stride in nodes.
    pub stride: usize,
    /// Number of normal directions per slice.
    pub directions: usize,
}

impl Default for SliceSpec {
    fn default() -> Self {
        Self { points: Vec::new(), random: 8, transect: false, half_width: 1.0, stride: 1, directions: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructSpec {
    /// Node where the frame is seeded; the grid centre when absent.
    pub seed_point: Option<[f64; 2]>,
    /// Half width of the reconstructed block around the seed, in background units; the
    /// whole grid when absent. Frame entries grow like `cosh` of the distance to the seed,
    /// and the Gram drift check needs them to stay well inside double precision.
    pub half_width: Option<f64>,
    /// Random node pairs for the chord and Lipschitz checks.
    pub immersion_pairs: usize,
}

impl Default for ReconstructSpec {
    fn default() -> Self {
        Self { seed_point: None, half_width: None, immersion_pairs: 20 }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: message.into() }
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("<file>", format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        cfg.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    /// Parses without validating.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid("<document>", e.to_string()))
    }

    pub fn quartic(&self) -> Result<QuarticDifferential, CliError> {
        QuarticDifferential::from_coeffs(self.quartic.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())
            .map_err(|e| invalid("quartic.coeffs", e))
    }

    pub fn grid(&self) -> Result<Grid2D, CliError> {
        let g = &self.grid;
        Grid2D::with_spacing(g.x0, g.x1, g.y0, g.y1, g.h, BoundaryKind::Dirichlet).map_err(|e| invalid("grid.h", e.to_string()))
    }

    pub fn zero_policy(&self) -> ZeroPolicy {
        match (self.solver.zero_policy, self.solver.zero_radius) {
            (ZeroPolicySpec::Tolerant, _) => ZeroPolicy::Tolerant,
            (ZeroPolicySpec::Strict, Some(r)) => ZeroPolicy::StrictRadius(r),
            (ZeroPolicySpec::Strict, None) => ZeroPolicy::Strict,
        }
    }

    /// Path of a boundary file resolved against the directory of the config.
    pub fn boundary_path(&self, base_dir: &Path) -> Option<PathBuf> {
        match &self.boundary {
            BoundarySpec::File { path } if path.is_absolute() => Some(path.clone()),
            BoundarySpec::File { path } => Some(base_dir.join(path)),
            _ => None,
        }
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self, base_dir: &Path) -> Result<(), CliError> {
        let finite = |field: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(invalid(field, format!("must be finite, got {v}"))) };

        if self.quartic.coeffs.is_empty() {
            return Err(invalid("quartic.coeffs", "needs at least one coefficient"));
        }
        if self.quartic.coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("quartic.coeffs", "coefficients must be finite"));
        }
        self.quartic()?;

        let g = &self.grid;
        for (name, v) in [("grid.x0", g.x0), ("grid.x1", g.x1), ("grid.y0", g.y0), ("grid.y1", g.y1), ("grid.h", g.h)] {
            finite(name, v)?;
        }
        if g.x1 <= g.x0 {
            return Err(invalid("grid.x1", format!("must exceed grid.x0 = {}", g.x0)));
        }
        if g.y1 <= g.y0 {
            return Err(invalid("grid.y1", format!("must exceed grid.y0 = {}", g.y0)));
        }
        if g.h <= 0.0 {
            return Err(invalid("grid.h", format!("must be positive, got {}", g.h)));
        }
        let nodes = ((g.x1 - g.x0) / g.h + 1.0) * ((g.y1 - g.y0) / g.h + 1.0);
        if nodes > MAX_NODES as f64 {
            return Err(invalid("grid.h", format!("grid would have {nodes:.0} nodes, limit is {MAX_NODES}")));
        }
        let grid = self.grid()?;
        let inside = |p: &[f64; 2]| p[0] >= grid.x0 && p[0] <= grid.x1 && p[1] >= grid.y0 && p[1] <= grid.y1;

        match &self.boundary {
            BoundarySpec::Barbot => {}
            BoundarySpec::Perturbed { amplitude, kappa, .. } => {
                finite("boundary.amplitude", *amplitude)?;
                if amplitude.abs() > 5.0 {
                    return Err(invalid("boundary.amplitude", format!("|amplitude| must be at most 5, got {amplitude}")));
                }
                if !(0.0..1.0).contains(kappa) {
                    return Err(invalid("boundary.kappa", format!("must lie in [0, 1), got {kappa}")));
                }
            }
            BoundarySpec::File { .. } => {
                let p = self.boundary_path(base_dir).expect("file boundary");
                if !p.is_file() {
                    return Err(invalid("boundary.path", format!("{} does not exist", p.display())));
                }
            }
        }

        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(invalid("solver.tol", format!("must be positive and finite, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(invalid("solver.max_iter", "must be at least 1"));
        }
        if let Some(r) = s.zero_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("solver.zero_radius", format!("must be positive, got {r}")));
            }
        }

        let a = &self.analysis;
        if !(a.k > -1.0 / 3.0 && a.k < 0.0) {
            return Err(invalid("analysis.k", format!("must lie in (-1/3, 0), got {}", a.k)));
        }
        if a.t_levels.len() < 5 {
            return Err(invalid("analysis.t_levels", format!("needs at least 5 levels, got {}", a.t_levels.len())));
        }
        if a.t_levels.iter().any(|t| !(t.is_finite() && *t > 0.0)) || a.t_levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("analysis.t_levels", "levels must be positive, finite and strictly increasing"));
        }
        if a.exclusion_radii.is_empty() || a.exclusion_radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("analysis.exclusion_radii", "needs at least one positive radius"));
        }
        if let Some([lo, hi]) = a.fit_window {
            if !(lo >= 0.0 && hi > lo) {
                return Err(invalid("analysis.fit_window", format!("needs 0 <= min < max, got [{lo}, {hi}]")));
            }
        }

        let sl = &self.slices;
        if let Some(p) = sl.points.iter().find(|p| !inside(p)) {
            return Err(invalid("slices.points", format!("point [{}, {}] lies outside the grid", p[0], p[1])));
        }
        if sl.directions < 16 {
            return Err(invalid("slices.directions", format!("needs at least 16, got {}", sl.directions)));
        }
        if sl.stride == 0 {
            return Err(invalid("slices.stride", "must be at least 1"));
        }
        if !(sl.half_width >= 2.0 * grid.h && sl.half_width.is_finite()) {
            return Err(invalid("slices.half_width", format!("must be at least 2h = {}, got {}", 2.0 * grid.h, sl.half_width)));
        }

        if let Some(w) = self.reconstruct.half_width {
            if !(w >= 2.0 * grid.h && w.is_finite()) {
                return Err(invalid("reconstruct.half_width", format!("must be at least 2h = {}, got {w}", 2.0 * grid.h)));
            }
        }
        if let Some(p) = &self.reconstruct.seed_point {
            if !inside(p) {
                return Err(invalid("reconstruct.seed_point", format!("point [{}, {}] lies outside the grid", p[0], p[1])));
            }
        }
        Ok(())
    }
}

/// Nearest grid node to a point of the rectangle.
pub fn nearest_node(grid: &Grid2D, p: &[f64; 2]) -> (usize, usize) {
    let i = ((p[0] - grid.x0) / grid.h).round().clamp(0.0, (grid.nx - 1) as f64) as usize;
    let j = ((p[1] - grid.y0) / grid.h).round().clamp(0.0, (grid.ny - 1) as f64) as usize;
    (i, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"quartic": {"coeffs": [[1, 0]]}, "grid": {"x0": 0, "x1": 2, "y0": 0, "y1": 2, "h": 0.1}}"#;

    fn field_of(err: CliError) -> String {
        match err {
            CliError::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.validate(Path::new(".")).unwrap();
        assert_eq!(cfg.boundary, BoundarySpec::Barbot);
        assert_eq!(cfg.analysis.t_levels.len(), 8);
        assert_eq!(cfg.grid().unwrap().nx, 21);
    }

    #[test]
    fn threshold_outside_the_window_names_the_field() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.analysis.k = -0.5;
        let err = cfg.validate(Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("analysis.k"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"h\": 0.1", "\"h\": 0.1, \"spacing\": 2");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("spacing"), "{err}");
    }

    #[test]
    fn each_section_reports_its_own_field() {
        let base = RunConfig::parse(MINIMAL).unwrap();
        let dir = Path::new(".");
        let mut c = base.clone();
        c.grid.h = 0.3;
        assert_eq!(field_of(c.validate(dir).unwrap_err()), "grid.h");
        let mut c = base.clone();
        c.slices.directions = 4;
        assert_eq!(field_of(c.validate(dir).unwrap_err()), "slices.directions");
        let mut c = base.clone();
        c.analysis.t_levels = vec![1.0, 2.0, 2.0, 3.0, 4.0];
        assert_eq!(field_of(c.validate(dir).unwrap_err()), "analysis.t_levels");
        let mut c = base.clone();
        c.boundary = BoundarySpec::File { path: "missing-state.csv".into() };
        assert_eq!(field_of(c.validate(dir).unwrap_err()), "boundary.path");
        let mut c = base.clone();
        c.boundary = BoundarySpec::Perturbed { amplitude: 0.2, mode: 1, kappa: 1.5 };
        assert_eq!(field_of(c.validate(dir).unwrap_err()), "boundary.kappa");
        let mut c = base;
        c.quartic.coeffs = vec![[0.0, 0.0]];
        assert_eq!(field_of(c.validate(dir).unwrap_err()), "quartic.coeffs");
    }

    #[test]
    fn nearest_node_snaps_and_clamps() {
        let grid = RunConfig::parse(MINIMAL).unwrap().grid().unwrap();
        assert_eq!(nearest_node(&grid, &[0.26, 1.94]), (3, 19));
        assert_eq!(nearest_node(&grid, &[5.0, -1.0]), (20, 0));
    }
}
