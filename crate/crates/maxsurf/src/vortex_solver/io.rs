//! Flat-file exchange of [`FieldState`]: node-major CSV with header `x,y,lambda,mu2` and a
//! JSON sidecar holding the [`Grid2D`].

use std::fmt::Write as _;

use super::{FieldState, Grid2D, SolverError};

/// Header row of the state CSV.
pub const STATE_CSV_HEADER: &str = "x,y,lambda,mu2";

/// Node-major CSV of a state, coordinates included.
pub fn state_to_csv(state: &FieldState, grid: &Grid2D) -> Result<String, SolverError> {
    state.validate(grid)?;
    let mut out = String::with_capacity(64 * grid.len());
    out.push_str(STATE_CSV_HEADER);
    out.push('\n');
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        writeln!(out, "{},{},{},{}", grid.x(i), grid.y(j), state.lambda[k], state.mu2[k]).expect("writing to a String");
    }
    Ok(out)
}

/// Parses a state CSV written by [`state_to_csv`] for the given grid. Rows must be in node
/// order and their coordinates must match the grid to `1e−9·h`.
pub fn state_from_csv(text: &str, grid: &Grid2D) -> Result<FieldState, SolverError> {
    let bad = |msg: String| SolverError::BadGrid(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == STATE_CSV_HEADER => {}
        other => return Err(bad(format!("expected header `{STATE_CSV_HEADER}`, found {other:?}"))),
    }
    let mut state = FieldState { lambda: Vec::with_capacity(grid.len()), mu2: Vec::with_capacity(grid.len()) };
    for (k, line) in lines.enumerate() {
        if k >= grid.len() {
            return Err(SolverError::ShapeMismatch { expected: grid.len(), got: k + 1 });
        }
        let vals: Vec<f64> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| bad(format!("row {}: {e}", k + 1)))?;
        if vals.len() != 4 {
            return Err(bad(format!("row {} has {} columns, expected 4", k + 1, vals.len())));
        }
        let (i, j) = grid.ij(k);
        let tol = 1e-9 * grid.h;
        if (vals[0] - grid.x(i)).abs() > tol || (vals[1] - grid.y(j)).abs() > tol {
            return Err(bad(format!(
                "row {} at ({}, {}) does not match grid node ({}, {})",
                k + 1,
                vals[0],
                vals[1],
                grid.x(i),
                grid.y(j)
            )));
        }
        state.lambda.push(vals[2]);
        state.mu2.push(vals[3]);
    }
    state.validate(grid)?;
    Ok(state)
}

/// JSON sidecar describing the grid of a state CSV.
pub fn grid_sidecar(grid: &Grid2D) -> String {
    serde_json::to_string_pretty(grid).expect("grid serializes")
}

pub fn grid_from_sidecar(text: &str) -> Result<Grid2D, SolverError> {
    let g: Grid2D = serde_json::from_str(text).map_err(|e| SolverError::BadGrid(e.to_string()))?;
    Grid2D::new(g.x0, g.x1, g.y0, g.y1, g.nx, g.ny, g.bc).map(|mut r| {
        r.h = g.h;
        r
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_solver::BoundaryKind;

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = Grid2D::with_spacing(-1.0, 1.0, 0.0, 2.0, 0.25, BoundaryKind::Dirichlet).unwrap();
        let state = FieldState {
            lambda: (0..grid.len()).map(|k| (k as f64 * 0.37).sin() / 3.0).collect(),
            mu2: (0..grid.len()).map(|k| 1e-17 * k as f64 - 0.1).collect(),
        };
        let text = state_to_csv(&state, &grid).unwrap();
        assert!(text.starts_with("x,y,lambda,mu2\n"));
        assert_eq!(state_from_csv(&text, &grid).unwrap(), state);
        assert_eq!(grid_from_sidecar(&grid_sidecar(&grid)).unwrap(), grid);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let grid = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, 0.25, BoundaryKind::Dirichlet).unwrap();
        let other = Grid2D::with_spacing(0.0, 2.0, 0.0, 2.0, 0.2, BoundaryKind::Dirichlet).unwrap();
        let text = state_to_csv(&FieldState::constant(&grid, 0.1, 0.0), &grid).unwrap();
        assert!(state_from_csv(&text, &other).is_err());
        assert!(state_from_csv("x,y,lambda\n", &grid).is_err());
    }
}
