use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SolverError;

/// Boundary treatment of a [`Grid2D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Periodic,
}

/// Uniform square-cell grid on `[x0, x1] × [y0, y1]`, nodes stored row-major
/// (`index = j·nx + i`, `i` along x).
///
/// For periodic grids the last node wraps to the first with spacing `h`, so the period is
/// `nx·h` along x and `ny·h` along y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub bc: BoundaryKind,
}

impl Grid2D {
    /// Grid from node counts; `h` must agree in both directions.
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize, bc: BoundaryKind) -> Result<Self, SolverError> {
        if nx < 8 || ny < 8 {
            return Err(SolverError::GridTooSmall { nx, ny });
        }
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = (y1 - y0) / (ny - 1) as f64;
        if !(hx > 0.0) || (hx - hy).abs() > 1e-12 * hx.max(1.0) {
            return Err(SolverError::BadGrid(format!("non-square cells: hx = {hx}, hy = {hy}")));
        }
        Ok(Self { x0, x1, y0, y1, nx, ny, h: hx, bc })
    }

    /// Grid from a spacing; the rectangle must be a whole number of cells wide.
    pub fn with_spacing(x0: f64, x1: f64, y0: f64, y1: f64, h: f64, bc: BoundaryKind) -> Result<Self, SolverError> {
        let cells = |a: f64, b: f64| -> Result<usize, SolverError> {
            let n = (b - a) / h;
            let r = n.round();
            if !(h > 0.0) || (n - r).abs() > 1e-9 * n.max(1.0) {
                return Err(SolverError::BadGrid(format!("side {} is not a multiple of h = {h}", b - a)));
            }
            Ok(r as usize)
        };
        let (cx, cy) = (cells(x0, x1)?, cells(y0, y1)?);
        let mut g = Self::new(x0, x1, y0, y1, cx + 1, cy + 1, bc)?;
        g.h = h;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    #[inline]
    pub fn z(&self, k: usize) -> Complex64 {
        let (i, j) = self.ij(k);
        Complex64::new(self.x(i), self.y(j))
    }

    /// True on the outer ring of a Dirichlet grid; never true for periodic grids.
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.bc == BoundaryKind::Dirichlet && (i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny)
    }

    /// Index shifted by `(di, dj)`, wrapping on periodic grids; `None` off a Dirichlet grid.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let (mut a, mut b) = (i as isize + di, j as isize + dj);
        match self.bc {
            BoundaryKind::Periodic => {
                a = a.rem_euclid(nx);
                b = b.rem_euclid(ny);
            }
            BoundaryKind::Dirichlet => {
                if a < 0 || b < 0 || a >= nx || b >= ny {
                    return None;
                }
            }
        }
        Some(self.idx(a as usize, b as usize))
    }

    /// Five-point Laplacian `Δ₀f` at a node whose four neighbours exist.
    #[inline]
    pub fn laplacian(&self, f: &[f64], i: usize, j: usize) -> Option<f64> {
        let c = f[self.idx(i, j)];
        let e = f[self.offset(i, j, 1, 0)?];
        let w = f[self.offset(i, j, -1, 0)?];
        let n = f[self.offset(i, j, 0, 1)?];
        let s = f[self.offset(i, j, 0, -1)?];
        Some((e + w + n + s - 4.0 * c) / (self.h * self.h))
    }

    /// Fourth-order Laplacian on the wide stencil `(−1, 16, −30, 16, −1)/12h²` per axis.
    pub fn laplacian_wide(&self, f: &[f64], i: usize, j: usize) -> Option<f64> {
        let mut acc = -60.0 * f[self.idx(i, j)];
        for (di, dj) in [(1isize, 0isize), (0, 1)] {
            acc += 16.0 * (f[self.offset(i, j, di, dj)?] + f[self.offset(i, j, -di, -dj)?]);
            acc -= f[self.offset(i, j, 2 * di, 2 * dj)?] + f[self.offset(i, j, -2 * di, -2 * dj)?];
        }
        Some(acc / (12.0 * self.h * self.h))
    }

    /// Quadrature weight of node `(i, j)` for `∫ f dx dy`: trapezoid on Dirichlet grids,
    /// uniform on periodic ones.
    pub fn cell_weight(&self, i: usize, j: usize) -> f64 {
        let h2 = self.h * self.h;
        if self.bc == BoundaryKind::Periodic {
            return h2;
        }
        let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        wx * wy * h2
    }
}
