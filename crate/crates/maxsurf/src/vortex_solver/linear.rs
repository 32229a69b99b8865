use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};

use super::{Grid2D, SolverError};

/// Choice of linear solver inside each Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    /// Direct factorization up to [`DIRECT_LIMIT`] unknowns, preconditioned CG above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

/// Largest number of unknowns factorized directly under [`LinearSolver::Auto`]. The
/// factorization runs in natural ordering, so its banded fill makes it slower than
/// preconditioned CG well before memory becomes a concern.
pub const DIRECT_LIMIT: usize = 4_000;

/// The negated, symmetrized Newton operator on active nodes, unknowns interleaved as
/// `(δλ, δμ)` per node:
///
/// ```text
///   A = | −Δ₀ + a     −b      |
///       |   −b     −Δ₀/4 + c  |
/// ```
///
/// `a c > b²` pointwise, so `A` is symmetric positive definite whenever the Laplacian part
/// is (Dirichlet) or `c > 0` (periodic with `q` zero-free).
pub(crate) struct NewtonOperator<'g> {
    pub grid: &'g Grid2D,
    /// Node index of each active unknown pair.
    pub nodes: Vec<usize>,
    /// Active index of each node, `usize::MAX` for fixed nodes.
    pub active: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl NewtonOperator<'_> {
    fn neighbours(&self, node: usize) -> [Option<usize>; 4] {
        let (i, j) = self.grid.ij(node);
        let pick = |di, dj| self.grid.offset(i, j, di, dj).map(|n| self.active[n]).filter(|&a| a != usize::MAX);
        [pick(1, 0), pick(-1, 0), pick(0, 1), pick(0, -1)]
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let ih2 = 1.0 / (self.grid.h * self.grid.h);
        for (p, &node) in self.nodes.iter().enumerate() {
            let (xl, xm) = (x[2 * p], x[2 * p + 1]);
            let mut sl = 4.0 * xl;
            let mut sm = 4.0 * xm;
            for q in self.neighbours(node).into_iter().flatten() {
                sl -= x[2 * q];
                sm -= x[2 * q + 1];
            }
            y[2 * p] = sl * ih2 + self.a[p] * xl - self.b[p] * xm;
            y[2 * p + 1] = 0.25 * sm * ih2 + self.c[p] * xm - self.b[p] * xl;
        }
    }

    fn to_csc(&self) -> CscMatrix<f64> {
        let n = 2 * self.nodes.len();
        let ih2 = 1.0 / (self.grid.h * self.grid.h);
        let mut coo = CooMatrix::new(n, n);
        for (p, &node) in self.nodes.iter().enumerate() {
            coo.push(2 * p, 2 * p, 4.0 * ih2 + self.a[p]);
            coo.push(2 * p + 1, 2 * p + 1, ih2 + self.c[p]);
            coo.push(2 * p, 2 * p + 1, -self.b[p]);
            coo.push(2 * p + 1, 2 * p, -self.b[p]);
            for q in self.neighbours(node).into_iter().flatten() {
                coo.push(2 * p, 2 * q, -ih2);
                coo.push(2 * p + 1, 2 * q + 1, -0.25 * ih2);
            }
        }
        CscMatrix::from(&coo)
    }

    /// Solves `A x = rhs`; returns the solution and the number of CG iterations (0 for the
    /// direct path).
    pub fn solve(&self, rhs: &[f64], kind: LinearSolver) -> Result<(Vec<f64>, usize), SolverError> {
        let direct = match kind {
            LinearSolver::Direct => true,
            LinearSolver::Iterative => false,
            LinearSolver::Auto => rhs.len() <= DIRECT_LIMIT,
        };
        if direct {
            let chol = CscCholesky::factor(&self.to_csc()).map_err(|_| SolverError::SingularJacobian { residual: f64::NAN })?;
            let x = chol.solve(&DVector::from_column_slice(rhs));
            Ok((x.as_slice().to_vec(), 0))
        } else {
            self.pcg(rhs)
        }
    }

    /// Conjugate gradients with the diagonal (Jacobi) preconditioner.
    fn pcg(&self, rhs: &[f64]) -> Result<(Vec<f64>, usize), SolverError> {
        let n = rhs.len();
        let ih2 = 1.0 / (self.grid.h * self.grid.h);
        let mut dinv = vec![0.0; n];
        for p in 0..self.nodes.len() {
            dinv[2 * p] = 1.0 / (4.0 * ih2 + self.a[p]);
            dinv[2 * p + 1] = 1.0 / (ih2 + self.c[p]);
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bnorm = dot(rhs, rhs).sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok((x, 0));
        }
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let max_iter = 20 * (n as f64).sqrt() as usize + 500;
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if dot(&r, &r).sqrt() <= 1e-13 * bnorm {
                return Ok((x, it));
            }
            for k in 0..n {
                z[k] = r[k] * dinv[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        // An inexact step is still a descent direction for the damped Newton iteration.
        Ok((x, max_iter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_solver::BoundaryKind;

    fn operator(grid: &Grid2D) -> NewtonOperator<'_> {
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
        let m = nodes.len();
        let a = (0..m).map(|p| 11.0 + (p % 7) as f64).collect();
        let b = (0..m).map(|p| 0.5 * ((p % 5) as f64 - 2.0)).collect();
        let c = (0..m).map(|p| 1.5 + (p % 3) as f64 * 0.1).collect();
        NewtonOperator { grid, nodes, active, a, b, c }
    }

    #[test]
    fn direct_and_cg_agree() {
        let g = Grid2D::new(0.0, 1.0, 0.0, 1.0, 20, 20, BoundaryKind::Dirichlet).unwrap();
        let op = operator(&g);
        let rhs: Vec<f64> = (0..2 * op.nodes.len()).map(|k| ((k * 37) % 11) as f64 - 5.0).collect();
        let (xd, _) = op.solve(&rhs, LinearSolver::Direct).unwrap();
        let (xi, its) = op.solve(&rhs, LinearSolver::Iterative).unwrap();
        assert!(its > 0);
        let err = xd.iter().zip(&xi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let mut y = vec![0.0; rhs.len()];
        op.apply(&xd, &mut y);
        let res = y.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(res < 1e-9, "{res}");
    }
}
