//! A small dense revised simplex for programs with few rows and many columns.
//!
//! Solves `min cᵀw  s.t.  A w = b, w ≥ 0` with two phases (artificial basis first). Pricing
//! is Dantzig's rule, falling back to Bland's rule after a run of degenerate pivots.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// Optimal basic solution as `(column, value)` pairs and the objective value.
    Optimal {
        support: Vec<(usize, f64)>,
        value: f64,
    },
    /// No feasible point; carries the phase-one residual `Σ|artificials|`.
    Infeasible(f64),
    Unbounded,
    /// Iteration cap hit or the basis became singular.
    Failed,
}

/// Column-major constraint data with `m` rows.
#[derive(Debug, Clone)]
pub struct DenseLp {
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

const OPT_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-11;
const MAX_ITER: usize = 20_000;
const BLAND_AFTER: usize = 50;

impl DenseLp {
    pub fn new(m: usize, b: Vec<f64>) -> Self {
        assert_eq!(b.len(), m);
        Self { m, a: Vec::new(), b }
    }

    pub fn push_column(&mut self, col: &[f64]) {
        assert_eq!(col.len(), self.m);
        self.a.extend_from_slice(col);
    }

    pub fn cols(&self) -> usize {
        self.a.len() / self.m
    }

    /// Phase one only: is `{A w = b, w ≥ 0}` non-empty up to `feas_tol` (sum of artificials)?
    pub fn feasible(&self, feas_tol: f64) -> bool {
        matches!(self.solve(&vec![0.0; self.cols()], feas_tol), LpOutcome::Optimal { .. })
    }

    /// Two-phase solve of `min cᵀw`.
    pub fn solve(&self, c: &[f64], feas_tol: f64) -> LpOutcome {
        let (m, n) = (self.m, self.cols());
        assert_eq!(c.len(), n);
        let sign: Vec<f64> = self.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs = DVector::from_iterator(m, self.b.iter().zip(&sign).map(|(v, s)| v * s));
        // Column j < n is the (sign-adjusted) data column; j ≥ n is artificial e_{j−n}.
        let col = |j: usize, out: &mut DVector<f64>| {
            if j < n {
                for r in 0..m {
                    out[r] = self.a[j * m + r] * sign[r];
                }
            } else {
                out.fill(0.0);
                out[j - n] = 1.0;
            }
        };
        let mut basis: Vec<usize> = (n..n + m).collect();

        let phase1_cost = |j: usize| if j < n { 0.0 } else { 1.0 };
        match run(m, n + m, &col, &phase1_cost, &rhs, &mut basis, true, n) {
            Run::Optimal => {}
            Run::Unbounded | Run::Failed => return LpOutcome::Failed,
        }
        let binv = match basis_inverse(m, &basis, &col) {
            Some(b) => b,
            None => return LpOutcome::Failed,
        };
        let xb = &binv * &rhs;
        let infeas: f64 = basis.iter().zip(xb.iter()).filter(|(&j, _)| j >= n).map(|(_, v)| v.abs()).sum();
        if infeas > feas_tol {
            return LpOutcome::Infeasible(infeas);
        }
        let phase2_cost = |j: usize| if j < n { c[j] } else { 0.0 };
        match run(m, n + m, &col, &phase2_cost, &rhs, &mut basis, false, n) {
            Run::Optimal => {}
            Run::Unbounded => return LpOutcome::Unbounded,
            Run::Failed => return LpOutcome::Failed,
        }
        let binv = match basis_inverse(m, &basis, &col) {
            Some(b) => b,
            None => return LpOutcome::Failed,
        };
        let xb = &binv * &rhs;
        let mut support = Vec::new();
        let mut value = 0.0;
        for (r, &j) in basis.iter().enumerate() {
            if j < n && xb[r] != 0.0 {
                let v = xb[r].max(0.0);
                support.push((j, v));
                value += c[j] * v;
            }
        }
        support.sort_by_key(|p| p.0);
        LpOutcome::Optimal { support, value }
    }
}

enum Run {
    Optimal,
    Unbounded,
    Failed,
}

fn basis_inverse(m: usize, basis: &[usize], col: &impl Fn(usize, &mut DVector<f64>)) -> Option<DMatrix<f64>> {
    let mut bm = DMatrix::zeros(m, m);
    let mut v = DVector::zeros(m);
    for (r, &j) in basis.iter().enumerate() {
        col(j, &mut v);
        bm.set_column(r, &v);
    }
    bm.try_inverse()
}

/// Simplex iterations from a feasible basis. In phase two (`allow_artificial = false`)
/// artificial columns never enter, and an artificial still basic at level zero leaves as
/// soon as the entering direction touches its row.
#[allow(clippy::too_many_arguments)]
fn run(
    m: usize,
    total: usize,
    col: &impl Fn(usize, &mut DVector<f64>),
    cost: &impl Fn(usize) -> f64,
    rhs: &DVector<f64>,
    basis: &mut [usize],
    allow_artificial: bool,
    n: usize,
) -> Run {
    let mut a_j = DVector::zeros(m);
    let mut best_obj = f64::INFINITY;
    let mut stall = 0usize;
    for _ in 0..MAX_ITER {
        let binv = match basis_inverse(m, basis, col) {
            Some(b) => b,
            None => return Run::Failed,
        };
        let xb = &binv * rhs;
        let cb = DVector::from_iterator(m, basis.iter().map(|&j| cost(j)));
        let y = binv.transpose() * &cb;
        let obj = cb.dot(&xb);
        if obj < best_obj - 1e-14 * (1.0 + obj.abs()) {
            best_obj = obj;
            stall = 0;
        } else {
            stall += 1;
        }
        let bland = stall > BLAND_AFTER;

        let limit = if allow_artificial { total } else { n };
        let mut entering = None;
        let mut best_rc = -OPT_TOL;
        for j in 0..limit {
            if basis.contains(&j) {
                continue;
            }
            col(j, &mut a_j);
            let rc = cost(j) - y.dot(&a_j);
            if rc < best_rc {
                entering = Some(j);
                if bland {
                    break;
                }
                best_rc = rc;
            }
        }
        let Some(j) = entering else { return Run::Optimal };
        col(j, &mut a_j);
        let d = &binv * &a_j;

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let zero_artificial = !allow_artificial && basis[r] >= n && d[r].abs() > PIVOT_TOL;
            if zero_artificial {
                leave = Some((r, 0.0));
                break;
            }
            if d[r] > PIVOT_TOL {
                let ratio = xb[r].max(0.0) / d[r];
                let better = match leave {
                    None => true,
                    Some((lr, lv)) => ratio < lv - 1e-15 || (ratio <= lv + 1e-15 && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { return Run::Unbounded };
        basis[r] = j;
    }
    Run::Failed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_program() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 (slacks added): optimum 36 at (2, 6).
        let mut lp = DenseLp::new(3, vec![4.0, 12.0, 18.0]);
        for col in [[1.0, 0.0, 3.0], [0.0, 2.0, 2.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            lp.push_column(&col);
        }
        match lp.solve(&[-3.0, -5.0, 0.0, 0.0, 0.0], 1e-12) {
            LpOutcome::Optimal { value, support } => {
                assert!((value + 36.0).abs() < 1e-12);
                assert!(support.iter().any(|&(j, v)| j == 0 && (v - 2.0).abs() < 1e-12));
                assert!(support.iter().any(|&(j, v)| j == 1 && (v - 6.0).abs() < 1e-12));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        // w1 − w2 = −1 with the objective −w2 unbounded; w1 + w2 = −1 infeasible.
        let mut lp = DenseLp::new(1, vec![-1.0]);
        lp.push_column(&[1.0]);
        lp.push_column(&[-1.0]);
        assert_eq!(lp.solve(&[0.0, -1.0], 1e-12), LpOutcome::Unbounded);
        let mut lp = DenseLp::new(1, vec![-1.0]);
        lp.push_column(&[1.0]);
        lp.push_column(&[1.0]);
        assert!(matches!(lp.solve(&[0.0, 0.0], 1e-12), LpOutcome::Infeasible(_)));
        assert!(!lp.feasible(1e-12));
    }

    #[test]
    fn degenerate_redundant_rows() {
        // Duplicate row: the artificial for it stays basic at zero.
        let mut lp = DenseLp::new(2, vec![1.0, 1.0]);
        lp.push_column(&[1.0, 1.0]);
        lp.push_column(&[2.0, 2.0]);
        match lp.solve(&[1.0, 1.0], 1e-12) {
            LpOutcome::Optimal { value, .. } => assert!((value - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
