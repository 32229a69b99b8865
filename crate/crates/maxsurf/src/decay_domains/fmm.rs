//! Fast marching for `‖∇ρ‖ = e^λ` on the node grid with eight-neighbour triangle updates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::vortex_solver::Grid2D;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    t: f64,
    k: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on t, ties broken by node index for determinism.
        other.t.total_cmp(&self.t).then_with(|| other.k.cmp(&self.k))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum over the segment from the axis neighbour `A` (distance `h`) to the diagonal
/// neighbour `B` (distance `h√2`) of linear interpolation plus `f·|C − p|`.
fn triangle_update(ta: f64, tb: f64, f: f64, h: f64) -> f64 {
    let mut best = (ta + f * h).min(tb + f * h * std::f64::consts::SQRT_2);
    let d = tb - ta;
    let r = -d / (f * h);
    if r > 0.0 && r < std::f64::consts::FRAC_1_SQRT_2 {
        let s = r / (1.0 - r * r).sqrt();
        best = best.min(ta + s * d + f * h * (1.0 + s * s).sqrt());
    }
    best
}

/// First-order arrival times from the source nodes under slowness `e^λ`.
pub fn fast_march(lambda: &[f64], grid: &Grid2D, source: &[bool]) -> Vec<f64> {
    let n = grid.len();
    let (nx, ny, h) = (grid.nx as isize, grid.ny as isize, grid.h);
    let mut t = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for k in 0..n {
        if source[k] {
            t[k] = 0.0;
            heap.push(Entry { t: 0.0, k });
        }
    }
    // Axis neighbour and the two diagonals sharing it.
    const AXES: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let node = |i: isize, j: isize| -> Option<usize> { (i >= 0 && j >= 0 && i < nx && j < ny).then(|| (j * nx + i) as usize) };
    while let Some(Entry { t: tk, k }) = heap.pop() {
        if done[k] || tk > t[k] {
            continue;
        }
        done[k] = true;
        let (ki, kj) = ((k % grid.nx) as isize, (k / grid.nx) as isize);
        for di in -1..=1isize {
            for dj in -1..=1isize {
                if di == 0 && dj == 0 {
                    continue;
                }
                let Some(c) = node(ki + di, kj + dj) else { continue };
                if done[c] {
                    continue;
                }
                let (ci, cj) = (ki + di, kj + dj);
                let f = lambda[c].exp();
                let mut best = t[c];
                for &(ai, aj) in &AXES {
                    let Some(a) = node(ci + ai, cj + aj) else { continue };
                    let ta = if done[a] { t[a] } else { f64::INFINITY };
                    best = best.min(ta + f * h);
                    // Diagonals adjacent to this axis direction.
                    let perp = [(aj, ai), (-aj, -ai)];
                    for &(pi, pj) in &perp {
                        let Some(b) = node(ci + ai + pi, cj + aj + pj) else { continue };
                        if !done[b] {
                            continue;
                        }
                        best = best.min(if ta.is_finite() {
                            triangle_update(ta, t[b], f, h)
                        } else {
                            t[b] + f * h * std::f64::consts::SQRT_2
                        });
                    }
                }
                if best < t[c] {
                    t[c] = best;
                    heap.push(Entry { t: best, k: c });
                }
            }
        }
    }
    t
}
