//! Level-set lengths by marching squares, weighted by the conformal factor.

use crate::vortex_solver::Grid2D;

/// Crossing point (fractional node coordinates) on the edge between two node values.
fn cross(a: f64, b: f64, level: f64) -> f64 {
    if (b - a).abs() < 1e-300 {
        0.5
    } else {
        ((level - a) / (b - a)).clamp(0.0, 1.0)
    }
}

fn bilinear(f: &[f64], grid: &Grid2D, x: f64, y: f64) -> f64 {
    let (i, j) = ((x.floor() as usize).min(grid.nx - 2), (y.floor() as usize).min(grid.ny - 2));
    let (fx, fy) = (x - i as f64, y - j as f64);
    (1.0 - fx) * (1.0 - fy) * f[grid.idx(i, j)]
        + fx * (1.0 - fy) * f[grid.idx(i + 1, j)]
        + (1.0 - fx) * fy * f[grid.idx(i, j + 1)]
        + fx * fy * f[grid.idx(i + 1, j + 1)]
}

/// Segments of `{field = level}` inside the grid, in fractional node coordinates.
pub fn level_segments(field: &[f64], grid: &Grid2D, level: f64) -> Vec<[(f64, f64); 2]> {
    let mut out = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let v = [field[grid.idx(i, j)], field[grid.idx(i + 1, j)], field[grid.idx(i + 1, j + 1)], field[grid.idx(i, j + 1)]];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let code = v.iter().enumerate().fold(0u8, |c, (b, &x)| c | (((x > level) as u8) << b));
            if code == 0 || code == 15 {
                continue;
            }
            let (x, y) = (i as f64, j as f64);
            // Edge points: bottom (0-1), right (1-2), top (3-2), left (0-3).
            let e = [
                (x + cross(v[0], v[1], level), y),
                (x + 1.0, y + cross(v[1], v[2], level)),
                (x + cross(v[3], v[2], level), y + 1.0),
                (x, y + cross(v[0], v[3], level)),
            ];
            let centre_above = 0.25 * v.iter().sum::<f64>() > level;
            let pairs: &[(usize, usize)] = match code {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 => {
                    if centre_above {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if centre_above {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(3, 2), (0, 1)]
                    }
                }
                _ => &[],
            };
            for &(a, b) in pairs {
                out.push([e[a], e[b]]);
            }
        }
    }
    out
}

/// Length of `{field = level}` under the metric `e^{2λ}|dz|²`, each segment weighted by
/// `e^λ` at its midpoint (bilinear `λ`).
pub fn level_length(field: &[f64], lambda: &[f64], grid: &Grid2D, level: f64) -> f64 {
    level_segments(field, grid, level)
        .iter()
        .map(|[a, b]| {
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt() * grid.h;
            let lm = bilinear(lambda, grid, 0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
            len * lm.exp()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_solver::BoundaryKind;

    #[test]
    fn circle_length() {
        let g = Grid2D::with_spacing(-2.0, 2.0, -2.0, 2.0, 0.02, BoundaryKind::Dirichlet).unwrap();
        let r: Vec<f64> = (0..g.len()).map(|k| g.z(k).norm()).collect();
        let l = level_length(&r, &vec![0.0; g.len()], &g, 1.0 + 0.02 / 7.0);
        let exact = std::f64::consts::TAU * (1.0 + 0.02 / 7.0);
        assert!((l / exact - 1.0).abs() < 1e-3, "{l} vs {exact}");
        let l2 = level_length(&r, &vec![0.5; g.len()], &g, 1.0 + 0.02 / 7.0);
        assert!((l2 / l - 0.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn straight_line_and_empty() {
        let g = Grid2D::with_spacing(0.0, 1.0, 0.0, 2.0, 0.1, BoundaryKind::Dirichlet).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|k| g.z(k).re).collect();
        assert!((level_length(&f, &vec![0.0; g.len()], &g, 0.33) - 2.0).abs() < 1e-12);
        assert_eq!(level_length(&f, &vec![0.0; g.len()], &g, 5.0), 0.0);
    }
}
