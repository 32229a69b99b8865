//! Wolfe's algorithm for the point of minimum Euclidean norm in a polytope `conv(P)`.

use nalgebra::{DMatrix, DVector};

use crate::pseudo_hyperbolic_core::Vec5;

/// Minimum-norm point of `conv(points)` and its convex weights on the final corral.
pub fn min_norm_point(points: &[Vec5]) -> (Vec5, Vec<(usize, f64)>) {
    assert!(!points.is_empty());
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-13 * scale;
    let start = (0..points.len()).min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared())).unwrap();
    let mut corral: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = points[start];

    for _ in 0..10_000 {
        let (j, best) = (0..points.len()).map(|i| (i, x.dot(&points[i]))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if best >= x.norm_squared() - tol || corral.contains(&j) {
            break;
        }
        corral.push(j);
        weights.push(0.0);
        loop {
            let alpha = match affine_minimizer(points, &corral) {
                Some(a) => a,
                None => {
                    // Affinely dependent corral: drop the newest point and stop.
                    corral.pop();
                    weights.pop();
                    return finish(points, &corral, &weights);
                }
            };
            if alpha.iter().all(|&a| a > 1e-15) {
                weights = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= 1e-15 {
                    theta = theta.min(w / (w - a));
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w += theta * (a - *w);
            }
            let mut k = 0;
            while k < corral.len() {
                if weights[k] <= 1e-15 {
                    corral.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        x = combine(points, &corral, &weights);
    }
    finish(points, &corral, &weights)
}

fn finish(points: &[Vec5], corral: &[usize], weights: &[f64]) -> (Vec5, Vec<(usize, f64)>) {
    (combine(points, corral, weights), corral.iter().copied().zip(weights.iter().copied()).collect())
}

fn combine(points: &[Vec5], corral: &[usize], weights: &[f64]) -> Vec5 {
    corral.iter().zip(weights).fold(Vec5::zeros(), |acc, (&i, &w)| acc + points[i] * w)
}

/// Weights `α` with `Σα = 1` minimizing `|Σ α_i p_i|`.
fn affine_minimizer(points: &[Vec5], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = points[corral[a]].dot(&points[corral[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.iter().take(k).copied().collect();
    alpha.iter().all(|a| a.is_finite()).then_some(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn segment_and_simplex() {
        let p = [Vec5::new(1.0, -1.0, 0.0, 0.0, 0.0), Vec5::new(1.0, 1.0, 0.0, 0.0, 0.0)];
        let (x, _) = min_norm_point(&p);
        assert!((x - Vec5::new(1.0, 0.0, 0.0, 0.0, 0.0)).norm() < 1e-14);
        let q: Vec<Vec5> = (0..5)
            .map(|i| {
                let mut v = Vec5::from_element(-0.2);
                v[i] = 1.0;
                v
            })
            .collect();
        // Barycentre (0.2 − 0.8·0.2 = 0.04 per coordinate) is the minimizer by symmetry.
        let (x, w) = min_norm_point(&q);
        assert!((x - Vec5::from_element(0.04)).norm() < 1e-13, "{x}");
        assert_eq!(w.len(), 5);
    }

    #[test]
    fn optimality_against_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let pts: Vec<Vec5> = (0..40).map(|_| Vec5::from_fn(|_, _| rng.gen_range(-1.0..1.0) + 0.6)).collect();
            let (x, w) = min_norm_point(&pts);
            // Optimality: ⟨x, p⟩ ≥ |x|² for every p; weights form a convex combination.
            for p in &pts {
                assert!(x.dot(p) >= x.norm_squared() - 1e-10);
            }
            assert!((w.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
