use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The holomorphic quartic differential `q(z) dz⁴ = αβ`, stored by the coefficients of
/// `q(z) = Σ cᵢ zⁱ` in the background coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuarticRepr", into = "QuarticRepr")]
pub struct QuarticDifferential {
    coeffs: Vec<Complex64>,
    roots: Vec<(Complex64, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuarticRepr {
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<QuarticRepr> for QuarticDifferential {
    type Error = String;
    fn try_from(r: QuarticRepr) -> Result<Self, String> {
        Self::from_coeffs(r.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())
    }
}

impl From<QuarticDifferential> for QuarticRepr {
    fn from(q: QuarticDifferential) -> Self {
        QuarticRepr { coeffs: q.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}

impl QuarticDifferential {
    /// Builds `q` from coefficients `c0..cd`; trailing zeros are dropped.
    pub fn from_coeffs(mut coeffs: Vec<Complex64>) -> Result<Self, String> {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() || coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err("quartic differential must not vanish identically".into());
        }
        let roots = cluster_roots(&aberth_roots(&coeffs), 1e-6);
        Ok(Self { coeffs, roots })
    }

    /// The constant differential `q ≡ c`.
    pub fn constant(c: Complex64) -> Self {
        Self::from_coeffs(vec![c]).expect("nonzero constant")
    }

    /// Builds `lead · Π (z − rᵢ)` keeping the roots exactly.
    pub fn from_roots(lead: Complex64, roots: &[Complex64]) -> Self {
        let mut coeffs = vec![lead];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        let mut grouped: Vec<(Complex64, usize)> = Vec::new();
        for r in roots {
            match grouped.iter_mut().find(|(g, _)| g == r) {
                Some(g) => g.1 += 1,
                None => grouped.push((*r, 1)),
            }
        }
        Self { coeffs, roots: grouped }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Roots with multiplicity.
    pub fn roots(&self) -> &[(Complex64, usize)] {
        &self.roots
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Distance from `z` to the nearest root (`+∞` when `q` has none).
    pub fn distance_to_roots(&self, z: Complex64) -> f64 {
        self.roots.iter().map(|(r, _)| (z - r).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Number of roots, with multiplicity, inside the closed rectangle.
    pub fn zero_count_in(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> usize {
        self.roots.iter().filter(|(r, _)| r.re >= x0 && r.re <= x1 && r.im >= y0 && r.im <= y1).map(|(_, m)| m).sum()
    }
}

/// Aberth–Ehrlich simultaneous iteration.
fn aberth_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..d].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> =
        (0..d).map(|k| Complex64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..d {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..d).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm());
            }
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    z
}

/// Merges numerically coincident roots; a root of multiplicity `m` is only resolved to
/// about `ε^{1/m}`, so the merge radius is relative to the root cloud.
fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let radius = tol.powf(0.5) * scale;
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..roots.len()).filter(|&j| !used[j] && (roots[j] - roots[i]).norm() <= radius).collect();
        let centre = members.iter().map(|&j| roots[j]).sum::<Complex64>() / members.len() as f64;
        for &j in &members {
            used[j] = true;
        }
        out.push((centre, members.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluation_and_roots() {
        let q = QuarticDifferential::from_coeffs(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(q.eval(c(2.0, 0.0)), c(3.0, 0.0));
        let mut r: Vec<f64> = q.roots().iter().map(|(z, _)| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiple_root_is_merged() {
        let z0 = c(-3.0, 1.0);
        let built = QuarticDifferential::from_roots(c(1.0, 0.0), &[z0; 4]);
        assert_eq!(built.roots(), &[(z0, 4)]);
        let found = QuarticDifferential::from_coeffs(built.coeffs().to_vec()).unwrap();
        assert_eq!(found.roots().len(), 1);
        assert_eq!(found.roots()[0].1, 4);
        assert!((found.roots()[0].0 - z0).norm() < 1e-3);
        assert_eq!(built.eval(c(0.0, 0.0)), z0.powi(4));
    }

    #[test]
    fn constant_has_no_roots() {
        let q = QuarticDifferential::constant(c(1.0, 0.0));
        assert!(q.roots().is_empty());
        assert_eq!(q.distance_to_roots(c(0.0, 0.0)), f64::INFINITY);
        assert!(QuarticDifferential::from_coeffs(vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let q = QuarticDifferential::from_coeffs(vec![c(0.0, 0.0), c(1.0, 0.5)]).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        let back: QuarticDifferential = serde_json::from_str(&s).unwrap();
        assert_eq!(back.coeffs(), q.coeffs());
        assert_eq!(back.zero_count_in(-1.0, 1.0, -1.0, 1.0), 1);
    }
}
