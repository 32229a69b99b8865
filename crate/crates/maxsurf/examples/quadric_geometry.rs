//! Geodesics and Fermi charts on the hyperboloid `Q = −1` in `R^{2,3}`.
//!
//! Draws random points through a seeded isometry, classifies the geodesic joining each pair
//! to the base point, walks a unit spacelike geodesic and checks the Fermi chart round trip.
//!
//! Run with `cargo run --release --example quadric_geometry -- [seed]`.

use maxsurf::pseudo_hyperbolic_core::{
    classify_pair, fermi_forward, fermi_inverse, geodesic_eval, minkowski_inner, random_isometry, spacelike_distance, FermiChart, HPoint,
    TangentVec, Vec5,
};
use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(11u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chart = FermiChart::standard();

    // Base point e3 and a unit spacelike tangent e1.
    let x = HPoint::new(Vec5::new(0.0, 0.0, 1.0, 0.0, 0.0))?;
    let w = TangentVec::new(x, Vec5::new(1.0, 0.0, 0.0, 0.0, 0.0))?;
    for t in [0.5, 1.0, 2.0] {
        let p = geodesic_eval(&x, &w, t)?;
        println!("spacelike geodesic at t = {t}: distance back to base {:.12}", spacelike_distance(x.vector(), p.vector()));
    }

    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let g = random_isometry(&mut rng);
        let r: f64 = rng.gen_range(0.0..0.9);
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let u = Vector2::new(r * a.cos(), r * a.sin());
        // The chart covers the half of the fibre sphere with s1 >= 0.
        let s = Vector3::new(rng.gen_range(0.1..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let p = fermi_forward(&chart, &u, &s)?;
        let (u2, s2) = fermi_inverse(&chart, &p)?;
        worst = worst.max((u - u2).amax()).max((s - s2).amax());
        let moved = HPoint::normalize(g * p.vector())?;
        println!(
            "<p,p> = {:+.3e} + 1; pair with base is {:?}",
            minkowski_inner(moved.vector(), moved.vector()) + 1.0,
            classify_pair(&x, &moved, 1e-9)
        );
    }
    println!("Fermi chart round-trip error {worst:.2e}");
    Ok(())
}
