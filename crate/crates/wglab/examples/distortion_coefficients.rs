//! Evaluate the two distortion coefficients across curvature regimes and
//! confirm they solve their generating second-order equation.

use wglab::distortion::{ode_residual, sigma, tau, DistortionParams, ExtendedReal};

fn show(v: Result<ExtendedReal, wglab::distortion::DistortionError>) -> String {
    match v {
        Ok(ExtendedReal::Finite(x)) => format!("{x:.6}"),
        Ok(ExtendedReal::Infinite) => "inf".into(),
        Err(e) => format!("error: {e}"),
    }
}

fn main() {
    let t = 0.3;
    let theta = 1.2;
    println!("coefficients at t = {t}, separation = {theta}:");
    println!("{:>8} {:>4} {:>12} {:>12}", "K", "N", "sigma", "tau");
    for (k, n) in [(-2.0, 3.0), (0.0, 3.0), (2.0, 3.0), (8.0, 3.0), (25.0, 3.0)] {
        let p = DistortionParams::new(k, n).unwrap();
        println!(
            "{k:>8} {n:>4} {:>12} {:>12}",
            show(sigma(p, t, theta)),
            show(tau(p, t, theta))
        );
    }
    println!("(K = 25 puts the separation past the conjugate threshold, hence inf)");

    // zero curvature collapses tau to the linear interpolation weight itself
    let flat = DistortionParams::new(0.0, 4.0).unwrap();
    let defect: f64 = (1..10)
        .map(|i| {
            let t = i as f64 / 10.0;
            (tau(flat, t, 2.0).unwrap().to_f64() - t).abs()
        })
        .fold(0.0, f64::max);
    println!("\nflat-case linearity defect over t in (0,1): {defect:.2e}");

    // halving the verification grid divides the equation residual by ~4
    let p = DistortionParams::new(1.5, 3.0).unwrap();
    println!("\nsecond-order equation residual at K = 1.5, N = 3, separation 1.1:");
    let mut prev = None;
    for h in [1e-2, 5e-3, 2.5e-3] {
        let r = ode_residual(p, 1.1, h).unwrap();
        match prev {
            Some(p) => println!("  h = {h:<7} residual = {r:.3e}  (ratio {:.2})", p / r),
            None => println!("  h = {h:<7} residual = {r:.3e}"),
        }
        prev = Some(r);
    }
}
