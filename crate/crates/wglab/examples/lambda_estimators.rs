//! Estimate the level-speed factor of a transport ray four independent ways
//! — incremental quotients, a transverse second derivative, sojourn time in a
//! level strip, and a Monte Carlo strip-mass ratio — and compare them all to
//! the closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wglab::disintegration::{lambda_hessian, lambda_incremental, lambda_sojourn};
use wglab::scenario::Scenario;

fn main() {
    let sc = Scenario::dilation(0.5, 0.5, 1.5, 4, 8).unwrap();
    let pot = sc.potential().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    println!(
        "{:>4} {:>5} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "ray", "t", "closed", "quotient", "2nd-deriv", "sojourn", "strip-mc"
    );
    for ri in [0usize, 13, 27] {
        let seg = &sc.plan.rays[ri].0;
        for t in [0.25, 0.5, 0.75] {
            let closed = sc.lambda(ri, t).unwrap();
            let inc = lambda_incremental(pot.as_ref(), seg, t, 0.02, 4).unwrap();
            let hess = lambda_hessian(pot.as_ref(), t, &seg.at(t), 1e-4).unwrap();
            let soj = lambda_sojourn(pot.as_ref(), seg, t, 1e-4).unwrap();
            let strip = sc
                .lambda_strip_estimate(ri, t, 1e-3, 1e-3, 50_000, &mut rng)
                .unwrap();
            println!(
                "{ri:>4} {t:>5.2} {closed:>11.6} {inc:>11.6} {hess:>11.6} {soj:>11.6} {strip:>11.6}"
            );
        }
    }
    println!(
        "\nquotient and second-derivative routes track the closed form to ~1e-8;\n\
         the sojourn route to ~1e-4 (first order in its strip width); the\n\
         Monte Carlo route to ~1e-3 with 50k proposals."
    );
}
