//! Solve a random discrete transport problem exactly and certify the answer
//! three independent ways: duality gap, marginal feasibility, and cyclical
//! monotonicity of the support.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wglab::num::Point;
use wglab::ot::{check_cyclical_monotonicity, half_sq_cost, solve_ot, DiscreteMeasure};
use wglab::spaces::DynamicalPlan;

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Point>, Vec<f64>) {
    let pts = (0..n)
        .map(|_| vec![rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0])
        .collect();
    let wts = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
    (pts, wts)
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (xs, wx) = cloud(&mut rng, 30);
    let (ys, wy) = cloud(&mut rng, 24);
    let mu = DiscreteMeasure::new(xs.clone(), wx).unwrap();
    let nu = DiscreteMeasure::new(ys.clone(), wy).unwrap();

    let c = solve_ot(&mu, &nu, half_sq_cost).unwrap();
    println!("optimal cost          : {:.9}", c.cost_total);
    println!("duality gap           : {:.3e}", c.duality_gap());
    println!("marginal error        : {:.3e}", c.marginal_error());
    println!("feasibility violation : {:.3e}", c.max_feasibility_violation(half_sq_cost));
    println!("slackness defect      : {:.3e}", c.max_slackness_defect(half_sq_cost));

    let pairs: Vec<(Point, Point)> = c
        .entries
        .iter()
        .filter(|&&(_, _, m)| m > 1e-12)
        .map(|&(i, j, _)| (xs[i].clone(), ys[j].clone()))
        .collect();
    let cert = check_cyclical_monotonicity(&pairs, half_sq_cost, 3, 2_000_000).unwrap();
    println!(
        "support pairs         : {} ({} entries incl. split mass)",
        pairs.len(),
        c.entries.len()
    );
    println!(
        "worst cycle margin    : {:.3e} over {} cycles up to length 3",
        cert.worst_margin, cert.cycles_checked
    );
    println!("monotone at 1e-9      : {}", cert.is_monotone(1e-9));

    // the coupling induces the dynamical plan the rest of the crate consumes
    let plan = DynamicalPlan::from_coupling(&c);
    let max_len = plan
        .rays
        .iter()
        .map(|(r, _)| r.length())
        .fold(0.0, f64::max);
    println!("plan rays             : {} (longest {max_len:.4})", plan.rays.len());
}
