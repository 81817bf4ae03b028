//! Inspect the level-vs-speed profile of a transport plan and see why a
//! mixed profile disqualifies a plan from the level decomposition: two
//! crossing classes admit a cheaper reroute and the speed factor cannot be
//! monotone in the level.

use wglab::decomposition::{
    affine_deviation, level_speed_profile, require_profile, MonotoneSense,
};
use wglab::scenario::Scenario;

fn main() {
    // well-behaved plans: one speed-vs-level profile per scenario, plus
    // linearity of the speed factor in time for the scaling flows
    for sc in [
        Scenario::dilation(0.5, 0.5, 1.5, 4, 8).unwrap(),
        Scenario::radial_to_point(0.5, 1.5, 3, 8).unwrap(),
    ] {
        let profile = level_speed_profile(&sc.profile_pairs(), 1e-9).unwrap();
        let sense = require_profile(&profile, MonotoneSense::Auto).unwrap();
        let grid = sc.default_t_grid();
        let mut worst = 0.0f64;
        for ri in 0..sc.plan.rays.len() {
            let vals: Vec<f64> = grid.iter().map(|&t| sc.lambda(ri, t).unwrap()).collect();
            worst = worst.max(affine_deviation(&grid, &vals).unwrap().max_deviation);
        }
        println!(
            "{:<16} profile {:?} ({} rising / {} falling), speed-factor affine defect {:.2e}",
            sc.name, sense, profile.rising, profile.falling, worst
        );
    }

    // a deliberately crossed plan: two classes whose levels order one way at
    // the start and the other way at the end
    let crossed = Scenario::crossed_levels();
    let profile = level_speed_profile(&crossed.profile_pairs(), 1e-9).unwrap();
    println!(
        "\n{:<16} {} rising / {} falling -> {:?}",
        crossed.name,
        profile.rising,
        profile.falling,
        require_profile(&profile, MonotoneSense::Auto)
    );
    println!("the mixed profile is rejected before any decomposition is attempted");
}
