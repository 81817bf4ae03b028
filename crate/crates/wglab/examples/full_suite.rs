//! Run the complete check suite on a built-in scenario through the library
//! API (the `wglab` binary wraps exactly this) and print the report.

use wglab::harness::{run_config, RunConfig};

fn main() {
    let cfg = RunConfig::from_json(include_str!("../scenarios/dilation.json")).unwrap();
    let report = run_config(&cfg, 0).unwrap();
    eprint!("{}", report.summary_lines());
    print!("{}", report.to_json());
    std::process::exit(if report.all_passed() { 0 } else { 1 });
}
