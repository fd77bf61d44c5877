//! A compliant charge cycle: ping, configuration, closed-loop power
//! transfer, no attacker.
//!
//! Run with: cargo run --example baseline_charge

use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::run_scenario;

fn main() {
    let cfg = parse_scenario(builtin_scenario("baseline_charge").unwrap()).unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    print!("{}", report.summary);

    // show the loop settling: phase changes and every 5 s of the log
    println!("\nselected transitions:");
    let mut last_phase = String::new();
    for (i, line) in report.transition_log.lines().enumerate() {
        let phase = line.split("phase=").nth(1).unwrap().split(' ').next().unwrap();
        if phase != last_phase || i % 500 == 0 {
            println!("  {line}");
            last_phase = phase.to_string();
        }
    }
}
