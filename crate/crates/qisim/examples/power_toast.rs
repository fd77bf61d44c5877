//! Power toast: jam the phone's traffic, forge CE/RP to keep the charger
//! transferring at full power, and walk the phone through its protection
//! ladder. A second run without jamming shows the phone's EPT working.
//!
//! Run with: cargo run --example power_toast

use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::run_scenario;

fn main() {
    let cfg = parse_scenario(builtin_scenario("power_toast").unwrap()).unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    println!("== with jamming ==");
    print!("{}", report.summary);

    let nojam = parse_scenario(builtin_scenario("power_toast_nojam").unwrap()).unwrap();
    let report = run_scenario(&nojam, None).unwrap();
    println!("\n== without jamming ==");
    print!("{}", report.summary);
}
