//! Interference-depth sweep: charging stays clean at low depths and starts
//! breaking up once the depth passes the disruption threshold. Also sweeps
//! the tone frequency to tabulate the measured scaling factor.
//!
//! Run with: cargo run --example depth_sweep

use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::{sweep, sweep_csv};

fn main() {
    let mut cfg = parse_scenario(builtin_scenario("voice_injection").unwrap()).unwrap();
    cfg.duration = 5.0;

    // coarse depth sweep; the CLI form takes step 0.005 over [0, 0.5]
    let values: Vec<String> =
        (0..=10).map(|i| format!("{:.2}", i as f64 * 0.05)).collect();
    let rows = sweep(&cfg, "m_i", &values).unwrap();
    println!("m_i     interruptions / legit windows");
    let mut first_trip = None;
    for row in &rows {
        let interruptions = row.metrics["interruptions"];
        println!(
            "{}    {:>3} / {}",
            row.value, interruptions, row.metrics["legit_windows"]
        );
        if interruptions > 0.0 && first_trip.is_none() {
            first_trip = Some(row.value.clone());
        }
    }
    match first_trip {
        Some(v) => println!("first charging interruption at m_i = {v}"),
        None => println!("no interruptions over the swept range"),
    }

    // frequency sweep: measured K against the closed form
    let freqs: Vec<String> = ["1000", "10000", "100000"].iter().map(|s| s.to_string()).collect();
    let rows = sweep(&cfg, "f_i", &freqs).unwrap();
    println!("\n{}", sweep_csv("f_i", &rows));
}
