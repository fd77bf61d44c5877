//! Foreign-object destruction: with no receiver on the pad, the attacker
//! answers the ping itself, bypasses the pre-power quality-factor check with
//! a zero reference, and keeps the charger dumping power into whatever metal
//! is nearby. With an honest reference the charger refuses.
//!
//! Run with: cargo run --example fod_destruction

use qisim::attacker::{run_fod_handshake, FORGE_DEPTH};
use qisim::charger::{Charger, ChargerProfile};
use qisim::circuit::SystemParams;
use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::run_scenario;

fn main() {
    // the handshake itself, message by message
    let mut params = SystemParams::typical();
    params.v_ad = 8.8612;
    let mut charger = Charger::new(ChargerProfile::tier_15w(), params).unwrap();
    let transcript = run_fod_handshake(&mut charger, 0, FORGE_DEPTH, 42);
    println!("handshake transcript (success = {}):", transcript.success);
    for entry in &transcript.entries {
        println!("  t={:.3}  sent {:<24} observed {}", entry.t, entry.sent, entry.observed);
    }
    if let Some(id) = transcript.charger_identity {
        println!("charger identity disclosed over FSK: {}", String::from_utf8_lossy(&id));
    }

    // the full scenario with a paper clip on the pad
    let cfg = parse_scenario(builtin_scenario("fod_destruction").unwrap()).unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    println!("\n== paper clip, zero reference ==");
    print!("{}", report.summary);

    let honest = parse_scenario(builtin_scenario("fod_honest").unwrap()).unwrap();
    let report = run_scenario(&honest, None).unwrap();
    println!("\n== paper clip, honest reference ==");
    print!("{}", report.summary);
}
