//! Depth-sweep behavior: the coil modulation depth column grows
//! monotonically with the injected depth, charging interruptions first
//! appear past the 0.35 disruption threshold, and the interruption count
//! never decreases with depth.

use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::sweep;

#[test]
fn depth_sweep_monotone_with_late_trip() {
    let mut cfg = parse_scenario(builtin_scenario("voice_injection").unwrap()).unwrap();
    cfg.duration = 5.0;
    let values: Vec<String> = (0..=20).map(|i| format!("{:.3}", i as f64 * 0.025)).collect();
    let rows = sweep(&cfg, "m_i", &values).unwrap();
    assert_eq!(rows.len(), values.len());

    let mut prev_depth = -1.0;
    let mut prev_interruptions = 0.0;
    let mut first_trip: Option<f64> = None;
    for row in &rows {
        let m_i: f64 = row.value.parse().unwrap();
        let depth = row.metrics["envelope_depth"];
        assert!(depth >= prev_depth - 1e-9, "envelope depth dipped at m_i = {m_i}");
        prev_depth = depth;
        let interruptions = row.metrics["interruptions"];
        assert!(
            interruptions >= prev_interruptions,
            "interruption count dropped at m_i = {m_i}"
        );
        prev_interruptions = interruptions;
        if interruptions > 0.0 && first_trip.is_none() {
            first_trip = Some(m_i);
        }
    }
    let trip = first_trip.expect("no charging interruption over the swept range");
    assert!(trip > 0.35, "charging broke up at m_i = {trip}, expected past 0.35");
    assert!(trip <= 0.5, "first interruption at {trip} outside the swept range");
    println!("first charging interruption at m_i = {trip}");
}
