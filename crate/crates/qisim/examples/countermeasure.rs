//! The DC/DC input-filter countermeasure: attenuation across the audio band
//! and the power-toast attack failing behind it.
//!
//! Run with: cargo run --example countermeasure

use qisim::circuit::{countermeasure_filter, COUNTERMEASURE_CUTOFF};
use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::run_scenario;
use qisim::signal::{synth_sine, ENVELOPE_RATE};

fn main() {
    println!("input-filter attenuation (cutoff {COUNTERMEASURE_CUTOFF} Hz):");
    for f_i in [100.0, 500.0, 1e3, 2e3, 5e3, 10e3] {
        let tone = synth_sine(1.0, f_i, 0.1, ENVELOPE_RATE, 0.0).unwrap();
        let out = countermeasure_filter(&tone, COUNTERMEASURE_CUTOFF).unwrap();
        let half = out.len() / 2;
        let rms =
            (out.samples()[half..].iter().map(|s| s * s).sum::<f64>() / half as f64).sqrt();
        let atten = -20.0 * (rms / std::f64::consts::FRAC_1_SQRT_2).log10();
        println!("  {f_i:>7.0} Hz: {atten:5.1} dB");
    }

    let cfg = parse_scenario(builtin_scenario("countermeasure").unwrap()).unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    println!("\npower toast against a filtered charger:");
    print!("{}", report.summary);
}
