//! Voice injection: audio on the adapter voltage reaches the coil as
//! amplitude modulation with little attenuation, while the charging loop
//! keeps running.
//!
//! Run with: cargo run --example voice_injection

use qisim::attacker::voice_like;
use qisim::circuit::{
    scaling_factor, tx_coil_current, InterferenceSpec, InterferenceWaveform, SystemParams,
};
use qisim::profiles::{builtin_scenario, parse_scenario};
use qisim::scenario::run_scenario;
use qisim::signal::{envelope, modulation_depth, CARRIER_RATE};

fn main() {
    // the physics: a synthetic utterance modulates the coil current
    let params = SystemParams::typical();
    let audio = voice_like(0.4, CARRIER_RATE, 12);
    let spec = InterferenceSpec {
        depth: 0.3,
        waveform: InterferenceWaveform::Arbitrary(audio),
    };
    let current = tx_coil_current(&params, &spec, 0.4, CARRIER_RATE).unwrap();
    let env = envelope(&current, params.f_p).unwrap();
    println!(
        "coil envelope modulation depth {:.3} at m_i = 0.3 (K at 1 kHz = {:.3})",
        modulation_depth(&env, 2000),
        scaling_factor(&params, 1e3)
    );

    // the scenario: injection at depth 0.3 leaves the charging loop intact
    let cfg = parse_scenario(builtin_scenario("voice_injection").unwrap()).unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    println!();
    print!("{}", report.summary);
}
