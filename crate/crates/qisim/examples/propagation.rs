//! Adapter-to-coil propagation: the voltage scaling factor K across
//! frequency and the resulting modulation depth law on the TX coil.
//!
//! Run with: cargo run --example propagation

use qisim::circuit::{scaling_factor, tx_coil_current, InterferenceSpec, SystemParams};
use qisim::signal::{envelope, modulation_depth, CARRIER_RATE};

fn main() {
    let params = SystemParams::typical();

    println!("voltage scaling factor K(f) for the typical profile:");
    for f_i in [100.0, 500.0, 1e3, 2e3, 5e3, 10e3, 50e3, 100e3] {
        println!("  f_i = {:>7.0} Hz   K = {:.4}", f_i, scaling_factor(&params, f_i));
    }

    println!("\nmodulation depth on the TX coil (envelope-measured) vs K * m_i:");
    let m_i = 0.3;
    for f_i in [500.0, 1e3, 2e3, 5e3, 10e3] {
        let spec = InterferenceSpec::sine(m_i, f_i);
        let current = tx_coil_current(&params, &spec, 0.01, CARRIER_RATE).unwrap();
        let env = envelope(&current, params.f_p).unwrap();
        let measured = modulation_depth(&env, 500);
        let predicted = scaling_factor(&params, f_i) * m_i;
        println!(
            "  f_i = {:>6.0} Hz   measured = {measured:.4}   K*m_i = {predicted:.4}",
            f_i
        );
    }
}
