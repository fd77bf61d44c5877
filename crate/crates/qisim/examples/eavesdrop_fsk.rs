//! FSK eavesdropping: the charger's responses shift the power frequency,
//! and the shift shows up at the adapter as a ripple near twice the carrier.
//! Tracking the dominant spectrogram bin recovers the response data.
//!
//! Run with: cargo run --example eavesdrop_fsk

use qisim::codec::{
    fsk_modulate, synth_fsk_ripple, FskResponse, QiPacket, FSK_CYCLES_PER_BIT, FSK_DELTA_F,
};
use qisim::eavesdrop::recover_fsk;
use qisim::signal::{stft, CARRIER_RATE, STFT_HOP, STFT_WINDOW};

fn main() {
    let f_p = 140e3;
    let response = FskResponse::Data(QiPacket::Ident { device_id: *b"QSIM15W" });
    let schedule = fsk_modulate(&response, f_p, FSK_DELTA_F, FSK_CYCLES_PER_BIT);
    println!(
        "response {} -> {} schedule segments, {:.1} ms on air",
        response.summary(),
        schedule.len(),
        schedule.iter().map(|s| s.duration).sum::<f64>() * 1e3
    );

    // the adapter-side ripple at 2 f(t), a few millivolts
    let ripple = synth_fsk_ripple(&schedule, 3e-3, CARRIER_RATE);

    // frequency track near 280 kHz
    let spec = stft(&ripple, STFT_WINDOW, STFT_HOP).unwrap();
    print!("dominant frequency track (kHz): ");
    for frame in (0..spec.num_frames()).step_by(spec.num_frames() / 16) {
        let f = spec.dominant_freq(frame, 270e3, 290e3).unwrap();
        print!("{:.1} ", f / 1e3);
    }
    println!();

    println!("\nrecovered from the ripple trace:");
    for message in recover_fsk(&ripple, f_p) {
        println!("  {}", message.report_line());
    }
}
