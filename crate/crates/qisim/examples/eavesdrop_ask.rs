//! ASK eavesdropping: receiver load modulation back-propagates to the
//! adapter output as a derivative pulse train; the matched-filter pipeline
//! recovers the packets from that trace alone.
//!
//! Run with: cargo run --example eavesdrop_ask

use qisim::circuit::{load_change_train, SystemParams};
use qisim::codec::{ask_modulate, frame_packet, QiPacket, F_ASK};
use qisim::eavesdrop::recover_ask;
use qisim::signal::{Trace, Unit, ENVELOPE_RATE};

fn main() {
    let params = SystemParams::typical();
    let traffic = vec![
        QiPacket::Signal { strength: 0x84 },
        QiPacket::Ident { device_id: *b"PHONE01" },
        QiPacket::ControlError { error: 12 },
        QiPacket::ReceivedPower { milliwatts: 4100 },
    ];

    // one envelope-domain load trace with idle gaps between packets
    let mut load = vec![0.0f64; 800];
    for packet in &traffic {
        let wave = ask_modulate(&frame_packet(packet), F_ASK, 0.2, ENVELOPE_RATE).unwrap();
        load.extend_from_slice(wave.samples());
        load.extend(std::iter::repeat_n(0.0, 800));
    }
    let load = Trace::new(ENVELOPE_RATE, load, Unit::Amperes, 0.0).unwrap();

    // what the adapter output actually shows: pulses at the load edges
    let adapter = load_change_train(&params, &load);
    let peak = adapter.samples().iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    println!(
        "adapter trace: {:.1} ms, pulse peaks around {:.2} mV",
        adapter.duration() * 1e3,
        peak * 1e3
    );

    println!("\nrecovered from the adapter trace:");
    for message in recover_ask(&adapter, F_ASK) {
        println!("  {}", message.report_line());
    }
}
