//! Qi in-band codec: biphase mark coding, byte framing, checksums, and the
//! ASK waveform loopback.
//!
//! Run with: cargo run --example codec_roundtrip

use qisim::codec::{
    ask_demodulate, ask_modulate, frame_packet, hex, parse_packet, QiPacket, F_ASK,
};
use qisim::signal::ENVELOPE_RATE;

fn main() {
    let packet = QiPacket::ControlError { error: 112 };
    println!("packet:   {}", packet.summary());
    println!("header:   {:#04x}", packet.header());
    println!("payload:  {}", hex(&packet.payload()));
    println!("checksum: {:#04x}", packet.checksum());

    let framed = frame_packet(&packet);
    let bit_string: String = framed.iter().map(|&b| if b { '1' } else { '0' }).collect();
    println!("framed ({} bits): {bit_string}", framed.len());

    let parsed = parse_packet(&framed).unwrap();
    println!("parsed back: {}", parsed.summary());

    // over the air: load-modulation waveform and demodulation
    let wave = ask_modulate(&framed, F_ASK, 0.1, ENVELOPE_RATE).unwrap();
    println!(
        "\nASK waveform: {} samples at {} kS/s ({:.1} ms on air)",
        wave.len(),
        ENVELOPE_RATE / 1e3,
        wave.duration() * 1e3
    );
    let bits = ask_demodulate(&wave, F_ASK).unwrap();
    println!("demodulated + parsed: {}", parse_packet(&bits).unwrap().summary());

    // a single flipped bit never survives the parity and checksum layers
    let mut corrupted = framed.clone();
    corrupted[20] = !corrupted[20];
    println!("\nwith bit 20 flipped: {:?}", parse_packet(&corrupted).unwrap_err());
}
