//! Conformance against the golden-packet corpus: every line carries the
//! bit length, the framed bits packed MSB-first as hex, and the expected
//! parse summary. Parsing must match the summary and re-framing must be
//! bit-identical.

use qisim::codec::{frame_packet, parse_packet};

const CORPUS: &str = include_str!("../data/golden_packets.txt");

fn unpack(nbits: usize, hex: &str) -> Vec<bool> {
    let bytes: Vec<u8> = (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).expect("corpus hex"))
        .collect();
    (0..nbits).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()
}

#[test]
fn corpus_parses_and_reframes_bit_identically() {
    let mut checked = 0;
    for line in CORPUS.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, ':');
        let nbits: usize = fields.next().expect("nbits").parse().expect("nbits");
        let hex = fields.next().expect("hex");
        let expected = fields.next().expect("summary");
        let bits = unpack(nbits, hex);
        let packet = parse_packet(&bits)
            .unwrap_or_else(|e| panic!("corpus line failed to parse ({expected}): {e}"));
        assert_eq!(packet.summary(), expected, "summary mismatch");
        assert_eq!(frame_packet(&packet), bits, "re-framing not bit-identical for {expected}");
        checked += 1;
    }
    assert!(checked >= 15, "corpus unexpectedly small: {checked} entries");
}

#[test]
fn corpus_covers_every_packet_kind() {
    let mut kinds: Vec<&str> = CORPUS
        .lines()
        .filter_map(|l| l.split(':').nth(2))
        .map(|s| s.split_whitespace().next().expect("kind"))
        .collect();
    kinds.sort_unstable();
    kinds.dedup();
    for expected in ["SIG", "EPT", "CE", "RP", "CFG", "ID", "FOD", "GRQ", "SRQ", "PROP"] {
        assert!(kinds.contains(&expected), "corpus missing kind {expected}");
    }
}
