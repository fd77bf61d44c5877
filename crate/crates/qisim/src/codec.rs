//! Bit- and packet-level Qi in-band communication: biphase mark coding,
//! byte framing with parity and checksum, typed packets, ASK load-modulation
//! waveforms, and FSK frequency schedules.
//!
//! Byte format follows the usual Qi conventions: a start bit of 0, eight
//! data bits LSB-first, an odd parity bit, and a stop bit of 1, preceded by
//! a preamble of eleven ONE bits. The checksum byte is the XOR of the header
//! and all payload bytes.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::signal::{Trace, Unit};

/// ASK bit clock on the load-modulation side.
pub const F_ASK: f64 = 2_000.0;

/// Default FSK frequency deviation. Chosen above the default spectrogram bin
/// width (~488 Hz) so the doubled deviation at `2 f_p` spans several bins.
pub const FSK_DELTA_F: f64 = 1_000.0;

/// Default carrier cycles per FSK bit (~3.7 ms per bit at 140 kHz).
pub const FSK_CYCLES_PER_BIT: u32 = 512;

/// Preamble length in ONE bits.
pub const PREAMBLE_LEN: usize = 11;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("half-bit level sequence has odd length {0}")]
    OddHalfBits(usize),
    #[error("missing boundary transition at bit {0}")]
    MissingBoundary(usize),
    #[error("no preamble found")]
    NoPreamble,
    #[error("bad start bit in byte {0}")]
    BadStart(usize),
    #[error("bad stop bit in byte {0}")]
    BadStop(usize),
    #[error("parity failure in byte {0}")]
    Parity(usize),
    #[error("checksum mismatch: computed {computed:#04x}, received {received:#04x}")]
    Checksum { computed: u8, received: u8 },
    #[error("unknown packet header {0:#04x}")]
    UnknownHeader(u8),
    #[error("bit stream truncated")]
    Truncated,
    #[error("no load modulation present")]
    NoModulation,
    #[error("level separation {separation:.4} below demodulation floor {floor:.4}")]
    LevelSeparation { separation: f64, floor: f64 },
    #[error("sample rate {rate} too low for ASK clock {f_ask}")]
    RateTooLow { rate: f64, f_ask: f64 },
}

// ---------------------------------------------------------------------------
// Packets
// ---------------------------------------------------------------------------

/// Packet kind discriminant, used in reports and logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Sig,
    Ept,
    Ce,
    Rp,
    Cfg,
    Id,
    Fod,
    Grq,
    Srq,
    Prop,
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PacketKind::Sig => "SIG",
            PacketKind::Ept => "EPT",
            PacketKind::Ce => "CE",
            PacketKind::Rp => "RP",
            PacketKind::Cfg => "CFG",
            PacketKind::Id => "ID",
            PacketKind::Fod => "FOD",
            PacketKind::Grq => "GRQ",
            PacketKind::Srq => "SRQ",
            PacketKind::Prop => "PROP",
        };
        f.write_str(s)
    }
}

/// Typed in-band message from the receiver side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QiPacket {
    /// Signal-strength response to a ping.
    Signal { strength: u8 },
    /// End power transfer, with a reason code.
    EndPowerTransfer { reason: u8 },
    /// Control error: signed request to raise or lower power.
    ControlError { error: i8 },
    /// Received power report in milliwatts.
    ReceivedPower { milliwatts: u16 },
    /// Configuration: negotiation flag plus the declared maximum power in
    /// half-watt units.
    Config { neg: bool, max_power_half_watts: u8 },
    /// Device identification.
    Ident { device_id: [u8; 7] },
    /// Pre-power FOD reference: quality factor in tenths (25 means Q = 2.5).
    Fod { reference_q_tenths: u16 },
    /// General request for another packet, by header.
    GeneralRequest { requested: u8 },
    /// Specific request: code plus value. Code 0 ends negotiation; code 1
    /// requests guaranteed power (value in half-watt units).
    SpecificRequest { code: u8, value: u8 },
    /// Opaque proprietary payload (fixed four bytes).
    Proprietary { payload: [u8; 4] },
}

/// SRQ code ending the negotiation phase.
pub const SRQ_END_NEGOTIATION: u8 = 0x00;
/// SRQ code requesting guaranteed power (value in half-watt units).
pub const SRQ_GUARANTEED_POWER: u8 = 0x01;

pub const HDR_SIG: u8 = 0x01;
pub const HDR_EPT: u8 = 0x02;
pub const HDR_CE: u8 = 0x03;
pub const HDR_RP: u8 = 0x04;
pub const HDR_GRQ: u8 = 0x07;
pub const HDR_PROP: u8 = 0x18;
pub const HDR_SRQ: u8 = 0x20;
pub const HDR_FOD: u8 = 0x22;
pub const HDR_CFG: u8 = 0x51;
pub const HDR_ID: u8 = 0x71;

/// Payload length declared by a header byte.
pub fn payload_len(header: u8) -> Option<usize> {
    match header {
        HDR_SIG | HDR_EPT | HDR_CE | HDR_GRQ => Some(1),
        HDR_RP | HDR_SRQ | HDR_FOD => Some(2),
        HDR_PROP => Some(4),
        HDR_CFG => Some(1),
        HDR_ID => Some(7),
        _ => None,
    }
}

impl QiPacket {
    pub fn kind(&self) -> PacketKind {
        match self {
            QiPacket::Signal { .. } => PacketKind::Sig,
            QiPacket::EndPowerTransfer { .. } => PacketKind::Ept,
            QiPacket::ControlError { .. } => PacketKind::Ce,
            QiPacket::ReceivedPower { .. } => PacketKind::Rp,
            QiPacket::Config { .. } => PacketKind::Cfg,
            QiPacket::Ident { .. } => PacketKind::Id,
            QiPacket::Fod { .. } => PacketKind::Fod,
            QiPacket::GeneralRequest { .. } => PacketKind::Grq,
            QiPacket::SpecificRequest { .. } => PacketKind::Srq,
            QiPacket::Proprietary { .. } => PacketKind::Prop,
        }
    }

    pub fn header(&self) -> u8 {
        match self.kind() {
            PacketKind::Sig => HDR_SIG,
            PacketKind::Ept => HDR_EPT,
            PacketKind::Ce => HDR_CE,
            PacketKind::Rp => HDR_RP,
            PacketKind::Cfg => HDR_CFG,
            PacketKind::Id => HDR_ID,
            PacketKind::Fod => HDR_FOD,
            PacketKind::Grq => HDR_GRQ,
            PacketKind::Srq => HDR_SRQ,
            PacketKind::Prop => HDR_PROP,
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        match self {
            QiPacket::Signal { strength } => vec![*strength],
            QiPacket::EndPowerTransfer { reason } => vec![*reason],
            QiPacket::ControlError { error } => vec![*error as u8],
            QiPacket::ReceivedPower { milliwatts } => milliwatts.to_be_bytes().to_vec(),
            QiPacket::Config { neg, max_power_half_watts } => {
                vec![(u8::from(*neg) << 7) | (max_power_half_watts & 0x7F)]
            }
            QiPacket::Ident { device_id } => device_id.to_vec(),
            QiPacket::Fod { reference_q_tenths } => reference_q_tenths.to_be_bytes().to_vec(),
            QiPacket::GeneralRequest { requested } => vec![*requested],
            QiPacket::SpecificRequest { code, value } => vec![*code, *value],
            QiPacket::Proprietary { payload } => payload.to_vec(),
        }
    }

    /// XOR of the header and all payload bytes.
    pub fn checksum(&self) -> u8 {
        self.payload().iter().fold(self.header(), |acc, b| acc ^ b)
    }

    pub fn from_bytes(header: u8, payload: &[u8]) -> Result<QiPacket, CodecError> {
        let expected = payload_len(header).ok_or(CodecError::UnknownHeader(header))?;
        if payload.len() != expected {
            return Err(CodecError::Truncated);
        }
        Ok(match header {
            HDR_SIG => QiPacket::Signal { strength: payload[0] },
            HDR_EPT => QiPacket::EndPowerTransfer { reason: payload[0] },
            HDR_CE => QiPacket::ControlError { error: payload[0] as i8 },
            HDR_RP => {
                QiPacket::ReceivedPower { milliwatts: u16::from_be_bytes([payload[0], payload[1]]) }
            }
            HDR_CFG => QiPacket::Config {
                neg: payload[0] & 0x80 != 0,
                max_power_half_watts: payload[0] & 0x7F,
            },
            HDR_ID => {
                let mut id = [0u8; 7];
                id.copy_from_slice(payload);
                QiPacket::Ident { device_id: id }
            }
            HDR_FOD => QiPacket::Fod {
                reference_q_tenths: u16::from_be_bytes([payload[0], payload[1]]),
            },
            HDR_GRQ => QiPacket::GeneralRequest { requested: payload[0] },
            HDR_SRQ => QiPacket::SpecificRequest { code: payload[0], value: payload[1] },
            HDR_PROP => {
                let mut p = [0u8; 4];
                p.copy_from_slice(payload);
                QiPacket::Proprietary { payload: p }
            }
            _ => unreachable!("payload_len covered the header"),
        })
    }

    /// Canonical one-line text form used in reports and the golden corpus.
    pub fn summary(&self) -> String {
        match self {
            QiPacket::Signal { strength } => format!("SIG strength={strength}"),
            QiPacket::EndPowerTransfer { reason } => format!("EPT reason={reason}"),
            QiPacket::ControlError { error } => format!("CE error={error}"),
            QiPacket::ReceivedPower { milliwatts } => format!("RP mw={milliwatts}"),
            QiPacket::Config { neg, max_power_half_watts } => {
                format!("CFG neg={} max_hw={max_power_half_watts}", u8::from(*neg))
            }
            QiPacket::Ident { device_id } => {
                format!("ID id={}", hex(device_id))
            }
            QiPacket::Fod { reference_q_tenths } => format!("FOD q_tenths={reference_q_tenths}"),
            QiPacket::GeneralRequest { requested } => format!("GRQ req={requested}"),
            QiPacket::SpecificRequest { code, value } => format!("SRQ code={code} value={value}"),
            QiPacket::Proprietary { payload } => format!("PROP payload={}", hex(payload)),
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Response sent by the charger over FSK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FskResponse {
    Ack,
    Nak,
    /// Not-defined / no response; modeled as the absence of a schedule.
    Nd,
    Data(QiPacket),
}

impl FskResponse {
    /// Bit content: ACK and NAK are raw single-byte patterns, data responses
    /// use full packet framing. ND carries nothing.
    pub fn bits(&self) -> Vec<bool> {
        match self {
            FskResponse::Ack => byte_bits(0xFF).to_vec(),
            FskResponse::Nak => byte_bits(0x33).to_vec(),
            FskResponse::Nd => Vec::new(),
            FskResponse::Data(p) => frame_packet(p),
        }
    }

    pub fn summary(&self) -> String {
        match self {
            FskResponse::Ack => "ACK".into(),
            FskResponse::Nak => "NAK".into(),
            FskResponse::Nd => "ND".into(),
            FskResponse::Data(p) => format!("DATA {}", p.summary()),
        }
    }
}

// ---------------------------------------------------------------------------
// Biphase mark coding
// ---------------------------------------------------------------------------

/// Half-bit line level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Low,
    High,
}

impl Level {
    fn flip(self) -> Level {
        match self {
            Level::Low => Level::High,
            Level::High => Level::Low,
        }
    }
}

/// Biphase mark encode: a transition at every bit boundary, with an extra
/// mid-bit transition for ONE. Two half-bit levels per bit.
pub fn bmc_encode(bits: &[bool], initial: Level) -> Vec<Level> {
    let mut level = initial;
    let mut out = Vec::with_capacity(bits.len() * 2);
    for &bit in bits {
        level = level.flip();
        out.push(level);
        if bit {
            level = level.flip();
        }
        out.push(level);
    }
    out
}

/// Pairwise biphase decode without the boundary check, for alignment
/// hunting where the frame checks do the validating.
pub(crate) fn bmc_decode_unchecked(levels: &[Level]) -> Vec<bool> {
    levels.chunks_exact(2).map(|pair| pair[0] != pair[1]).collect()
}

/// Inverse of [`bmc_encode`] for any initial level. The boundary transition
/// between consecutive bits is checked; a missing one is a decode error at
/// that bit index.
pub fn bmc_decode(levels: &[Level]) -> Result<Vec<bool>, CodecError> {
    if !levels.len().is_multiple_of(2) {
        return Err(CodecError::OddHalfBits(levels.len()));
    }
    let mut bits = Vec::with_capacity(levels.len() / 2);
    let mut prev_end: Option<Level> = None;
    for (i, pair) in levels.chunks_exact(2).enumerate() {
        if let Some(p) = prev_end {
            if pair[0] == p {
                return Err(CodecError::MissingBoundary(i));
            }
        }
        bits.push(pair[0] != pair[1]);
        prev_end = Some(pair[1]);
    }
    Ok(bits)
}

// ---------------------------------------------------------------------------
// Byte framing
// ---------------------------------------------------------------------------

/// LSB-first bit expansion of a byte.
pub fn byte_bits(b: u8) -> [bool; 8] {
    std::array::from_fn(|i| (b >> i) & 1 == 1)
}

fn frame_byte(b: u8, out: &mut Vec<bool>) {
    out.push(false); // start
    out.extend_from_slice(&byte_bits(b));
    // odd parity: data bits plus parity carry an odd number of ones
    out.push(b.count_ones().is_multiple_of(2));
    out.push(true); // stop
}

/// Frame a packet: exactly [`PREAMBLE_LEN`] ONE bits, then header, payload,
/// and checksum bytes, each as start / 8 data LSB-first / odd parity / stop.
pub fn frame_packet(p: &QiPacket) -> Vec<bool> {
    let payload = p.payload();
    let mut out = Vec::with_capacity(PREAMBLE_LEN + 11 * (payload.len() + 2));
    out.extend(std::iter::repeat_n(true, PREAMBLE_LEN));
    frame_byte(p.header(), &mut out);
    for b in &payload {
        frame_byte(*b, &mut out);
    }
    frame_byte(p.checksum(), &mut out);
    out
}

fn read_byte(bits: &[bool], pos: &mut usize, byte_index: usize) -> Result<u8, CodecError> {
    if *pos + 11 > bits.len() {
        return Err(CodecError::Truncated);
    }
    if bits[*pos] {
        return Err(CodecError::BadStart(byte_index));
    }
    let mut value = 0u8;
    for i in 0..8 {
        if bits[*pos + 1 + i] {
            value |= 1 << i;
        }
    }
    let parity = bits[*pos + 9];
    if (value.count_ones() + u32::from(parity)) % 2 != 1 {
        return Err(CodecError::Parity(byte_index));
    }
    if !bits[*pos + 10] {
        return Err(CodecError::BadStop(byte_index));
    }
    *pos += 11;
    Ok(value)
}

/// Parse a framed packet: locate a run of at least [`PREAMBLE_LEN`] ONE bits
/// immediately followed by a start bit, then read and validate the byte
/// frames and the checksum.
pub fn parse_packet(bits: &[bool]) -> Result<QiPacket, CodecError> {
    // find the sync point: >= PREAMBLE_LEN ones, then a zero
    let mut run = 0usize;
    let mut start = None;
    for (i, &b) in bits.iter().enumerate() {
        if b {
            run += 1;
        } else {
            if run >= PREAMBLE_LEN {
                start = Some(i);
                break;
            }
            run = 0;
        }
    }
    let mut pos = start.ok_or(CodecError::NoPreamble)?;
    let header = read_byte(bits, &mut pos, 0)?;
    let n = payload_len(header).ok_or(CodecError::UnknownHeader(header))?;
    let mut payload = Vec::with_capacity(n);
    for i in 0..n {
        payload.push(read_byte(bits, &mut pos, 1 + i)?);
    }
    let received = read_byte(bits, &mut pos, 1 + n)?;
    let computed = payload.iter().fold(header, |acc, b| acc ^ b);
    if received != computed {
        return Err(CodecError::Checksum { computed, received });
    }
    QiPacket::from_bytes(header, &payload)
}

// ---------------------------------------------------------------------------
// ASK modulation
// ---------------------------------------------------------------------------

/// Render a bit stream as an envelope-domain load-modulation waveform:
/// BMC half-bit levels mapped to `{0, depth}` at bit clock `f_ask`.
pub fn ask_modulate(
    bits: &[bool],
    f_ask: f64,
    depth: f64,
    rate: f64,
) -> Result<Trace, CodecError> {
    if rate < 20.0 * f_ask {
        return Err(CodecError::RateTooLow { rate, f_ask });
    }
    let levels = bmc_encode(bits, Level::Low);
    let half_bit = rate / (2.0 * f_ask);
    let total = (levels.len() as f64 * half_bit).round() as usize;
    let mut samples = vec![0.0; total];
    for (i, level) in levels.iter().enumerate() {
        if *level == Level::High {
            let a = (i as f64 * half_bit).round() as usize;
            let b = (((i + 1) as f64) * half_bit).round() as usize;
            for s in &mut samples[a..b.min(total)] {
                *s = depth;
            }
        }
    }
    Ok(Trace::from_parts(rate, samples, Unit::Dimensionless, 0.0))
}

/// Minimum level separation relative to the trace mean below which
/// demodulation reports silence rather than data.
pub const ASK_MIN_SEPARATION_FRACTION: f64 = 0.005;

/// Baseline-tracking window of the demodulator, seconds. Drift slower than
/// roughly its reciprocal is rejected before thresholding.
pub const ASK_BASELINE_WINDOW: f64 = 0.5e-3;

/// Recover the bit stream from an envelope-domain trace.
///
/// Subtracts a moving-average baseline (so slow supply drift does not move
/// the threshold), thresholds at the midpoint between the two observed
/// levels, locks the clock to the boundary transitions, reconstructs
/// half-bit levels, and biphase-decodes them. Fails when the level
/// separation is under three times the in-cluster noise floor or under a
/// small fraction of the trace mean.
pub fn ask_demodulate(envelope: &Trace, f_ask: f64) -> Result<Vec<bool>, CodecError> {
    let rate = envelope.sample_rate();
    if rate < 20.0 * f_ask {
        return Err(CodecError::RateTooLow { rate, f_ask });
    }
    let half_bit = rate / (2.0 * f_ask);
    let smoothed = moving_average(envelope.samples(), (half_bit / 5.0).round().max(1.0) as usize);
    if smoothed.is_empty() {
        return Err(CodecError::NoModulation);
    }
    let baseline = moving_average(&smoothed, (ASK_BASELINE_WINDOW * rate).round().max(1.0) as usize);
    let x: Vec<f64> = smoothed.iter().zip(&baseline).map(|(s, b)| s - b).collect();

    let lo = percentile(&x, 0.10);
    let hi = percentile(&x, 0.90);
    let separation = hi - lo;
    let mean = envelope.samples().iter().sum::<f64>() / x.len() as f64;
    let abs_floor = ASK_MIN_SEPARATION_FRACTION * mean.abs().max(f64::MIN_POSITIVE);
    if separation < abs_floor {
        return Err(CodecError::LevelSeparation { separation, floor: abs_floor });
    }
    // in-cluster noise: residual RMS against the nearer of the two levels
    let noise = {
        let mut acc = 0.0;
        for &v in &x {
            let r = if (v - lo).abs() < (v - hi).abs() { v - lo } else { v - hi };
            acc += r * r;
        }
        (acc / x.len() as f64).sqrt()
    };
    if separation < 3.0 * noise {
        return Err(CodecError::LevelSeparation { separation, floor: 3.0 * noise });
    }

    // hysteresis: idle regions sit midway between the two levels after
    // baseline removal, so bare threshold crossings would chatter on noise
    let mid = 0.5 * (lo + hi);
    let guard = 0.2 * separation;
    let mut state = false;
    let binary: Vec<bool> = x
        .iter()
        .map(|&v| {
            if v > mid + guard {
                state = true;
            } else if v < mid - guard {
                state = false;
            }
            state
        })
        .collect();
    let transitions = debounced_transitions(&binary, (half_bit / 3.0).round() as usize);
    if transitions.is_empty() {
        return Err(CodecError::NoModulation);
    }

    // Quantize inter-transition intervals to half-bit counts. Same-level
    // runs in biphase code never exceed two half-bits, so a longer leading
    // run is idle and contributes nothing; a short one is signal starting at
    // the trace edge.
    let mut levels = Vec::new();
    let lead = (transitions[0] as f64 / half_bit).round() as usize;
    if (1..=2).contains(&lead) {
        let level = if binary[0] { Level::High } else { Level::Low };
        levels.extend(std::iter::repeat_n(level, lead));
    }
    for w in transitions.windows(2) {
        let n = ((w[1] - w[0]) as f64 / half_bit).round().max(1.0) as usize;
        let level = if binary[w[0]] { Level::High } else { Level::Low };
        levels.extend(std::iter::repeat_n(level, n));
    }
    // The stop bit's final half-bit either merges into trailing idle of the
    // same level or is closed by the drop back to idle; parity of the count
    // tells which, since every bit contributes exactly two half-bits.
    if levels.len() % 2 == 1 {
        let last = *transitions.last().expect("nonempty");
        levels.push(if binary[last] { Level::High } else { Level::Low });
    }

    // Interference can fake a transition just outside the frame; a slip
    // ahead of the alternating preamble stays hidden until the data bytes,
    // and trailing garbage trips the line-code check after a complete
    // packet. Hunt the alignment like a receiver hunting for parity lock:
    // decode pairwise without boundary checks and let the framing layer
    // (start/stop bits, parity, checksum) validate the candidate.
    let mut fallback: Option<Result<Vec<bool>, CodecError>> = None;
    for skip in 0..=3usize {
        if levels.len() < skip + 8 {
            break;
        }
        let cand = &levels[skip..];
        let cand = &cand[..cand.len() - cand.len() % 2];
        let bits = bmc_decode_unchecked(cand);
        if parse_packet(&bits).is_ok() {
            return Ok(bits);
        }
        if skip == 0 {
            fallback = Some(bmc_decode(cand));
        }
    }
    fallback.unwrap_or(Err(CodecError::NoModulation))
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    if len <= 1 || x.len() < len {
        return x.to_vec();
    }
    let mut out = Vec::with_capacity(x.len());
    let mut sum: f64 = x[..len].iter().sum();
    let inv = 1.0 / len as f64;
    // center-ish alignment: pad the first len-1 outputs with the first mean
    for _ in 0..len / 2 {
        out.push(sum * inv);
    }
    out.push(sum * inv);
    for i in len..x.len() {
        sum += x[i] - x[i - len];
        out.push(sum * inv);
    }
    while out.len() < x.len() {
        out.push(*out.last().expect("nonempty"));
    }
    out.truncate(x.len());
    out
}

fn percentile(x: &[f64], q: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

/// Indices where the binary waveform changes value, ignoring runs shorter
/// than `min_run` samples.
fn debounced_transitions(binary: &[bool], min_run: usize) -> Vec<usize> {
    let mut transitions = Vec::new();
    let mut run_start = 0usize;
    let mut i = 1;
    while i < binary.len() {
        if binary[i] != binary[i - 1] {
            if i - run_start >= min_run.max(1) {
                transitions.push(i);
                run_start = i;
            } else {
                // glitch: drop the previous transition and merge runs
                transitions.pop();
                run_start = *transitions.last().unwrap_or(&0);
            }
        }
        i += 1;
    }
    transitions
}

// ---------------------------------------------------------------------------
// FSK modulation
// ---------------------------------------------------------------------------

/// One segment of an FSK schedule: hold `freq` for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FskSegment {
    pub freq: f64,
    pub duration: f64,
}

/// Map a response to a carrier-frequency schedule: BMC half-bit levels sent
/// as `{f_p, f_p + delta_f}`, each half-bit lasting `cycles_per_bit / 2`
/// carrier cycles. ND yields an empty schedule.
pub fn fsk_modulate(
    resp: &FskResponse,
    f_p: f64,
    delta_f: f64,
    cycles_per_bit: u32,
) -> Vec<FskSegment> {
    let bits = resp.bits();
    let levels = bmc_encode(&bits, Level::Low);
    let half_bit_duration = f64::from(cycles_per_bit) / 2.0 / f_p;
    levels
        .iter()
        .map(|level| FskSegment {
            freq: match level {
                Level::Low => f_p,
                Level::High => f_p + delta_f,
            },
            duration: half_bit_duration,
        })
        .collect()
}

/// Total duration of a schedule in seconds.
pub fn schedule_duration(schedule: &[FskSegment]) -> f64 {
    schedule.iter().map(|s| s.duration).sum()
}

/// Render a schedule as the adapter-side ripple trace at twice the carrier
/// frequency, phase-continuous across segments.
pub fn synth_fsk_ripple(schedule: &[FskSegment], amplitude: f64, rate: f64) -> Trace {
    let total = schedule_duration(schedule);
    let n = (total * rate).round() as usize;
    let mut samples = Vec::with_capacity(n);
    let dt = 1.0 / rate;
    let mut phase = 0.0f64;
    let mut seg_idx = 0usize;
    let mut seg_end = schedule.first().map_or(0.0, |s| s.duration);
    let mut t = 0.0;
    for _ in 0..n {
        while t >= seg_end && seg_idx + 1 < schedule.len() {
            seg_idx += 1;
            seg_end += schedule[seg_idx].duration;
        }
        let f = schedule[seg_idx].freq;
        samples.push(amplitude * phase.cos());
        phase += 4.0 * PI * f * dt; // ripple rides at 2 f
        t += dt;
    }
    Trace::from_parts(rate, samples, Unit::Volts, 0.0)
}
