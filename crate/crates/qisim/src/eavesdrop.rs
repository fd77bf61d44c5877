//! Adapter-side passive recovery of Qi traffic.
//!
//! The receiver's load modulation reaches the adapter output as a train of
//! derivative-shaped pulses; a triangle smoothing filter followed by a
//! half-period shift-difference turns those back into a sliceable level
//! waveform. The charger's FSK responses reach the adapter as a ripple at
//! twice the power frequency, recovered by tracking the dominant
//! spectrogram bin near `2 f_p`.

use crate::codec::{
    self, bmc_decode, parse_packet, CodecError, FskResponse, Level, QiPacket, FSK_CYCLES_PER_BIT,
    FSK_DELTA_F,
};
use crate::signal::{stft, Trace, STFT_HOP, STFT_WINDOW};

/// Which side of the link a recovered message came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    RxToTx,
    TxToRx,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::RxToTx => "rx_to_tx",
            Direction::TxToRx => "tx_to_rx",
        })
    }
}

/// Payload of a recovered message.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovered {
    Packet(QiPacket),
    Response(FskResponse),
}

impl Recovered {
    pub fn summary(&self) -> String {
        match self {
            Recovered::Packet(p) => p.summary(),
            Recovered::Response(r) => r.summary(),
        }
    }
}

/// One eavesdropped message with its source direction, slicer confidence,
/// and start time within the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredMessage {
    pub direction: Direction,
    pub message: Recovered,
    /// 1.0 for a clean checksum, 0.5 for a parity-repaired packet.
    pub confidence: f64,
    pub t_start: f64,
}

impl RecoveredMessage {
    /// Report line: `t=<s> dir=<..> kind=<..> payload=<hex> conf=<..>`.
    pub fn report_line(&self) -> String {
        let (kind, payload) = match &self.message {
            Recovered::Packet(p) => (format!("{}", p.kind()), codec::hex(&p.payload())),
            Recovered::Response(r) => match r {
                FskResponse::Data(p) => (format!("FSK-{}", p.kind()), codec::hex(&p.payload())),
                other => (other.summary(), String::new()),
            },
        };
        format!(
            "t={:.6} dir={} kind={} payload={} conf={:.1}",
            self.t_start, self.direction, kind, payload, self.confidence
        )
    }
}

/// Triangle pulse smoothing filter `h1(t) = 1 - f_ask |t|` on
/// `[-1/f_ask, 1/f_ask]`, discretized at the trace rate and normalized to
/// unit area.
pub fn filter_h1(trace: &Trace, f_ask: f64) -> Trace {
    let rate = trace.sample_rate();
    let half_width = (rate / f_ask).round() as isize;
    let taps: Vec<f64> =
        (-half_width..=half_width).map(|k| 1.0 - f_ask * (k as f64).abs() / rate).collect();
    let norm: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.iter().map(|t| t / norm).collect();
    convolve_same(trace, &taps, half_width)
}

/// Phase-shift enhancement filter:
/// `y(t) = x(t - 1/(2 f_ask)) - x(t + 1/(2 f_ask))`.
pub fn filter_h2(trace: &Trace, f_ask: f64) -> Trace {
    let rate = trace.sample_rate();
    let shift = (rate / (2.0 * f_ask)).round() as isize;
    let x = trace.samples();
    let n = x.len() as isize;
    let samples = (0..n)
        .map(|i| {
            let a = if i >= shift { x[(i - shift) as usize] } else { 0.0 };
            let b = if i + shift < n { x[(i + shift) as usize] } else { 0.0 };
            a - b
        })
        .collect();
    Trace::from_parts(rate, samples, trace.unit(), trace.t0())
}

fn convolve_same(trace: &Trace, taps: &[f64], center: isize) -> Trace {
    let x = trace.samples();
    let n = x.len() as isize;
    let samples = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &t) in taps.iter().enumerate() {
                let k = i + center - j as isize;
                if k >= 0 && k < n {
                    acc += t * x[k as usize];
                }
            }
            acc
        })
        .collect();
    Trace::from_parts(trace.sample_rate(), samples, trace.unit(), trace.t0())
}

/// Recover ASK packets from an adapter-voltage trace.
///
/// Pipeline: `h1` then `h2`, energy detection to find packet windows, a
/// percentile threshold with half-bit clock search, biphase decode, and
/// packet parsing. Undecodable windows are skipped; no traffic found is an
/// empty list, not an error.
///
/// The filters run at the half-bit transition rate, twice the bit clock:
/// biphase-coded data toggles every 250 us during ONE runs, and a triangle
/// any wider nulls exactly that content. At the transition rate, the
/// shift-difference output sampled mid half-bit is the second difference of
/// the level sequence, whose sign equals the level itself.
pub fn recover_ask(adapter_trace: &Trace, f_ask: f64) -> Vec<RecoveredMessage> {
    let rate = adapter_trace.sample_rate();
    let half_bit = rate / (2.0 * f_ask);
    let f_transitions = 2.0 * f_ask;
    let y1 = filter_h1(adapter_trace, f_transitions);
    let y2 = filter_h2(&y1, f_transitions);

    let mut out = Vec::new();
    for (start, end) in energy_windows(y2.samples(), (2.0 * half_bit) as usize) {
        if let Some((packet, confidence, t_off)) =
            slice_window(&y2.samples()[start..end], half_bit)
        {
            out.push(RecoveredMessage {
                direction: Direction::RxToTx,
                message: Recovered::Packet(packet),
                confidence,
                t_start: adapter_trace.t0() + (start as f64 + t_off) / rate,
            });
        }
    }
    out
}

/// Segments of sustained energy, padded by one window length and merged.
fn energy_windows(x: &[f64], window: usize) -> Vec<(usize, usize)> {
    if x.is_empty() {
        return Vec::new();
    }
    let window = window.max(1);
    // moving RMS
    let mut energy = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for (i, &v) in x.iter().enumerate() {
        acc += v * v;
        if i >= window {
            acc -= x[i - window] * x[i - window];
        }
        energy.push((acc / window as f64).sqrt());
    }
    let peak = energy.iter().cloned().fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let threshold = 0.25 * peak;
    let pad = 2 * window;
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, e) in energy.iter().enumerate() {
        if *e > threshold {
            if open.is_none() {
                open = Some(i.saturating_sub(pad));
            }
        } else if let Some(s) = open {
            let e = (i + pad).min(x.len());
            if let Some(last) = segments.last_mut() {
                if s <= last.1 {
                    last.1 = e;
                    open = None;
                    continue;
                }
            }
            segments.push((s, e));
            open = None;
        }
    }
    if let Some(s) = open {
        let e = x.len();
        if let Some(last) = segments.last_mut() {
            if s <= last.1 {
                last.1 = e;
            } else {
                segments.push((s, e));
            }
        } else {
            segments.push((s, e));
        }
    }
    segments
}

/// Slice one packet window: search the half-bit clock phase, threshold at
/// half of the 95th percentile of the filtered magnitude, rebuild half-bit
/// levels from the sign at the sampling instants, and parse. Returns the
/// packet, the confidence, and the sample offset of the sync point.
fn slice_window(y: &[f64], half_bit: f64) -> Option<(QiPacket, f64, f64)> {
    if y.len() < (4.0 * half_bit) as usize {
        return None;
    }
    let mut mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let p95 = mags[((mags.len() - 1) as f64 * 0.95) as usize];
    let threshold = 0.5 * p95;
    if threshold <= 0.0 {
        return None;
    }

    // rank candidate clock phases by the summed magnitude at the sampling
    // instants
    let steps = 16;
    let mut offsets: Vec<(f64, f64)> = (0..steps)
        .map(|s| {
            let off = s as f64 * half_bit / steps as f64 * 2.0;
            let mut score = 0.0;
            let mut k = 0.0;
            while ((off + k * half_bit) as usize) < y.len() {
                score += y[(off + k * half_bit) as usize].abs();
                k += 1.0;
            }
            (off, score)
        })
        .collect();
    offsets.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite"));

    for &(off, _) in offsets.iter().take(4) {
        // levels from the sign at each half-bit instant; instants below the
        // threshold keep their sign but flag low confidence
        let mut levels = Vec::new();
        let mut k = 0.0;
        while ((off + k * half_bit) as usize) < y.len() {
            let v = y[(off + k * half_bit) as usize];
            levels.push(if v > 0.0 { Level::High } else { Level::Low });
            k += 1.0;
        }
        // the window padding yields spurious leading/trailing half-bits;
        // try trimming a few from the front and rely on the parser to skip
        // the rest
        for skip in 0..4 {
            if levels.len() <= skip + 8 {
                break;
            }
            let trimmed = &levels[skip..];
            let even = &trimmed[..trimmed.len() - trimmed.len() % 2];
            if let Ok(bits) = bmc_decode_lenient(even) {
                match parse_packet(&bits) {
                    Ok(packet) => return Some((packet, 1.0, off)),
                    Err(_) => {
                        if let Some(packet) = parse_with_repair(&bits) {
                            return Some((packet, 0.5, off));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Biphase decode that tolerates boundary faults in the window padding:
/// decodes pairwise without the inter-bit boundary check, leaving error
/// detection to parity and checksum.
fn bmc_decode_lenient(levels: &[Level]) -> Result<Vec<bool>, CodecError> {
    if !levels.len().is_multiple_of(2) {
        return Err(CodecError::OddHalfBits(levels.len()));
    }
    Ok(levels.chunks_exact(2).map(|pair| pair[0] != pair[1]).collect())
}

/// Single-byte parity repair: when flipping one data bit of a parity-failing
/// byte yields a packet whose checksum passes, accept it at half confidence.
fn parse_with_repair(bits: &[bool]) -> Option<QiPacket> {
    let n = bits.len();
    let mut candidates = Vec::new();
    for i in 0..n {
        let mut flipped = bits.to_vec();
        flipped[i] = !flipped[i];
        if let Ok(p) = parse_packet(&flipped) {
            candidates.push(p);
        }
    }
    candidates.dedup();
    if candidates.len() == 1 {
        candidates.pop()
    } else {
        None
    }
}

/// Recover FSK responses from a carrier-domain adapter trace.
///
/// Tracks the dominant spectrogram bin near `2 f_p`, maps deviations of at
/// least the FSK shift to bit levels, and biphase-decodes the switching
/// pattern. Returns an empty list when no switching is visible.
pub fn recover_fsk(adapter_trace: &Trace, f_p_nominal: f64) -> Vec<RecoveredMessage> {
    recover_fsk_with(adapter_trace, f_p_nominal, FSK_DELTA_F, u32::from(FSK_CYCLES_PER_BIT as u16))
}

/// [`recover_fsk`] with explicit deviation and bit-length parameters.
pub fn recover_fsk_with(
    adapter_trace: &Trace,
    f_p_nominal: f64,
    delta_f: f64,
    cycles_per_bit: u32,
) -> Vec<RecoveredMessage> {
    let rate = adapter_trace.sample_rate();
    if adapter_trace.len() < STFT_WINDOW {
        return Vec::new();
    }
    let spec = match stft(adapter_trace, STFT_WINDOW, STFT_HOP) {
        Ok(s) => s,
        Err(_) => return Vec::new(),
    };
    let ripple = 2.0 * f_p_nominal;
    let band_lo = ripple - 4.0 * delta_f;
    let band_hi = ripple + 4.0 * delta_f;

    // per-frame dominant frequency, gated on the peak actually carrying
    // energy relative to the frame's median magnitude (scale-free)
    let mut levels_by_frame: Vec<Option<bool>> = Vec::with_capacity(spec.num_frames());
    for frame in 0..spec.num_frames() {
        let row = &spec.magnitudes()[frame];
        let mut sorted: Vec<f64> = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let median = sorted[sorted.len() / 2];
        let peak_bin = spec.dominant_bin(frame, band_lo, band_hi);
        let level = peak_bin.and_then(|b| {
            if row[b] > 20.0 * median.max(f64::MIN_POSITIVE) {
                let f = spec.dominant_freq(frame, band_lo, band_hi).expect("peak exists");
                Some(f >= ripple + delta_f)
            } else {
                None
            }
        });
        levels_by_frame.push(level);
    }

    // half-bit duration in frames
    let half_bit_frames = (f64::from(cycles_per_bit) / 2.0 / f_p_nominal) * rate / STFT_HOP as f64;
    let mut out = Vec::new();
    let mut frame = 0;
    while frame < levels_by_frame.len() {
        // find the start of a carrying region
        if levels_by_frame[frame].is_none() {
            frame += 1;
            continue;
        }
        let start = frame;
        while frame < levels_by_frame.len() && levels_by_frame[frame].is_some() {
            frame += 1;
        }
        let region: Vec<bool> =
            levels_by_frame[start..frame].iter().map(|l| l.expect("carrying")).collect();
        if let Some((message, confidence)) = decode_fsk_region(&region, half_bit_frames) {
            out.push(RecoveredMessage {
                direction: Direction::TxToRx,
                message: Recovered::Response(message),
                confidence,
                t_start: adapter_trace.t0()
                    + (start * STFT_HOP + STFT_WINDOW / 2) as f64 / rate,
            });
        }
    }
    out
}

/// Turn a frame-level binary frequency track into a response: quantize the
/// switch intervals to half-bits, biphase-decode, and match either a raw
/// ACK/NAK pattern or a framed data packet.
fn decode_fsk_region(levels: &[bool], half_bit_frames: f64) -> Option<(FskResponse, f64)> {
    let mut transitions = vec![0usize];
    for i in 1..levels.len() {
        if levels[i] != levels[i - 1] {
            transitions.push(i);
        }
    }
    if transitions.len() < 3 {
        return None;
    }
    let mut half_bits = Vec::new();
    for w in transitions.windows(2) {
        let n = ((w[1] - w[0]) as f64 / half_bit_frames).round().max(1.0) as usize;
        if n > 2 {
            return None; // switching too slow to be biphase data
        }
        let level = if levels[w[0]] { Level::High } else { Level::Low };
        half_bits.extend(std::iter::repeat_n(level, n));
    }
    // the region's trailing run completes the final bit; the spectrogram may
    // clip it, so on an odd count try extending with the trailing level
    // before dropping it
    let tail = levels.len() - transitions.last().expect("nonempty");
    let n = ((tail as f64) / half_bit_frames).round().clamp(1.0, 2.0) as usize;
    let last = if levels[*transitions.last().expect("nonempty")] { Level::High } else { Level::Low };
    half_bits.extend(std::iter::repeat_n(last, n));

    let candidates: Vec<Vec<Level>> = if half_bits.len() % 2 == 1 {
        let mut extended = half_bits.clone();
        extended.push(last);
        let mut truncated = half_bits.clone();
        truncated.truncate(truncated.len() - 1);
        vec![extended, truncated]
    } else {
        vec![half_bits]
    };

    for candidate in candidates {
        let Ok(bits) = bmc_decode(&candidate) else { continue };
        // raw response patterns first
        if bits.len() == 8 {
            let byte =
                bits.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << i));
            match byte {
                0xFF => return Some((FskResponse::Ack, 1.0)),
                0x33 => return Some((FskResponse::Nak, 1.0)),
                0x55 => return Some((FskResponse::Nd, 1.0)),
                _ => continue,
            }
        }
        if let Ok(p) = parse_packet(&bits) {
            return Some((FskResponse::Data(p), 1.0));
        }
    }
    None
}
