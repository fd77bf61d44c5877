//! The voltage manipulator at the adapter output: injects interference per
//! the propagation model, forges ASK packets as voltage waveforms, injects
//! voice waveforms, jams legitimate traffic, and drives the foreign-object
//! handshake while reading the charger's FSK responses off the adapter
//! ripple.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charger::{Charger, ChargerAction, DemodEvent, Phase, Protocol};
use crate::circuit::{
    self, apply_bus_response, CircuitError, InterferenceSpec, SystemParams,
};
use crate::codec::{
    ask_demodulate, ask_modulate, frame_packet, fsk_modulate, parse_packet, synth_fsk_ripple,
    CodecError, FskResponse, QiPacket, FSK_CYCLES_PER_BIT, FSK_DELTA_F, F_ASK, HDR_ID,
    SRQ_END_NEGOTIATION, SRQ_GUARANTEED_POWER,
};
use crate::eavesdrop::{recover_fsk, Recovered};
use crate::signal::{Trace, Unit, CARRIER_RATE, ENVELOPE_RATE};

/// Default depth for forged packets, well under the charging-disruption
/// level.
pub const FORGE_DEPTH: f64 = 0.1;

/// Default jamming depth.
pub const JAM_DEPTH: f64 = 0.5;

/// Identity the attacker presents during the handshake.
pub const ATTACKER_ID: [u8; 7] = *b"ATTACKR";

/// Apply interference to an adapter-voltage trace:
/// `v(t) = base(t) * (1 + m_i w(t))` with `w` the normalized waveform.
pub fn inject_noise(base: &Trace, spec: &InterferenceSpec) -> Result<Trace, CircuitError> {
    spec.validate()?;
    let modulation: Vec<f64> = match &spec.waveform {
        crate::circuit::InterferenceWaveform::Sine(f_i) => {
            let w = 2.0 * PI * f_i / base.sample_rate();
            (0..base.len()).map(|k| (w * k as f64).sin()).collect()
        }
        crate::circuit::InterferenceWaveform::Arbitrary(w) => {
            let w = circuit::normalize_peak(w);
            (0..base.len()).map(|k| w.samples().get(k).copied().unwrap_or(0.0)).collect()
        }
    };
    let samples = base
        .samples()
        .iter()
        .zip(&modulation)
        .map(|(&v, &m)| v * (1.0 + spec.depth * m))
        .collect();
    Ok(Trace::from_parts(base.sample_rate(), samples, base.unit(), base.t0()))
}

/// Render a packet as adapter-voltage interference: the framed ASK waveform
/// as a fraction of the nominal voltage, levels `{0, depth}`.
pub fn forge_ask_packet(packet: &QiPacket, depth: f64, rate: f64) -> Trace {
    let framed = frame_packet(packet);
    ask_modulate(&framed, F_ASK, depth, rate).expect("envelope rate fits the ASK clock")
}

/// Normalize an audio waveform to unit peak and scale it to the requested
/// interference depth. The result adds onto the adapter voltage as a
/// fraction of nominal.
pub fn inject_voice(audio: &Trace, depth: f64) -> Trace {
    circuit::normalize_peak(audio).scale(depth).with_unit(Unit::Dimensionless)
}

/// Jamming waveform: pseudo-random binary bursts on the ASK half-bit grid,
/// levels `{0, depth}`, deterministic per seed.
pub fn jam_ask(duration: f64, depth: f64, rate: f64, rng: &mut ChaCha8Rng) -> Trace {
    let half_bit = (rate / (2.0 * F_ASK)).round() as usize;
    let n = (duration * rate).round() as usize;
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let level = if rng.random::<bool>() { depth } else { 0.0 };
        for _ in 0..half_bit.min(n - samples.len()) {
            samples.push(level);
        }
    }
    Trace::from_parts(rate, samples, Unit::Dimensionless, 0.0)
}

/// Deterministic synthetic utterance: pitch-glided low harmonics with
/// syllable amplitude bumps and a weak sibilance burst between syllables,
/// normalized to unit peak. Band-limited well under 10 kHz, with the bulk
/// of the energy below 600 Hz the way speech is.
pub fn voice_like(duration: f64, rate: f64, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration * rate).round() as usize;
    let syllable = 0.4;
    let mut samples = vec![0.0; n];
    let jitter: f64 = rng.random_range(0.9..1.1);
    let mut phases = [0.0f64; 3];
    let mut sib_phase = 0.0f64;
    for (k, slot) in samples.iter_mut().enumerate() {
        let t = k as f64 / rate;
        let pos = (t / syllable).fract();
        // raised-cosine syllable envelope with a gap between syllables
        let env = if pos < 0.8 { 0.5 * (1.0 - (2.0 * PI * pos / 0.8).cos()) } else { 0.0 };
        let pitch = (100.0 + 40.0 * pos) * jitter;
        let mut v = 0.0;
        for (h, phase) in phases.iter_mut().enumerate() {
            let hf = (h + 1) as f64;
            *phase += 2.0 * PI * pitch * hf / rate;
            v += (*phase).sin() / (hf * hf);
        }
        // sibilance burst in the syllable gap
        sib_phase += 2.0 * PI * 2400.0 / rate;
        let sib = if pos >= 0.8 { 0.15 * sib_phase.sin() } else { 0.0 };
        *slot = env * v + sib;
    }
    circuit::normalize_peak(&Trace::from_parts(rate, samples, Unit::Dimensionless, 0.0))
}

/// Forward-propagate an adapter-side interference fraction to the charger's
/// demodulation point and classify the result.
///
/// The waveform runs through the bus response (and the countermeasure
/// filter first, when fitted); the charger's demodulator then sees the unit
/// envelope plus the propagated modulation.
pub fn charger_demod_event(
    params: &SystemParams,
    interference_fraction: &Trace,
    countermeasure_cutoff: Option<f64>,
    noise_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> DemodEvent {
    let filtered = match countermeasure_cutoff {
        Some(cutoff) => match circuit::countermeasure_filter(interference_fraction, cutoff) {
            Ok(t) => t,
            Err(_) => interference_fraction.clone(),
        },
        None => interference_fraction.clone(),
    };
    let propagated = apply_bus_response(params, &filtered);
    let env: Vec<f64> = propagated
        .samples()
        .iter()
        .map(|&m| 1.0 + m + noise_sigma * gaussian(rng))
        .collect();
    let envelope = Trace::from_parts(propagated.sample_rate(), env, Unit::Dimensionless, 0.0);
    classify_demod(&envelope)
}

/// Demodulate a charger-side envelope into a state-machine event: silence
/// when no modulation clears the floor, a parse error when modulation is
/// present but undecodable.
pub fn classify_demod(envelope: &Trace) -> DemodEvent {
    match ask_demodulate(envelope, F_ASK) {
        Ok(bits) => match parse_packet(&bits) {
            Ok(packet) => DemodEvent::Packet(packet),
            Err(_) => DemodEvent::ParseError,
        },
        Err(CodecError::LevelSeparation { .. }) | Err(CodecError::NoModulation) => {
            DemodEvent::Silence
        }
        Err(_) => DemodEvent::ParseError,
    }
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Read a charger FSK response the way the attacker can: synthesize the
/// adapter ripple for the response schedule at the operating point, add
/// measurement noise, and run the spectrogram recovery.
pub fn eavesdrop_response(
    params: &SystemParams,
    duty: f64,
    resp: &FskResponse,
    rng: &mut ChaCha8Rng,
) -> Option<FskResponse> {
    let schedule = fsk_modulate(resp, params.f_p, FSK_DELTA_F, FSK_CYCLES_PER_BIT);
    if schedule.is_empty() {
        return None;
    }
    let i_tx = circuit::tx_amplitude(params, duty).ok()?;
    let phi = circuit::phase_total(params).ok()?;
    let bus = circuit::bus_current_with_phase(i_tx, duty, phi, params.f_p).ok()?;
    let amplitude = circuit::adapter_ripple_amplitude(params, bus.dc, phi).ok()?;
    let clean = synth_fsk_ripple(&schedule, amplitude, CARRIER_RATE);
    let sigma = amplitude / 10.0;
    let noisy: Vec<f64> =
        clean.samples().iter().map(|&s| s + sigma * gaussian(rng)).collect();
    let trace = Trace::from_parts(CARRIER_RATE, noisy, Unit::Volts, 0.0);
    let recovered = recover_fsk(&trace, params.f_p);
    recovered.into_iter().find_map(|m| match m.message {
        Recovered::Response(r) => Some(r),
        Recovered::Packet(_) => None,
    })
}

/// One line of a handshake transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub t: f64,
    pub sent: String,
    pub observed: String,
}

/// Outcome of the foreign-object handshake.
#[derive(Debug, Clone, PartialEq)]
pub struct HandshakeTranscript {
    pub entries: Vec<TranscriptEntry>,
    pub success: bool,
    /// Charger identity disclosed over FSK during negotiation.
    pub charger_identity: Option<[u8; 7]>,
}

/// Drive a charger with no RX device through ping, configuration, and
/// negotiation using forged packets, observing every response through the
/// adapter-side FSK eavesdropper. Succeeds when the charger enters extended
/// power transfer; a NAK aborts with the transcript so far.
pub fn run_fod_handshake(
    charger: &mut Charger,
    reference_q_tenths: u16,
    depth: f64,
    seed: u64,
) -> HandshakeTranscript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript = HandshakeTranscript {
        entries: Vec::new(),
        success: false,
        charger_identity: None,
    };
    let params = charger.params().clone();
    let noise_sigma = 1e-4;

    // let the probe run briefly
    charger.tick(0.02, &DemodEvent::Silence);

    let sequence: Vec<QiPacket> = vec![
        QiPacket::Signal { strength: 0x84 },
        QiPacket::Ident { device_id: ATTACKER_ID },
        QiPacket::Config { neg: true, max_power_half_watts: 30 },
        QiPacket::Fod { reference_q_tenths },
        QiPacket::GeneralRequest { requested: HDR_ID },
        QiPacket::SpecificRequest { code: SRQ_GUARANTEED_POWER, value: 30 },
        QiPacket::SpecificRequest { code: SRQ_END_NEGOTIATION, value: 0 },
    ];

    for packet in sequence {
        let forged = forge_ask_packet(&packet, depth, ENVELOPE_RATE);
        let window = forged.duration() + 0.01;
        let event = charger_demod_event(&params, &forged, None, noise_sigma, &mut rng);
        let actions = charger.tick(window, &event);
        let mut observed = String::new();
        for action in actions {
            if let ChargerAction::Respond(resp) = action {
                match eavesdrop_response(&params, charger.state().duty, &resp, &mut rng) {
                    Some(FskResponse::Data(QiPacket::Ident { device_id })) => {
                        transcript.charger_identity = Some(device_id);
                        observed = format!("DATA ID id={}", crate::codec::hex(&device_id));
                    }
                    Some(r) => {
                        observed = r.summary();
                        if r == FskResponse::Nak {
                            transcript.entries.push(TranscriptEntry {
                                t: charger.state().now,
                                sent: packet.summary(),
                                observed,
                            });
                            return transcript;
                        }
                    }
                    None => observed = "no response".into(),
                }
            }
        }
        transcript.entries.push(TranscriptEntry {
            t: charger.state().now,
            sent: packet.summary(),
            observed,
        });
    }

    transcript.success = charger.state().phase == Phase::PowerTransfer
        && charger.state().protocol == Protocol::Extended;
    transcript
}

/// Scheduled attack behavior consumed by the scenario engine.
#[derive(Debug, Clone)]
pub enum AttackMode {
    /// Continuous normalized audio injected at a fixed depth.
    VoiceInjection { depth: f64, seed: u64 },
    /// Forged control-error packets at a fixed cadence.
    QiInjection { schedule: Vec<(f64, QiPacket)>, depth: f64 },
    /// Full power toast: sustain CE/RP forgery and jam legitimate windows.
    Toast { depth: f64, jam_depth: f64, jam: bool, period: f64 },
    /// Handshake with no receiver present, then sustain like a toast.
    FodHandshake { reference_q_tenths: u16, depth: f64, period: f64 },
}

/// Engine-facing attacker: decides what to transmit at each moment.
#[derive(Debug, Clone)]
pub struct Attacker {
    pub mode: AttackMode,
    pub start: f64,
    next_ce: f64,
    next_rp: f64,
    handshake_step: usize,
    waiting_response: bool,
    injection_index: usize,
    pub sustaining: bool,
}

/// A transmission the attacker wants on the wire now.
#[derive(Debug, Clone, PartialEq)]
pub struct ForgedTx {
    pub packet: QiPacket,
    pub depth: f64,
}

impl Attacker {
    pub fn new(mode: AttackMode, start: f64) -> Attacker {
        Attacker {
            mode,
            start,
            next_ce: start,
            next_rp: start + 0.7,
            handshake_step: 0,
            waiting_response: false,
            injection_index: 0,
            sustaining: false,
        }
    }

    /// Whether legitimate ASK windows should be covered with jamming now.
    pub fn jamming(&self, now: f64) -> bool {
        match &self.mode {
            AttackMode::Toast { jam, .. } => *jam && now >= self.start,
            AttackMode::FodHandshake { .. } => false,
            _ => false,
        }
    }

    pub fn jam_depth(&self) -> f64 {
        match &self.mode {
            AttackMode::Toast { jam_depth, .. } => *jam_depth,
            _ => JAM_DEPTH,
        }
    }

    /// Continuous interference component (voice), if any.
    pub fn continuous_depth_seed(&self, now: f64) -> Option<(f64, u64)> {
        match &self.mode {
            AttackMode::VoiceInjection { depth, seed } if now >= self.start => {
                Some((*depth, *seed))
            }
            _ => None,
        }
    }

    /// Next forged transmission due at `now`, given the adapter-side power
    /// measurement (for RP echoes).
    pub fn next_transmission(
        &mut self,
        now: f64,
        measured_adapter_power: f64,
        charger_in_power_transfer: bool,
    ) -> Option<ForgedTx> {
        if now < self.start {
            return None;
        }
        match &self.mode {
            AttackMode::VoiceInjection { .. } => None,
            AttackMode::QiInjection { schedule, depth } => {
                let (t, packet) = schedule.get(self.injection_index)?;
                if now >= self.start + *t {
                    self.injection_index += 1;
                    Some(ForgedTx { packet: packet.clone(), depth: *depth })
                } else {
                    None
                }
            }
            AttackMode::Toast { depth, period, .. } => {
                self.sustain(now, measured_adapter_power, charger_in_power_transfer, *depth, *period)
            }
            AttackMode::FodHandshake { reference_q_tenths, depth, period } => {
                let (q, depth, period) = (*reference_q_tenths, *depth, *period);
                if self.sustaining {
                    return self.sustain(now, measured_adapter_power, true, depth, period);
                }
                if self.waiting_response {
                    return None;
                }
                let packet = match self.handshake_step {
                    0 => QiPacket::Signal { strength: 0x84 },
                    1 => QiPacket::Ident { device_id: ATTACKER_ID },
                    2 => QiPacket::Config { neg: true, max_power_half_watts: 30 },
                    3 => QiPacket::Fod { reference_q_tenths: q },
                    4 => QiPacket::GeneralRequest { requested: HDR_ID },
                    5 => QiPacket::SpecificRequest { code: SRQ_GUARANTEED_POWER, value: 30 },
                    6 => QiPacket::SpecificRequest { code: SRQ_END_NEGOTIATION, value: 0 },
                    _ => {
                        self.sustaining = true;
                        self.next_ce = now;
                        self.next_rp = now + 0.7;
                        return None;
                    }
                };
                self.handshake_step += 1;
                // steps that elicit an FSK response pause until it arrives
                self.waiting_response = self.handshake_step > 3;
                Some(ForgedTx { packet, depth })
            }
        }
    }

    fn sustain(
        &mut self,
        now: f64,
        measured_adapter_power: f64,
        charger_in_power_transfer: bool,
        depth: f64,
        period: f64,
    ) -> Option<ForgedTx> {
        if !charger_in_power_transfer {
            return None;
        }
        if now >= self.next_ce {
            self.next_ce = now + period;
            return Some(ForgedTx { packet: QiPacket::ControlError { error: 127 }, depth });
        }
        if now >= self.next_rp {
            self.next_rp = now + 1.5;
            let mw = (measured_adapter_power * 1000.0).round().clamp(0.0, 65535.0) as u16;
            return Some(ForgedTx { packet: QiPacket::ReceivedPower { milliwatts: mw }, depth });
        }
        None
    }

    /// Feed back a recovered FSK response (handshake pacing).
    pub fn handle_response(&mut self, resp: &FskResponse) {
        if let AttackMode::FodHandshake { .. } = self.mode {
            self.waiting_response = false;
            if *resp == FskResponse::Nak {
                // refused: stop the sequence
                self.handshake_step = usize::MAX - 1;
            }
        }
    }
}
