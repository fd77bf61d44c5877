//! Configuration-driven scenario runner tying the circuit model, codec,
//! charger, receiver, attacker, and eavesdropper into complete timelines:
//! baseline charging, eavesdropping demos, voice injection, power toasting,
//! and foreign-object destruction.
//!
//! One scenario is one deterministic single-threaded timeline: all noise
//! comes from a single seeded generator consumed in tick order, so the same
//! configuration and seed reproduce byte-identical reports and traces.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::attacker::{
    classify_demod, eavesdrop_response, forge_ask_packet, gaussian, jam_ask, voice_like,
    AttackMode, Attacker, ForgedTx,
};
use crate::charger::{Charger, ChargerAction, DemodEvent, Phase, Protocol, TerminationReason};
use crate::circuit::{
    self, apply_bus_response, countermeasure_filter, load_change_train, InterferenceSpec,
    InterferenceWaveform, SystemParams,
};
use crate::codec::{
    frame_packet, fsk_modulate, schedule_duration, synth_fsk_ripple, FskResponse, QiPacket,
    FSK_CYCLES_PER_BIT, FSK_DELTA_F, F_ASK,
};
use crate::eavesdrop::{recover_ask, recover_fsk, Recovered, RecoveredMessage};
use crate::profiles::{AttackConfig, ConfigError, ScenarioConfig, ScenarioKind};
use crate::receiver::Receiver;
use crate::signal::{envelope, modulation_depth, stft, Trace, Unit, CARRIER_RATE, ENVELOPE_RATE};

/// Engine tick, seconds.
pub const TICK: f64 = 0.01;

/// Idle margin added around every communication window, seconds.
const WINDOW_MARGIN: f64 = 1.5e-3;

/// Gap the attacker leaves after its own transmissions, seconds.
const ATTACKER_GAP: f64 = 0.04;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario setup: {0}")]
    Setup(String),
    #[error("parameter `{0}` is not sweepable")]
    NotSweepable(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e.to_string())
    }
}

/// One named pass/fail check of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Everything a run produces: metrics, assertions, rendered reports, and
/// the files written when an output directory was given.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub recovered: Vec<RecoveredMessage>,
    pub summary: String,
    pub transition_log: String,
    pub files: Vec<PathBuf>,
}

impl ScenarioReport {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

#[derive(Debug, Clone)]
enum WindowPart {
    /// Load modulation originating at the receiver (already coil-side).
    RxPacket { offset: f64, packet: QiPacket, depth: f64 },
    /// Forged packet injected at the adapter output.
    Forged { offset: f64, packet: QiPacket, depth: f64 },
    /// Jam burst at the adapter output.
    Jam { offset: f64, duration: f64, depth: f64 },
}

#[derive(Debug, Clone)]
struct Window {
    start: f64,
    end: f64,
    parts: Vec<WindowPart>,
}

#[derive(Debug, Clone)]
struct PendingFsk {
    end: f64,
    resp: FskResponse,
}

struct Engine {
    cfg: ScenarioConfig,
    charger: Charger,
    receiver: Option<Receiver>,
    attacker: Option<Attacker>,
    rng: ChaCha8Rng,
    now: f64,
    window: Option<Window>,
    pending_events: VecDeque<DemodEvent>,
    pending_fsk: Vec<PendingFsk>,
    rx_busy_until: f64,
    atk_busy_until: f64,
    /// Full-duration voice interference (fraction of nominal), when active.
    voice: Option<(f64, Trace)>,
    record_eavesdrop: bool,
    recovered: Vec<RecoveredMessage>,
    transition_log: String,
    power_rows: Vec<(f64, f64, f64, f64)>,
    temp_rows: Vec<(f64, f64, Vec<f64>)>,
    adapter_rows: Vec<(f64, f64)>,
    /// Full-rate adapter trace segments for the eavesdrop demo.
    ask_trace: Vec<f64>,
    legit_windows: usize,
    interruptions: usize,
    terminations: Vec<(f64, TerminationReason)>,
    reached_pt: bool,
    reached_extended: bool,
    max_temp: f64,
}

impl Engine {
    fn new(cfg: ScenarioConfig) -> Result<Engine, ScenarioError> {
        let mut charger = Charger::new(cfg.charger.clone(), cfg.system.clone())
            .map_err(ScenarioError::Setup)?;
        if !cfg.objects.is_empty() {
            let degradation = cfg
                .objects
                .iter()
                .map(|o| o.q_degradation)
                .fold(1.0f64, f64::min);
            charger.set_measured_q(cfg.charger.measured_q * degradation);
        }
        let receiver = cfg
            .receiver
            .clone()
            .map(Receiver::new)
            .transpose()
            .map_err(ScenarioError::Setup)?;
        let attacker = cfg
            .attack
            .as_ref()
            .map(build_attacker)
            .transpose()?;
        let voice = match (&cfg.attack, attacker.as_ref().map(|a| &a.mode)) {
            (Some(a), Some(AttackMode::VoiceInjection { depth, seed })) => {
                let audio = voice_like(cfg.duration - a.start, ENVELOPE_RATE, *seed);
                Some((a.start, audio.scale(*depth)))
            }
            _ => None,
        };
        let record_eavesdrop = cfg.kind == ScenarioKind::EavesdropDemo;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Engine {
            charger,
            receiver,
            attacker,
            rng,
            now: 0.0,
            window: None,
            pending_events: VecDeque::new(),
            pending_fsk: Vec::new(),
            rx_busy_until: 0.0,
            atk_busy_until: 0.0,
            voice,
            record_eavesdrop,
            recovered: Vec::new(),
            transition_log: String::new(),
            power_rows: Vec::new(),
            temp_rows: Vec::new(),
            adapter_rows: Vec::new(),
            ask_trace: Vec::new(),
            legit_windows: 0,
            interruptions: 0,
            terminations: Vec::new(),
            reached_pt: false,
            reached_extended: false,
            max_temp: 0.0,
            cfg,
        })
    }

    fn run(mut self) -> (ScenarioConfig, EngineOutcome) {
        let steps = (self.cfg.duration / TICK).round() as usize;
        for _ in 0..steps {
            self.tick();
        }
        let receiver = self.receiver;
        let outcome = EngineOutcome {
            charger_phase: self.charger.state().phase,
            final_power: self.charger.transmitted_power(),
            final_duty: self.charger.state().duty,
            receiver_temp: receiver.as_ref().map(|r| r.temp()),
            protections: receiver.as_ref().map(|r| r.protections()),
            objects: self.cfg.objects.clone(),
            recovered: self.recovered,
            transition_log: self.transition_log,
            power_rows: self.power_rows,
            temp_rows: self.temp_rows,
            adapter_rows: self.adapter_rows,
            ask_trace: self.ask_trace,
            legit_windows: self.legit_windows,
            interruptions: self.interruptions,
            terminations: self.terminations,
            reached_pt: self.reached_pt,
            reached_extended: self.reached_extended,
            max_temp: self.max_temp,
        };
        (self.cfg, outcome)
    }

    fn tick(&mut self) {
        self.now += TICK;
        let transmitted = self.charger.transmitted_power();

        // receiver traffic and thermal
        let absorption: f64 = self.cfg.objects.iter().map(|o| o.absorption).sum();
        let received = (transmitted * (1.0 - absorption)).max(0.0);
        if let Some(rx) = self.receiver.as_mut() {
            let depth = rx.profile().ask_depth;
            for packet in rx.rx_step(received, TICK) {
                let start = self.now.max(self.rx_busy_until);
                let duration = tx_duration(&packet);
                self.rx_busy_until = start + duration + 0.005;
                let jam = self
                    .attacker
                    .as_ref()
                    .map(|a| a.jamming(self.now))
                    .unwrap_or(false);
                let jam_depth = self.attacker.as_ref().map(|a| a.jam_depth()).unwrap_or(0.0);
                self.add_part(
                    start,
                    duration,
                    WindowPart::RxPacket { offset: 0.0, packet, depth },
                );
                if jam {
                    self.add_part(
                        start,
                        duration,
                        WindowPart::Jam { offset: 0.0, duration: duration + 0.002, depth: jam_depth },
                    );
                }
            }
        }
        for obj in self.cfg.objects.iter_mut() {
            obj.step(transmitted, TICK);
            self.max_temp = self.max_temp.max(obj.thermal.temp);
        }
        if let Some(rx) = self.receiver.as_ref() {
            self.max_temp = self.max_temp.max(rx.temp());
        }

        // attacker traffic
        if self.now >= self.atk_busy_until {
            let in_pt = self.charger.state().phase == Phase::PowerTransfer;
            if let Some(atk) = self.attacker.as_mut() {
                if let Some(ForgedTx { packet, depth }) =
                    atk.next_transmission(self.now, transmitted, in_pt)
                {
                    let start = self.now;
                    let duration = tx_duration(&packet);
                    self.atk_busy_until = start + duration + ATTACKER_GAP;
                    self.add_part(start, duration, WindowPart::Forged { offset: 0.0, packet, depth });
                }
            }
        }

        // close a due communication window
        let event = if self.window.as_ref().is_some_and(|w| self.now >= w.end) {
            let window = self.window.take().expect("checked above");
            self.render_window(&window);
            self.pending_events.pop_front()
        } else {
            self.pending_events.pop_front()
        };
        let event = event.unwrap_or(DemodEvent::Silence);

        // charger step
        let actions = self.charger.tick(TICK, &event);
        if self.charger.state().phase == Phase::PowerTransfer {
            self.reached_pt = true;
            if self.charger.state().protocol == Protocol::Extended {
                self.reached_extended = true;
            }
        }
        for action in actions {
            match action {
                ChargerAction::Respond(resp) => {
                    let schedule =
                        fsk_modulate(&resp, self.cfg.system.f_p, FSK_DELTA_F, FSK_CYCLES_PER_BIT);
                    let end = self.now + schedule_duration(&schedule).max(0.001);
                    self.pending_fsk.push(PendingFsk { end, resp });
                }
                ChargerAction::Terminate(reason) => {
                    self.terminations.push((self.now, reason));
                }
            }
        }

        // completed FSK responses reach the receiver and any listeners
        let due: Vec<PendingFsk> = {
            let now = self.now;
            let (done, rest): (Vec<_>, Vec<_>) =
                self.pending_fsk.drain(..).partition(|f| now >= f.end);
            self.pending_fsk = rest;
            done
        };
        for fsk in due {
            if let Some(rx) = self.receiver.as_mut() {
                rx.handle_response(&fsk.resp);
            }
            if let Some(atk) = self.attacker.as_mut() {
                if matches!(atk.mode, AttackMode::FodHandshake { .. }) {
                    let duty = self.charger.state().duty;
                    if let Some(r) =
                        eavesdrop_response(&self.cfg.system, duty, &fsk.resp, &mut self.rng)
                    {
                        atk.handle_response(&r);
                    }
                }
            }
            if self.record_eavesdrop {
                self.record_fsk(&fsk.resp);
            }
        }

        // logs and series
        let ptx = self.charger.transmitted_power();
        writeln!(
            self.transition_log,
            "t={:.3} phase={} event={} duty={:.4} ptx={:.4}",
            self.now,
            self.charger.state().phase,
            event_label(&event),
            self.charger.state().duty,
            ptx
        )
        .expect("string write");
        self.power_rows.push((self.now, ptx, received, self.charger.state().duty));
        let rx_temp = self.receiver.as_ref().map(|r| r.temp()).unwrap_or(f64::NAN);
        let obj_temps: Vec<f64> = self.cfg.objects.iter().map(|o| o.thermal.temp).collect();
        self.temp_rows.push((self.now, rx_temp, obj_temps));
        let v_now = self.cfg.system.v_ad * (1.0 + self.voice_value(self.now));
        self.adapter_rows.push((self.now, v_now));
    }

    fn voice_value(&self, t: f64) -> f64 {
        match &self.voice {
            Some((start, trace)) if t >= *start => {
                let idx = ((t - start) * trace.sample_rate()) as usize;
                trace.samples().get(idx).copied().unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }

    fn add_part(&mut self, start: f64, duration: f64, part: WindowPart) {
        let padded_start = start - WINDOW_MARGIN;
        let padded_end = start + duration + WINDOW_MARGIN;
        match self.window.as_mut() {
            Some(w) if padded_start <= w.end => {
                let offset = start - w.start;
                w.end = w.end.max(padded_end);
                w.parts.push(reoffset(part, offset));
            }
            Some(_) | None => {
                // windows close strictly before a new one opens; a gap here
                // means the previous window was already rendered
                let parts = vec![reoffset(part, WINDOW_MARGIN)];
                self.window = Some(Window { start: padded_start, end: padded_end, parts });
            }
        }
    }

    /// Render a closed window into the charger-side envelope, demodulate,
    /// and queue the event; feed the eavesdropper when recording.
    fn render_window(&mut self, window: &Window) {
        let rate = ENVELOPE_RATE;
        let n = ((window.end - window.start) * rate).round() as usize;
        if n == 0 {
            return;
        }
        let mut coil = vec![0.0f64; n];
        let mut adapter = vec![0.0f64; n];
        let mut had_legit: Option<QiPacket> = None;
        // deterministic render order regardless of scheduling order
        let mut parts = window.parts.clone();
        parts.sort_by(|a, b| {
            part_key(a)
                .partial_cmp(&part_key(b))
                .expect("finite offsets")
        });
        for part in &parts {
            match part {
                WindowPart::RxPacket { offset, packet, depth } => {
                    let wave = forge_ask_packet(packet, *depth, rate);
                    add_at(&mut coil, wave.samples(), (offset * rate) as usize);
                    had_legit = Some(packet.clone());
                }
                WindowPart::Forged { offset, packet, depth } => {
                    let wave = forge_ask_packet(packet, *depth, rate);
                    add_at(&mut adapter, wave.samples(), (offset * rate) as usize);
                }
                WindowPart::Jam { offset, duration, depth } => {
                    let wave = jam_ask(*duration, *depth, rate, &mut self.rng);
                    add_at(&mut adapter, wave.samples(), (offset * rate) as usize);
                }
            }
        }
        // continuous voice interference over the window
        if self.voice.is_some() {
            for (i, slot) in adapter.iter_mut().enumerate() {
                *slot += self.voice_value(window.start + i as f64 / rate);
            }
        }

        let adapter_active = adapter.iter().any(|&s| s != 0.0);
        let propagated = if adapter_active {
            let trace = Trace::from_parts(rate, adapter.clone(), Unit::Dimensionless, 0.0);
            let filtered = match self.cfg.countermeasure_cutoff {
                Some(cutoff) => countermeasure_filter(&trace, cutoff)
                    .unwrap_or(trace),
                None => trace,
            };
            apply_bus_response(&self.cfg.system, &filtered).samples().to_vec()
        } else {
            adapter.clone()
        };

        let env: Vec<f64> = (0..n)
            .map(|i| 1.0 + coil[i] + propagated[i] + self.cfg.noise_sigma * gaussian(&mut self.rng))
            .collect();
        let env_trace = Trace::from_parts(rate, env, Unit::Dimensionless, 0.0);
        let event = classify_demod(&env_trace);

        if let Some(packet) = had_legit {
            self.legit_windows += 1;
            if event != DemodEvent::Packet(packet) {
                self.interruptions += 1;
            }
        }
        self.pending_events.push_back(event);

        // adapter-side view for the eavesdropper: load-change pulses from
        // the receiver's modulation plus measurement noise. The steady draw
        // contributes no pulses (the loop holds it), so only the modulation
        // component of the load enters the pulse channel.
        if self.record_eavesdrop {
            let i_dc = circuit::bus_current(&self.cfg.system, self.charger.tx_amplitude())
                .map(|b| b.dc)
                .unwrap_or(0.0);
            let load: Vec<f64> = coil.iter().map(|&w| i_dc * w).collect();
            let load_trace = Trace::from_parts(rate, load, Unit::Amperes, 0.0);
            let mut pulses = load_change_train(&self.cfg.system, &load_trace);
            let pulse_scale = self.cfg.system.z_ad
                * i_dc
                * self.receiver.as_ref().map(|r| r.profile().ask_depth).unwrap_or(0.05);
            let sigma = pulse_scale / 10.0;
            let noisy: Vec<f64> = pulses
                .samples()
                .iter()
                .map(|&s| s + sigma * gaussian(&mut self.rng))
                .collect();
            pulses = Trace::from_parts(rate, noisy, Unit::Volts, window.start);
            for m in recover_ask(&pulses, F_ASK) {
                self.recovered.push(m);
            }
            self.ask_trace.extend_from_slice(pulses.samples());
        }
    }

    /// Synthesize and decode the adapter ripple of a charger response for
    /// the recovered-traffic report.
    fn record_fsk(&mut self, resp: &FskResponse) {
        let schedule = fsk_modulate(resp, self.cfg.system.f_p, FSK_DELTA_F, FSK_CYCLES_PER_BIT);
        if schedule.is_empty() {
            return;
        }
        let duty = self.charger.state().duty;
        let Ok(i_tx) = circuit::tx_amplitude(&self.cfg.system, duty) else { return };
        let Ok(phi) = circuit::phase_total(&self.cfg.system) else { return };
        let Ok(bus) = circuit::bus_current_with_phase(i_tx, duty, phi, self.cfg.system.f_p) else {
            return;
        };
        let Ok(amp) = circuit::adapter_ripple_amplitude(&self.cfg.system, bus.dc, phi) else {
            return;
        };
        let clean = synth_fsk_ripple(&schedule, amp, CARRIER_RATE);
        let sigma = amp / 10.0;
        let noisy: Vec<f64> = clean
            .samples()
            .iter()
            .map(|&s| s + sigma * gaussian(&mut self.rng))
            .collect();
        let trace = Trace::from_parts(CARRIER_RATE, noisy, Unit::Volts, self.now);
        for m in recover_fsk(&trace, self.cfg.system.f_p) {
            self.recovered.push(m);
        }
    }
}

fn reoffset(part: WindowPart, offset: f64) -> WindowPart {
    match part {
        WindowPart::RxPacket { packet, depth, .. } => WindowPart::RxPacket { offset, packet, depth },
        WindowPart::Forged { packet, depth, .. } => WindowPart::Forged { offset, packet, depth },
        WindowPart::Jam { duration, depth, .. } => WindowPart::Jam { offset, duration, depth },
    }
}

fn part_key(p: &WindowPart) -> (f64, u8) {
    match p {
        WindowPart::RxPacket { offset, .. } => (*offset, 0),
        WindowPart::Forged { offset, .. } => (*offset, 1),
        WindowPart::Jam { offset, .. } => (*offset, 2),
    }
}

fn add_at(dst: &mut [f64], src: &[f64], at: usize) {
    for (i, &s) in src.iter().enumerate() {
        if let Some(slot) = dst.get_mut(at + i) {
            *slot += s;
        }
    }
}

/// Air time of one framed packet at the ASK bit clock.
fn tx_duration(packet: &QiPacket) -> f64 {
    frame_packet(packet).len() as f64 / F_ASK
}

fn event_label(event: &DemodEvent) -> String {
    match event {
        DemodEvent::Silence => "silence".into(),
        DemodEvent::ParseError => "parse_error".into(),
        DemodEvent::Packet(p) => {
            format!("{}:{}", p.kind(), crate::codec::hex(&p.payload()))
        }
    }
}

fn build_attacker(a: &AttackConfig) -> Result<Attacker, ScenarioError> {
    if !(0.0..1.0).contains(&a.depth) || !(0.0..1.0).contains(&a.jam_depth) {
        return Err(ScenarioError::Setup(format!(
            "attack depths must stay in [0, 1): depth={} jam_depth={}",
            a.depth, a.jam_depth
        )));
    }
    if a.ce.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(ScenarioError::Setup("attack schedule must be time-ordered".into()));
    }
    let mode = match a.kind.as_str() {
        "voice_injection" => AttackMode::VoiceInjection { depth: a.depth, seed: a.voice_seed },
        "qi_injection" => AttackMode::QiInjection {
            schedule: a
                .ce
                .iter()
                .map(|e| (e.t, QiPacket::ControlError { error: e.error }))
                .collect(),
            depth: a.depth,
        },
        "jam" => AttackMode::Toast {
            depth: a.depth,
            jam_depth: a.jam_depth,
            jam: true,
            period: f64::INFINITY,
        },
        "toast" => AttackMode::Toast {
            depth: a.depth,
            jam_depth: a.jam_depth,
            jam: a.jam,
            period: a.period,
        },
        "fod_handshake" => AttackMode::FodHandshake {
            reference_q_tenths: a.reference_q_tenths,
            depth: a.depth,
            period: a.period,
        },
        other => return Err(ScenarioError::Setup(format!("unknown attack kind `{other}`"))),
    };
    Ok(Attacker::new(mode, a.start))
}

/// Everything measured during a run, before assertion evaluation.
struct EngineOutcome {
    charger_phase: Phase,
    final_power: f64,
    final_duty: f64,
    receiver_temp: Option<f64>,
    protections: Option<crate::receiver::Protections>,
    objects: Vec<crate::receiver::ForeignObject>,
    recovered: Vec<RecoveredMessage>,
    transition_log: String,
    power_rows: Vec<(f64, f64, f64, f64)>,
    temp_rows: Vec<(f64, f64, Vec<f64>)>,
    adapter_rows: Vec<(f64, f64)>,
    ask_trace: Vec<f64>,
    legit_windows: usize,
    interruptions: usize,
    terminations: Vec<(f64, TerminationReason)>,
    reached_pt: bool,
    reached_extended: bool,
    max_temp: f64,
}

/// Run one scenario to completion, writing report files when an output
/// directory is given. Deterministic for a given configuration and seed.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out_dir: Option<&Path>,
) -> Result<ScenarioReport, ScenarioError> {
    let engine = Engine::new(cfg.clone())?;
    let (cfg, outcome) = engine.run();

    let mut metrics = BTreeMap::new();
    metrics.insert("final_power_w".into(), outcome.final_power);
    metrics.insert("final_duty".into(), outcome.final_duty);
    metrics.insert("reached_power_transfer".into(), f64::from(u8::from(outcome.reached_pt)));
    metrics.insert("reached_extended".into(), f64::from(u8::from(outcome.reached_extended)));
    metrics.insert("legit_windows".into(), outcome.legit_windows as f64);
    metrics.insert("interruptions".into(), outcome.interruptions as f64);
    metrics.insert("recovered_messages".into(), outcome.recovered.len() as f64);
    metrics.insert("terminations".into(), outcome.terminations.len() as f64);
    for reason in [
        TerminationReason::EndPowerTransfer,
        TerminationReason::CeTimeout,
        TerminationReason::RpTimeout,
        TerminationReason::FodPowerLoss,
    ] {
        let count = outcome.terminations.iter().filter(|(_, r)| *r == reason).count();
        metrics.insert(format!("terminations_{reason}"), count as f64);
    }
    metrics.insert("max_temp_f".into(), outcome.max_temp);
    if let Some(t) = outcome.receiver_temp {
        metrics.insert("receiver_temp_f".into(), t);
    }
    if let Some(p) = outcome.protections {
        metrics.insert("p1".into(), f64::from(u8::from(p.p1)));
        metrics.insert("p2".into(), f64::from(u8::from(p.p2)));
        metrics.insert("p3".into(), f64::from(u8::from(p.p3)));
    }
    for obj in &outcome.objects {
        metrics.insert(format!("{}_temp_f", obj.kind.name()), obj.thermal.temp);
        metrics.insert(
            format!("{}_damaged", obj.kind.name()),
            f64::from(u8::from(obj.damaged)),
        );
        metrics.insert(
            format!("{}_steady_temp_f", obj.kind.name()),
            obj.thermal.steady_state(obj.absorption * outcome.final_power),
        );
    }
    // steady-state power over the last fifth of the run
    let tail = outcome.power_rows.len() / 5;
    if tail > 0 {
        let mean: f64 = outcome.power_rows[outcome.power_rows.len() - tail..]
            .iter()
            .map(|r| r.1)
            .sum::<f64>()
            / tail as f64;
        metrics.insert("tail_mean_power_w".into(), mean);
    }
    if let Some(attack) = &cfg.attack {
        if attack.kind == "voice_injection" {
            let depth = measure_injection_depth(&cfg, attack);
            metrics.insert("envelope_depth".into(), depth);
        }
    }

    let assertions = evaluate_assertions(&cfg, &outcome, &metrics);

    let mut summary = String::new();
    writeln!(summary, "scenario={} seed={}", cfg.kind.name(), cfg.seed).expect("write");
    for (k, v) in &metrics {
        writeln!(summary, "{k}={v:.6}").expect("write");
    }
    for a in &assertions {
        writeln!(
            summary,
            "assert {} {} {}",
            a.name,
            if a.pass { "PASS" } else { "FAIL" },
            a.detail
        )
        .expect("write");
    }

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        files.push(write_text(dir, "summary.txt", &summary)?);
        files.push(write_text(dir, "transitions.log", &outcome.transition_log)?);
        let recovered_text: String = outcome
            .recovered
            .iter()
            .map(|m| m.report_line() + "\n")
            .collect();
        files.push(write_text(dir, "recovered.log", &recovered_text)?);
        let mut power = String::from("t,ptx_w,received_w,duty\n");
        for (t, p, r, d) in &outcome.power_rows {
            writeln!(power, "{t:.3},{p:.6},{r:.6},{d:.6}").expect("write");
        }
        files.push(write_text(dir, "power.csv", &power)?);
        let mut temps = String::from("t,receiver_f");
        for obj in &outcome.objects {
            write!(temps, ",{}_f", obj.kind.name()).expect("write");
        }
        temps.push('\n');
        for (t, rx, objs) in &outcome.temp_rows {
            write!(temps, "{t:.3},{rx:.4}").expect("write");
            for o in objs {
                write!(temps, ",{o:.4}").expect("write");
            }
            temps.push('\n');
        }
        files.push(write_text(dir, "temps.csv", &temps)?);
        let mut adapter = String::from("t,v_ad\n");
        for (t, v) in &outcome.adapter_rows {
            writeln!(adapter, "{t:.3},{v:.6}").expect("write");
        }
        files.push(write_text(dir, "adapter_envelope.csv", &adapter)?);
        if cfg.kind == ScenarioKind::EavesdropDemo && !outcome.ask_trace.is_empty() {
            let trace =
                Trace::from_parts(ENVELOPE_RATE, outcome.ask_trace.clone(), Unit::Volts, 0.0);
            let path = dir.join("adapter_ask.csv");
            crate::signal::write_csv_path(&trace, &path)
                .map_err(|e| ScenarioError::Io(e.to_string()))?;
            files.push(path);
        }
    }

    Ok(ScenarioReport {
        scenario: cfg.kind.name().to_string(),
        seed: cfg.seed,
        metrics,
        assertions,
        recovered: outcome.recovered,
        summary,
        transition_log: outcome.transition_log,
        files,
    })
}

fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf, ScenarioError> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn evaluate_assertions(
    cfg: &ScenarioConfig,
    outcome: &EngineOutcome,
    metrics: &BTreeMap<String, f64>,
) -> Vec<Assertion> {
    let mut assertions = Vec::new();
    let mut check = |name: &str, pass: bool, detail: String| {
        assertions.push(Assertion { name: name.into(), pass, detail });
    };
    match cfg.kind {
        ScenarioKind::BaselineCharge => {
            check("reaches_power_transfer", outcome.reached_pt, String::new());
            let target = cfg.receiver.as_ref().map(|r| r.target_power).unwrap_or(0.0);
            let mean = metrics.get("tail_mean_power_w").copied().unwrap_or(0.0);
            check(
                "steady_power_within_5pct",
                target > 0.0 && (mean - target).abs() <= 0.05 * target,
                format!("tail mean {mean:.3} W vs target {target:.3} W"),
            );
            let fired = outcome.protections.map(|p| p.p1 || p.p2 || p.p3).unwrap_or(false);
            check("no_protections", !fired, String::new());
        }
        ScenarioKind::EavesdropDemo => {
            let ask = outcome
                .recovered
                .iter()
                .filter(|m| matches!(m.message, Recovered::Packet(_)))
                .count();
            check("recovered_ask_traffic", ask >= 3, format!("{ask} packets"));
            let sig = outcome.recovered.iter().any(|m| {
                matches!(
                    &m.message,
                    Recovered::Packet(QiPacket::Signal { strength: 0x84 })
                )
            });
            check("recovered_sig_0x84", sig, String::new());
            let id = outcome.recovered.iter().any(|m| {
                matches!(
                    &m.message,
                    Recovered::Response(FskResponse::Data(QiPacket::Ident { .. }))
                )
            });
            check("recovered_fsk_charger_id", id, String::new());
        }
        ScenarioKind::VoiceInjection => {
            let depth = metrics.get("envelope_depth").copied().unwrap_or(0.0);
            let m_i = cfg.attack.as_ref().map(|a| a.depth).unwrap_or(0.0);
            check(
                "modulation_reaches_coil",
                depth >= 0.5 * m_i,
                format!("envelope depth {depth:.3} at m_i {m_i:.3}"),
            );
            if m_i <= 0.35 {
                check(
                    "stealthy_below_disruption_threshold",
                    outcome.interruptions == 0,
                    format!("{} interruptions", outcome.interruptions),
                );
            }
        }
        ScenarioKind::PowerToast => {
            let jam = cfg.attack.as_ref().map(|a| a.jam).unwrap_or(false);
            let p = outcome.protections.unwrap_or_default();
            if jam {
                check("p1_fired", p.p1, String::new());
                check("p2_fired", p.p2, String::new());
                check("p3_fired", p.p3, String::new());
                let temp = outcome.receiver_temp.unwrap_or(0.0);
                check(
                    "plateau_near_178f",
                    (temp - 178.0).abs() <= 5.0,
                    format!("final temp {temp:.1} F"),
                );
                check(
                    "transfer_survives_ept",
                    outcome.charger_phase == Phase::PowerTransfer,
                    format!("final phase {}", outcome.charger_phase),
                );
            } else {
                let ept = outcome
                    .terminations
                    .iter()
                    .any(|(_, r)| *r == TerminationReason::EndPowerTransfer);
                check("ept_terminates_transfer", ept, String::new());
                check(
                    "p2_never_reached",
                    outcome.max_temp < 126.0,
                    format!("max temp {:.1} F", outcome.max_temp),
                );
            }
        }
        ScenarioKind::FodDestruction => {
            let honest =
                cfg.attack.as_ref().map(|a| a.reference_q_tenths > 0).unwrap_or(false);
            if honest {
                check(
                    "honest_reference_refused",
                    !outcome.reached_pt,
                    format!("final phase {}", outcome.charger_phase),
                );
                let damaged = outcome.objects.iter().any(|o| o.damaged);
                check("objects_unharmed", !damaged, String::new());
            } else {
                check("handshake_reaches_extended_transfer", outcome.reached_extended, String::new());
                for obj in &outcome.objects {
                    check(
                        &format!("{}_damaged", obj.kind.name()),
                        obj.damaged,
                        format!("final temp {:.0} F", obj.thermal.temp),
                    );
                }
            }
        }
    }
    assertions
}

/// Modulation depth the scenario's interference produces on the TX coil,
/// measured with the envelope oracle over a short carrier-domain segment.
fn measure_injection_depth(cfg: &ScenarioConfig, attack: &AttackConfig) -> f64 {
    let audio = voice_like(0.4, CARRIER_RATE, attack.voice_seed);
    let spec = InterferenceSpec {
        depth: attack.depth,
        waveform: InterferenceWaveform::Arbitrary(audio),
    };
    let Ok(current) = circuit::tx_coil_current(&cfg.system, &spec, 0.4, CARRIER_RATE) else {
        return 0.0;
    };
    let Ok(env) = envelope(&current, cfg.system.f_p) else { return 0.0 };
    modulation_depth(&env, 2000)
}

/// Measured voltage scaling factor at `f_i`: the sideband-to-carrier ratio
/// of the coil current under a tone of known depth. Valid at any
/// interference frequency, including above the envelope detector's band.
pub fn measure_k(params: &SystemParams, m_i: f64, f_i: f64) -> f64 {
    let duration = (40.0 / f_i).max(0.004);
    let spec = InterferenceSpec::sine(m_i, f_i);
    let Ok(current) = circuit::tx_coil_current(params, &spec, duration, CARRIER_RATE) else {
        return f64::NAN;
    };
    let n = current.len();
    let Ok(spectrum) = stft(&current, n, n) else { return f64::NAN };
    let df = spectrum.freq_resolution();
    let mag = |f: f64| -> f64 {
        let lo = (f - 2.0 * df).max(0.0);
        let hi = f + 2.0 * df;
        spectrum
            .dominant_bin(0, lo, hi)
            .map(|b| spectrum.magnitudes()[0][b])
            .unwrap_or(0.0)
    };
    let carrier = mag(params.f_p);
    if carrier == 0.0 {
        return f64::NAN;
    }
    let side = mag(params.f_p - f_i) + mag(params.f_p + f_i);
    side / carrier / m_i
}

/// One row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub metrics: BTreeMap<String, f64>,
}

/// Run the scenario once per parameter value and tabulate the reports.
/// Sweepable parameters: `m_i` (attack depth), `f_i` (tone frequency),
/// `charger` (profile name), and `fod_loss_threshold`.
pub fn sweep(
    base: &ScenarioConfig,
    param: &str,
    values: &[String],
) -> Result<Vec<SweepRow>, ScenarioError> {
    let mut rows = Vec::new();
    for value in values {
        let mut cfg = base.clone();
        match param {
            "m_i" | "depth" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| ScenarioError::Setup(format!("bad m_i `{value}`")))?;
                let attack = cfg.attack.get_or_insert_with(|| AttackConfig {
                    kind: "voice_injection".into(),
                    ..Default::default()
                });
                attack.depth = v;
            }
            "f_i" => {
                // tone-injection measurement column only; scenario runs with
                // its configured attack
                let v: f64 = value
                    .parse()
                    .map_err(|_| ScenarioError::Setup(format!("bad f_i `{value}`")))?;
                let mut report_metrics = BTreeMap::new();
                let m_i = cfg.attack.as_ref().map(|a| a.depth).unwrap_or(0.3);
                report_metrics.insert("k_measured".into(), measure_k(&cfg.system, m_i, v));
                report_metrics
                    .insert("k_formula".into(), circuit::scaling_factor(&cfg.system, v));
                rows.push(SweepRow { value: value.clone(), metrics: report_metrics });
                continue;
            }
            "charger" => {
                let library = crate::profiles::parse_scenario(&format!(
                    "scenario = \"{}\"\nsystem = \"typical\"\ncharger = \"{}\"\nduration = 1.0\n",
                    base.kind.name(),
                    value
                ))?;
                cfg.charger = library.charger;
            }
            "fod_loss_threshold" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| ScenarioError::Setup(format!("bad threshold `{value}`")))?;
                cfg.charger.fod_loss_threshold = v;
            }
            other => return Err(ScenarioError::NotSweepable(other.to_string())),
        }
        let report = run_scenario(&cfg, None)?;
        rows.push(SweepRow { value: value.clone(), metrics: report.metrics });
    }
    Ok(rows)
}

/// Render sweep rows as CSV with a stable column order.
pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for row in rows {
        for key in row.metrics.keys() {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
    }
    columns.sort();
    let mut out = String::new();
    out.push_str(param);
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.value);
        for c in &columns {
            match row.metrics.get(c) {
                Some(v) => {
                    write!(out, ",{v:.6}").expect("write");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
