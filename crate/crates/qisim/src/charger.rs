//! The TX device: Qi phase state machine (ping, configuration, negotiation,
//! power transfer), PID feedback on control-error packets, foreign-object
//! checks, communication timeouts, and FSK responses.
//!
//! The state machine is a deterministic transition function over demodulator
//! events; anomalies (corrupt packets, silence) are ordinary transitions,
//! never faults.

use std::f64::consts::PI;

use crate::circuit::{self, SystemParams};
use crate::codec::{FskResponse, QiPacket, HDR_ID, SRQ_END_NEGOTIATION, SRQ_GUARANTEED_POWER};

/// Lowest duty cycle the inverter will run at during power transfer.
pub const D_MIN: f64 = 0.05;

/// Probe duty applied during the ping phase.
pub const PROBE_DUTY: f64 = 0.1;

/// Fraction of the requested power targeted when entering power transfer.
/// The charger knows the request from configuration and negotiation, so it
/// starts the loop on target and lets CE feedback handle perturbations.
pub const INITIAL_POWER_FRACTION: f64 = 1.0;

/// Silence tolerated in configuration or negotiation before falling back to
/// ping.
pub const NEGOTIATION_TIMEOUT: f64 = 2.0;

/// Leaky integrator decay per PID update.
const INTEGRATOR_DECAY: f64 = 0.98;
const INTEGRATOR_CLAMP: f64 = 100.0;

/// Qi charging phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Ping,
    Configuration,
    Negotiation,
    PowerTransfer,
    Terminated,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::Ping => "ping",
            Phase::Configuration => "configuration",
            Phase::Negotiation => "negotiation",
            Phase::PowerTransfer => "power_transfer",
            Phase::Terminated => "terminated",
        };
        f.write_str(s)
    }
}

/// Negotiated power protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Undecided,
    Baseline,
    Extended,
}

/// Why the charger stopped transferring power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    EndPowerTransfer,
    CeTimeout,
    RpTimeout,
    FodPowerLoss,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TerminationReason::EndPowerTransfer => "ept",
            TerminationReason::CeTimeout => "ce_timeout",
            TerminationReason::RpTimeout => "rp_timeout",
            TerminationReason::FodPowerLoss => "fod_power_loss",
        };
        f.write_str(s)
    }
}

/// What the charger's demodulator delivered this tick.
#[derive(Debug, Clone, PartialEq)]
pub enum DemodEvent {
    Packet(QiPacket),
    /// A transmission was present but failed parity, checksum, or framing.
    ParseError,
    Silence,
}

/// Side effects requested by a tick.
#[derive(Debug, Clone, PartialEq)]
pub enum ChargerAction {
    Respond(FskResponse),
    Terminate(TerminationReason),
}

/// Static charger personality: rated tier, protection thresholds, loop gains
/// and timeouts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargerProfile {
    pub name: String,
    /// Rated power tier, watts: 5, 10, or 15.
    pub rated_power: f64,
    /// In-power FOD threshold on unexplained power loss, watts.
    pub fod_loss_threshold: f64,
    pub k_p: f64,
    pub k_i: f64,
    /// Terminate when no valid CE arrives for this long, seconds.
    pub ce_timeout: f64,
    /// Terminate when no valid RP arrives for this long, seconds.
    pub rp_timeout: f64,
    /// Window after a probe within which a SIG must arrive, seconds.
    pub sig_window: f64,
    /// Pause before re-pinging after a termination, seconds.
    pub cooldown: f64,
    /// Quality factor the charger measures with a bare, unobstructed pad.
    pub measured_q: f64,
    /// Hard power cap under the baseline protocol, watts.
    pub baseline_power_cap: f64,
    /// Identity disclosed in response to a general request.
    pub charger_id: [u8; 7],
}

impl ChargerProfile {
    pub fn tier_15w() -> ChargerProfile {
        ChargerProfile {
            name: "15w".into(),
            rated_power: 15.0,
            fod_loss_threshold: 0.35,
            k_p: 0.004,
            k_i: 0.0005,
            ce_timeout: 1.5,
            rp_timeout: 24.0,
            sig_window: 0.065,
            cooldown: 5.0,
            measured_q: 15.0,
            baseline_power_cap: 5.0,
            charger_id: *b"QSIM15W",
        }
    }

    pub fn tier_10w() -> ChargerProfile {
        ChargerProfile {
            rated_power: 10.0,
            name: "10w".into(),
            charger_id: *b"QSIM10W",
            ..ChargerProfile::tier_15w()
        }
    }

    pub fn tier_5w() -> ChargerProfile {
        ChargerProfile {
            rated_power: 5.0,
            name: "5w".into(),
            charger_id: *b"QSIM05W",
            ..ChargerProfile::tier_15w()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if ![5.0, 10.0, 15.0].contains(&self.rated_power) {
            return Err(format!("rated_power {} not one of the 5/10/15 W tiers", self.rated_power));
        }
        if self.fod_loss_threshold <= 0.0 {
            return Err("fod_loss_threshold must be positive".into());
        }
        Ok(())
    }
}

/// Live charger state. Cloneable for replay comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargerState {
    pub phase: Phase,
    pub protocol: Protocol,
    pub duty: f64,
    pub f_p: f64,
    pub integrator: f64,
    pub last_error: i8,
    pub ce_deadline: f64,
    pub rp_deadline: f64,
    pub sig_deadline: f64,
    pub phase_deadline: f64,
    pub cooldown_until: f64,
    pub measured_q: f64,
    pub guaranteed_power: f64,
    pub cfg_max_power: f64,
    pub transmitted_power_estimate: f64,
    pub got_id: bool,
    pub fod_acked: bool,
    pub now: f64,
}

/// The simulated transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Charger {
    profile: ChargerProfile,
    params: SystemParams,
    /// Transmitted power at full duty; `P(D) = power_full * sin^2(pi D / 2)`.
    power_full: f64,
    state: ChargerState,
}

impl Charger {
    pub fn new(profile: ChargerProfile, params: SystemParams) -> Result<Charger, String> {
        profile.validate()?;
        params.validate().map_err(|e| e.to_string())?;
        let power_full = circuit::transmitted_power(&params, 1.0).map_err(|e| e.to_string())?;
        let state = ChargerState {
            phase: Phase::Ping,
            protocol: Protocol::Undecided,
            duty: PROBE_DUTY,
            f_p: params.f_p,
            integrator: 0.0,
            last_error: 0,
            ce_deadline: f64::INFINITY,
            rp_deadline: f64::INFINITY,
            sig_deadline: profile.sig_window,
            phase_deadline: f64::INFINITY,
            cooldown_until: 0.0,
            measured_q: profile.measured_q,
            guaranteed_power: 0.0,
            cfg_max_power: 0.0,
            transmitted_power_estimate: 0.0,
            got_id: false,
            fod_acked: false,
            now: 0.0,
        };
        Ok(Charger { profile, params, power_full, state })
    }

    pub fn state(&self) -> &ChargerState {
        &self.state
    }

    pub fn profile(&self) -> &ChargerProfile {
        &self.profile
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Lower the measured quality factor, as a foreign object on the pad
    /// does.
    pub fn set_measured_q(&mut self, q: f64) {
        self.state.measured_q = q;
    }

    /// Transmitted power at a given duty cycle.
    pub fn power_at_duty(&self, duty: f64) -> f64 {
        self.power_full * (PI * duty / 2.0).sin().powi(2)
    }

    /// Duty cycle that transmits the requested power, clamped to the
    /// physical range.
    pub fn duty_for_power(&self, power: f64) -> f64 {
        let ratio = (power / self.power_full).clamp(0.0, 1.0);
        (2.0 / PI * ratio.sqrt().asin()).clamp(D_MIN, 1.0)
    }

    /// TX-coil current amplitude at the live duty.
    pub fn tx_amplitude(&self) -> f64 {
        circuit::tx_amplitude(&self.params, self.state.duty).unwrap_or(0.0)
    }

    /// Whether the coil is energized this phase.
    pub fn power_signal_active(&self) -> bool {
        matches!(
            self.state.phase,
            Phase::Ping | Phase::Configuration | Phase::Negotiation | Phase::PowerTransfer
        )
    }

    /// Transmitted power right now (zero when the coil is idle).
    pub fn transmitted_power(&self) -> f64 {
        if self.power_signal_active() {
            self.power_at_duty(self.state.duty)
        } else {
            0.0
        }
    }

    /// Advance the machine by `dt`, processing one demodulator event.
    pub fn tick(&mut self, dt: f64, event: &DemodEvent) -> Vec<ChargerAction> {
        assert!(dt > 0.0, "tick requires dt > 0");
        self.state.now += dt;
        let mut actions = Vec::new();

        // An EPT that parses cleanly terminates wherever communication is live.
        if let DemodEvent::Packet(QiPacket::EndPowerTransfer { .. }) = event {
            if self.state.phase != Phase::Terminated {
                self.terminate(TerminationReason::EndPowerTransfer, &mut actions);
                return actions;
            }
        }

        match self.state.phase {
            Phase::Ping => self.tick_ping(event),
            Phase::Configuration => self.tick_configuration(event),
            Phase::Negotiation => self.tick_negotiation(event, &mut actions),
            Phase::PowerTransfer => self.tick_power_transfer(event, &mut actions),
            Phase::Terminated => {
                if self.state.now >= self.state.cooldown_until {
                    self.restart_ping();
                }
            }
        }

        self.state.transmitted_power_estimate = self.transmitted_power();
        actions
    }

    fn tick_ping(&mut self, event: &DemodEvent) {
        self.state.duty = PROBE_DUTY;
        match event {
            DemodEvent::Packet(QiPacket::Signal { .. }) => {
                self.state.phase = Phase::Configuration;
                self.state.phase_deadline = self.state.now + NEGOTIATION_TIMEOUT;
            }
            _ => {
                if self.state.now > self.state.sig_deadline {
                    // nobody answered: re-arm the probe window
                    self.state.sig_deadline = self.state.now + self.profile.sig_window;
                }
            }
        }
    }

    fn tick_configuration(&mut self, event: &DemodEvent) {
        match event {
            DemodEvent::Packet(QiPacket::Ident { .. }) => {
                self.state.got_id = true;
                self.state.phase_deadline = self.state.now + NEGOTIATION_TIMEOUT;
            }
            DemodEvent::Packet(QiPacket::Config { neg, max_power_half_watts }) if self.state.got_id => {
                self.state.cfg_max_power = f64::from(*max_power_half_watts) / 2.0;
                if *neg {
                    self.state.phase = Phase::Negotiation;
                    self.state.phase_deadline = self.state.now + NEGOTIATION_TIMEOUT;
                } else {
                    self.enter_power_transfer(Protocol::Baseline);
                }
            }
            _ => {
                if self.state.now > self.state.phase_deadline {
                    self.restart_ping();
                }
            }
        }
    }

    fn tick_negotiation(&mut self, event: &DemodEvent, actions: &mut Vec<ChargerAction>) {
        match event {
            DemodEvent::Packet(QiPacket::Fod { reference_q_tenths }) => {
                let resp = self.fod_prepower(*reference_q_tenths);
                if resp == FskResponse::Ack {
                    self.state.fod_acked = true;
                }
                self.state.phase_deadline = self.state.now + NEGOTIATION_TIMEOUT;
                actions.push(ChargerAction::Respond(resp));
            }
            DemodEvent::Packet(QiPacket::GeneralRequest { requested }) => {
                let resp = if *requested == HDR_ID {
                    FskResponse::Data(QiPacket::Ident { device_id: self.profile.charger_id })
                } else {
                    FskResponse::Nd
                };
                self.state.phase_deadline = self.state.now + NEGOTIATION_TIMEOUT;
                actions.push(ChargerAction::Respond(resp));
            }
            DemodEvent::Packet(QiPacket::SpecificRequest { code, value }) => {
                let resp = match *code {
                    SRQ_GUARANTEED_POWER => {
                        self.state.guaranteed_power =
                            (f64::from(*value) / 2.0).min(self.profile.rated_power);
                        FskResponse::Ack
                    }
                    SRQ_END_NEGOTIATION => {
                        if self.state.fod_acked {
                            self.enter_power_transfer(Protocol::Extended);
                            FskResponse::Ack
                        } else {
                            FskResponse::Nak
                        }
                    }
                    _ => FskResponse::Nak,
                };
                self.state.phase_deadline = self.state.now + NEGOTIATION_TIMEOUT;
                actions.push(ChargerAction::Respond(resp));
            }
            _ => {
                if self.state.now > self.state.phase_deadline {
                    self.restart_ping();
                }
            }
        }
    }

    fn tick_power_transfer(&mut self, event: &DemodEvent, actions: &mut Vec<ChargerAction>) {
        match event {
            DemodEvent::Packet(QiPacket::ControlError { error }) => {
                self.pid_update(*error);
                self.state.ce_deadline = self.state.now + self.profile.ce_timeout;
            }
            DemodEvent::Packet(QiPacket::ReceivedPower { milliwatts }) => {
                let reported = f64::from(*milliwatts) / 1000.0;
                if self.fod_inpower(reported) {
                    self.state.rp_deadline = self.state.now + self.profile.rp_timeout;
                } else {
                    self.terminate(TerminationReason::FodPowerLoss, actions);
                    return;
                }
            }
            _ => {}
        }
        if let Some(reason) = self.timeout_check() {
            self.terminate(reason, actions);
        }
    }

    /// Feed a control error into the PI loop:
    /// `duty' = clamp(duty + k_p e + k_i I, D_MIN, 1)` with `e = ce / 128`
    /// and a leaky integrator. Positive CE raises power.
    pub fn pid_update(&mut self, ce: i8) {
        let e = f64::from(ce) / 128.0;
        self.state.integrator =
            (self.state.integrator * INTEGRATOR_DECAY + e).clamp(-INTEGRATOR_CLAMP, INTEGRATOR_CLAMP);
        self.state.last_error = ce;
        let mut duty = self.state.duty + self.profile.k_p * e + self.profile.k_i * self.state.integrator;
        duty = duty.clamp(D_MIN, 1.0);
        if self.state.protocol == Protocol::Baseline {
            duty = duty.min(self.duty_for_power(self.profile.baseline_power_cap));
        }
        self.state.duty = duty;
    }

    /// Pre-power FOD: ACK when the measured quality factor is at least the
    /// reference (boundary inclusive).
    pub fn fod_prepower(&self, reference_q_tenths: u16) -> FskResponse {
        let measured_tenths = (self.state.measured_q * 10.0).round();
        if measured_tenths >= f64::from(reference_q_tenths) {
            FskResponse::Ack
        } else {
            FskResponse::Nak
        }
    }

    /// In-power FOD: `true` to continue, `false` when the unexplained power
    /// loss exceeds the profile threshold.
    pub fn fod_inpower(&self, reported_power: f64) -> bool {
        self.state.transmitted_power_estimate - reported_power <= self.profile.fod_loss_threshold
    }

    /// Check the CE/RP deadlines against the current time.
    pub fn timeout_check(&self) -> Option<TerminationReason> {
        if self.state.now > self.state.ce_deadline {
            Some(TerminationReason::CeTimeout)
        } else if self.state.now > self.state.rp_deadline {
            Some(TerminationReason::RpTimeout)
        } else {
            None
        }
    }

    fn enter_power_transfer(&mut self, protocol: Protocol) {
        self.state.protocol = protocol;
        self.state.phase = Phase::PowerTransfer;
        let cap = match protocol {
            Protocol::Baseline => self.profile.baseline_power_cap.min(self.profile.rated_power),
            _ => self.profile.rated_power,
        };
        let requested = if self.state.guaranteed_power > 0.0 {
            self.state.guaranteed_power
        } else if self.state.cfg_max_power > 0.0 {
            self.state.cfg_max_power
        } else {
            cap
        };
        let target = INITIAL_POWER_FRACTION * requested.min(cap);
        self.state.duty = self.duty_for_power(target);
        self.state.integrator = 0.0;
        self.state.ce_deadline = self.state.now + self.profile.ce_timeout;
        self.state.rp_deadline = self.state.now + self.profile.rp_timeout;
        self.state.phase_deadline = f64::INFINITY;
    }

    fn terminate(&mut self, reason: TerminationReason, actions: &mut Vec<ChargerAction>) {
        self.state.phase = Phase::Terminated;
        self.state.cooldown_until = self.state.now + self.profile.cooldown;
        self.state.transmitted_power_estimate = 0.0;
        actions.push(ChargerAction::Terminate(reason));
    }

    fn restart_ping(&mut self) {
        self.state.phase = Phase::Ping;
        self.state.protocol = Protocol::Undecided;
        self.state.duty = PROBE_DUTY;
        self.state.integrator = 0.0;
        self.state.got_id = false;
        self.state.fod_acked = false;
        self.state.guaranteed_power = 0.0;
        self.state.cfg_max_power = 0.0;
        self.state.ce_deadline = f64::INFINITY;
        self.state.rp_deadline = f64::INFINITY;
        self.state.sig_deadline = self.state.now + self.profile.sig_window;
        self.state.phase_deadline = f64::INFINITY;
    }
}
