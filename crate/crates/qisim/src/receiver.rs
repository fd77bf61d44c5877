//! The legitimate RX device and the things that sit on a charging pad:
//! startup and power-transfer traffic, a lumped thermal model, the phone's
//! escalating protection ladder, and foreign-object profiles.

use crate::codec::{FskResponse, QiPacket, HDR_ID, SRQ_END_NEGOTIATION, SRQ_GUARANTEED_POWER};

/// Received power above which the receiver considers itself on an energized
/// pad, watts.
pub const DETECT_THRESHOLD: f64 = 0.05;

/// Control-error cadence during power transfer, seconds.
pub const CE_PERIOD: f64 = 0.25;

/// Received-power report cadence, seconds.
pub const RP_PERIOD: f64 = 1.5;

/// Pause between startup packets, seconds.
pub const STARTUP_GAP: f64 = 0.1;

/// How many times the phone repeats its EPT before the receiving module
/// powers down.
pub const EPT_RETRIES: u32 = 3;

/// First-order lumped thermal model. Temperatures in Fahrenheit to match
/// the protection thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalBody {
    /// Joules per degree Fahrenheit.
    pub heat_capacity: f64,
    /// Watts shed per degree Fahrenheit above ambient.
    pub dissipation: f64,
    pub ambient: f64,
    pub temp: f64,
}

impl ThermalBody {
    pub fn new(heat_capacity: f64, dissipation: f64, ambient: f64) -> ThermalBody {
        ThermalBody { heat_capacity, dissipation, ambient, temp: ambient }
    }

    /// Forward-Euler step:
    /// `temp' = temp + dt (power_in - dissipation (temp - ambient)) / heat_capacity`.
    pub fn step(&mut self, power_in: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        self.temp +=
            dt * (power_in - self.dissipation * (self.temp - self.ambient)) / self.heat_capacity;
        self.temp
    }

    /// Closed-form equilibrium under constant input power.
    pub fn steady_state(&self, power_in: f64) -> f64 {
        self.ambient + power_in / self.dissipation
    }
}

/// Escalating smartphone protections, each latching once triggered:
/// P1 stops charging, P2 restricts interaction, P3 is an emergency shutdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Protections {
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
}

/// Trigger temperatures for the protection ladder, Fahrenheit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionThresholds {
    pub p1_temp: f64,
    pub p2_temp: f64,
    pub p3_temp: f64,
}

impl Default for ProtectionThresholds {
    fn default() -> Self {
        ProtectionThresholds { p1_temp: 113.0, p2_temp: 126.0, p3_temp: 170.0 }
    }
}

impl ProtectionThresholds {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.p1_temp <= self.p2_temp && self.p2_temp <= self.p3_temp) {
            return Err("protection thresholds must be ordered p1 <= p2 <= p3".into());
        }
        Ok(())
    }
}

/// Latch any protections whose thresholds the temperature has reached.
pub fn protection_check(
    active: Protections,
    thresholds: &ProtectionThresholds,
    temp: f64,
) -> Protections {
    Protections {
        p1: active.p1 || temp >= thresholds.p1_temp,
        p2: active.p2 || temp >= thresholds.p2_temp,
        p3: active.p3 || temp >= thresholds.p3_temp,
    }
}

/// Static receiver personality.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverProfile {
    pub name: String,
    pub device_id: [u8; 7],
    /// Power the receiver asks the loop to settle at, watts.
    pub target_power: f64,
    /// Whether the receiver negotiates the extended protocol.
    pub neg: bool,
    pub heat_capacity: f64,
    pub dissipation: f64,
    pub ambient: f64,
    pub thresholds: ProtectionThresholds,
    /// Load-modulation depth of the receiver's ASK, as a fraction of the
    /// carrier envelope.
    pub ask_depth: f64,
    /// Honest pre-power FOD reference, tenths of Q.
    pub reference_q_tenths: u16,
}

impl ReceiverProfile {
    /// Phone profile calibrated so a sustained 18 W stabilizes near 178 F.
    pub fn phone() -> ReceiverProfile {
        ReceiverProfile {
            name: "phone".into(),
            device_id: *b"PHONE01",
            target_power: 15.0,
            neg: true,
            heat_capacity: 2.0,
            dissipation: 0.178,
            ambient: 77.0,
            thresholds: ProtectionThresholds::default(),
            ask_depth: 0.25,
            reference_q_tenths: 140,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.thresholds.validate()?;
        if self.heat_capacity <= 0.0 || self.dissipation <= 0.0 {
            return Err("thermal constants must be positive".into());
        }
        if self.target_power <= 0.0 {
            return Err("target_power must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RxPhase {
    Idle,
    SentSig,
    SentId,
    SentCfg,
    SentFod,
    /// Asks the charger for its identity; the response is data, not an ACK.
    SentGrq,
    SentGuaranteedPower,
    SentEndNegotiation,
    PowerTransfer,
    /// Receiving module powered down (after P1 or a refused negotiation).
    Off,
}

/// Live receiver state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    profile: ReceiverProfile,
    thermal: ThermalBody,
    protections: Protections,
    phase: RxPhase,
    now: f64,
    next_action: f64,
    next_ce: f64,
    next_rp: f64,
    ept_retries_left: u32,
    received_power: f64,
}

impl Receiver {
    pub fn new(profile: ReceiverProfile) -> Result<Receiver, String> {
        profile.validate()?;
        let thermal =
            ThermalBody::new(profile.heat_capacity, profile.dissipation, profile.ambient);
        Ok(Receiver {
            profile,
            thermal,
            protections: Protections::default(),
            phase: RxPhase::Idle,
            now: 0.0,
            next_action: 0.0,
            next_ce: 0.0,
            next_rp: 0.0,
            ept_retries_left: EPT_RETRIES,
            received_power: 0.0,
        })
    }

    pub fn profile(&self) -> &ReceiverProfile {
        &self.profile
    }

    pub fn temp(&self) -> f64 {
        self.thermal.temp
    }

    pub fn thermal(&self) -> &ThermalBody {
        &self.thermal
    }

    pub fn protections(&self) -> Protections {
        self.protections
    }

    /// Whether the power path is still enabled (no P1, negotiation not
    /// refused).
    pub fn power_path_enabled(&self) -> bool {
        self.phase != RxPhase::Off
    }

    pub fn in_power_transfer(&self) -> bool {
        self.phase == RxPhase::PowerTransfer
    }

    /// Consume a charger FSK response during negotiation.
    pub fn handle_response(&mut self, resp: &FskResponse) {
        match (self.phase, resp) {
            (RxPhase::SentFod, FskResponse::Ack) => {
                self.phase = RxPhase::SentGrq;
                self.next_action = self.now + STARTUP_GAP;
            }
            (RxPhase::SentFod, FskResponse::Nak) => {
                // FOD refused: an honest receiver does not charge
                self.phase = RxPhase::Off;
            }
            (RxPhase::SentGrq, FskResponse::Data(_)) => {
                self.phase = RxPhase::SentGuaranteedPower;
                self.next_action = self.now + STARTUP_GAP;
            }
            (RxPhase::SentGuaranteedPower, FskResponse::Ack) => {
                self.phase = RxPhase::SentEndNegotiation;
                self.next_action = self.now + STARTUP_GAP;
            }
            (RxPhase::SentEndNegotiation, FskResponse::Ack) => {
                self.enter_power_transfer();
            }
            _ => {}
        }
    }

    fn enter_power_transfer(&mut self) {
        self.phase = RxPhase::PowerTransfer;
        self.next_ce = self.now + CE_PERIOD;
        // stagger the first power report between CE slots
        self.next_rp = self.now + 0.4;
    }

    /// Advance the receiver: absorb the field as heat, walk the protection
    /// ladder, and emit whatever traffic is due.
    pub fn rx_step(&mut self, received_power: f64, dt: f64) -> Vec<QiPacket> {
        assert!(dt > 0.0);
        self.now += dt;
        self.received_power = received_power;
        self.thermal.step(received_power, dt);
        let before = self.protections;
        self.protections = protection_check(before, &self.profile.thresholds, self.thermal.temp);
        if self.protections.p1 && !before.p1 {
            // P1 just latched: the EPT goes out immediately
            self.next_action = self.now;
        }

        let mut out = Vec::new();

        // P1: command the charger to stop and power down the receiving path.
        if self.protections.p1 && !matches!(self.phase, RxPhase::Off) {
            if self.ept_retries_left > 0 && self.now >= self.next_action {
                out.push(QiPacket::EndPowerTransfer { reason: 0x03 });
                self.ept_retries_left -= 1;
                self.next_action = self.now + CE_PERIOD;
            }
            if self.ept_retries_left == 0 {
                self.phase = RxPhase::Off;
            }
            return out;
        }

        match self.phase {
            RxPhase::Idle => {
                if received_power > DETECT_THRESHOLD {
                    out.push(QiPacket::Signal { strength: 0x84 });
                    self.phase = RxPhase::SentSig;
                    self.next_action = self.now + STARTUP_GAP;
                }
            }
            RxPhase::SentSig => {
                if self.now >= self.next_action {
                    out.push(QiPacket::Ident { device_id: self.profile.device_id });
                    self.phase = RxPhase::SentId;
                    self.next_action = self.now + STARTUP_GAP;
                }
            }
            RxPhase::SentId => {
                if self.now >= self.next_action {
                    let half_watts = (self.profile.target_power * 2.0).round() as u8 & 0x7F;
                    out.push(QiPacket::Config {
                        neg: self.profile.neg,
                        max_power_half_watts: half_watts,
                    });
                    self.phase = RxPhase::SentCfg;
                    self.next_action = self.now + STARTUP_GAP;
                }
            }
            RxPhase::SentCfg => {
                if self.now >= self.next_action {
                    if self.profile.neg {
                        out.push(QiPacket::Fod {
                            reference_q_tenths: self.profile.reference_q_tenths,
                        });
                        self.phase = RxPhase::SentFod;
                    } else {
                        self.enter_power_transfer();
                    }
                }
            }
            // negotiation steps advance on charger responses; re-offer the
            // pending request if the response never came
            RxPhase::SentFod => {}
            RxPhase::SentGrq => {
                if self.now >= self.next_action {
                    out.push(QiPacket::GeneralRequest { requested: HDR_ID });
                    self.next_action = f64::INFINITY;
                }
            }
            RxPhase::SentGuaranteedPower => {
                if self.now >= self.next_action {
                    let half_watts = (self.profile.target_power * 2.0).round() as u8;
                    out.push(QiPacket::SpecificRequest {
                        code: SRQ_GUARANTEED_POWER,
                        value: half_watts,
                    });
                    self.next_action = f64::INFINITY;
                }
            }
            RxPhase::SentEndNegotiation => {
                if self.now >= self.next_action {
                    out.push(QiPacket::SpecificRequest { code: SRQ_END_NEGOTIATION, value: 0 });
                    self.next_action = f64::INFINITY;
                }
            }
            RxPhase::PowerTransfer => {
                if self.now >= self.next_ce {
                    out.push(QiPacket::ControlError { error: self.control_error() });
                    self.next_ce += CE_PERIOD;
                }
                if self.now >= self.next_rp {
                    let mw = (self.received_power * 1000.0).round().clamp(0.0, 65535.0) as u16;
                    out.push(QiPacket::ReceivedPower { milliwatts: mw });
                    self.next_rp += RP_PERIOD;
                }
            }
            RxPhase::Off => {}
        }
        out
    }

    /// Signed power request:
    /// `clamp(round(128 (target - received) / target), -128, 127)`.
    pub fn control_error(&self) -> i8 {
        let t = self.profile.target_power;
        let raw = (128.0 * (t - self.received_power) / t).round();
        raw.clamp(-128.0, 127.0) as i8
    }
}

/// Foreign objects evaluated on the pad.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    KeyFob,
    PaperClip,
    UsbDrive,
    Ssd,
    PassportRfid,
    NfcCard,
}

impl ObjectKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::KeyFob => "key_fob",
            ObjectKind::PaperClip => "paper_clip",
            ObjectKind::UsbDrive => "usb_drive",
            ObjectKind::Ssd => "ssd",
            ObjectKind::PassportRfid => "passport_rfid",
            ObjectKind::NfcCard => "nfc_card",
        }
    }

    pub fn from_name(name: &str) -> Option<ObjectKind> {
        Some(match name {
            "key_fob" => ObjectKind::KeyFob,
            "paper_clip" => ObjectKind::PaperClip,
            "usb_drive" => ObjectKind::UsbDrive,
            "ssd" => ObjectKind::Ssd,
            "passport_rfid" => ObjectKind::PassportRfid,
            "nfc_card" => ObjectKind::NfcCard,
            _ => return None,
        })
    }
}

/// A metallic object exposed to the field, with a latched damage flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ForeignObject {
    pub kind: ObjectKind,
    pub thermal: ThermalBody,
    /// Fraction of the transmitted power the object absorbs.
    pub absorption: f64,
    /// Temperature at which damage latches, Fahrenheit.
    pub damage_temp: f64,
    pub damaged: bool,
    /// Factor by which the object's presence lowers the charger's measured
    /// quality factor.
    pub q_degradation: f64,
}

impl ForeignObject {
    /// Calibrated default profiles. Absorption fractions and thermal
    /// constants are simulator choices tuned so the damage outcomes track
    /// the published power tiers.
    pub fn profile(kind: ObjectKind) -> ForeignObject {
        let (absorption, heat_capacity, dissipation, damage_temp, q_degradation) = match kind {
            ObjectKind::PaperClip => (0.6, 0.15, 0.018, 536.0, 0.4),
            ObjectKind::KeyFob => (0.5, 0.15, 0.025, 250.0, 0.5),
            ObjectKind::UsbDrive => (0.4, 0.15, 0.025, 300.0, 0.5),
            ObjectKind::Ssd => (0.4, 0.20, 0.025, 300.0, 0.5),
            ObjectKind::PassportRfid => (0.3, 0.08, 0.02, 140.0, 0.6),
            ObjectKind::NfcCard => (0.3, 0.08, 0.02, 140.0, 0.6),
        };
        ForeignObject {
            kind,
            thermal: ThermalBody::new(heat_capacity, dissipation, 77.0),
            absorption,
            damage_temp,
            damaged: false,
            q_degradation,
        }
    }

    /// Heat the object with its share of the transmitted power; damage
    /// latches at the damage temperature and never resets.
    pub fn step(&mut self, transmitted_power: f64, dt: f64) {
        self.thermal.step(self.absorption * transmitted_power, dt);
        if self.thermal.temp >= self.damage_temp {
            self.damaged = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_equilibrium_holds() {
        let mut body = ThermalBody::new(2.0, 0.2, 77.0);
        body.temp = 127.0;
        let equilibrium_power = 0.2 * (127.0 - 77.0);
        let t = body.step(equilibrium_power, 0.01);
        assert!((t - 127.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_steady_state_closed_form() {
        let body = ThermalBody::new(2.0, 0.2, 77.0);
        assert!((body.steady_state(10.0) - 127.0).abs() < 1e-12);
    }

    /// Phone calibration: 18 W sustained stabilizes near 178 F.
    #[test]
    fn phone_profile_plateau() {
        let p = ReceiverProfile::phone();
        let mut body = ThermalBody::new(p.heat_capacity, p.dissipation, p.ambient);
        assert!((body.steady_state(18.0) - 178.0).abs() < 0.5);
        for _ in 0..20_000 {
            body.step(18.0, 0.01);
        }
        assert!((body.temp - 178.0).abs() < 1.0, "simulated plateau {}", body.temp);
    }

    /// Contractivity: the distance to steady state shrinks monotonically.
    #[test]
    fn thermal_contractive_toward_steady_state() {
        let mut body = ThermalBody::new(1.5, 0.1, 77.0);
        let target = body.steady_state(5.0);
        let mut dist = (body.temp - target).abs();
        for _ in 0..12_000 {
            body.step(5.0, 0.01);
            let d = (body.temp - target).abs();
            assert!(d <= dist + 1e-12, "distance grew: {d} > {dist}");
            dist = d;
        }
        assert!(dist < 0.5);
    }

    /// Discrete energy bookkeeping: input equals stored plus dissipated.
    #[test]
    fn thermal_energy_bookkeeping() {
        let mut body = ThermalBody::new(2.0, 0.15, 77.0);
        let dt = 0.005;
        let power = 7.0;
        let t0 = body.temp;
        let mut dissipated = 0.0;
        let mut input = 0.0;
        for _ in 0..40_000 {
            dissipated += body.dissipation * (body.temp - body.ambient) * dt;
            input += power * dt;
            body.step(power, dt);
        }
        let stored = body.heat_capacity * (body.temp - t0);
        let balance = (input - stored - dissipated).abs() / input;
        assert!(balance < 1e-9, "energy imbalance {balance}");
    }

    #[test]
    fn protections_fire_in_order_and_latch() {
        let th = ProtectionThresholds::default();
        let none = protection_check(Protections::default(), &th, 100.0);
        assert_eq!(none, Protections::default());
        let p12 = protection_check(Protections::default(), &th, 130.0);
        assert_eq!(p12, Protections { p1: true, p2: true, p3: false });
        let all = protection_check(Protections::default(), &th, 171.0);
        assert_eq!(all, Protections { p1: true, p2: true, p3: true });
        // latching: lower temperature cannot clear anything
        let still = protection_check(all, &th, 80.0);
        assert_eq!(still, all);
    }

    #[test]
    fn protections_monotone_in_temperature() {
        let th = ProtectionThresholds::default();
        let mut last = 0;
        for t in (70..220).step_by(5) {
            let p = protection_check(Protections::default(), &th, f64::from(t));
            let count = u32::from(p.p1) + u32::from(p.p2) + u32::from(p.p3);
            assert!(count >= last, "protection count dropped at {t} F");
            last = count;
        }
    }

    fn charger_like_response(p: &QiPacket) -> Option<FskResponse> {
        match p {
            QiPacket::Fod { .. } | QiPacket::SpecificRequest { .. } => Some(FskResponse::Ack),
            QiPacket::GeneralRequest { .. } => {
                Some(FskResponse::Data(QiPacket::Ident { device_id: *b"QSIM15W" }))
            }
            _ => None,
        }
    }

    fn drive_to_power_transfer(rx: &mut Receiver) {
        let dt = 0.01;
        let mut sent = Vec::new();
        for _ in 0..200 {
            for p in rx.rx_step(1.0, dt) {
                sent.push(p.kind());
                if let Some(resp) = charger_like_response(&p) {
                    rx.handle_response(&resp);
                }
            }
            if rx.in_power_transfer() {
                return;
            }
        }
        panic!("receiver never reached power transfer; sent {sent:?}");
    }

    #[test]
    fn startup_sequence_order() {
        let mut rx = Receiver::new(ReceiverProfile::phone()).unwrap();
        let mut kinds = Vec::new();
        let dt = 0.01;
        for _ in 0..200 {
            for p in rx.rx_step(1.0, dt) {
                kinds.push(format!("{}", p.kind()));
                if let Some(resp) = charger_like_response(&p) {
                    rx.handle_response(&resp);
                }
            }
            if rx.in_power_transfer() {
                break;
            }
        }
        assert_eq!(kinds, vec!["SIG", "ID", "CFG", "FOD", "GRQ", "SRQ", "SRQ"]);
    }

    #[test]
    fn ce_zero_at_target_saturated_when_starved() {
        let mut rx = Receiver::new(ReceiverProfile::phone()).unwrap();
        drive_to_power_transfer(&mut rx);
        rx.rx_step(15.0, 0.01);
        assert_eq!(rx.control_error(), 0);
        rx.rx_step(1e-9, 0.01);
        assert_eq!(rx.control_error(), 127);
    }

    #[test]
    fn ce_and_rp_cadence() {
        let mut rx = Receiver::new(ReceiverProfile::phone()).unwrap();
        drive_to_power_transfer(&mut rx);
        let dt = 0.01;
        let mut ces = 0;
        let mut rps = 0;
        // 3.2 s window keeps the expected counts clear of tick-boundary
        // rounding: CEs land at 0.25 s..3.0 s, RPs at 0.4 s and 1.9 s
        for _ in 0..320 {
            for p in rx.rx_step(15.0, dt) {
                match p {
                    QiPacket::ControlError { .. } => ces += 1,
                    QiPacket::ReceivedPower { .. } => rps += 1,
                    other => panic!("unexpected {other:?}"),
                }
            }
        }
        assert_eq!(ces, 12, "CE count over 3.2 s");
        assert_eq!(rps, 2, "RP count over 3.2 s");
    }

    #[test]
    fn p1_sends_ept_then_disables_power_path() {
        let mut rx = Receiver::new(ReceiverProfile::phone()).unwrap();
        drive_to_power_transfer(&mut rx);
        // force the temperature past P1
        let mut epts = 0;
        let mut others = 0;
        for _ in 0..100_000 {
            for p in rx.rx_step(25.0, 0.01) {
                match p {
                    QiPacket::EndPowerTransfer { .. } => epts += 1,
                    _ if rx.protections().p1 => others += 1,
                    _ => {}
                }
            }
            if !rx.power_path_enabled() {
                break;
            }
        }
        assert!(rx.protections().p1);
        assert_eq!(epts, EPT_RETRIES);
        assert_eq!(others, 0, "no CE/RP after P1");
        assert!(!rx.power_path_enabled());
        // once off, nothing more comes out even as heating continues
        for _ in 0..1000 {
            assert!(rx.rx_step(25.0, 0.01).is_empty());
        }
    }

    #[test]
    fn honest_receiver_stops_on_fod_nak() {
        let mut rx = Receiver::new(ReceiverProfile::phone()).unwrap();
        let dt = 0.01;
        for _ in 0..200 {
            for p in rx.rx_step(1.0, dt) {
                if matches!(p, QiPacket::Fod { .. }) {
                    rx.handle_response(&FskResponse::Nak);
                }
            }
        }
        assert!(!rx.power_path_enabled());
        assert!(!rx.in_power_transfer());
    }

    #[test]
    fn paper_clip_exceeds_536_at_15w() {
        let mut clip = ForeignObject::profile(ObjectKind::PaperClip);
        assert!(clip.thermal.steady_state(0.6 * 15.0) > 536.0);
        for _ in 0..60_000 {
            clip.step(15.0, 0.01);
        }
        assert!(clip.thermal.temp > 536.0, "clip at {}", clip.thermal.temp);
        assert!(clip.damaged);
    }

    #[test]
    fn object_cools_and_damage_latches() {
        let mut clip = ForeignObject::profile(ObjectKind::PaperClip);
        for _ in 0..60_000 {
            clip.step(15.0, 0.01);
        }
        assert!(clip.damaged);
        let hot = clip.thermal.temp;
        for _ in 0..60_000 {
            clip.step(0.0, 0.01);
        }
        assert!(clip.thermal.temp < hot);
        assert!(clip.thermal.temp - 77.0 < 1.0, "decays toward ambient");
        assert!(clip.damaged, "damage never resets");
    }

    #[test]
    fn nfc_card_destroyed_by_any_sustained_transfer() {
        for &power in &[5.0, 10.0, 15.0] {
            let mut card = ForeignObject::profile(ObjectKind::NfcCard);
            for _ in 0..60_000 {
                card.step(power, 0.01);
            }
            assert!(card.damaged, "NFC card survived {power} W");
        }
    }

    /// Damage outcomes across the power tiers, matching the published
    /// qualitative matrix: low tiers only destroy RFID/NFC, the top tier
    /// destroys everything evaluated.
    #[test]
    fn damage_matrix_by_tier() {
        let all = [
            ObjectKind::KeyFob,
            ObjectKind::PaperClip,
            ObjectKind::UsbDrive,
            ObjectKind::Ssd,
            ObjectKind::PassportRfid,
            ObjectKind::NfcCard,
        ];
        let damaged_at = |power: f64| -> Vec<&'static str> {
            all.iter()
                .filter_map(|&kind| {
                    let mut obj = ForeignObject::profile(kind);
                    for _ in 0..120_000 {
                        obj.step(power, 0.01);
                    }
                    obj.damaged.then(|| kind.name())
                })
                .collect()
        };
        assert_eq!(damaged_at(5.7), vec!["passport_rfid", "nfc_card"]);
        let top = damaged_at(18.0);
        assert_eq!(top.len(), all.len(), "15 W tier destroys everything: {top:?}");
    }
}
