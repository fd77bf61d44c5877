//! Profile library and scenario configuration.
//!
//! Profiles (circuit parameter sets, charger personalities, receiver
//! devices, foreign objects) load from a human-editable TOML document; a
//! built-in library ships the documented defaults, including the `typical`
//! circuit profile carrying the published typical values. A scenario file
//! references profiles by name and may define or override its own.
//!
//! Sections support single-parent `inherits = "name"` chains resolved
//! before deserialization.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::charger::ChargerProfile;
use crate::circuit::SystemParams;
use crate::receiver::{ForeignObject, ObjectKind, ProtectionThresholds, ReceiverProfile, ThermalBody};

/// The built-in profile library shipped with the crate.
pub const BUILTIN_PROFILES: &str = include_str!("../data/profiles.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("toml: {0}")]
    Toml(String),
    #[error("unknown profile `{kind}.{name}`")]
    UnknownProfile { kind: &'static str, name: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("inheritance cycle at `{0}`")]
    InheritanceCycle(String),
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemConfig {
    v_ad: f64,
    z_ad: f64,
    r_cable: f64,
    c_bus: f64,
    r_eq: f64,
    c_p: f64,
    c_s: f64,
    l_p: f64,
    l_s: f64,
    m: f64,
    duty: f64,
    f_p: f64,
    z_load_re: f64,
    z_load_im: f64,
}

impl SystemConfig {
    fn build(&self) -> Result<SystemParams, ConfigError> {
        let params = SystemParams {
            v_ad: self.v_ad,
            z_ad: self.z_ad,
            r_cable: self.r_cable,
            c_bus: self.c_bus,
            r_eq: self.r_eq,
            c_p: self.c_p,
            c_s: self.c_s,
            l_p: self.l_p,
            l_s: self.l_s,
            m: self.m,
            duty: self.duty,
            f_p: self.f_p,
            z_load: Complex64::new(self.z_load_re, self.z_load_im),
        };
        params
            .validate()
            .map_err(|e| ConfigError::Invalid { what: "system profile", detail: e.to_string() })?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChargerConfig {
    rated_power: f64,
    fod_loss_threshold: f64,
    k_p: f64,
    k_i: f64,
    ce_timeout: f64,
    rp_timeout: f64,
    sig_window: f64,
    cooldown: f64,
    measured_q: f64,
    baseline_power_cap: f64,
    charger_id: String,
}

impl ChargerConfig {
    fn build(&self, name: &str) -> Result<ChargerProfile, ConfigError> {
        let profile = ChargerProfile {
            name: name.to_string(),
            rated_power: self.rated_power,
            fod_loss_threshold: self.fod_loss_threshold,
            k_p: self.k_p,
            k_i: self.k_i,
            ce_timeout: self.ce_timeout,
            rp_timeout: self.rp_timeout,
            sig_window: self.sig_window,
            cooldown: self.cooldown,
            measured_q: self.measured_q,
            baseline_power_cap: self.baseline_power_cap,
            charger_id: id_bytes(&self.charger_id),
        };
        profile
            .validate()
            .map_err(|e| ConfigError::Invalid { what: "charger profile", detail: e })?;
        Ok(profile)
    }
}

fn id_bytes(s: &str) -> [u8; 7] {
    let mut id = [b' '; 7];
    for (slot, b) in id.iter_mut().zip(s.bytes()) {
        *slot = b;
    }
    id
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverConfig {
    device_id: String,
    target_power: f64,
    neg: bool,
    heat_capacity: f64,
    dissipation: f64,
    ambient: f64,
    p1_temp: f64,
    p2_temp: f64,
    p3_temp: f64,
    ask_depth: f64,
    reference_q_tenths: u16,
}

impl ReceiverConfig {
    fn build(&self, name: &str) -> Result<ReceiverProfile, ConfigError> {
        let profile = ReceiverProfile {
            name: name.to_string(),
            device_id: id_bytes(&self.device_id),
            target_power: self.target_power,
            neg: self.neg,
            heat_capacity: self.heat_capacity,
            dissipation: self.dissipation,
            ambient: self.ambient,
            thresholds: ProtectionThresholds {
                p1_temp: self.p1_temp,
                p2_temp: self.p2_temp,
                p3_temp: self.p3_temp,
            },
            ask_depth: self.ask_depth,
            reference_q_tenths: self.reference_q_tenths,
        };
        profile
            .validate()
            .map_err(|e| ConfigError::Invalid { what: "receiver profile", detail: e })?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectConfig {
    absorption: f64,
    heat_capacity: f64,
    dissipation: f64,
    damage_temp: f64,
    q_degradation: f64,
}

impl ObjectConfig {
    fn build(&self, name: &str) -> Result<ForeignObject, ConfigError> {
        let kind = ObjectKind::from_name(name).ok_or_else(|| ConfigError::Invalid {
            what: "object profile",
            detail: format!("unknown object kind `{name}`"),
        })?;
        if !(self.absorption > 0.0 && self.absorption <= 1.0) {
            return Err(ConfigError::Invalid {
                what: "object profile",
                detail: format!("absorption {} outside (0, 1]", self.absorption),
            });
        }
        Ok(ForeignObject {
            kind,
            thermal: ThermalBody::new(self.heat_capacity, self.dissipation, 77.0),
            absorption: self.absorption,
            damage_temp: self.damage_temp,
            damaged: false,
            q_degradation: self.q_degradation,
        })
    }
}

/// Attack description as written in a scenario file.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: String,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_depth")]
    pub depth: f64,
    #[serde(default)]
    pub jam: bool,
    #[serde(default = "default_jam_depth")]
    pub jam_depth: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default)]
    pub reference_q_tenths: u16,
    #[serde(default)]
    pub voice_seed: u64,
    /// Scripted control-error injections for `kind = "qi_injection"`.
    #[serde(default)]
    pub ce: Vec<CeEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CeEntry {
    pub t: f64,
    pub error: i8,
}

fn default_depth() -> f64 {
    crate::attacker::FORGE_DEPTH
}

fn default_jam_depth() -> f64 {
    crate::attacker::JAM_DEPTH
}

fn default_period() -> f64 {
    0.21
}

/// Scenario file as parsed from TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: String,
    system: String,
    charger: String,
    receiver: Option<String>,
    #[serde(default)]
    objects: Vec<String>,
    duration: f64,
    #[serde(default)]
    seed: u64,
    /// Enables the DC/DC input filter when present.
    countermeasure_cutoff: Option<f64>,
    #[serde(default = "default_noise")]
    noise_sigma: f64,
    attack: Option<AttackConfig>,
    /// Profile overlay tables, merged over the built-in library.
    #[serde(default)]
    system_profiles: toml::value::Table,
    #[serde(default)]
    charger_profiles: toml::value::Table,
    #[serde(default)]
    receiver_profiles: toml::value::Table,
    #[serde(default)]
    object_profiles: toml::value::Table,
}

fn default_noise() -> f64 {
    1e-4
}

/// The five built-in scenario kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    BaselineCharge,
    EavesdropDemo,
    VoiceInjection,
    PowerToast,
    FodDestruction,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::BaselineCharge => "baseline_charge",
            ScenarioKind::EavesdropDemo => "eavesdrop_demo",
            ScenarioKind::VoiceInjection => "voice_injection",
            ScenarioKind::PowerToast => "power_toast",
            ScenarioKind::FodDestruction => "fod_destruction",
        }
    }

    pub fn from_name(name: &str) -> Option<ScenarioKind> {
        Some(match name {
            "baseline_charge" => ScenarioKind::BaselineCharge,
            "eavesdrop_demo" => ScenarioKind::EavesdropDemo,
            "voice_injection" => ScenarioKind::VoiceInjection,
            "power_toast" => ScenarioKind::PowerToast,
            "fod_destruction" => ScenarioKind::FodDestruction,
            _ => return None,
        })
    }
}

/// Fully resolved scenario, ready to run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub system: SystemParams,
    pub charger: ChargerProfile,
    pub receiver: Option<ReceiverProfile>,
    pub objects: Vec<ForeignObject>,
    pub attack: Option<AttackConfig>,
    pub duration: f64,
    pub seed: u64,
    pub countermeasure_cutoff: Option<f64>,
    pub noise_sigma: f64,
}

/// Parse a scenario document, resolving profile references against the
/// built-in library merged with any overlay tables in the document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
    let kind = ScenarioKind::from_name(&file.scenario)
        .ok_or_else(|| ConfigError::UnknownScenario(file.scenario.clone()))?;
    if !file.duration.is_finite() || file.duration <= 0.0 {
        return Err(ConfigError::Invalid {
            what: "scenario",
            detail: format!("duration {} must be positive", file.duration),
        });
    }

    let library: toml::Value =
        toml::from_str(BUILTIN_PROFILES).map_err(|e| ConfigError::Toml(e.to_string()))?;
    let section = |key: &str, overlay: &toml::value::Table| -> toml::value::Table {
        let mut table = library
            .get(key)
            .and_then(|v| v.as_table())
            .cloned()
            .unwrap_or_default();
        for (k, v) in overlay {
            table.insert(k.clone(), v.clone());
        }
        table
    };

    let systems = section("system", &file.system_profiles);
    let chargers = section("charger", &file.charger_profiles);
    let receivers = section("receiver", &file.receiver_profiles);
    let objects = section("object", &file.object_profiles);

    let system: SystemConfig = resolve(&systems, &file.system, "system")?;
    let charger: ChargerConfig = resolve(&chargers, &file.charger, "charger")?;
    let receiver = file
        .receiver
        .as_ref()
        .map(|name| {
            let cfg: ReceiverConfig = resolve(&receivers, name, "receiver")?;
            cfg.build(name)
        })
        .transpose()?;
    let objects = file
        .objects
        .iter()
        .map(|name| {
            let cfg: ObjectConfig = resolve(&objects, name, "object")?;
            cfg.build(name)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ScenarioConfig {
        kind,
        system: system.build()?,
        charger: charger.build(&file.charger)?,
        receiver,
        objects,
        attack: file.attack,
        duration: file.duration,
        seed: file.seed,
        countermeasure_cutoff: file.countermeasure_cutoff,
        noise_sigma: file.noise_sigma,
    })
}

pub fn parse_scenario_path(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Merge `inherits` chains and deserialize one named entry.
fn resolve<T: for<'de> Deserialize<'de>>(
    table: &toml::value::Table,
    name: &str,
    kind: &'static str,
) -> Result<T, ConfigError> {
    let merged = resolve_table(table, name, kind, 0)?;
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e| ConfigError::Toml(format!("{kind}.{name}: {e}")))
}

fn resolve_table(
    table: &toml::value::Table,
    name: &str,
    kind: &'static str,
    depth: usize,
) -> Result<toml::value::Table, ConfigError> {
    if depth > 8 {
        return Err(ConfigError::InheritanceCycle(name.to_string()));
    }
    let entry = table
        .get(name)
        .and_then(|v| v.as_table())
        .ok_or_else(|| ConfigError::UnknownProfile { kind, name: name.to_string() })?;
    let mut merged = match entry.get("inherits").and_then(|v| v.as_str()) {
        Some(parent) => resolve_table(table, parent, kind, depth + 1)?,
        None => toml::value::Table::new(),
    };
    for (k, v) in entry {
        if k != "inherits" {
            merged.insert(k.clone(), v.clone());
        }
    }
    Ok(merged)
}

/// Built-in scenario documents used by the `demo` subcommand.
pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    Some(match name {
        "baseline_charge" => BASELINE_CHARGE,
        "eavesdrop_demo" => EAVESDROP_DEMO,
        "voice_injection" => VOICE_INJECTION,
        "power_toast" => POWER_TOAST,
        "power_toast_nojam" => POWER_TOAST_NOJAM,
        "fod_destruction" => FOD_DESTRUCTION,
        "fod_honest" => FOD_HONEST,
        "countermeasure" => COUNTERMEASURE,
        _ => return None,
    })
}

pub const BUILTIN_SCENARIOS: &[&str] = &[
    "baseline_charge",
    "eavesdrop_demo",
    "voice_injection",
    "power_toast",
    "power_toast_nojam",
    "fod_destruction",
    "fod_honest",
    "countermeasure",
];

const BASELINE_CHARGE: &str = r#"
scenario = "baseline_charge"
system = "tier5"
charger = "5w"
receiver = "phone_baseline"
duration = 30.0
seed = 1
"#;

const EAVESDROP_DEMO: &str = r#"
scenario = "eavesdrop_demo"
system = "tier10"
charger = "10w"
receiver = "phone10"
duration = 6.0
seed = 2
"#;

const VOICE_INJECTION: &str = r#"
scenario = "voice_injection"
system = "tier5"
charger = "5w"
receiver = "phone_baseline"
duration = 10.0
seed = 3

[attack]
kind = "voice_injection"
start = 2.0
depth = 0.3
voice_seed = 12
"#;

const POWER_TOAST: &str = r#"
scenario = "power_toast"
system = "tier15"
charger = "15w"
receiver = "phone"
duration = 60.0
seed = 4

[attack]
kind = "toast"
start = 2.0
depth = 0.1
jam = true
jam_depth = 0.5
period = 0.21
"#;

const POWER_TOAST_NOJAM: &str = r#"
scenario = "power_toast"
system = "tier15"
charger = "15w"
receiver = "phone"
duration = 60.0
seed = 4

[attack]
kind = "toast"
start = 2.0
depth = 0.1
jam = false
period = 0.21
"#;

const FOD_DESTRUCTION: &str = r#"
scenario = "fod_destruction"
system = "tier15"
charger = "15w"
objects = ["paper_clip"]
duration = 60.0
seed = 5

[attack]
kind = "fod_handshake"
start = 0.5
depth = 0.1
reference_q_tenths = 0
period = 0.21
"#;

const FOD_HONEST: &str = r#"
scenario = "fod_destruction"
system = "tier15"
charger = "15w"
objects = ["paper_clip"]
duration = 20.0
seed = 5

[attack]
kind = "fod_handshake"
start = 0.5
depth = 0.1
reference_q_tenths = 140
period = 0.21
"#;

const COUNTERMEASURE: &str = r#"
scenario = "power_toast"
system = "tier15"
charger = "15w"
receiver = "phone"
duration = 60.0
seed = 4
countermeasure_cutoff = 90.0

[attack]
kind = "toast"
start = 2.0
depth = 0.1
jam = true
jam_depth = 0.5
period = 0.21
"#;
