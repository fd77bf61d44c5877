//! Desk-scale simulator of a Qi wireless-charging system under intentional
//! electromagnetic interference on the adapter's DC output.
//!
//! The crate models the full path from a compromised power adapter to the
//! transmitter coil and back: the analytic propagation of supply noise into
//! amplitude modulation on the power signal, the Qi in-band protocol
//! (biphase mark coding, byte framing, ASK uplink, FSK downlink), the
//! charger and receiver state machines with their safety mechanisms, the
//! attacks those mechanisms admit, and the adapter-side eavesdropping
//! pipelines that make the attacks interactive.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── propagation.rs      # voltage scaling factor K(f), depth law m = K * m_i
//! ├── codec_roundtrip.rs  # BMC + framing + checksum, ASK loopback
//! ├── baseline_charge.rs  # compliant closed-loop charge cycle
//! ├── eavesdrop_ask.rs    # matched-filter packet recovery at the adapter
//! ├── eavesdrop_fsk.rs    # spectrogram recovery of charger responses
//! ├── voice_injection.rs  # audio through the coil while charging survives
//! ├── power_toast.rs      # jam + forged CE/RP past the protection ladder
//! ├── fod_destruction.rs  # handshake with no receiver, object damage
//! ├── countermeasure.rs   # DC/DC input filter shutting the attacks down
//! └── depth_sweep.rs      # disruption onset and K(f) sweep tables
//! ```
//!
//! ```bash
//! cargo run --example propagation
//! cargo run --example power_toast
//! ```
//!
//! # Modules
//!
//! - [`signal`] — traces, synthesis, STFT, envelope detection, trace CSV I/O
//! - [`circuit`] — the transfer-function chain between adapter and coil
//! - [`codec`] — packets, line coding, framing, ASK/FSK modulation
//! - [`charger`] — the TX state machine: phases, PID loop, FOD, timeouts
//! - [`receiver`] — the RX device, thermal models, protections, objects
//! - [`attacker`] — interference injection, packet forgery, jamming,
//!   the foreign-object handshake
//! - [`eavesdrop`] — passive recovery of both traffic directions
//! - [`profiles`] — the profile library and scenario configuration
//! - [`scenario`] — the deterministic scenario engine, reports, sweeps
//!
//! # Quick start
//!
//! ```
//! use qisim::circuit::{scaling_factor, SystemParams};
//!
//! // supply noise at 1 kHz reaches the coil almost unattenuated
//! let params = SystemParams::typical();
//! let k = scaling_factor(&params, 1e3);
//! assert!((k - 0.99).abs() < 0.02);
//! ```
//!
//! A thin CLI wraps the scenario engine: `qisim run <config>`,
//! `qisim sweep <config> --param m_i --values ...`, `qisim decode <trace>`,
//! and `qisim demo <name>` for the built-in scenarios.

pub mod attacker;
pub mod charger;
pub mod circuit;
pub mod codec;
pub mod eavesdrop;
pub mod profiles;
pub mod receiver;
pub mod scenario;
pub mod signal;
