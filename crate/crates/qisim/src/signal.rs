//! Uniformly sampled time series, waveform synthesis, and short-time Fourier
//! analysis.
//!
//! [`Trace`] is the signal carrier shared by every other module: adapter
//! voltages, coil currents, power envelopes, and temperature logs all travel
//! as traces. Two canonical sample rates are used throughout the crate:
//!
//! - [`ENVELOPE_RATE`] (100 kS/s) for envelope-domain signals such as load
//!   modulation and adapter-side pulse trains,
//! - [`CARRIER_RATE`] (2 MS/s) for carrier-domain signals where the power
//!   carrier and its second harmonic must be resolved.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

/// Envelope-domain sample rate: resolves the 2 kHz ASK band with x50 margin.
pub const ENVELOPE_RATE: f64 = 100_000.0;

/// Carrier-domain sample rate: resolves twice the power-signal frequency
/// (280 kHz for a 140 kHz carrier) with x7 margin.
pub const CARRIER_RATE: f64 = 2_000_000.0;

/// Default STFT window length in samples.
pub const STFT_WINDOW: usize = 4096;

/// Default STFT hop in samples.
pub const STFT_HOP: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("frequency {freq} Hz at or above Nyquist {nyquist} Hz")]
    Aliasing { freq: f64, nyquist: f64 },
    #[error("sample rate mismatch: {0} vs {1}")]
    RateMismatch(f64, f64),
    #[error("unit mismatch: {0} vs {1}")]
    UnitMismatch(Unit, Unit),
    #[error("invalid sample rate {0}")]
    BadRate(f64),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("trace shorter than one window ({len} < {window})")]
    TooShort { len: usize, window: usize },
    #[error("hop must be at least one sample")]
    BadHop,
    #[error("carrier {carrier} Hz under-sampled at {rate} S/s (need rate >= 10 x carrier)")]
    CarrierRatio { carrier: f64, rate: f64 },
    #[error("trace file format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for SignalError {
    fn from(e: std::io::Error) -> Self {
        SignalError::Io(e.to_string())
    }
}

/// Physical unit tag carried by a [`Trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Volts,
    Amperes,
    Watts,
    Dimensionless,
}

impl Unit {
    pub fn tag(self) -> &'static str {
        match self {
            Unit::Volts => "volts",
            Unit::Amperes => "amperes",
            Unit::Watts => "watts",
            Unit::Dimensionless => "dimensionless",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Unit> {
        match tag {
            "volts" => Some(Unit::Volts),
            "amperes" => Some(Unit::Amperes),
            "watts" => Some(Unit::Watts),
            "dimensionless" => Some(Unit::Dimensionless),
            _ => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Uniformly sampled real-valued time series.
///
/// Immutable after construction; all operations return new traces.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    sample_rate: f64,
    samples: Vec<f64>,
    unit: Unit,
    t0: f64,
}

impl Trace {
    /// Build a trace, validating the rate and sample finiteness.
    pub fn new(sample_rate: f64, samples: Vec<f64>, unit: Unit, t0: f64) -> Result<Trace, SignalError> {
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(SignalError::BadRate(sample_rate));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Trace { sample_rate, samples, unit, t0 })
    }

    /// Internal constructor for operations that produce finite samples by
    /// construction.
    pub(crate) fn from_parts(sample_rate: f64, samples: Vec<f64>, unit: Unit, t0: f64) -> Trace {
        debug_assert!(sample_rate > 0.0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Trace { sample_rate, samples, unit, t0 }
    }

    /// Constant-valued trace of the given duration.
    pub fn constant(value: f64, duration: f64, sample_rate: f64, unit: Unit) -> Trace {
        let n = (duration * sample_rate).round() as usize;
        Trace::from_parts(sample_rate, vec![value; n], unit, 0.0)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Retag the trace with a different unit, leaving samples untouched.
    pub fn with_unit(mut self, unit: Unit) -> Trace {
        self.unit = unit;
        self
    }

    /// Shift the start time.
    pub fn with_t0(mut self, t0: f64) -> Trace {
        self.t0 = t0;
        self
    }

    /// Map every sample through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Trace {
        Trace::from_parts(
            self.sample_rate,
            self.samples.iter().map(|&s| f(s)).collect(),
            self.unit,
            self.t0,
        )
    }

    pub fn scale(&self, k: f64) -> Trace {
        self.map(|s| s * k)
    }
}

/// `samples[k] = amplitude * sin(2 pi freq k / sample_rate + phase)`.
///
/// A zero frequency is allowed (DC given by the phase); frequencies at or
/// above Nyquist are rejected.
pub fn synth_sine(
    amplitude: f64,
    freq: f64,
    duration: f64,
    sample_rate: f64,
    phase: f64,
) -> Result<Trace, SignalError> {
    if !sample_rate.is_finite() || sample_rate <= 0.0 {
        return Err(SignalError::BadRate(sample_rate));
    }
    if freq < 0.0 || freq >= sample_rate / 2.0 {
        return Err(SignalError::Aliasing { freq, nyquist: sample_rate / 2.0 });
    }
    let n = (duration * sample_rate).round() as usize;
    let w = 2.0 * PI * freq / sample_rate;
    let samples = (0..n).map(|k| amplitude * (w * k as f64 + phase).sin()).collect();
    Ok(Trace::from_parts(sample_rate, samples, Unit::Volts, 0.0))
}

/// Linear chirp sweeping `f0` to `f1` over the duration, phase-continuous.
pub fn synth_chirp(
    amplitude: f64,
    f0: f64,
    f1: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<Trace, SignalError> {
    if !sample_rate.is_finite() || sample_rate <= 0.0 {
        return Err(SignalError::BadRate(sample_rate));
    }
    let nyquist = sample_rate / 2.0;
    if f0 < 0.0 || f1 < 0.0 || f0 >= nyquist || f1 >= nyquist {
        return Err(SignalError::Aliasing { freq: f0.max(f1), nyquist });
    }
    let n = (duration * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let sweep = (f1 - f0) / duration;
    let mut phase = 0.0f64;
    let samples = (0..n)
        .map(|k| {
            let s = amplitude * phase.sin();
            let f = f0 + sweep * (k as f64 * dt);
            phase += 2.0 * PI * f * dt;
            s
        })
        .collect();
    Ok(Trace::from_parts(sample_rate, samples, Unit::Volts, 0.0))
}

/// Pointwise sum of two traces; output length is the shorter of the two.
pub fn superimpose(a: &Trace, b: &Trace) -> Result<Trace, SignalError> {
    if a.sample_rate != b.sample_rate {
        return Err(SignalError::RateMismatch(a.sample_rate, b.sample_rate));
    }
    if a.unit != b.unit {
        return Err(SignalError::UnitMismatch(a.unit, b.unit));
    }
    let samples = a
        .samples
        .iter()
        .zip(b.samples.iter())
        .map(|(&x, &y)| x + y)
        .collect();
    Ok(Trace::from_parts(a.sample_rate, samples, a.unit, a.t0))
}

/// Magnitude short-time Fourier transform, time-major.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    window_size: usize,
    hop: usize,
    sample_rate: f64,
    /// `magnitudes[frame][bin]`, bins spanning `[0, sample_rate/2]`.
    magnitudes: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Hz per frequency bin.
    pub fn freq_resolution(&self) -> f64 {
        self.sample_rate / self.window_size as f64
    }

    pub fn num_frames(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn num_bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    pub fn magnitudes(&self) -> &[Vec<f64>] {
        &self.magnitudes
    }

    pub fn bin_freq(&self, bin: usize) -> f64 {
        bin as f64 * self.freq_resolution()
    }

    /// Center time of a frame, relative to the start of the trace.
    pub fn frame_time(&self, frame: usize) -> f64 {
        (frame * self.hop + self.window_size / 2) as f64 / self.sample_rate
    }

    /// Index of the strongest bin of a frame within `[f_lo, f_hi]`.
    pub fn dominant_bin(&self, frame: usize, f_lo: f64, f_hi: f64) -> Option<usize> {
        let df = self.freq_resolution();
        let lo = (f_lo / df).ceil().max(0.0) as usize;
        let hi = ((f_hi / df).floor() as usize).min(self.num_bins() - 1);
        if lo > hi {
            return None;
        }
        let row = &self.magnitudes[frame];
        let mut best = lo;
        for b in lo..=hi {
            if row[b] > row[best] {
                best = b;
            }
        }
        Some(best)
    }

    /// Dominant frequency of a frame within `[f_lo, f_hi]`, refined by
    /// parabolic interpolation around the peak bin.
    pub fn dominant_freq(&self, frame: usize, f_lo: f64, f_hi: f64) -> Option<f64> {
        let bin = self.dominant_bin(frame, f_lo, f_hi)?;
        let row = &self.magnitudes[frame];
        let df = self.freq_resolution();
        if bin == 0 || bin + 1 >= row.len() {
            return Some(bin as f64 * df);
        }
        let (a, b, c) = (row[bin - 1], row[bin], row[bin + 1]);
        let denom = a - 2.0 * b + c;
        let p = if denom.abs() < f64::EPSILON { 0.0 } else { 0.5 * (a - c) / denom };
        Some((bin as f64 + p.clamp(-0.5, 0.5)) * df)
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let nm1 = (n - 1) as f64;
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nm1).cos()).collect()
}

/// Hann-windowed magnitude STFT with frequency resolution
/// `sample_rate / window_size`.
pub fn stft(trace: &Trace, window_size: usize, hop: usize) -> Result<Spectrogram, SignalError> {
    if window_size == 0 || trace.len() < window_size {
        return Err(SignalError::TooShort { len: trace.len(), window: window_size });
    }
    if hop == 0 {
        return Err(SignalError::BadHop);
    }
    let window = hann(window_size);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(window_size);
    let bins = window_size / 2 + 1;
    let mut frames = Vec::new();
    let mut buf = vec![Complex::new(0.0, 0.0); window_size];
    let mut start = 0;
    while start + window_size <= trace.len() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(trace.samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        frames.push(buf[..bins].iter().map(|c| c.norm()).collect());
        start += hop;
    }
    Ok(Spectrogram {
        window_size,
        hop,
        sample_rate: trace.sample_rate,
        magnitudes: frames,
    })
}

/// Second-order Butterworth low-pass biquad coefficients via the bilinear
/// transform. Unity gain at DC.
pub(crate) struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    pub(crate) fn lowpass(cutoff: f64, sample_rate: f64) -> Biquad {
        let k = (PI * cutoff / sample_rate).tan();
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Biquad {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    /// Run the filter over `x`, with state primed to the DC steady state of
    /// the first sample to suppress the startup transient.
    pub(crate) fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(x.len());
        let x0 = x.first().copied().unwrap_or(0.0);
        let (mut x1, mut x2) = (x0, x0);
        let (mut y1, mut y2) = (x0, x0);
        for &xi in x {
            let yi = self.b0 * xi + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
            x2 = x1;
            x1 = xi;
            y2 = y1;
            y1 = yi;
            y.push(yi);
        }
        y
    }

    /// Zero-phase forward-backward pass (fourth-order magnitude response).
    pub(crate) fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let mut fwd = self.run(x);
        fwd.reverse();
        let mut back = self.run(&fwd);
        back.reverse();
        back
    }
}

/// Amplitude envelope: rectify, zero-phase low-pass at `carrier_freq / 5`,
/// then rescale by `pi/2` so an unmodulated carrier of amplitude `A` maps to
/// a constant envelope of `A`.
///
/// Requires at least ten samples per carrier cycle; rectification cannot
/// track the carrier below that.
pub fn envelope(trace: &Trace, carrier_freq: f64) -> Result<Trace, SignalError> {
    if !carrier_freq.is_finite() || carrier_freq <= 0.0 || trace.sample_rate < 10.0 * carrier_freq {
        return Err(SignalError::CarrierRatio { carrier: carrier_freq, rate: trace.sample_rate });
    }
    let rectified: Vec<f64> = trace.samples.iter().map(|s| s.abs()).collect();
    let biquad = Biquad::lowpass(carrier_freq / 5.0, trace.sample_rate);
    let smoothed = biquad.filtfilt(&rectified);
    let samples = smoothed.iter().map(|s| s * (PI / 2.0)).collect();
    Ok(Trace::from_parts(trace.sample_rate, samples, trace.unit, trace.t0))
}

/// Peak-to-mean modulation depth `(max - min) / (max + min)` over the trace
/// interior, skipping `guard` samples at each edge.
pub fn modulation_depth(trace: &Trace, guard: usize) -> f64 {
    let s = trace.samples();
    if s.len() <= 2 * guard + 1 {
        return 0.0;
    }
    let interior = &s[guard..s.len() - guard];
    let max = interior.iter().cloned().fold(f64::MIN, f64::max);
    let min = interior.iter().cloned().fold(f64::MAX, f64::min);
    if max + min == 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

/// Write a trace as CSV: a `# sample_rate=<Hz> unit=<tag> t0=<s>` header
/// line followed by one sample per line. Values are printed with 17
/// significant digits so a read/write cycle is bit-identical.
pub fn write_csv<W: Write>(trace: &Trace, out: W) -> Result<(), SignalError> {
    let mut w = BufWriter::new(out);
    writeln!(
        w,
        "# sample_rate={} unit={} t0={}",
        fmt_f64(trace.sample_rate),
        trace.unit.tag(),
        fmt_f64(trace.t0)
    )?;
    for s in &trace.samples {
        writeln!(w, "{}", fmt_f64(*s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_path(trace: &Trace, path: &Path) -> Result<(), SignalError> {
    let file = std::fs::File::create(path)?;
    write_csv(trace, file)
}

/// 17 significant digits: enough to reproduce any f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Trace, SignalError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| SignalError::Format("empty file".into()))??;
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| SignalError::Format("missing `#` header line".into()))?;
    let mut sample_rate = None;
    let mut unit = None;
    let mut t0 = 0.0;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| SignalError::Format(format!("bad header field `{field}`")))?;
        match key {
            "sample_rate" => {
                sample_rate =
                    Some(value.parse::<f64>().map_err(|e| SignalError::Format(e.to_string()))?)
            }
            "unit" => {
                unit = Some(
                    Unit::from_tag(value)
                        .ok_or_else(|| SignalError::Format(format!("unknown unit `{value}`")))?,
                )
            }
            "t0" => t0 = value.parse::<f64>().map_err(|e| SignalError::Format(e.to_string()))?,
            other => return Err(SignalError::Format(format!("unknown header key `{other}`"))),
        }
    }
    let sample_rate =
        sample_rate.ok_or_else(|| SignalError::Format("header missing sample_rate".into()))?;
    let unit = unit.ok_or_else(|| SignalError::Format("header missing unit".into()))?;
    let mut samples = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        samples.push(line.parse::<f64>().map_err(|e| SignalError::Format(e.to_string()))?);
    }
    Trace::new(sample_rate, samples, unit, t0)
}

pub fn read_csv_path(path: &Path) -> Result<Trace, SignalError> {
    let file = std::fs::File::open(path)?;
    read_csv(file)
}
