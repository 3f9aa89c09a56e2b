//! Sensor windows, amplitude spectra and the synthetic machine-state generator.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 2048.0;
pub const DEFAULT_OPERATING_FREQ_HZ: f64 = 26.1;
pub const DEFAULT_WINDOW_LEN: usize = 1600;
pub const DEFAULT_NOISE_SD: f64 = 0.05;
/// Capture cadence of the monitoring system.
pub const WINDOW_SPACING_S: i64 = 300;
/// 2018-08-01T00:00:00Z
pub const DEFAULT_START_TIMESTAMP: i64 = 1_533_081_600;

/// Base 1x tone amplitude of a healthy machine, in signal units.
const BASE_AMPLITUDE: f64 = 1.0;
/// Non-synchronous multiples of the operating frequency excited by looseness.
const LOOSENESS_MULTIPLES: [f64; 6] = [3.4, 4.6, 5.3, 6.7, 7.4, 8.6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    /// Axial.
    X,
    /// Radial.
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineState {
    Normal,
    Imbalance,
    Looseness,
    PowerOff,
}

impl MachineState {
    pub const ALL: [MachineState; 4] = [
        MachineState::Normal,
        MachineState::Imbalance,
        MachineState::Looseness,
        MachineState::PowerOff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MachineState::Normal => "normal",
            MachineState::Imbalance => "imbalance",
            MachineState::Looseness => "looseness",
            MachineState::PowerOff => "poweroff",
        }
    }

    /// Ambient temperature offset the generator couples to each state, in degrees C.
    pub fn temperature_offset_c(self) -> f64 {
        match self {
            MachineState::Normal => 0.0,
            MachineState::Imbalance => 10.0,
            MachineState::Looseness => 5.0,
            MachineState::PowerOff => -15.0,
        }
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MachineState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MachineState::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown machine state {s:?}")))
    }
}

/// One capture: two acceleration channels plus ambient temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalWindow {
    pub timestamp: i64,
    pub sample_rate_hz: f64,
    pub x_samples: Vec<f64>,
    pub y_samples: Vec<f64>,
    pub ambient_temp_c: f64,
}

impl SignalWindow {
    pub fn new(
        timestamp: i64,
        sample_rate_hz: f64,
        x_samples: Vec<f64>,
        y_samples: Vec<f64>,
        ambient_temp_c: f64,
    ) -> Result<Self> {
        let w = SignalWindow {
            timestamp,
            sample_rate_hz,
            x_samples,
            y_samples,
            ambient_temp_c,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.x_samples.len() != self.y_samples.len() {
            return Err(Error::LengthMismatch {
                left: self.x_samples.len(),
                right: self.y_samples.len(),
            });
        }
        if self.x_samples.len() < 2 {
            return Err(Error::EmptySignal(self.x_samples.len()));
        }
        if !self.x_samples.iter().chain(&self.y_samples).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("window samples"));
        }
        if !self.ambient_temp_c.is_finite() {
            return Err(Error::NonFinite("ambient temperature"));
        }
        Ok(())
    }

    pub fn samples(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x_samples,
            Axis::Y => &self.y_samples,
        }
    }

    pub fn len(&self) -> usize {
        self.x_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_samples.is_empty()
    }
}

/// One-sided amplitude spectrum of a zero-padded real signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freq_resolution_hz: f64,
    pub magnitudes: Vec<f64>,
    pub source_axis: Axis,
    /// Length before zero padding.
    pub n_time_samples: usize,
}

impl Spectrum {
    /// Zero-padded transform length.
    pub fn n_padded(&self) -> usize {
        (self.magnitudes.len() - 1) * 2
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.freq_resolution_hz
    }

    pub fn max_frequency(&self) -> f64 {
        self.bin_frequency(self.magnitudes.len() - 1)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.magnitudes.iter().enumerate() {
            if m > self.magnitudes[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Rectangular,
    /// Hann window with amplitude correction for its 0.5 coherent gain.
    Hann,
}

/// Rectangular-window amplitude spectrum, zero-padded to the next power of two.
pub fn fft_magnitude(samples: &[f64], sample_rate_hz: f64, axis: Axis) -> Result<Spectrum> {
    fft_magnitude_with(samples, sample_rate_hz, axis, Taper::Rectangular)
}

pub fn fft_magnitude_with(
    samples: &[f64],
    sample_rate_hz: f64,
    axis: Axis,
    taper: Taper,
) -> Result<Spectrum> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::EmptySignal(n));
    }
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal samples"));
    }
    let n_padded = n.next_power_of_two();
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n_padded];
    let gain = match taper {
        Taper::Rectangular => 1.0,
        Taper::Hann => 2.0,
    };
    for (i, (slot, &v)) in buf.iter_mut().zip(samples).enumerate() {
        let w = match taper {
            Taper::Rectangular => 1.0,
            Taper::Hann => 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos(),
        };
        *slot = Complex64::new(v * w * gain, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n_padded).process(&mut buf);

    let half = n_padded / 2;
    let np = n_padded as f64;
    let magnitudes = (0..=half)
        .map(|k| {
            let scale = if k == 0 || k == half { 1.0 / np } else { 2.0 / np };
            buf[k].norm() * scale
        })
        .collect();
    Ok(Spectrum {
        freq_resolution_hz: sample_rate_hz / np,
        magnitudes,
        source_axis: axis,
        n_time_samples: n,
    })
}

/// Signal-shape parameters shared by every window of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub operating_freq_hz: f64,
    pub window_len: usize,
    pub sample_rate_hz: f64,
    pub noise_sd: f64,
    /// Reference tone amplitude A0; every state's tones scale with it.
    pub amplitude: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            operating_freq_hz: DEFAULT_OPERATING_FREQ_HZ,
            window_len: DEFAULT_WINDOW_LEN,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            noise_sd: DEFAULT_NOISE_SD,
            amplitude: BASE_AMPLITUDE,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.operating_freq_hz) {
            return Err(Error::InvalidParam("operating_freq_hz must be positive".into()));
        }
        if self.window_len < 2 {
            return Err(Error::InvalidParam("window_len must be at least 2".into()));
        }
        if !positive(self.sample_rate_hz) {
            return Err(Error::InvalidParam("sample_rate_hz must be positive".into()));
        }
        if !positive(self.noise_sd) {
            return Err(Error::InvalidParam("noise_sd must be positive".into()));
        }
        if !positive(self.amplitude) {
            return Err(Error::InvalidParam("amplitude must be positive".into()));
        }
        Ok(())
    }
}

struct Tone {
    multiple: f64,
    amp_x: f64,
    amp_y: f64,
}

fn tones(state: MachineState, a0: f64) -> Vec<Tone> {
    let harmonics = |one_x: f64, one_y: f64| {
        vec![
            Tone { multiple: 1.0, amp_x: one_x, amp_y: one_y },
            Tone { multiple: 2.0, amp_x: a0 / 4.0, amp_y: a0 / 4.0 },
            Tone { multiple: 3.0, amp_x: a0 / 4.0, amp_y: a0 / 4.0 },
        ]
    };
    match state {
        MachineState::Normal => harmonics(a0, a0),
        MachineState::Imbalance => harmonics(a0, 3.0 * a0),
        MachineState::Looseness => {
            let mut t = harmonics(0.4 * a0, 0.4 * a0);
            t.extend(LOOSENESS_MULTIPLES.iter().map(|&m| Tone {
                multiple: m,
                amp_x: a0 / 2.0,
                amp_y: a0 / 2.0,
            }));
            t
        }
        MachineState::PowerOff => Vec::new(),
    }
}

/// Synthesises one window of `state`. The timestamp is left at 0.
///
/// Captures are treated as shaft-synchronous: every tone starts at zero phase,
/// so windows of one state differ only by noise and temperature.
pub fn generate_window<R: Rng + ?Sized>(
    state: MachineState,
    params: &GeneratorParams,
    temp_c: f64,
    rng: &mut R,
) -> Result<SignalWindow> {
    params.validate()?;
    let noise_sd = match state {
        MachineState::PowerOff => params.noise_sd / 10.0,
        _ => params.noise_sd,
    };
    let tones = tones(state, params.amplitude);
    let w = 2.0 * PI * params.operating_freq_hz / params.sample_rate_hz;
    let mut x = Vec::with_capacity(params.window_len);
    let mut y = Vec::with_capacity(params.window_len);
    for n in 0..params.window_len {
        let (mut vx, mut vy) = (0.0, 0.0);
        for t in &tones {
            let phase = t.multiple * w * n as f64;
            vx += t.amp_x * phase.sin();
            vy += t.amp_y * phase.sin();
        }
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        x.push(vx + noise_sd * ex);
        y.push(vy + noise_sd * ey);
    }
    SignalWindow::new(
        0,
        params.sample_rate_hz,
        x,
        y,
        temp_c + state.temperature_offset_c(),
    )
}

/// A run of consecutive windows in one machine state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub state: MachineState,
    pub n_windows: usize,
    pub base_temp_c: f64,
    #[serde(default)]
    pub temp_drift_c: f64,
    /// Multiplier on the reference amplitude, e.g. a different load level or
    /// the machine before and after a repair.
    #[serde(default = "default_amplitude_scale")]
    pub amplitude_scale: f64,
}

fn default_amplitude_scale() -> f64 {
    1.0
}

impl Segment {
    pub fn new(state: MachineState, n_windows: usize, base_temp_c: f64, temp_drift_c: f64) -> Self {
        Segment {
            state,
            n_windows,
            base_temp_c,
            temp_drift_c,
            amplitude_scale: 1.0,
        }
    }

    pub fn with_amplitude_scale(self, amplitude_scale: f64) -> Self {
        Segment { amplitude_scale, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub segments: Vec<Segment>,
    #[serde(default = "default_operating_freq")]
    pub operating_freq_hz: f64,
    #[serde(default = "default_window_len")]
    pub window_len: usize,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_start")]
    pub start_timestamp: i64,
}

fn default_operating_freq() -> f64 {
    DEFAULT_OPERATING_FREQ_HZ
}
fn default_window_len() -> usize {
    DEFAULT_WINDOW_LEN
}
fn default_sample_rate() -> f64 {
    DEFAULT_SAMPLE_RATE_HZ
}
fn default_noise_sd() -> f64 {
    DEFAULT_NOISE_SD
}
fn default_start() -> i64 {
    DEFAULT_START_TIMESTAMP
}

impl SyntheticScenario {
    pub fn new(segments: Vec<Segment>, rng_seed: u64) -> Self {
        SyntheticScenario {
            segments,
            operating_freq_hz: DEFAULT_OPERATING_FREQ_HZ,
            window_len: DEFAULT_WINDOW_LEN,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            noise_sd: DEFAULT_NOISE_SD,
            rng_seed,
            start_timestamp: DEFAULT_START_TIMESTAMP,
        }
    }

    /// Six-regime timeline: baseline, looseness, repaired, imbalance, repaired
    /// again, powered off. The healthy regimes differ in vibration level and
    /// ambient temperature.
    pub fn six_state(windows_per_state: usize, rng_seed: u64) -> Self {
        let seg = |state, base_temp_c, scale| {
            Segment::new(state, windows_per_state, base_temp_c, 1.0).with_amplitude_scale(scale)
        };
        SyntheticScenario::new(
            vec![
                seg(MachineState::Normal, 30.0, 1.0),
                seg(MachineState::Looseness, 30.0, 1.0),
                seg(MachineState::Normal, 40.0, 0.6),
                seg(MachineState::Imbalance, 40.0, 1.0),
                seg(MachineState::Normal, 20.0, 1.5),
                seg(MachineState::PowerOff, 40.0, 1.0),
            ],
            rng_seed,
        )
    }

    pub fn params(&self) -> GeneratorParams {
        GeneratorParams {
            operating_freq_hz: self.operating_freq_hz,
            window_len: self.window_len,
            sample_rate_hz: self.sample_rate_hz,
            noise_sd: self.noise_sd,
            amplitude: BASE_AMPLITUDE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidParam("scenario needs at least one segment".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.n_windows == 0 {
                return Err(Error::InvalidParam(format!("segment {i} has no windows")));
            }
            if !(s.base_temp_c.is_finite() && s.temp_drift_c.is_finite()) {
                return Err(Error::NonFinite("segment temperature"));
            }
            if !(s.amplitude_scale > 0.0 && s.amplitude_scale.is_finite()) {
                return Err(Error::InvalidParam(format!("segment {i} amplitude_scale must be positive")));
            }
        }
        self.params().validate()
    }

    pub fn n_windows(&self) -> usize {
        self.segments.iter().map(|s| s.n_windows).sum()
    }
}

/// Windows of the whole scenario, 300 s apart, with their true states.
pub fn generate_scenario(scenario: &SyntheticScenario) -> Result<Vec<(SignalWindow, MachineState)>> {
    scenario.validate()?;
    let params = scenario.params();
    let mut rng = rng::stream(scenario.rng_seed);
    let mut out = Vec::with_capacity(scenario.n_windows());
    let mut ts = scenario.start_timestamp;
    for seg in &scenario.segments {
        let params = GeneratorParams {
            amplitude: params.amplitude * seg.amplitude_scale,
            ..params
        };
        for i in 0..seg.n_windows {
            let frac = if seg.n_windows > 1 {
                i as f64 / (seg.n_windows - 1) as f64
            } else {
                0.0
            };
            let temp = seg.base_temp_c + seg.temp_drift_c * frac;
            let mut w = generate_window(seg.state, &params, temp, &mut rng)?;
            w.timestamp = ts;
            out.push((w, seg.state));
            ts += WINDOW_SPACING_S;
        }
    }
    Ok(out)
}

pub const WINDOWS_CSV_HEADER: [&str; 6] = [
    "timestamp",
    "sample_rate_hz",
    "ambient_temp_c",
    "axis",
    "sample_index",
    "value",
];

/// Long-format window CSV: one row per (window, axis, sample).
pub fn write_windows_csv<W: Write>(windows: &[SignalWindow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(WINDOWS_CSV_HEADER).map_err(csv_err)?;
    for win in windows {
        let ts = win.timestamp.to_string();
        let fs = win.sample_rate_hz.to_string();
        let temp = win.ambient_temp_c.to_string();
        for axis in [Axis::X, Axis::Y] {
            let a = axis.to_string();
            for (i, v) in win.samples(axis).iter().enumerate() {
                w.write_record([&ts, &fs, &temp, &a, &i.to_string(), &v.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn read_windows_csv<R: Read>(input: R) -> Result<Vec<SignalWindow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(WINDOWS_CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected windows header {header:?}")));
    }
    let mut windows: Vec<SignalWindow> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let ts: i64 = parse_field(field(0), line, "timestamp")?;
        let fs: f64 = parse_field(field(1), line, "sample_rate_hz")?;
        let temp: f64 = parse_field(field(2), line, "ambient_temp_c")?;
        let axis = match field(3) {
            "X" => Axis::X,
            "Y" => Axis::Y,
            other => return Err(Error::Parse(format!("row {}: bad axis {other:?}", line + 2))),
        };
        let idx: usize = parse_field(field(4), line, "sample_index")?;
        let value: f64 = parse_field(field(5), line, "value")?;

        if windows.last().map(|w| w.timestamp) != Some(ts) {
            windows.push(SignalWindow {
                timestamp: ts,
                sample_rate_hz: fs,
                x_samples: Vec::new(),
                y_samples: Vec::new(),
                ambient_temp_c: temp,
            });
        }
        let win = windows.last_mut().expect("pushed above");
        let target = match axis {
            Axis::X => &mut win.x_samples,
            Axis::Y => &mut win.y_samples,
        };
        if idx != target.len() {
            return Err(Error::Parse(format!(
                "row {}: sample_index {idx} out of sequence",
                line + 2
            )));
        }
        target.push(value);
    }
    if windows.is_empty() {
        return Err(Error::Parse("windows CSV has 0 data rows".into()));
    }
    for w in &windows {
        w.validate()?;
    }
    Ok(windows)
}

fn parse_field<T: FromStr>(s: &str, line: usize, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("row {}: cannot parse {name} from {s:?}", line + 2)))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Ground-truth labels as `timestamp,state`.
pub fn write_truth_csv<W: Write>(rows: &[(i64, MachineState)], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["timestamp", "state"]).map_err(csv_err)?;
    for (ts, s) in rows {
        w.write_record([ts.to_string().as_str(), s.name()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn read_truth_csv<R: Read>(input: R) -> Result<Vec<(i64, MachineState)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let ts = parse_field(rec.get(0).unwrap_or(""), line, "timestamp")?;
        let state = rec.get(1).unwrap_or("").parse()?;
        out.push((ts, state));
    }
    Ok(out)
}
