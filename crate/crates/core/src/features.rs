//! Statistical features of vibration windows and z-score scaling.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{csv_err, fft_magnitude, Axis, SignalWindow, Spectrum};

pub const N_STATS: usize = 9;
pub const N_FEATURES: usize = 37;
pub const TEMPERATURE_INDEX: usize = 36;

/// Default frequency-domain band, wide enough to hold the 26.1 Hz running speed.
pub const DEFAULT_BAND_HZ: (f64, f64) = (0.0, 27.5);

/// Column names in canonical order: nine statistics for each of
/// `XAxisT`, `YAxisT`, `XAxisF`, `YAxisF`, then `Temperature`.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "MinXAxisT", "MaxXAxisT", "MedianXAxisT", "MeanXAxisT", "SdXAxisT",
    "KurtosisXAxisT", "SkewnessXAxisT", "RangeXAxisT", "RmsXAxisT",
    "MinYAxisT", "MaxYAxisT", "MedianYAxisT", "MeanYAxisT", "SdYAxisT",
    "KurtosisYAxisT", "SkewnessYAxisT", "RangeYAxisT", "RmsYAxisT",
    "MinXAxisF", "MaxXAxisF", "MedianXAxisF", "MeanXAxisF", "SdXAxisF",
    "KurtosisXAxisF", "SkewnessXAxisF", "RangeXAxisF", "RmsXAxisF",
    "MinYAxisF", "MaxYAxisF", "MedianYAxisF", "MeanYAxisF", "SdYAxisF",
    "KurtosisYAxisF", "SkewnessYAxisF", "RangeYAxisF", "RmsYAxisF",
    "Temperature",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 divisor).
    pub sd: f64,
    /// Excess kurtosis from population moments.
    pub kurtosis: f64,
    pub skewness: f64,
    pub range: f64,
    pub rms: f64,
}

impl SummaryStats {
    /// Values in feature-name order.
    pub fn to_array(&self) -> [f64; N_STATS] {
        [
            self.min,
            self.max,
            self.median,
            self.mean,
            self.sd,
            self.kurtosis,
            self.skewness,
            self.range,
            self.rms,
        ]
    }
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("statistics input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[n - 1];
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    let nf = n as f64;
    // Sums over the sorted copy so the result does not depend on input order.
    let mean = sorted.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for &v in &sorted {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        sq += v * v;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(SummaryStats {
        min,
        max,
        median,
        mean,
        sd,
        kurtosis,
        skewness,
        range: max - min,
        rms: (sq / nf).sqrt(),
    })
}

/// Statistics of the magnitude bins whose centre lies in `[lo, hi]`.
pub fn freq_band_stats(spectrum: &Spectrum, band_lo_hz: f64, band_hi_hz: f64) -> Result<SummaryStats> {
    if !(band_lo_hz < band_hi_hz) {
        return Err(Error::InvalidParam(format!(
            "band [{band_lo_hz}, {band_hi_hz}] is empty"
        )));
    }
    let bins: Vec<f64> = spectrum
        .magnitudes
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = spectrum.bin_frequency(*k);
            f >= band_lo_hz && f <= band_hi_hz
        })
        .map(|(_, &m)| m)
        .collect();
    if bins.len() < 2 {
        return Err(Error::EmptyBand {
            lo: band_lo_hz,
            hi: band_hi_hz,
            bins: bins.len(),
        });
    }
    summary_stats(&bins)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub timestamp: i64,
    pub values: [f64; N_FEATURES],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn temperature(&self) -> f64 {
        self.values[TEMPERATURE_INDEX]
    }
}

pub fn extract(window: &SignalWindow, band: (f64, f64)) -> Result<FeatureVector> {
    window.validate()?;
    let mut values = [0.0; N_FEATURES];
    let mut put = |group: usize, s: SummaryStats| {
        values[group * N_STATS..(group + 1) * N_STATS].copy_from_slice(&s.to_array());
    };
    put(0, summary_stats(&window.x_samples)?);
    put(1, summary_stats(&window.y_samples)?);
    for (g, axis) in [(2, Axis::X), (3, Axis::Y)] {
        let spec = fft_magnitude(window.samples(axis), window.sample_rate_hz, axis)?;
        put(g, freq_band_stats(&spec, band.0, band.1)?);
    }
    values[TEMPERATURE_INDEX] = window.ambient_temp_c;
    Ok(FeatureVector {
        timestamp: window.timestamp,
        values,
    })
}

/// Extracts every window in parallel; row order follows `windows`.
pub fn extract_all(windows: &[SignalWindow], band: (f64, f64)) -> Result<FeatureMatrix> {
    let rows = windows
        .par_iter()
        .map(|w| extract(w, band))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<FeatureVector>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParam("feature matrix needs at least one row".into()));
        }
        if rows.iter().any(|r| r.values.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("feature values"));
        }
        Ok(FeatureMatrix { rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn feature_names(&self) -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.timestamp).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    /// Dense n x 37 copy for the numeric routines.
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), N_FEATURES, |i, j| self.rows[i].values[j])
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
        header.push("timestamp");
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
            rec.push(r.timestamp.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let expected = FEATURE_NAMES.iter().copied().chain(std::iter::once("timestamp"));
        if header.iter().ne(expected) {
            return Err(Error::Parse("feature CSV header does not match the 37 canonical columns plus timestamp".into()));
        }
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let mut values = [0.0; N_FEATURES];
            for (j, v) in values.iter_mut().enumerate() {
                *v = rec[j]
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad {}", line + 2, FEATURE_NAMES[j])))?;
            }
            let timestamp = rec[N_FEATURES]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad timestamp", line + 2)))?;
            rows.push(FeatureVector { timestamp, values });
        }
        if rows.is_empty() {
            return Err(Error::Parse("feature CSV has 0 data rows".into()));
        }
        FeatureMatrix::new(rows)
    }
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// Sample standard deviations; 0 marks a constant column.
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &DMatrix<f64>, names: &[&str]) -> Result<Self> {
        let n = data.nrows();
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        let mut means = Vec::with_capacity(data.ncols());
        let mut sds = Vec::with_capacity(data.ncols());
        for col in data.column_iter() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            means.push(mean);
            sds.push(var.sqrt());
        }
        Ok(Standardizer {
            names: names.iter().map(|s| s.to_string()).collect(),
            means,
            sds,
        })
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.sds.len()).filter(|&j| self.sds[j] == 0.0).collect()
    }

    pub fn apply(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: data.ncols(),
            });
        }
        Ok(DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| {
            if self.sds[j] == 0.0 {
                0.0
            } else {
                (data[(i, j)] - self.means[j]) / self.sds[j]
            }
        }))
    }
}

pub fn fit_standardizer(matrix: &FeatureMatrix) -> Result<Standardizer> {
    Standardizer::fit(&matrix.to_dmatrix(), &FEATURE_NAMES)
}

pub fn apply_standardizer(standardizer: &Standardizer, matrix: &FeatureMatrix) -> Result<DMatrix<f64>> {
    standardizer.apply(&matrix.to_dmatrix())
}
