//! Spectrum indicators, threshold rules, and cluster-to-state mapping.
//!
//! The rules compare each window against a baseline taken from a period the
//! operator knows to be healthy:
//!
//! 1. broadband RMS collapsed: powered off;
//! 2. strong non-synchronous mid-band content with a weakened 1x line: looseness;
//! 3. 1x line grown well above baseline: imbalance;
//! 4. otherwise normal.
//!
//! Default thresholds were tuned against the synthetic generator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{fft_magnitude, Axis, MachineState, SignalWindow, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumIndicators {
    /// Largest magnitude within the harmonic tolerance of the running speed.
    pub one_x_amplitude: f64,
    /// Energy in the non-synchronous mid band over energy up to the band top.
    pub midband_nonsync_energy_ratio: f64,
    /// RMS over every magnitude bin.
    pub broadband_rms: f64,
    pub operating_freq_hz: f64,
}

/// Frequency layout of the indicators, in multiples of the running speed
/// except for the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub harmonic_tolerance_hz: f64,
    pub midband_lo_order: f64,
    pub midband_hi_order: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            harmonic_tolerance_hz: 1.5,
            midband_lo_order: 2.5,
            midband_hi_order: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosisThresholds {
    /// 1x amplitude relative to baseline that flags imbalance.
    pub imbalance_ratio: f64,
    pub looseness_energy_ratio: f64,
    /// Looseness also needs 1x below this fraction of baseline.
    pub looseness_1x_drop: f64,
    /// Broadband RMS below this fraction of baseline means powered off.
    pub poweroff_rms_fraction: f64,
}

impl Default for DiagnosisThresholds {
    fn default() -> Self {
        DiagnosisThresholds {
            imbalance_ratio: 2.0,
            looseness_energy_ratio: 0.35,
            looseness_1x_drop: 0.6,
            poweroff_rms_fraction: 0.1,
        }
    }
}

impl DiagnosisThresholds {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.imbalance_ratio > 1.0 && self.imbalance_ratio.is_finite()) {
            return Err(Error::InvalidParam("imbalance_ratio must exceed 1".into()));
        }
        if !unit(self.looseness_energy_ratio) || !unit(self.looseness_1x_drop) || !unit(self.poweroff_rms_fraction) {
            return Err(Error::InvalidParam(
                "looseness and power-off thresholds must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

pub fn indicators(spectrum: &Spectrum, operating_freq_hz: f64) -> Result<SpectrumIndicators> {
    indicators_with(spectrum, operating_freq_hz, &IndicatorConfig::default())
}

pub fn indicators_with(
    spectrum: &Spectrum,
    operating_freq_hz: f64,
    cfg: &IndicatorConfig,
) -> Result<SpectrumIndicators> {
    if !(operating_freq_hz > 0.0 && operating_freq_hz.is_finite()) {
        return Err(Error::InvalidParam("operating frequency must be positive".into()));
    }
    let top = cfg.midband_hi_order * operating_freq_hz;
    if spectrum.max_frequency() < top {
        return Err(Error::BandOutOfRange {
            max_hz: spectrum.max_frequency(),
            needed_hz: top,
        });
    }
    let tol = cfg.harmonic_tolerance_hz;
    let lo = cfg.midband_lo_order * operating_freq_hz;
    let near_harmonic = |f: f64| {
        let order = (f / operating_freq_hz).round().max(1.0);
        (f - order * operating_freq_hz).abs() <= tol
    };

    let mut one_x: f64 = 0.0;
    let (mut mid, mut total, mut all) = (0.0, 0.0, 0.0);
    for (k, &m) in spectrum.magnitudes.iter().enumerate() {
        let f = spectrum.bin_frequency(k);
        let e = m * m;
        all += e;
        if (f - operating_freq_hz).abs() <= tol {
            one_x = one_x.max(m);
        }
        if f <= top {
            total += e;
            if f > lo && f < top && !near_harmonic(f) {
                mid += e;
            }
        }
    }
    Ok(SpectrumIndicators {
        one_x_amplitude: one_x,
        midband_nonsync_energy_ratio: if total > 0.0 { mid / total } else { 0.0 },
        broadband_rms: (all / spectrum.magnitudes.len() as f64).sqrt(),
        operating_freq_hz,
    })
}

/// Indicators of one axis of a window.
pub fn window_indicators(
    window: &SignalWindow,
    axis: Axis,
    operating_freq_hz: f64,
    cfg: &IndicatorConfig,
) -> Result<SpectrumIndicators> {
    let spec = fft_magnitude(window.samples(axis), window.sample_rate_hz, axis)?;
    indicators_with(&spec, operating_freq_hz, cfg)
}

/// Field-wise mean of a set of indicators, used as the healthy reference.
pub fn baseline(indicators: &[SpectrumIndicators]) -> Result<SpectrumIndicators> {
    let n = indicators.len();
    if n == 0 {
        return Err(Error::InvalidParam("baseline needs at least one window".into()));
    }
    let nf = n as f64;
    Ok(SpectrumIndicators {
        one_x_amplitude: indicators.iter().map(|i| i.one_x_amplitude).sum::<f64>() / nf,
        midband_nonsync_energy_ratio: indicators.iter().map(|i| i.midband_nonsync_energy_ratio).sum::<f64>() / nf,
        broadband_rms: indicators.iter().map(|i| i.broadband_rms).sum::<f64>() / nf,
        operating_freq_hz: indicators[0].operating_freq_hz,
    })
}

/// First matching rule wins; see the module docs for the order.
pub fn classify_state(
    ind: &SpectrumIndicators,
    baseline: &SpectrumIndicators,
    th: &DiagnosisThresholds,
) -> MachineState {
    if ind.broadband_rms < th.poweroff_rms_fraction * baseline.broadband_rms
        || (ind.broadband_rms == 0.0 && baseline.broadband_rms == 0.0)
    {
        MachineState::PowerOff
    } else if ind.midband_nonsync_energy_ratio >= th.looseness_energy_ratio
        && ind.one_x_amplitude < th.looseness_1x_drop * baseline.one_x_amplitude
    {
        MachineState::Looseness
    } else if ind.one_x_amplitude >= th.imbalance_ratio * baseline.one_x_amplitude {
        MachineState::Imbalance
    } else {
        MachineState::Normal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub cluster: usize,
    pub state: MachineState,
    /// Share of the cluster's windows diagnosed as `state`.
    pub purity: f64,
    pub n_windows: usize,
    pub state_counts: BTreeMap<MachineState, usize>,
    /// Mean indicators of the cluster's windows, when supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<SpectrumIndicators>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStateMap {
    pub schema_version: u32,
    pub clusters: Vec<ClusterState>,
}

impl ClusterStateMap {
    pub fn get(&self, cluster: usize) -> Option<&ClusterState> {
        self.clusters.iter().find(|c| c.cluster == cluster)
    }

    /// Clusters whose modal state is `state`, most windows first.
    pub fn clusters_in_state(&self, state: MachineState) -> Vec<usize> {
        let mut v: Vec<&ClusterState> = self.clusters.iter().filter(|c| c.state == state).collect();
        v.sort_by(|a, b| b.n_windows.cmp(&a.n_windows).then(a.cluster.cmp(&b.cluster)));
        v.into_iter().map(|c| c.cluster).collect()
    }
}

/// Modal state and purity of each cluster; ties follow [`MachineState::ALL`].
pub fn map_clusters(labels: &[usize], states: &[MachineState]) -> Result<ClusterStateMap> {
    map_clusters_with_evidence(labels, states, None)
}

pub fn map_clusters_with_evidence(
    labels: &[usize],
    states: &[MachineState],
    evidence: Option<&[SpectrumIndicators]>,
) -> Result<ClusterStateMap> {
    if labels.len() != states.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: states.len(),
        });
    }
    if let Some(ev) = evidence {
        if ev.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: ev.len(),
            });
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    let mut clusters = Vec::with_capacity(members.len());
    for (cluster, rows) in members {
        let mut state_counts: BTreeMap<MachineState, usize> = BTreeMap::new();
        for &i in &rows {
            *state_counts.entry(states[i]).or_default() += 1;
        }
        let mut state = MachineState::Normal;
        let mut best = 0;
        for s in MachineState::ALL {
            let c = state_counts.get(&s).copied().unwrap_or(0);
            if c > best {
                best = c;
                state = s;
            }
        }
        let evidence = match evidence {
            Some(ev) => {
                let subset: Vec<SpectrumIndicators> = rows.iter().map(|&i| ev[i]).collect();
                Some(baseline(&subset)?)
            }
            None => None,
        };
        clusters.push(ClusterState {
            cluster,
            state,
            purity: best as f64 / rows.len() as f64,
            n_windows: rows.len(),
            state_counts,
            evidence,
        });
    }
    Ok(ClusterStateMap {
        schema_version: 1,
        clusters,
    })
}

/// One diagnosed window.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisRow {
    pub timestamp: i64,
    pub cluster: usize,
    pub indicators: SpectrumIndicators,
    pub state: MachineState,
}

/// `timestamp,cluster,one_x_amplitude,midband_ratio,broadband_rms,state`
pub fn diagnosis_report_csv(rows: &[DiagnosisRow]) -> String {
    let mut s = String::from("timestamp,cluster,one_x_amplitude,midband_ratio,broadband_rms,state\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.timestamp,
            r.cluster,
            r.indicators.one_x_amplitude,
            r.indicators.midband_nonsync_energy_ratio,
            r.indicators.broadband_rms,
            r.state
        ));
    }
    s
}
