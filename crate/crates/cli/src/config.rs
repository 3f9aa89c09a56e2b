//! The JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use rotodiag_core::diagnosis::{DiagnosisThresholds, IndicatorConfig};
use rotodiag_core::features::{DEFAULT_BAND_HZ, N_FEATURES};
use rotodiag_core::forest::default_mtry_grid;
use rotodiag_core::signal::DEFAULT_OPERATING_FREQ_HZ;
use rotodiag_core::{Axis, EmConfig, SyntheticScenario};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Field reference printed by `--help`.
pub const CONFIG_HELP: &str = "\
CONFIG FILE (JSON, every field optional except `input`):
  input                  exactly one of
                           {\"scenario\": {...}}      synthetic scenario: segments [{state, n_windows,
                                                    base_temp_c, temp_drift_c, amplitude_scale}],
                                                    operating_freq_hz, window_len, sample_rate_hz,
                                                    noise_sd, rng_seed, start_timestamp
                           {\"windows_csv\": \"path\"}  recorded windows in long CSV format
  band_hz                [lo, hi] frequency band for spectral features (default [0, 27.5])
  standardize            z-score features before clustering (default true)
  k_range                [k_min, k_max] candidate cluster counts (default [2, 10])
  fixed_k                skip selection and use this k (default null)
  em.n_restarts          EM restarts per k (default 5)
  em.max_iter            EM iteration cap (default 500)
  em.rel_tol             relative log-likelihood tolerance (default 1e-8)
  em.reg_epsilon         covariance eigenvalue floor, relative to mean data variance (default 1e-6)
  em.kmeans_max_iter     k-means iterations for initialisation (default 100)
  operating_freq_hz      shaft speed for diagnosis when input is a windows CSV (default 26.1)
  diagnosis_axis         \"X\" or \"Y\" axis for spectrum indicators (default \"Y\")
  indicators.harmonic_tolerance_hz   half-width around harmonics (default 1.5)
  indicators.midband_lo_order        mid band lower edge in orders (default 2.5)
  indicators.midband_hi_order        mid band upper edge in orders (default 10)
  thresholds.imbalance_ratio         1x over baseline flagging imbalance (default 2.0)
  thresholds.looseness_energy_ratio  mid-band energy share flagging looseness (default 0.35)
  thresholds.looseness_1x_drop       looseness also needs 1x below this share of baseline (default 0.6)
  thresholds.poweroff_rms_fraction   RMS below this share of baseline means off (default 0.1)
  baseline_windows       [start, end) window indices of the healthy reference (default [0, 20])
  sample_cap             per-cluster row cap before the forest stage (default null = all rows)
  train_fraction         stratified train share (default 0.7)
  n_tree                 trees per forest (default 500)
  mtry_grid              m_try candidates (default [2, floor((d+1)/2), d])
  tuning_repeats         holdout repeats per m_try (default 5)
  n_permutations         shuffles per tree and feature for importance (default 1)
  seed                   master seed; stage seeds derive from it (default 0)
  out_dir                output directory (default \"out\"; ROTODIAG_OUT_DIR or --out override)
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    Scenario(SyntheticScenario),
    WindowsCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSource,
    pub band_hz: [f64; 2],
    pub standardize: bool,
    pub k_range: [usize; 2],
    pub fixed_k: Option<usize>,
    pub em: EmConfig,
    pub operating_freq_hz: f64,
    pub diagnosis_axis: Axis,
    pub indicators: IndicatorConfig,
    pub thresholds: DiagnosisThresholds,
    pub baseline_windows: [usize; 2],
    pub sample_cap: Option<usize>,
    pub train_fraction: f64,
    pub n_tree: usize,
    pub mtry_grid: Option<Vec<usize>>,
    pub tuning_repeats: usize,
    pub n_permutations: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: InputSource::Scenario(SyntheticScenario::six_state(60, 0)),
            band_hz: [DEFAULT_BAND_HZ.0, DEFAULT_BAND_HZ.1],
            standardize: true,
            k_range: [2, 10],
            fixed_k: None,
            em: EmConfig::default(),
            operating_freq_hz: DEFAULT_OPERATING_FREQ_HZ,
            diagnosis_axis: Axis::Y,
            indicators: IndicatorConfig::default(),
            thresholds: DiagnosisThresholds::default(),
            baseline_windows: [0, 20],
            sample_cap: None,
            train_fraction: 0.7,
            n_tree: 500,
            mtry_grid: None,
            tuning_repeats: 5,
            n_permutations: 1,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        // relative CSV inputs are resolved against the config file
        if let InputSource::WindowsCsv(p) = &mut cfg.input {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::config(m));
        if let InputSource::Scenario(s) = &self.input {
            s.validate().map_err(|e| CliError::config(format!("scenario: {e}")))?;
        }
        let [lo, hi] = self.band_hz;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("band_hz [{lo}, {hi}] must satisfy 0 <= lo < hi"));
        }
        let [k_min, k_max] = self.k_range;
        if k_min < 2 || k_max < k_min {
            return bad(format!("k_range [{k_min}, {k_max}] must satisfy 2 <= k_min <= k_max"));
        }
        if self.fixed_k == Some(0) {
            return bad("fixed_k must be at least 1".into());
        }
        if self.em.n_restarts == 0 || self.em.max_iter == 0 {
            return bad("em.n_restarts and em.max_iter must be positive".into());
        }
        if !(self.em.rel_tol > 0.0 && self.em.reg_epsilon > 0.0) {
            return bad("em.rel_tol and em.reg_epsilon must be positive".into());
        }
        if !(self.operating_freq_hz > 0.0 && self.operating_freq_hz.is_finite()) {
            return bad("operating_freq_hz must be positive".into());
        }
        self.thresholds
            .validate()
            .map_err(|e| CliError::config(format!("thresholds: {e}")))?;
        let [b0, b1] = self.baseline_windows;
        if b1 <= b0 {
            return bad(format!("baseline_windows [{b0}, {b1}] is empty"));
        }
        if self.sample_cap == Some(0) {
            return bad("sample_cap must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} must lie in (0, 1)", self.train_fraction));
        }
        if self.n_tree == 0 || self.tuning_repeats == 0 || self.n_permutations == 0 {
            return bad("n_tree, tuning_repeats and n_permutations must be positive".into());
        }
        if let Some(g) = &self.mtry_grid {
            if g.is_empty() || g.iter().any(|&m| m == 0 || m > N_FEATURES) {
                return bad(format!("mtry_grid {g:?} must be non-empty within [1, {N_FEATURES}]"));
            }
        }
        Ok(())
    }

    pub fn band(&self) -> (f64, f64) {
        (self.band_hz[0], self.band_hz[1])
    }

    pub fn mtry_grid(&self) -> Vec<usize> {
        self.mtry_grid.clone().unwrap_or_else(|| default_mtry_grid(N_FEATURES))
    }

    /// Shaft speed used by the diagnosis rules.
    pub fn diagnosis_freq_hz(&self) -> f64 {
        match &self.input {
            InputSource::Scenario(s) => s.operating_freq_hz,
            InputSource::WindowsCsv(_) => self.operating_freq_hz,
        }
    }
}
