//! Unsupervised fault diagnostics for rotating machinery.
//!
//! The crate is organised along the processing chain:
//!
//! * [`signal`]: raw two-axis vibration windows, one-sided amplitude spectra and
//!   a seeded generator of labelled machine-state scenarios.
//! * [`features`]: the 37-column statistical feature vector and z-score scaling.
//! * [`clustering`]: Gaussian mixture models fitted by EM, k-means initialisation,
//!   WSS / silhouette validity and cluster-count selection.
//! * [`diagnosis`]: spectrum indicators, threshold rules and cluster-to-state mapping.
//! * [`forest`]: random-forest classification, OOB error, kappa, `m_try` tuning and
//!   per-class permutation importance.
//!
//! Every stochastic operation takes an explicit seed; see [`rng`].

pub mod clustering;
pub mod diagnosis;
pub mod error;
pub mod features;
pub mod forest;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use clustering::{ClusterSelectionReport, EmConfig, GmmModel, Responsibilities};
pub use diagnosis::{ClusterStateMap, DiagnosisThresholds, IndicatorConfig, SpectrumIndicators};
pub use features::{FeatureMatrix, FeatureVector, Standardizer, SummaryStats, FEATURE_NAMES};
pub use forest::{ImportanceReport, RandomForest, TuningReport};
pub use signal::{Axis, MachineState, Segment, SignalWindow, Spectrum, SyntheticScenario};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
