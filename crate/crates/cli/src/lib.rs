//! Orchestration behind the `rotodiag` binary: run configuration, the six
//! pipeline stages, atomic artifact output and the run manifest.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod stages;

pub use artifacts::{ArtifactEntry, RunManifest};
pub use config::{InputSource, RunConfig};
pub use error::{CliError, ErrorCode};
pub use stages::{cmd_cluster, cmd_diagnose, cmd_factor, cmd_features, cmd_gen, cmd_pipeline, StageInputs};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "ROTODIAG_OUT_DIR";

/// Applies command-line overrides. A seed override also reseeds a synthetic
/// scenario so one number pins the whole run.
pub fn apply_overrides(cfg: &mut RunConfig, seed: Option<u64>, out_dir: Option<std::path::PathBuf>) {
    if let Some(seed) = seed {
        cfg.seed = seed;
        if let InputSource::Scenario(s) = &mut cfg.input {
            s.rng_seed = rotodiag_core::rng::labelled(seed, "gen");
        }
    }
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
}
