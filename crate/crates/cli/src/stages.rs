//! The six subcommands. Each reads its inputs from explicit paths or from
//! the output directory, writes its artifacts atomically and records them in
//! the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rotodiag_core::clustering::{compact_labels, hard_assign, principal_projection, select_k_with};
use rotodiag_core::diagnosis::{
    baseline, classify_state, diagnosis_report_csv, map_clusters_with_evidence, window_indicators, DiagnosisRow,
};
use rotodiag_core::features::{extract_all, fit_standardizer, FeatureMatrix, FEATURE_NAMES};
use rotodiag_core::forest::{
    fit_forest, kappa, permutation_importance, predict_batch, sample_per_cluster_indices, stratified_split,
    tune_mtry, ConfusionMatrix,
};
use rotodiag_core::rng;
use rotodiag_core::signal::{generate_scenario, read_windows_csv, write_truth_csv, write_windows_csv};
use rotodiag_core::{SignalWindow, Standardizer};
use serde::Serialize;

use crate::artifacts::{read_file, ArtifactEntry, RunManifest, StageWriter, MANIFEST_FILE, SCHEMA_VERSION};
use crate::config::{InputSource, RunConfig};
use crate::error::CliError;

pub const WINDOWS_CSV: &str = "windows.csv";
pub const TRUTH_CSV: &str = "truth.csv";
pub const FEATURES_CSV: &str = "features.csv";
pub const STANDARDIZER_JSON: &str = "standardizer.json";
pub const MODEL_JSON: &str = "gmm_model.json";
pub const SELECTION_CSV: &str = "selection_report.csv";
pub const SELECTION_JSON: &str = "selection_summary.json";
pub const ASSIGNMENTS_CSV: &str = "assignments.csv";
pub const PROJECTION_CSV: &str = "projection.csv";
pub const DIAGNOSIS_CSV: &str = "diagnosis_report.csv";
pub const STATE_MAP_JSON: &str = "cluster_state_map.json";
pub const TUNING_CSV: &str = "tuning_report.csv";
pub const FOREST_JSON: &str = "forest.json";
pub const IMPORTANCE_CSV: &str = "importance.csv";
pub const FACTOR_JSON: &str = "factor_metrics.json";

/// Optional input locations; anything left `None` is read from the output
/// directory (or, for windows, from a `windows_csv` input source).
#[derive(Debug, Clone, Default)]
pub struct StageInputs {
    pub windows: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub assignments: Option<PathBuf>,
}

impl StageInputs {
    fn windows(&self, cfg: &RunConfig) -> PathBuf {
        match (&self.windows, &cfg.input) {
            (Some(p), _) => p.clone(),
            (None, InputSource::WindowsCsv(p)) => p.clone(),
            (None, InputSource::Scenario(_)) => cfg.out_dir.join(WINDOWS_CSV),
        }
    }

    fn features(&self, cfg: &RunConfig) -> PathBuf {
        self.features.clone().unwrap_or_else(|| cfg.out_dir.join(FEATURES_CSV))
    }

    fn assignments(&self, cfg: &RunConfig) -> PathBuf {
        self.assignments.clone().unwrap_or_else(|| cfg.out_dir.join(ASSIGNMENTS_CSV))
    }
}

/// Seed of one pipeline stage, derived from the master seed by name.
pub fn stage_seed(cfg: &RunConfig, stage: &str) -> u64 {
    rng::labelled(cfg.seed, stage)
}

fn finish(w: StageWriter<'_>, cfg: &RunConfig, t0: Instant) -> Result<Vec<ArtifactEntry>, CliError> {
    w.finish(cfg, t0.elapsed().as_secs_f64())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> rotodiag_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn load_windows(path: &Path) -> Result<Vec<SignalWindow>, CliError> {
    let bytes = read_file(path)?;
    read_windows_csv(bytes.as_slice()).map_err(|e| CliError::from(e).context(path.display()))
}

fn load_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    let bytes = read_file(path)?;
    FeatureMatrix::read_csv(bytes.as_slice()).map_err(|e| CliError::from(e).context(path.display()))
}

/// Reads `timestamp,cluster` rows.
pub fn load_assignments(path: &Path) -> Result<Vec<(i64, usize)>, CliError> {
    let bytes = read_file(path)?;
    let ctx = |m: String| CliError::parse(format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header = rdr.headers().map_err(|e| ctx(e.to_string()))?.clone();
    if header.iter().ne(["timestamp", "cluster"]) {
        return Err(ctx(format!("expected header timestamp,cluster, found {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ctx(e.to_string()))?;
        let ts = rec[0].parse().map_err(|_| ctx(format!("row {}: bad timestamp", i + 2)))?;
        let c: usize = rec[1].parse().map_err(|_| ctx(format!("row {}: bad cluster", i + 2)))?;
        if c == 0 {
            return Err(ctx(format!("row {}: clusters are numbered from 1", i + 2)));
        }
        out.push((ts, c));
    }
    if out.is_empty() {
        return Err(ctx("assignments CSV has 0 data rows".into()));
    }
    Ok(out)
}

/// Cluster labels aligned with `timestamps`, which must match row for row.
fn aligned_labels(timestamps: &[i64], assignments: &[(i64, usize)], what: &str) -> Result<Vec<usize>, CliError> {
    if timestamps.len() != assignments.len() {
        return Err(CliError::contract(format!(
            "{what} has {} rows but assignments have {}",
            timestamps.len(),
            assignments.len()
        )));
    }
    timestamps
        .iter()
        .zip(assignments)
        .enumerate()
        .map(|(i, (&t, &(ta, c)))| {
            if t == ta {
                Ok(c)
            } else {
                Err(CliError::contract(format!(
                    "row {i}: {what} timestamp {t} differs from assignment timestamp {ta}"
                )))
            }
        })
        .collect()
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<Vec<ArtifactEntry>, CliError> {
    let t0 = Instant::now();
    let InputSource::Scenario(scenario) = &cfg.input else {
        return Err(CliError::config("gen needs a scenario input, not a windows CSV"));
    };
    let generated = generate_scenario(scenario)?;
    let (windows, truth): (Vec<SignalWindow>, Vec<(i64, _)>) =
        generated.into_iter().map(|(w, s)| { let t = (w.timestamp, s); (w, t) }).unzip();
    let mut w = StageWriter::new(&cfg.out_dir, "gen");
    w.write(WINDOWS_CSV, &csv_bytes(|b| write_windows_csv(&windows, b))?)?;
    w.write(TRUTH_CSV, &csv_bytes(|b| write_truth_csv(&truth, b))?)?;
    finish(w, cfg, t0)
}

#[derive(Serialize)]
struct StandardizerFile<'a> {
    schema_version: u32,
    applied: bool,
    #[serde(flatten)]
    standardizer: &'a Standardizer,
}

pub fn cmd_features(cfg: &RunConfig, inputs: &StageInputs) -> Result<Vec<ArtifactEntry>, CliError> {
    let t0 = Instant::now();
    let windows = load_windows(&inputs.windows(cfg))?;
    let fm = extract_all(&windows, cfg.band())?;
    let mut w = StageWriter::new(&cfg.out_dir, "features");
    w.write(FEATURES_CSV, &csv_bytes(|b| fm.write_csv(b))?)?;
    if fm.rows.len() >= 2 {
        let st = fit_standardizer(&fm)?;
        w.write_json(
            STANDARDIZER_JSON,
            &StandardizerFile {
                schema_version: SCHEMA_VERSION,
                applied: cfg.standardize,
                standardizer: &st,
            },
        )?;
    }
    finish(w, cfg, t0)
}

/// The matrix clustering runs on: z-scores unless `standardize` is off.
pub fn clustering_matrix(cfg: &RunConfig, fm: &FeatureMatrix) -> Result<DMatrix<f64>, CliError> {
    let x = fm.to_dmatrix();
    if cfg.standardize {
        Ok(fit_standardizer(fm)?.apply(&x)?)
    } else {
        Ok(x)
    }
}

pub fn cmd_cluster(cfg: &RunConfig, inputs: &StageInputs) -> Result<Vec<ArtifactEntry>, CliError> {
    let t0 = Instant::now();
    let fm = load_features(&inputs.features(cfg))?;
    let data = clustering_matrix(cfg, &fm)?;
    let n = data.nrows();
    let [k_min, k_max] = cfg.k_range;
    let k_max = k_max.min(n);
    if k_max < k_min {
        return Err(CliError::contract(format!("{n} windows are too few for k_range {:?}", cfg.k_range)));
    }
    let (model, report) = select_k_with(&data, k_min, k_max, &cfg.em, stage_seed(cfg, "cluster"), cfg.fixed_k)?;
    let (labels, k_used) = compact_labels(&hard_assign(&model, &data)?);
    let ts = fm.timestamps();

    let mut assignments = String::from("timestamp,cluster\n");
    for (t, l) in ts.iter().zip(&labels) {
        assignments.push_str(&format!("{t},{l}\n"));
    }
    let proj = principal_projection(&data, 2);
    let mut projection = String::from("timestamp,cluster,pc1,pc2\n");
    for (i, (t, l)) in ts.iter().zip(&labels).enumerate() {
        let pc2 = if proj.ncols() > 1 { proj[(i, 1)] } else { 0.0 };
        projection.push_str(&format!("{t},{l},{},{pc2}\n", proj[(i, 0)]));
    }
    let summary = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "k_range": [k_min, k_max],
        "chosen_k": report.chosen_k,
        "clusters_used": k_used,
        "rule_used": report.rule_used,
        "failures": report.failures,
        "rows": report.rows,
    });

    let mut w = StageWriter::new(&cfg.out_dir, "cluster");
    let mut model_json = model.to_json(Some(cfg.em));
    model_json.push('\n');
    w.write(MODEL_JSON, model_json.as_bytes())?;
    w.write(SELECTION_CSV, report.to_csv().as_bytes())?;
    w.write_json(SELECTION_JSON, &summary)?;
    w.write(ASSIGNMENTS_CSV, assignments.as_bytes())?;
    w.write(PROJECTION_CSV, projection.as_bytes())?;
    finish(w, cfg, t0)
}

pub fn cmd_diagnose(cfg: &RunConfig, inputs: &StageInputs) -> Result<Vec<ArtifactEntry>, CliError> {
    let t0 = Instant::now();
    let windows = load_windows(&inputs.windows(cfg))?;
    let assignments = load_assignments(&inputs.assignments(cfg))?;
    let ts: Vec<i64> = windows.iter().map(|w| w.timestamp).collect();
    let labels = aligned_labels(&ts, &assignments, "windows CSV")?;
    let f_op = cfg.diagnosis_freq_hz();
    let indicators = windows
        .iter()
        .map(|w| window_indicators(w, cfg.diagnosis_axis, f_op, &cfg.indicators))
        .collect::<rotodiag_core::Result<Vec<_>>>()?;
    let [b0, b1] = cfg.baseline_windows;
    if b1 > indicators.len() {
        return Err(CliError::config(format!(
            "baseline_windows [{b0}, {b1}] exceeds the {} available windows",
            indicators.len()
        )));
    }
    let base = baseline(&indicators[b0..b1])?;
    let states: Vec<_> = indicators
        .iter()
        .map(|i| classify_state(i, &base, &cfg.thresholds))
        .collect();
    let rows: Vec<DiagnosisRow> = (0..windows.len())
        .map(|i| DiagnosisRow {
            timestamp: ts[i],
            cluster: labels[i],
            indicators: indicators[i],
            state: states[i],
        })
        .collect();
    let map = map_clusters_with_evidence(&labels, &states, Some(&indicators))?;

    let mut w = StageWriter::new(&cfg.out_dir, "diagnose");
    w.write(DIAGNOSIS_CSV, diagnosis_report_csv(&rows).as_bytes())?;
    w.write_json(STATE_MAP_JSON, &map)?;
    finish(w, cfg, t0)
}

#[derive(Debug, Serialize)]
struct FactorMetrics {
    schema_version: u32,
    best_m_try: usize,
    n_sampled: usize,
    n_train: usize,
    n_test: usize,
    oob_error: f64,
    test_accuracy: f64,
    test_kappa: f64,
    class_labels: Vec<usize>,
    confusion: Vec<Vec<u64>>,
}

fn rows_of(data: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), data.ncols(), |i, j| data[(idx[i], j)])
}

pub fn cmd_factor(cfg: &RunConfig, inputs: &StageInputs) -> Result<Vec<ArtifactEntry>, CliError> {
    let t0 = Instant::now();
    let fm = load_features(&inputs.features(cfg))?;
    let assignments = load_assignments(&inputs.assignments(cfg))?;
    let labels = aligned_labels(&fm.timestamps(), &assignments, "features CSV")?;
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let x = fm.to_dmatrix();

    let sampled = match cfg.sample_cap {
        Some(cap) => sample_per_cluster_indices(&labels, cap, stage_seed(cfg, "sample"))?,
        None => (0..labels.len()).collect(),
    };
    let xs = rows_of(&x, &sampled);
    let ls: Vec<usize> = sampled.iter().map(|&i| labels[i]).collect();

    let (train, test) = stratified_split(&ls, cfg.train_fraction, stage_seed(cfg, "split"))?;
    let x_train = rows_of(&xs, &train);
    let l_train: Vec<usize> = train.iter().map(|&i| ls[i]).collect();
    let x_test = rows_of(&xs, &test);
    let l_test: Vec<usize> = test.iter().map(|&i| ls[i]).collect();

    let tuning = tune_mtry(
        &x_train,
        &l_train,
        &names,
        &cfg.mtry_grid(),
        cfg.tuning_repeats,
        cfg.train_fraction,
        cfg.n_tree,
        stage_seed(cfg, "tune"),
    )?;
    let forest = fit_forest(&x_train, &l_train, &names, cfg.n_tree, tuning.best_m_try, stage_seed(cfg, "forest"))?;
    let predicted = predict_batch(&forest, &x_test)?;
    let cm = ConfusionMatrix::from_predictions(&forest.class_labels, &l_test, &predicted)?;
    let importance = permutation_importance(
        &forest,
        &x_train,
        &l_train,
        cfg.n_permutations,
        stage_seed(cfg, "importance"),
    )?;
    let metrics = FactorMetrics {
        schema_version: SCHEMA_VERSION,
        best_m_try: tuning.best_m_try,
        n_sampled: sampled.len(),
        n_train: train.len(),
        n_test: test.len(),
        oob_error: forest.oob_error,
        test_accuracy: cm.accuracy()?,
        test_kappa: kappa(&cm)?,
        class_labels: cm.class_labels.clone(),
        confusion: cm.counts.clone(),
    };

    let mut w = StageWriter::new(&cfg.out_dir, "factor");
    w.write(TUNING_CSV, tuning.to_csv().as_bytes())?;
    let mut forest_json = forest.to_json();
    forest_json.push('\n');
    w.write(FOREST_JSON, forest_json.as_bytes())?;
    w.write(IMPORTANCE_CSV, importance.to_csv().as_bytes())?;
    w.write_json(FACTOR_JSON, &metrics)?;
    finish(w, cfg, t0)
}

/// Every stage in order; returns the final manifest.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let inputs = StageInputs::default();
    if matches!(cfg.input, InputSource::Scenario(_)) {
        cmd_gen(cfg)?;
    }
    cmd_features(cfg, &inputs)?;
    cmd_cluster(cfg, &inputs)?;
    cmd_diagnose(cfg, &inputs)?;
    cmd_factor(cfg, &inputs)?;
    RunManifest::load(&cfg.out_dir.join(MANIFEST_FILE))
}
