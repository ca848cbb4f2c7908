//! End-to-end orchestration: generate, label, preprocess, select,
//! train, and evaluate, writing every artifact plus a checksummed run
//! manifest into one output directory.
//!
//! All randomness flows from the configured root seed, split per stage,
//! so identical configuration reproduces identical artifacts.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Display;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::capture::{
    dataset_stats, read_attack_log, read_pcap, write_attack_log, write_pcap, AttackLogFile,
};
use crate::classify::{
    evaluate, forest_fit, load_model, lstm_fit, nb_fit, save_model, stratified_split_indices,
    svm_fit, tree_fit, write_confusion_csv, EvalReport, FeatureDataset, ForestConfig, LstmConfig,
    ModelFile, ModelKind, SvmConfig, TrainedModel, TreeConfig,
};
use crate::features::{
    default_selected_mask, extract_features, frobenius_normalize, pad_windows, project_selected,
    read_tensor, tokenize, tokenize_frozen, write_tensor, FeatureMask, FeatureSchema,
    TensorSidecar, TokenVocabulary, WindowTensor,
};
use crate::ga::{run_ga, write_ga_report, GaConfig, GaReport};
use crate::scenario::{run_scenario, ScenarioConfig};
use crate::seed::derive_seed;
use crate::windows::{
    crosscheck_labels, label_dataset, write_labeled_ndjson, LabeledWindow, Label,
    DEFAULT_PACKET_THRESHOLD, DEFAULT_WINDOW_WIDTH_US,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label crosscheck found {0} disagreements")]
    Crosscheck(usize),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn stage<T, E: Display>(name: &'static str, result: Result<T, E>) -> Result<T, PipelineError> {
    result.map_err(|e| PipelineError::Stage { stage: name, message: e.to_string() })
}

/// Full run configuration. Scenario fields sit at the top level, so a
/// plain scenario JSON is also a valid pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    pub window_width_us: u64,
    pub threshold: i64,
    pub test_fraction: f64,
    pub models: Vec<ModelKind>,
    pub run_ga: bool,
    pub ga: GaConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub svm: SvmConfig,
    pub lstm: LstmConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            window_width_us: DEFAULT_WINDOW_WIDTH_US,
            threshold: DEFAULT_PACKET_THRESHOLD,
            test_fraction: 0.2,
            models: ModelKind::ALL.to_vec(),
            run_ga: false,
            ga: GaConfig::default(),
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
            lstm: LstmConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn root_seed(&self) -> u64 {
        self.scenario.rng_seed
    }

    /// Per-stage seeds derived from the root.
    pub fn stage_seeds(&self) -> BTreeMap<String, u64> {
        let root = self.root_seed();
        ["split", "ga", "forest", "svm", "lstm"]
            .into_iter()
            .map(|tag| (tag.to_string(), derive_seed(root, tag)))
            .collect()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

/// Run record: config snapshot, seeds, stage timings, and a checksum
/// for every artifact the run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub root_seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub config: serde_json::Value,
    pub stages: Vec<StageTiming>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl RunManifest {
    fn new(config: &PipelineConfig) -> Result<Self, PipelineError> {
        let snapshot = serde_json::to_value(config)?;
        let run_id = sha256_hex(serde_json::to_string(&snapshot)?.as_bytes())[..12].to_string();
        Ok(Self {
            run_id,
            root_seed: config.root_seed(),
            stage_seeds: config.stage_seeds(),
            config: snapshot,
            stages: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    fn record_artifact(&mut self, out_dir: &Path, path: &Path) -> Result<(), PipelineError> {
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        self.artifacts.push(ArtifactEntry {
            path: rel.to_string_lossy().into_owned(),
            sha256: sha256_hex(&fs::read(path)?),
        });
        Ok(())
    }

    fn write(&self, out_dir: &Path) -> Result<PathBuf, PipelineError> {
        let path = out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub pcap_path: PathBuf,
    pub attack_log_path: PathBuf,
    pub total_packets: usize,
    pub attack_packets: usize,
    pub attack_fraction: f64,
    pub attack_events: usize,
}

/// Generate the scenario capture: `capture.pcap`, `attacks.json`, and
/// `manifest.json` under `out_dir`.
pub fn cmd_generate(
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<GenerateSummary, PipelineError> {
    if config.scenario.duration == 0 {
        return Err(PipelineError::InvalidConfig("duration must be positive".into()));
    }
    stage("generate", config.scenario.validate())?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(config)?;

    let started = Instant::now();
    let output = stage("generate", run_scenario(&config.scenario))?;
    let pcap_path = out_dir.join("capture.pcap");
    let log_path = out_dir.join("attacks.json");
    stage("generate", write_pcap(&output.packets, &pcap_path))?;
    stage("generate", write_attack_log(&output.attack_log, &log_path))?;
    manifest.stages.push(StageTiming {
        name: "generate".into(),
        millis: started.elapsed().as_millis(),
    });
    manifest.record_artifact(out_dir, &pcap_path)?;
    manifest.record_artifact(out_dir, &log_path)?;
    manifest.write(out_dir)?;

    let malicious = config.scenario.attacker_ips();
    let stats = stage("generate", dataset_stats(&output.packets, &malicious))?;
    log::info!(
        "generated {} packets ({} attacker-sourced) across {} bursts",
        stats.total,
        stats.attack_requests,
        output.attack_log.len()
    );
    Ok(GenerateSummary {
        pcap_path,
        attack_log_path: log_path,
        total_packets: stats.total as usize,
        attack_packets: stats.attack_requests as usize,
        attack_fraction: stats.attack_fraction(),
        attack_events: output.attack_log.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelSummary {
    pub windows: usize,
    pub malicious: usize,
    pub benign: usize,
    pub disagreements: usize,
}

fn log_malicious_ips(log: &AttackLogFile) -> HashSet<Ipv4Addr> {
    log.events.iter().map(|e| e.attacker_ip).collect()
}

/// Label a capture into windows and export NDJSON. When `crosscheck`
/// is set, disagreement with the attack log is an error.
pub fn cmd_label(
    pcap_path: &Path,
    attack_log_path: &Path,
    out_path: &Path,
    width_us: u64,
    threshold: i64,
    crosscheck: bool,
) -> Result<LabelSummary, PipelineError> {
    let records = stage("label", read_pcap(pcap_path))?;
    let log = stage("label", read_attack_log(attack_log_path))?;
    let malicious_ips = log_malicious_ips(&log);
    let labeled = stage("label", label_dataset(&records, &malicious_ips, width_us, threshold))?;
    stage("label", write_labeled_ndjson(&labeled, out_path))?;
    let malicious = labeled.iter().filter(|lw| lw.label == Label::Malicious).count();
    let report = crosscheck_labels(&labeled, &log, &malicious_ips);
    let summary = LabelSummary {
        windows: labeled.len(),
        malicious,
        benign: labeled.len() - malicious,
        disagreements: report.disagreements.len(),
    };
    if crosscheck && !report.is_empty() {
        return Err(PipelineError::Crosscheck(report.disagreements.len()));
    }
    Ok(summary)
}

/// Tokenized per-packet table over the full schema, with window labels
/// inherited by every packet. This is the table the GA selects over.
pub struct PacketTable {
    pub columns: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
}

pub fn build_packet_table(labeled: &[LabeledWindow]) -> Result<PacketTable, PipelineError> {
    let schema = FeatureSchema::canonical();
    let mut vocab = TokenVocabulary::new(&schema.kinds());
    let mut x = Vec::new();
    let mut y = Vec::new();
    for lw in labeled {
        for packet in &lw.window.packets {
            let row = extract_features(packet, &schema);
            let tokens = stage("select", tokenize(&[row], &mut vocab))?;
            x.extend(tokens);
            y.push(lw.label);
        }
    }
    Ok(PacketTable { columns: schema.names(), x, y })
}

/// Write the packet table as CSV: named feature columns plus a final
/// `label` column.
pub fn write_packet_csv(table: &PacketTable, path: &Path) -> Result<(), PipelineError> {
    let mut text = String::new();
    text.push_str(&table.columns.join(","));
    text.push_str(",label\n");
    for (row, label) in table.x.iter().zip(&table.y) {
        for v in row {
            text.push_str(&format!("{v},"));
        }
        text.push_str(match label {
            Label::Benign => "benign\n",
            Label::Malicious => "malicious\n",
        });
    }
    fs::write(path, text)?;
    Ok(())
}

/// Read a CSV in the [`write_packet_csv`] layout.
pub fn read_packet_csv(path: &Path) -> Result<PacketTable, PipelineError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| PipelineError::InvalidConfig("empty csv".into()))?;
    let mut columns: Vec<String> = header.split(',').map(str::to_string).collect();
    if columns.last().map(String::as_str) != Some("label") {
        return Err(PipelineError::InvalidConfig("csv must end with a label column".into()));
    }
    columns.pop();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() + 1 {
            return Err(PipelineError::InvalidConfig(format!(
                "csv line {} has {} cells, expected {}",
                lineno + 2,
                cells.len(),
                columns.len() + 1
            )));
        }
        let row: Result<Vec<f64>, _> = cells[..columns.len()]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect();
        x.push(row.map_err(|e| {
            PipelineError::InvalidConfig(format!("csv line {}: {e}", lineno + 2))
        })?);
        y.push(match *cells.last().unwrap() {
            "malicious" | "1" => Label::Malicious,
            _ => Label::Benign,
        });
    }
    Ok(PacketTable { columns, x, y })
}

/// Feature-stage output: padded, normalized train/test tensors.
pub struct FeatureStage {
    pub train: WindowTensor,
    pub test: WindowTensor,
    pub vocabulary: TokenVocabulary,
    pub columns: Vec<String>,
    pub sequence_len: usize,
    pub dropped_empty_windows: usize,
}

/// Split labeled windows, build the vocabulary on the training side
/// only, tokenize, pad both sides to the global maximum length, and
/// normalize each window. Empty windows carry no packets and are
/// dropped before tensor building.
pub fn build_feature_tensors(
    labeled: &[LabeledWindow],
    mask: &FeatureMask,
    test_fraction: f64,
    split_seed: u64,
) -> Result<FeatureStage, PipelineError> {
    let schema = FeatureSchema::canonical();
    let projected_schema = stage("features", schema.project(mask))?;
    let non_empty: Vec<&LabeledWindow> =
        labeled.iter().filter(|lw| !lw.window.packets.is_empty()).collect();
    let dropped_empty_windows = labeled.len() - non_empty.len();
    if non_empty.is_empty() {
        return Err(PipelineError::InvalidConfig("no non-empty windows to featurize".into()));
    }

    let labels: Vec<Label> = non_empty.iter().map(|lw| lw.label).collect();
    let (train_idx, test_idx) =
        stage("features", stratified_split_indices(&labels, test_fraction, split_seed))?;

    let rows_of = |lw: &LabeledWindow| -> Result<Vec<crate::features::RawFeatureRow>, PipelineError> {
        lw.window
            .packets
            .iter()
            .map(|p| {
                let row = extract_features(p, &schema);
                stage("features", project_selected(&row, mask))
            })
            .collect()
    };

    let mut vocabulary = TokenVocabulary::new(&projected_schema.kinds());
    let mut tokenize_side = |indices: &[usize], frozen: bool| -> Result<WindowTensor, PipelineError> {
        let mut windows = Vec::with_capacity(indices.len());
        let mut side_labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let rows = rows_of(non_empty[i])?;
            let tokens = if frozen {
                stage("features", tokenize_frozen(&rows, &vocabulary))?
            } else {
                stage("features", tokenize(&rows, &mut vocabulary))?
            };
            windows.push(tokens);
            side_labels.push(labels[i]);
        }
        Ok(WindowTensor { windows, labels: side_labels })
    };

    let train_ragged = tokenize_side(&train_idx, false)?;
    let test_ragged = tokenize_side(&test_idx, true)?;

    let width = mask.popcount();
    let pad_row = vec![0.0f64; width];
    let target = train_ragged.max_rows().max(test_ragged.max_rows());
    let normalize_all = |t: WindowTensor| -> Result<WindowTensor, PipelineError> {
        let padded = stage("features", pad_windows(&t, &pad_row, target))?;
        let windows: Result<Vec<_>, PipelineError> = padded
            .windows
            .iter()
            .map(|w| stage("features", frobenius_normalize(w)))
            .collect();
        Ok(WindowTensor { windows: windows?, labels: padded.labels })
    };
    let train = normalize_all(train_ragged)?;
    let test = normalize_all(test_ragged)?;

    Ok(FeatureStage {
        train,
        test,
        vocabulary,
        columns: projected_schema.names(),
        sequence_len: target,
        dropped_empty_windows,
    })
}

fn write_feature_stage(
    out_dir: &Path,
    stage_out: &FeatureStage,
) -> Result<(PathBuf, PathBuf), PipelineError> {
    let train_path = out_dir.join("train.tensor");
    let test_path = out_dir.join("test.tensor");
    for (path, tensor) in [(&train_path, &stage_out.train), (&test_path, &stage_out.test)] {
        let sidecar = TensorSidecar {
            labels: tensor.labels.clone(),
            columns: stage_out.columns.clone(),
            vocabulary: stage_out.vocabulary.clone(),
        };
        stage("features", write_tensor(path, tensor, &sidecar))?;
    }
    Ok((train_path, test_path))
}

fn dataset_from_tensor(tensor: &WindowTensor) -> Result<FeatureDataset, PipelineError> {
    stage(
        "train",
        FeatureDataset::new(tensor.windows.clone(), tensor.labels.clone()),
    )
}

fn fit_one(
    kind: ModelKind,
    train: &FeatureDataset,
    config: &PipelineConfig,
) -> Result<TrainedModel, PipelineError> {
    let root = config.root_seed();
    let flat = train.flattened();
    let model = match kind {
        ModelKind::Nb => TrainedModel::Nb(stage("train", nb_fit(&flat, &train.labels))?),
        ModelKind::Tree => {
            TrainedModel::Tree(stage("train", tree_fit(&flat, &train.labels, &config.tree))?)
        }
        ModelKind::Forest => {
            let cfg = ForestConfig { seed: derive_seed(root, "forest"), ..config.forest };
            TrainedModel::Forest(stage("train", forest_fit(&flat, &train.labels, &cfg))?)
        }
        ModelKind::Svm => {
            let cfg = SvmConfig { seed: derive_seed(root, "svm"), ..config.svm };
            TrainedModel::Svm(stage("train", svm_fit(&flat, &train.labels, &cfg))?)
        }
        ModelKind::Lstm => {
            let cfg = LstmConfig { seed: derive_seed(root, "lstm"), ..config.lstm };
            TrainedModel::Lstm(stage("train", lstm_fit(&train.windows, &train.labels, &cfg))?)
        }
    };
    Ok(model)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub windows: usize,
    pub malicious_windows: usize,
    pub benign_windows: usize,
    pub dropped_empty_windows: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub feature_columns: usize,
    pub sequence_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub run_id: String,
    pub root_seed: u64,
    pub dataset: DatasetSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaReport>,
    pub models: Vec<EvalReport>,
}

/// The whole pipeline: generate, label (with crosscheck), optional GA
/// selection, feature tensors, then train and evaluate every requested
/// model. Writes `report.json` and `manifest.json` plus all stage
/// artifacts under `out_dir`.
pub fn cmd_pipeline(
    config: &PipelineConfig,
    out_dir: &Path,
    crosscheck: bool,
) -> Result<PipelineReport, PipelineError> {
    if config.scenario.duration == 0 {
        return Err(PipelineError::InvalidConfig("duration must be positive".into()));
    }
    if config.models.is_empty() {
        return Err(PipelineError::InvalidConfig("no models requested".into()));
    }
    stage("generate", config.scenario.validate())?;
    fs::create_dir_all(out_dir)?;
    fs::create_dir_all(out_dir.join("models"))?;
    let mut manifest = RunManifest::new(config)?;
    let mut timer = Instant::now();
    let mut tick = |manifest: &mut RunManifest, name: &str| {
        manifest
            .stages
            .push(StageTiming { name: name.to_string(), millis: timer.elapsed().as_millis() });
        timer = Instant::now();
    };

    // generate
    let output = stage("generate", run_scenario(&config.scenario))?;
    let pcap_path = out_dir.join("capture.pcap");
    let log_path = out_dir.join("attacks.json");
    stage("generate", write_pcap(&output.packets, &pcap_path))?;
    stage("generate", write_attack_log(&output.attack_log, &log_path))?;
    tick(&mut manifest, "generate");
    log::info!("generate: {} packets, {} bursts", output.packets.len(), output.attack_log.len());

    // label
    let malicious_ips = config.scenario.attacker_ips();
    let labeled = stage(
        "label",
        label_dataset(&output.packets, &malicious_ips, config.window_width_us, config.threshold),
    )?;
    let labels_path = out_dir.join("labels.ndjson");
    stage("label", write_labeled_ndjson(&labeled, &labels_path))?;
    let log = stage("label", AttackLogFile::new(output.attack_log.clone()))?;
    let check = crosscheck_labels(&labeled, &log, &malicious_ips);
    if crosscheck && !check.is_empty() {
        return Err(PipelineError::Crosscheck(check.disagreements.len()));
    }
    let malicious_windows = labeled.iter().filter(|lw| lw.label == Label::Malicious).count();
    tick(&mut manifest, "label");
    log::info!("label: {} windows, {} malicious", labeled.len(), malicious_windows);

    // optional GA selection over the per-packet table
    let schema = FeatureSchema::canonical();
    let mut ga_report = None;
    let mask = if config.run_ga {
        let table = build_packet_table(&labeled)?;
        let csv_path = out_dir.join("packets.csv");
        write_packet_csv(&table, &csv_path)?;
        let ga_cfg = GaConfig {
            rng_seed: derive_seed(config.root_seed(), "ga"),
            ..config.ga
        };
        let result = stage("select", run_ga(&table.x, &table.y, &ga_cfg))?;
        let report = GaReport::new(&result, &ga_cfg, &table.columns);
        let report_path = out_dir.join("ga_report.json");
        stage("select", write_ga_report(&report_path, &report))?;
        manifest.record_artifact(out_dir, &csv_path)?;
        manifest.record_artifact(out_dir, &report_path)?;
        tick(&mut manifest, "select");
        log::info!("select: best fitness {:.4}", result.best_fitness);
        ga_report = Some(report);
        result.best_mask
    } else {
        default_selected_mask(&schema)
    };

    // features
    let feature_stage = build_feature_tensors(
        &labeled,
        &mask,
        config.test_fraction,
        derive_seed(config.root_seed(), "split"),
    )?;
    let (train_path, test_path) = write_feature_stage(out_dir, &feature_stage)?;
    tick(&mut manifest, "features");
    log::info!(
        "features: {} train / {} test windows, sequence length {}",
        feature_stage.train.windows.len(),
        feature_stage.test.windows.len(),
        feature_stage.sequence_len
    );

    // train + evaluate
    let train = dataset_from_tensor(&feature_stage.train)?;
    let test = dataset_from_tensor(&feature_stage.test)?;
    let mut reports = Vec::new();
    for kind in &config.models {
        let model = fit_one(*kind, &train, config)?;
        let model_path = out_dir.join("models").join(format!("{}.json", kind.name()));
        let file = ModelFile {
            model,
            seed: config.root_seed(),
            config: serde_json::to_value(config)?,
        };
        stage("train", save_model(&model_path, &file))?;
        manifest.record_artifact(out_dir, &model_path)?;

        let cm = stage("eval", evaluate(&file.model, &test))?;
        let csv_path = out_dir.join("models").join(format!("{}_confusion.csv", kind.name()));
        stage("eval", write_confusion_csv(&csv_path, &cm))?;
        manifest.record_artifact(out_dir, &csv_path)?;
        let report = EvalReport::new(kind.name(), config.root_seed(), cm);
        log::info!("eval: {} accuracy {:.2}%", kind.name(), report.accuracy_pct);
        reports.push(report);
    }
    tick(&mut manifest, "train+eval");

    let report = PipelineReport {
        run_id: manifest.run_id.clone(),
        root_seed: config.root_seed(),
        dataset: DatasetSummary {
            windows: labeled.len(),
            malicious_windows,
            benign_windows: labeled.len() - malicious_windows,
            dropped_empty_windows: feature_stage.dropped_empty_windows,
            train_windows: feature_stage.train.windows.len(),
            test_windows: feature_stage.test.windows.len(),
            feature_columns: feature_stage.columns.len(),
            sequence_len: feature_stage.sequence_len,
        },
        ga: ga_report,
        models: reports,
    };
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;

    for path in [&pcap_path, &log_path, &labels_path, &train_path, &test_path, &report_path] {
        manifest.record_artifact(out_dir, path)?;
    }
    manifest.write(out_dir)?;
    Ok(report)
}

/// Standalone feature extraction from existing capture artifacts.
pub fn cmd_features(
    pcap_path: &Path,
    attack_log_path: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<DatasetSummary, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let records = stage("features", read_pcap(pcap_path))?;
    let log = stage("features", read_attack_log(attack_log_path))?;
    let malicious_ips = log_malicious_ips(&log);
    let labeled = stage(
        "features",
        label_dataset(&records, &malicious_ips, config.window_width_us, config.threshold),
    )?;
    let schema = FeatureSchema::canonical();
    let mask = default_selected_mask(&schema);
    let feature_stage = build_feature_tensors(
        &labeled,
        &mask,
        config.test_fraction,
        derive_seed(config.root_seed(), "split"),
    )?;
    write_feature_stage(out_dir, &feature_stage)?;
    let malicious_windows = labeled.iter().filter(|lw| lw.label == Label::Malicious).count();
    Ok(DatasetSummary {
        windows: labeled.len(),
        malicious_windows,
        benign_windows: labeled.len() - malicious_windows,
        dropped_empty_windows: feature_stage.dropped_empty_windows,
        train_windows: feature_stage.train.windows.len(),
        test_windows: feature_stage.test.windows.len(),
        feature_columns: feature_stage.columns.len(),
        sequence_len: feature_stage.sequence_len,
    })
}

/// Standalone GA selection from capture artifacts or a CSV table.
pub fn cmd_select(
    input: SelectInput<'_>,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<GaReport, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let table = match input {
        SelectInput::Capture { pcap, attack_log } => {
            let records = stage("select", read_pcap(pcap))?;
            let log = stage("select", read_attack_log(attack_log))?;
            let malicious_ips = log_malicious_ips(&log);
            let labeled = stage(
                "select",
                label_dataset(
                    &records,
                    &malicious_ips,
                    config.window_width_us,
                    config.threshold,
                ),
            )?;
            let table = build_packet_table(&labeled)?;
            write_packet_csv(&table, &out_dir.join("packets.csv"))?;
            table
        }
        SelectInput::Csv(path) => read_packet_csv(path)?,
    };
    let ga_cfg = GaConfig { rng_seed: derive_seed(config.root_seed(), "ga"), ..config.ga };
    let result = stage("select", run_ga(&table.x, &table.y, &ga_cfg))?;
    let report = GaReport::new(&result, &ga_cfg, &table.columns);
    stage("select", write_ga_report(&out_dir.join("ga_report.json"), &report))?;
    Ok(report)
}

pub enum SelectInput<'a> {
    Capture { pcap: &'a Path, attack_log: &'a Path },
    Csv(&'a Path),
}

/// Standalone training from a tensor file; returns model paths.
pub fn cmd_train(
    train_tensor: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let (tensor, _) = stage("train", read_tensor(train_tensor))?;
    let train = dataset_from_tensor(&tensor)?;
    let mut paths = Vec::new();
    for kind in &config.models {
        let model = fit_one(*kind, &train, config)?;
        let path = out_dir.join(format!("{}.json", kind.name()));
        let file = ModelFile {
            model,
            seed: config.root_seed(),
            config: serde_json::to_value(config)?,
        };
        stage("train", save_model(&path, &file))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Standalone evaluation of a saved model against a tensor file.
pub fn cmd_eval(
    model_path: &Path,
    test_tensor: &Path,
    out_dir: &Path,
) -> Result<EvalReport, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let file = stage("eval", load_model(model_path))?;
    let (tensor, _) = stage("eval", read_tensor(test_tensor))?;
    let test = dataset_from_tensor(&tensor)?;
    let cm = stage("eval", evaluate(&file.model, &test))?;
    let name = file.model.kind().name();
    stage(
        "eval",
        write_confusion_csv(&out_dir.join(format!("{name}_confusion.csv")), &cm),
    )?;
    let report = EvalReport::new(name, file.seed, cm);
    fs::write(
        out_dir.join(format!("{name}_eval.json")),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> PipelineConfig {
        PipelineConfig {
            scenario: ScenarioConfig { duration: 1300, ..Default::default() },
            models: vec![ModelKind::Nb, ModelKind::Tree],
            ..Default::default()
        }
    }

    #[test]
    fn scenario_json_parses_as_pipeline_config() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"duration": 120, "rng_seed": 7}"#).unwrap();
        assert_eq!(cfg.scenario.duration, 120);
        assert_eq!(cfg.scenario.rng_seed, 7);
        assert_eq!(cfg.threshold, DEFAULT_PACKET_THRESHOLD);
        assert_eq!(cfg.models.len(), 5);
    }

    #[test]
    fn generate_writes_deterministic_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            scenario: ScenarioConfig { duration: 120, ..Default::default() },
            ..Default::default()
        };
        let a = cmd_generate(&cfg, &dir.path().join("a")).unwrap();
        let b = cmd_generate(&cfg, &dir.path().join("b")).unwrap();
        assert_eq!(
            sha256_hex(&fs::read(&a.pcap_path).unwrap()),
            sha256_hex(&fs::read(&b.pcap_path).unwrap())
        );
        let manifest: RunManifest = serde_json::from_str(
            &fs::read_to_string(dir.path().join("a").join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.artifacts.len(), 2);
        assert!(manifest.artifacts.iter().any(|e| e.path == "capture.pcap"));
    }

    #[test]
    fn zero_duration_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            scenario: ScenarioConfig { duration: 0, ..Default::default() },
            ..Default::default()
        };
        assert!(matches!(
            cmd_generate(&cfg, dir.path()),
            Err(PipelineError::InvalidConfig(_))
        ));
    }

    #[test]
    fn label_command_round_trips_capture_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        let gen = cmd_generate(&cfg, dir.path()).unwrap();
        let labels_path = dir.path().join("labels.ndjson");
        let summary = cmd_label(
            &gen.pcap_path,
            &gen.attack_log_path,
            &labels_path,
            cfg.window_width_us,
            cfg.threshold,
            true,
        )
        .unwrap();
        assert_eq!(summary.disagreements, 0);
        assert_eq!(summary.malicious, 3); // bursts at 0, 600, 1200
        assert_eq!(summary.windows, summary.malicious + summary.benign);
    }

    #[test]
    fn csv_table_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let table = PacketTable {
            columns: vec!["a".into(), "b".into()],
            x: vec![vec![1.0, 2.0], vec![3.5, -1.0]],
            y: vec![Label::Benign, Label::Malicious],
        };
        let path = dir.path().join("t.csv");
        write_packet_csv(&table, &path).unwrap();
        let back = read_packet_csv(&path).unwrap();
        assert_eq!(back.columns, table.columns);
        assert_eq!(back.x, table.x);
        assert_eq!(back.y, table.y);
    }
}
