//! `coaplab` command line: drive the CoAP DoS laboratory stage by stage
//! or end to end. Log verbosity comes from the COAPLAB_LOG environment
//! variable (error, warn, info, debug, trace).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coaplab::classify::ModelKind;
use coaplab::pipeline::{
    cmd_eval, cmd_features, cmd_generate, cmd_label, cmd_pipeline, cmd_select, cmd_train,
    PipelineConfig, PipelineError, RunManifest, SelectInput,
};

#[derive(Parser)]
#[command(
    name = "coaplab",
    version,
    about = "CoAP DoS traffic laboratory: generate, label, preprocess, select, train, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Pipeline/scenario configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario duration override, seconds.
    #[arg(long)]
    duration: Option<u64>,
    /// Seconds between coordinated bursts.
    #[arg(long)]
    attack_interval: Option<u64>,
    /// Malicious window threshold override (packets per window).
    #[arg(long)]
    threshold: Option<i64>,
    /// Comma-separated model list (nb,tree,forest,svm,lstm).
    #[arg(long)]
    models: Option<String>,
    /// Run genetic feature selection instead of the default mask.
    #[arg(long)]
    ga: bool,
    /// Test split fraction override.
    #[arg(long)]
    test_fraction: Option<f64>,
}

impl ConfigArgs {
    /// Precedence: flags over file over defaults.
    fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.scenario.rng_seed = seed;
        }
        if let Some(duration) = self.duration {
            config.scenario.duration = duration;
        }
        if let Some(interval) = self.attack_interval {
            config.scenario.attack_interval = interval;
        }
        if let Some(threshold) = self.threshold {
            config.threshold = threshold;
        }
        if let Some(fraction) = self.test_fraction {
            config.test_fraction = fraction;
        }
        if self.ga {
            config.run_ga = true;
        }
        if let Some(models) = &self.models {
            let parsed: Result<Vec<ModelKind>, String> =
                models.split(',').filter(|s| !s.is_empty()).map(str::parse).collect();
            config.models = parsed.map_err(PipelineError::InvalidConfig)?;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario and write capture.pcap plus attacks.json.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Window and label an existing capture.
    Label {
        /// Capture file.
        #[arg(long)]
        pcap: PathBuf,
        /// Attack log JSON.
        #[arg(long)]
        attack_log: PathBuf,
        /// Output NDJSON path.
        #[arg(long)]
        out: PathBuf,
        /// Window width in microseconds.
        #[arg(long, default_value_t = coaplab::windows::DEFAULT_WINDOW_WIDTH_US)]
        window_width_us: u64,
        #[arg(long, default_value_t = coaplab::windows::DEFAULT_PACKET_THRESHOLD)]
        threshold: i64,
        /// Skip the attack-log crosscheck.
        #[arg(long)]
        no_crosscheck: bool,
    },
    /// Build train/test tensors from a capture.
    Features {
        #[arg(long)]
        pcap: PathBuf,
        #[arg(long)]
        attack_log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Genetic feature selection over a capture or CSV table.
    Select {
        #[arg(long, requires = "attack_log", conflicts_with = "csv")]
        pcap: Option<PathBuf>,
        #[arg(long, requires = "pcap")]
        attack_log: Option<PathBuf>,
        /// Tokenized table with a trailing label column.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train models from a tensor file.
    Train {
        /// Training tensor (with .json sidecar alongside).
        #[arg(long)]
        train_tensor: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate a saved model against a tensor file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test_tensor: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full run: generate, label, features, optional GA, train, evaluate.
    Pipeline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Skip the attack-log crosscheck.
        #[arg(long)]
        no_crosscheck: bool,
    },
    /// Summarize a finished run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Generate { config, out } => {
            let cfg = config.resolve()?;
            let summary = cmd_generate(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Label { pcap, attack_log, out, window_width_us, threshold, no_crosscheck } => {
            let summary =
                cmd_label(&pcap, &attack_log, &out, window_width_us, threshold, !no_crosscheck)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Features { pcap, attack_log, out, config } => {
            let cfg = config.resolve()?;
            let summary = cmd_features(&pcap, &attack_log, &out, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Select { pcap, attack_log, csv, out, config } => {
            let cfg = config.resolve()?;
            let input = match (&pcap, &attack_log, &csv) {
                (Some(p), Some(a), None) => SelectInput::Capture { pcap: p, attack_log: a },
                (None, None, Some(c)) => SelectInput::Csv(c),
                _ => {
                    return Err(PipelineError::InvalidConfig(
                        "select needs either --pcap with --attack-log, or --csv".into(),
                    ))
                }
            };
            let report = cmd_select(input, &out, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Train { train_tensor, out, config } => {
            let cfg = config.resolve()?;
            let paths = cmd_train(&train_tensor, &out, &cfg)?;
            for path in paths {
                println!("{}", path.display());
            }
        }
        Command::Eval { model, test_tensor, out } => {
            let report = cmd_eval(&model, &test_tensor, &out)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Pipeline { config, out, no_crosscheck } => {
            let cfg = config.resolve()?;
            let report = cmd_pipeline(&cfg, &out, !no_crosscheck)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Report { run_dir } => {
            print_report(&run_dir)?;
        }
    }
    Ok(())
}

fn print_report(run_dir: &std::path::Path) -> Result<(), PipelineError> {
    let report: coaplab::pipeline::PipelineReport =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json"))?)?;
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json"))?)?;
    println!("run {} (seed {})", report.run_id, report.root_seed);
    println!(
        "windows: {} total, {} malicious, {} benign; train {} / test {}",
        report.dataset.windows,
        report.dataset.malicious_windows,
        report.dataset.benign_windows,
        report.dataset.train_windows,
        report.dataset.test_windows
    );
    if let Some(ga) = &report.ga {
        println!(
            "ga: best fitness {:.4}, selected {}",
            ga.best_fitness,
            ga.selected_columns.join(", ")
        );
    }
    println!("{:<8} {:>9} {:>6} {:>6} {:>6} {:>6}", "model", "accuracy", "tp", "fp", "fn", "tn");
    for m in &report.models {
        println!(
            "{:<8} {:>8.2}% {:>6} {:>6} {:>6} {:>6}",
            m.model, m.accuracy_pct, m.confusion.tp, m.confusion.fp, m.confusion.fn_, m.confusion.tn
        );
    }
    println!("artifacts: {}", manifest.artifacts.len());
    for entry in &manifest.artifacts {
        println!("  {}  {}", &entry.sha256[..12], entry.path);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("COAPLAB_LOG", "warn"),
    )
    .format_timestamp(None)
    .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
