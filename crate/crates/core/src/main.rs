use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fser::config::PipelineConfig;
use fser::dataset::Corpus;
use fser::pipeline::{Outcome, Pipeline, PipelineError};

#[derive(Parser)]
#[command(
    name = "fser",
    version,
    about = "Speech emotion recognition from mel-spectrogram images"
)]
struct Cli {
    /// Dataset manifest CSV; relative paths inside it resolve against its directory
    #[arg(long, global = true, default_value = "manifest.csv")]
    manifest: PathBuf,
    /// `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides any config key, e.g. `--set epochs=50`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Skip peak normalization of the waveform
    #[arg(long, global = true)]
    no_peak_normalize: bool,
    /// Redo work whose outputs already exist
    #[arg(long, global = true)]
    force: bool,
    /// Also write each mel-spectrogram as CSV next to its image
    #[arg(long, global = true)]
    dump_mel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a manifest from the WAV files under a directory
    Index {
        /// emodb, emovo, savee, ravdess or other
        #[arg(long)]
        corpus: Corpus,
        dir: PathBuf,
    },
    /// Render a spectrogram image for every record
    Featurize,
    /// Assign stratified train/val/test splits
    Split,
    /// Append augmented copies of the train images
    Augment,
    /// Train the CNN and write a checkpoint and epoch log
    Train,
    /// Score the test split and write report CSVs
    Evaluate,
    /// Print the class distribution for WAV files
    Predict {
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
    },
    /// Print the effective configuration
    Config,
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        cfg.apply_text(kv, "--set")?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.no_peak_normalize {
        cfg.peak_normalize = false;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, PipelineError> {
    let cfg = effective_config(cli)?;
    if let Command::Config = cli.command {
        return Ok(Outcome {
            stdout: cfg.to_text(),
            failures: Vec::new(),
        });
    }
    let mut pipeline = Pipeline::new(&cli.manifest, cfg, cli.force)?;
    pipeline.dump_mel = cli.dump_mel;
    match &cli.command {
        Command::Index { corpus, dir } => pipeline.index(*corpus, dir),
        Command::Featurize => pipeline.featurize(),
        Command::Split => pipeline.split(),
        Command::Augment => pipeline.augment(),
        Command::Train => pipeline.train(),
        Command::Evaluate => pipeline.evaluate(),
        Command::Predict { wavs } => pipeline.predict(wavs),
        Command::Config => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
            if outcome.succeeded() {
                ExitCode::SUCCESS
            } else {
                eprint!("{}", outcome.failure_summary());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
