//! `riskrnn` command line: `generate`, `train`, `eval`, `infer`, `riskmap`.
//!
//! Every command accepts `--config FILE`, `--seed N`, `--variant V`,
//! `--out PATH` and trailing `--section.key value` overrides.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use riskrnn_core::model::Variant;

pub use commands::{cmd_eval, cmd_generate, cmd_infer, cmd_riskmap, cmd_train};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<riskrnn_core::Error> for CliError {
    fn from(e: riskrnn_core::Error) -> Self {
        match e {
            riskrnn_core::Error::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.into()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "riskrnn",
    version,
    about = "Agent-centric accident anticipation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file with [data], [scenario], [model], [train], [eval], [riskmap] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for both scenario generation and training.
    #[arg(long)]
    pub seed: Option<u64>,
    /// RA, RAI, L-RA, L-RAI (train also accepts `all`).
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides as `--section.key value` (or `--key value` when unambiguous).
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write train/val/test splits (default directory: data.dir).
    Generate(#[command(flatten)] Common),
    /// Train one variant or `all`; writes <variant>.model and <variant>.log.csv (default out: runs).
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate models on the test split (default out: eval).
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory of <variant>.model files.
        #[arg(long, default_value = "runs")]
        models: PathBuf,
        /// Explicit model files; replaces --models.
        #[arg(long = "model")]
        model: Vec<PathBuf>,
        /// Also write one PGM risk map per test video.
        #[arg(long)]
        riskmaps: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Per-frame predictions for one video as CSV (stdout unless --out).
    Infer {
        #[arg(long)]
        model: PathBuf,
        /// Dataset file (default: <data.dir>/test.jsonl).
        #[arg(long)]
        split: Option<PathBuf>,
        /// Video id or index.
        #[arg(long)]
        video: String,
        #[command(flatten)]
        common: Common,
    },
    /// PGM risk map of one frame (default: the peak-risk frame).
    Riskmap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        video: String,
        #[arg(long)]
        frame: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

/// Splits `--key value` / `--key=value` tokens into pairs.
pub fn parse_overrides(tokens: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let key = tok
            .strip_prefix("--")
            .ok_or_else(|| CliError::Config(format!("unexpected argument {tok:?}")))?;
        match key.split_once('=') {
            Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Config(format!("missing value for --{key}")))?;
                pairs.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(pairs)
}

impl Common {
    /// Merges defaults, the config file and flags (in that order of precedence).
    pub fn load(&self, variant_applies: bool) -> Result<RunConfig, CliError> {
        let mut pairs = parse_overrides(&self.overrides)?;
        if let Some(seed) = self.seed {
            pairs.push(("scenario.seed".into(), seed.to_string()));
            pairs.push(("train.seed".into(), seed.to_string()));
        }
        if variant_applies {
            if let Some(v) = &self.variant {
                pairs.push(("variant".into(), format!("{v:?}")));
            }
        }
        RunConfig::load(self.config.as_deref(), &pairs)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.load(true)?;
            let out = common.out.clone().unwrap_or_else(|| cfg.data.dir.clone());
            for s in cmd_generate(&cfg, &out)? {
                println!(
                    "{}: {} videos ({} positive, {} negative)",
                    s.split,
                    s.videos,
                    s.positives,
                    s.videos - s.positives
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Train { data, common } => {
            let all = common
                .variant
                .as_deref()
                .is_some_and(|v| v.eq_ignore_ascii_case("all"));
            let cfg = common.load(!all)?;
            let variants = if all {
                Variant::ALL.to_vec()
            } else {
                vec![cfg.variant()?]
            };
            let data = data.unwrap_or_else(|| cfg.data.dir.clone());
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
            for (variant, outcome) in cmd_train(&cfg, &data, &out, &variants)? {
                println!(
                    "{variant}: {} epochs, best epoch {}",
                    outcome.log.len(),
                    outcome.best_epoch
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Eval {
            data,
            models,
            model,
            riskmaps,
            common,
        } => {
            let cfg = common.load(true)?;
            let data = data.unwrap_or_else(|| cfg.data.dir.clone());
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("eval"));
            let files = if model.is_empty() {
                commands::models_in(&models)
            } else {
                model
            };
            let result = cmd_eval(&cfg, &data, &files, &out, riskmaps)?;
            print!("{}", commands::ablation_table(&result.report.per_variant));
            println!("wrote {}", out.display());
        }
        Command::Infer {
            model,
            split,
            video,
            common,
        } => {
            let cfg = common.load(true)?;
            let split = split.unwrap_or_else(|| commands::split_path(&cfg.data.dir, "test"));
            let csv = cmd_infer(&cfg, &model, &split, &video)?;
            match &common.out {
                Some(path) => std::fs::write(path, csv)
                    .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::Riskmap {
            model,
            split,
            video,
            frame,
            common,
        } => {
            let cfg = common.load(true)?;
            let split = split.unwrap_or_else(|| commands::split_path(&cfg.data.dir, "test"));
            let map = cmd_riskmap(&cfg, &model, &split, &video, frame)?;
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{video}.pgm")));
            std::fs::write(&out, map.to_pgm())
                .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", out.display()))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
