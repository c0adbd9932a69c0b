//! Command-line front end: `synth`, `train`, `eval` and `rank` subcommands
//! over the library pipeline.
//!
//! Option precedence for `train` is flags over config-file values over
//! built-in defaults; every random draw descends from `--seed` through named
//! sub-streams, so identical invocations produce byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::agent::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::letor::{generate_synthetic, load_dataset, split_dataset, Dataset, FeatureScaler};
use crate::metrics::{evaluate_dataset, mean_ndcg_at_1, GainMode};
use crate::model_file::{load_model, save_model, ModelConfig};
use crate::substream_seed;

pub const RUN_CONFIG_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "deepqrank",
    version,
    about = "Deep Q-learning agent for listwise learning to rank"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic fully-ranked LETOR dataset
    Synth(SynthArgs),
    /// Split a dataset, fill the replay buffer and train an agent
    Train(TrainArgs),
    /// Produce a per-query NDCG report for a trained model
    Eval(EvalArgs),
    /// Write the documents of each query in model-ranked order
    Rank(RankArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of queries
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    queries: u64,
    /// Documents per query
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    docs: u64,
    /// Standard deviation of the Gaussian score jitter
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training dataset file (LETOR rows)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for model.json, model_online.json, loss.csv, ndcg.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run-config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    steps: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    buffer_episodes: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    eval_every: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    loss_window: Option<u64>,
    /// Reward log offset (>= 2)
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    position_offset: Option<u64>,
    /// Gain for validation NDCG: exp or linear
    #[arg(long, value_parser = parse_gain_mode)]
    gain_mode: Option<GainMode>,
    /// Fit a min-max feature scaler on the training split
    #[arg(long)]
    normalize: bool,
    /// Train/valid/test fractions, e.g. 0.8,0.1,0.1
    #[arg(long, value_parser = SplitSpec::from_str)]
    split: Option<SplitSpec>,
    /// Require distinct rank labels within each query
    #[arg(long)]
    strict_listwise: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Evaluation dataset file
    #[arg(long)]
    data: PathBuf,
    /// Report CSV path
    #[arg(short, long, default_value = "report.csv")]
    out: PathBuf,
    #[arg(long, value_parser = parse_gain_mode, default_value = "exp")]
    gain_mode: GainMode,
    #[arg(long)]
    strict_listwise: bool,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    /// Query file to rank (LETOR rows)
    #[arg(long)]
    data: PathBuf,
    /// Ranked output file
    #[arg(short, long)]
    out: PathBuf,
}

/// Train/valid/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec(pub f64, pub f64, pub f64);

impl FromStr for SplitSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(format!(
                "expected three comma-separated fractions, got `{s}`"
            ));
        }
        let mut values = [0.0; 3];
        for (v, p) in values.iter_mut().zip(&parts) {
            *v = p
                .trim()
                .parse()
                .map_err(|_| format!("`{p}` is not a number"))?;
        }
        Ok(SplitSpec(values[0], values[1], values[2]))
    }
}

fn parse_gain_mode(s: &str) -> std::result::Result<GainMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// On-disk run configuration. Versioned; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    version: u32,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    steps: Option<u64>,
    batch_size: Option<u64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    tau: Option<f64>,
    buffer_episodes: Option<u64>,
    seed: Option<u64>,
    eval_every: Option<u64>,
    loss_window: Option<u64>,
    position_offset: Option<u64>,
    gain_mode: Option<String>,
    normalize: Option<bool>,
    split: Option<[f64; 3]>,
    strict_listwise: Option<bool>,
}

/// Fully resolved training run: defaults, then config file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub train: TrainConfig,
    pub normalize: bool,
    pub split: SplitSpec,
    pub strict_listwise: bool,
}

fn load_run_config_file(path: &Path) -> Result<RunConfigFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: RunConfigFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if file.version != RUN_CONFIG_VERSION {
        return Err(Error::Config(format!(
            "unsupported config version {} (expected {RUN_CONFIG_VERSION})",
            file.version
        )));
    }
    Ok(file)
}

fn resolve_run_config(args: &TrainArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => load_run_config_file(path)?,
        None => RunConfigFile {
            version: RUN_CONFIG_VERSION,
            ..RunConfigFile::default()
        },
    };

    let defaults = TrainConfig::default();
    let gain_mode = match (&args.gain_mode, &file.gain_mode) {
        (Some(m), _) => *m,
        (None, Some(s)) => s.parse()?,
        (None, None) => defaults.gain_mode,
    };
    let split = match (&args.split, &file.split) {
        (Some(s), _) => *s,
        (None, Some([a, b, c])) => SplitSpec(*a, *b, *c),
        (None, None) => SplitSpec(0.8, 0.1, 0.1),
    };

    let pick_u64 = |flag: Option<u64>, cfg: Option<u64>, default: u64| -> u64 {
        flag.or(cfg).unwrap_or(default)
    };

    let train = TrainConfig {
        steps: pick_u64(args.steps, file.steps, defaults.steps as u64) as usize,
        batch_size: pick_u64(args.batch_size, file.batch_size, defaults.batch_size as u64)
            as usize,
        alpha: args.alpha.or(file.alpha).unwrap_or(defaults.alpha),
        gamma: args.gamma.or(file.gamma).unwrap_or(defaults.gamma),
        tau: args.tau.or(file.tau).unwrap_or(defaults.tau),
        buffer_episodes: pick_u64(
            args.buffer_episodes,
            file.buffer_episodes,
            defaults.buffer_episodes as u64,
        ) as usize,
        seed: pick_u64(args.seed, file.seed, defaults.seed),
        eval_every: pick_u64(args.eval_every, file.eval_every, defaults.eval_every as u64)
            as usize,
        loss_window: pick_u64(
            args.loss_window,
            file.loss_window,
            defaults.loss_window as u64,
        ) as usize,
        position_offset: pick_u64(
            args.position_offset,
            file.position_offset,
            u64::from(defaults.position_offset),
        ) as u32,
        gain_mode,
    };

    let data = args
        .data
        .clone()
        .or(file.data)
        .ok_or_else(|| Error::Config("no dataset given: pass --data or set it in --config".into()))?;
    let out = args
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("deepqrank_out"));
    let normalize = args.normalize || file.normalize.unwrap_or(false);
    let strict_listwise = args.strict_listwise || file.strict_listwise.unwrap_or(false);

    Ok(RunConfig {
        data,
        out,
        train,
        normalize,
        split,
        strict_listwise,
    })
}

/// Parses argv and runs the selected subcommand.
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Rank(args) => cmd_rank(&args),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let dataset = generate_synthetic(
        args.queries as usize,
        args.docs as usize,
        args.noise,
        args.seed,
    )?;
    dataset.write_letor_file(&args.out)?;
    println!(
        "wrote {} rows across {} queries to {}",
        dataset.num_documents(),
        dataset.num_queries(),
        args.out.display()
    );
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = resolve_run_config(args)?;
    let dataset = load_dataset(&cfg.data, cfg.strict_listwise)?;
    // the test split stays untouched; point `deepqrank eval` at held-out data
    let (mut train_ds, mut valid_ds, test_ds) = split_dataset(
        &dataset,
        (cfg.split.0, cfg.split.1, cfg.split.2),
        substream_seed(cfg.train.seed, "split"),
    )?;
    println!(
        "split {} queries into {}/{}/{} (train/valid/test)",
        dataset.num_queries(),
        train_ds.num_queries(),
        valid_ds.num_queries(),
        test_ds.num_queries()
    );

    let scaler = if cfg.normalize {
        let scaler = FeatureScaler::fit(&train_ds)?;
        train_ds = scaler.transform(&train_ds);
        valid_ds = scaler.transform(&valid_ds);
        Some(scaler)
    } else {
        None
    };

    let outcome = train(&train_ds, &valid_ds, &cfg.train)?;

    fs::create_dir_all(&cfg.out).map_err(|source| Error::Io {
        path: cfg.out.clone(),
        source,
    })?;
    let model_config = ModelConfig {
        alpha: cfg.train.alpha,
        gamma: cfg.train.gamma,
        tau: cfg.train.tau,
        position_offset: cfg.train.position_offset,
        seed: cfg.train.seed,
    };
    let model_path = cfg.out.join("model.json");
    save_model(&outcome.model, scaler.as_ref(), &model_config, &model_path)?;
    save_model(
        &outcome.online,
        scaler.as_ref(),
        &model_config,
        cfg.out.join("model_online.json"),
    )?;

    let mut loss_csv = Vec::new();
    outcome
        .trace
        .write_loss_csv(&mut loss_csv)
        .expect("vec write");
    write_file(&cfg.out.join("loss.csv"), &loss_csv)?;
    let mut ndcg_csv = Vec::new();
    outcome
        .trace
        .write_ndcg_csv(&mut ndcg_csv)
        .expect("vec write");
    write_file(&cfg.out.join("ndcg.csv"), &ndcg_csv)?;

    let final_ndcg = mean_ndcg_at_1(&outcome.model, &valid_ds, cfg.train.gain_mode)?;
    println!("model written to {}", model_path.display());
    println!("final validation mean NDCG@1 ({}): {final_ndcg}", cfg.train.gain_mode);
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let loaded = load_model(&args.model)?;
    let mut dataset = load_dataset(&args.data, args.strict_listwise)?;
    if let Some(scaler) = &loaded.scaler {
        dataset = scaler.transform(&dataset);
    }
    let report = evaluate_dataset(&loaded.network, &dataset, args.gain_mode)?;

    let mut csv = Vec::new();
    report.write_csv(&mut csv).expect("vec write");
    print!("{}", String::from_utf8_lossy(&csv));
    write_file(&args.out, &csv)?;
    println!(
        "mean NDCG@1 ({}) over {} queries: {}",
        args.gain_mode,
        report.rows.len(),
        report.mean_ndcg_at_1
    );
    Ok(())
}

fn cmd_rank(args: &RankArgs) -> Result<()> {
    let loaded = load_model(&args.model)?;
    let text = fs::read_to_string(&args.data).map_err(|source| Error::Io {
        path: args.data.clone(),
        source,
    })?;

    // keep the original text of every row so output lines are verbatim
    let mut raw_lines = Vec::new();
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record =
            crate::letor::parse_letor_line(line, records.len()).map_err(|e| match e {
                Error::MalformedLine { reason, .. } => Error::MalformedLine {
                    line: lineno + 1,
                    reason,
                },
                other => other,
            })?;
        raw_lines.push(line.to_string());
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dataset = Dataset::from_records(records, args.data.to_string_lossy())?;
    let scored = match &loaded.scaler {
        Some(scaler) => scaler.transform(&dataset),
        None => dataset,
    };

    let mut out = String::new();
    for group in scored.groups() {
        for (pos, doc_index) in crate::agent::get_ranking(&loaded.network, group)
            .into_iter()
            .enumerate()
        {
            out.push_str(&format!("{}\t{}\n", pos + 1, raw_lines[doc_index]));
        }
    }
    write_file(&args.out, out.as_bytes())?;
    println!(
        "ranked {} documents across {} queries into {}",
        scored.num_documents(),
        scored.num_queries(),
        args.out.display()
    );
    Ok(())
}
