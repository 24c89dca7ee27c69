//! Command-line interface.

use std::fs;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use reviewranker_core::corpus::deduplicate;
use reviewranker_core::{PipelineConfig, SynonymMap};
use serde::Deserialize;

use crate::corpus_io::{load_corpus, load_reviews, write_corpus, Format};
use crate::labelserve::{self, LabelPool, LabelService, DEFAULT_SHARED_FRACTION};
use crate::run::{load_synonyms, run_parallel, RunReport};
use crate::scores::export_scores;
use crate::stats::CorpusStats;

#[derive(Debug, Parser)]
#[command(name = "reviewranker", version, about = "Confidence scores for labeled code reviews")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the three models under k-fold cross-validation and write one
    /// confidence score per review.
    Score(ScoreArgs),
    /// Summarize a labeled corpus.
    Stats(StatsArgs),
    /// Run the labeling service.
    LabelServe(ServeArgs),
    /// Write the resolved labels of a label-service data directory as a corpus.
    ExportLabels(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Scores CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Run report (JSON). Defaults to the output path with `.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Settings file, `key = value` lines or a JSON object. Flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Settings that may come from flags or a config file.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Number of folds [default: 10]
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for fold assignment and training [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden layer sizes, e.g. `64,32`.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Balance operation classes across folds.
    #[arg(long)]
    #[serde(default)]
    pub stratify: bool,
    /// Drop reviews whose text repeats an earlier one before scoring.
    #[arg(long)]
    #[serde(default)]
    pub dedup: bool,
    /// Synonym groups file (one group per line, canonical word first).
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
}

impl Overrides {
    /// `self` on top of `base`.
    fn over(self, base: Overrides) -> Overrides {
        Overrides {
            k: self.k.or(base.k),
            seed: self.seed.or(base.seed),
            epochs: self.epochs.or(base.epochs),
            hidden: self.hidden.or(base.hidden),
            dropout: self.dropout.or(base.dropout),
            lr: self.lr.or(base.lr),
            batch_size: self.batch_size.or(base.batch_size),
            stratify: self.stratify || base.stratify,
            dedup: self.dedup || base.dedup,
            synonyms: self.synonyms.or(base.synonyms),
        }
    }

    fn pipeline_config(&self) -> PipelineConfig {
        let mut config = PipelineConfig::default();
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.stratify = self.stratify;
        let train = &mut config.train;
        if let Some(epochs) = self.epochs {
            train.epochs = epochs;
        }
        if let Some(hidden) = &self.hidden {
            train.hidden_sizes = hidden.clone();
        }
        if let Some(dropout) = self.dropout {
            train.dropout_rate = dropout;
        }
        if let Some(lr) = self.lr {
            train.learning_rate = lr;
        }
        if let Some(batch) = self.batch_size {
            train.batch_size = batch;
        }
        config
    }

    fn synonym_map(&self) -> anyhow::Result<SynonymMap> {
        match &self.synonyms {
            Some(path) => Ok(load_synonyms(path)?),
            None => Ok(SynonymMap::builtin()),
        }
    }
}

/// Reads a settings file: a JSON object, or `key = value` lines with `#`
/// comments. Keys match the long flag names (`-` or `_`).
pub fn read_config_file(path: &Path) -> anyhow::Result<Overrides> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let parsed = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        parse_key_values(&text)
    };
    parsed.with_context(|| format!("invalid config file {}", path.display()))
}

fn parse_key_values(text: &str) -> anyhow::Result<Overrides> {
    let mut map = serde_json::Map::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", n + 1);
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let json = match key.as_str() {
            "synonyms" => serde_json::Value::String(value.to_string()),
            "hidden" => serde_json::Value::Array(
                value
                    .split(',')
                    .map(|v| v.trim().parse::<u64>().map(Into::into))
                    .collect::<Result<_, _>>()
                    .with_context(|| format!("line {}: `hidden` expects sizes like 64,32", n + 1))?,
            ),
            _ => serde_json::from_str(value).with_context(|| format!("line {}: bad value for `{key}`", n + 1))?,
        };
        map.insert(key, json);
    }
    Ok(serde_json::from_value(serde_json::Value::Object(map))?)
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Data directory for the review pool and the label log.
    #[arg(long, env = "REVIEWRANKER_DATA")]
    pub data: PathBuf,
    /// Reviews to label; needed the first time a data directory is used.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Labeler names, comma separated; needed together with --input.
    #[arg(long, value_delimiter = ',')]
    pub labelers: Vec<String>,
    /// Fraction of reviews given to every labeler.
    #[arg(long, default_value_t = DEFAULT_SHARED_FRACTION)]
    pub shared_fraction: f64,
    /// Seed for the assignment.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8080, value_parser = clap::value_parser!(u16).range(1..))]
    pub port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    /// Built frontend to serve at `/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, env = "REVIEWRANKER_DATA")]
    pub data: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn check_output_dir(path: &Path) -> anyhow::Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("cannot write {}: directory {} does not exist", path.display(), parent.display());
    }
    Ok(())
}

fn default_report_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.report.json"))
}

pub fn cmd_score(args: ScoreArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Overrides::default(),
    };
    let settings = args.overrides.over(file);
    let config = settings.pipeline_config();
    config.validate().context("invalid settings")?;
    let report_path = args.report.clone().unwrap_or_else(|| default_report_path(&args.output));
    check_output_dir(&args.output)?;
    check_output_dir(&report_path)?;
    let synonyms = settings.synonym_map()?;

    let loaded = load_corpus(&args.input, args.format)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    let corpus = if settings.dedup {
        deduplicate(&loaded.corpus)
    } else {
        loaded.corpus
    };
    log::info!("scoring {} reviews with {} folds", corpus.len(), config.k);
    let output = run_parallel(&corpus, &synonyms, config.clone(), None)?;
    if !output.empty_reviews.is_empty() {
        log::warn!(
            "{} reviews have no words left after preprocessing: {}",
            output.empty_reviews.len(),
            output.empty_reviews.join(", ")
        );
    }
    export_scores(&output.records, &args.output)?;
    RunReport::new(&config, &output).save(&report_path)?;
    Ok(())
}

pub fn cmd_stats(args: StatsArgs) -> anyhow::Result<String> {
    let synonyms = match &args.synonyms {
        Some(path) => load_synonyms(path)?,
        None => SynonymMap::builtin(),
    };
    let loaded = load_corpus(&args.input, args.format)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    let stats = CorpusStats::compute(&loaded.corpus, &synonyms);
    Ok(if args.json {
        serde_json::to_string_pretty(&stats)? + "\n"
    } else {
        stats.to_string()
    })
}

pub fn open_label_service(args: &ServeArgs) -> anyhow::Result<LabelService> {
    let pool = match &args.input {
        Some(input) => {
            if args.labelers.is_empty() {
                bail!("--labelers is required together with --input");
            }
            Some(LabelPool {
                reviews: load_reviews(input, args.format)?,
                labelers: args.labelers.clone(),
                shared_fraction: args.shared_fraction,
                seed: args.seed,
            })
        }
        None => None,
    };
    let (service, warnings) = LabelService::open(&args.data, pool)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(service)
}

pub fn cmd_label_serve(args: ServeArgs) -> anyhow::Result<()> {
    let service = open_label_service(&args)?;
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    runtime.block_on(async move {
        let listener = labelserve::http::bind(addr).await?;
        eprintln!("label service listening on http://{}", listener.local_addr()?);
        let state = Arc::new(RwLock::new(service));
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        labelserve::http::serve(listener, state, args.assets, shutdown).await?;
        Ok(())
    })
}

pub fn cmd_export_labels(args: ExportArgs) -> anyhow::Result<Vec<String>> {
    let format = Format::resolve(args.format, &args.output)?;
    check_output_dir(&args.output)?;
    let (service, warnings) = LabelService::open(&args.data, None)?;
    for w in warnings {
        log::warn!("{w}");
    }
    let resolved = service.export()?;
    let file = fs::File::create(&args.output).with_context(|| format!("cannot write {}", args.output.display()))?;
    write_corpus(&resolved.corpus, file, format)?;
    let mut notes = Vec::new();
    if !resolved.majority_resolved.is_empty() {
        notes.push(format!(
            "settled by majority: {}",
            resolved.majority_resolved.join(", ")
        ));
    }
    if resolved.unlabeled > 0 {
        notes.push(format!("{} reviews have no labels yet and were skipped", resolved.unlabeled));
    }
    Ok(notes)
}

/// Runs a parsed command; the binary maps errors to a nonzero exit.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Stats(args) => {
            print!("{}", cmd_stats(args)?);
            Ok(())
        }
        Command::LabelServe(args) => cmd_label_serve(args),
        Command::ExportLabels(args) => {
            for note in cmd_export_labels(args)? {
                eprintln!("{note}");
            }
            Ok(())
        }
    }
}
