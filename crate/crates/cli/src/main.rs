//! evbench command line: ingest corpora, run backend comparisons, and emit
//! metric/curve/timeline reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use evbench_core::backends::Task;
use evbench_core::corpus::{
    self, CorpusFormat, SimpleTokenizer,
};
use evbench_core::harness::{
    self, emit_reports, BackendDescriptor, BackendKind, BackendStatus, CorpusConfig, EmitOptions,
    Overrides, RunConfig,
};
use evbench_core::Taxonomy;

#[derive(Parser)]
#[command(
    name = "evbench",
    version,
    about = "Benchmark text-coding models on conflict-event tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Decision threshold in (0, 1) (overrides config)
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Events per generation request (overrides config)
    #[arg(long = "batch-size", global = true)]
    batch_size: Option<usize>,

    /// Maximum in-flight requests (overrides config)
    #[arg(long, global = true)]
    concurrency: Option<usize>,

    /// Exclude timestamps and timing so reruns are byte-identical
    #[arg(long, global = true)]
    reproducible: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Binary,
    Attack,
    Ner,
}

impl From<TaskArg> for Task {
    fn from(value: TaskArg) -> Task {
        match value {
            TaskArg::Binary => Task::Binary,
            TaskArg::Attack => Task::Attack,
            TaskArg::Ner => Task::Ner,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for CorpusFormat {
    fn from(value: FormatArg) -> CorpusFormat {
        match value {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Csv => CorpusFormat::Csv,
        }
    }
}

/// Inputs shared by `score`, `curves`, and `timeline`: gold data plus one or
/// more predictions files standing in for backends.
#[derive(Args)]
struct ScoreArgs {
    /// Labeled documents (JSONL or CSV)
    #[arg(long)]
    docs: Option<PathBuf>,

    /// Document format (inferred from the extension when omitted)
    #[arg(long)]
    format: Option<FormatArg>,

    /// Gold CoNLL 2003 file (NER task)
    #[arg(long)]
    conll: Option<PathBuf>,

    /// Predictions file, `NAME=PATH` or bare `PATH` (repeatable)
    #[arg(long = "predictions", required = true)]
    predictions: Vec<String>,

    /// Alias table JSON extending the built-in label tables
    #[arg(long = "alias-tables")]
    alias_tables: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate corpora; convert CSV to JSONL or raw annotations to CoNLL
    Ingest {
        /// Documents file to validate (JSONL or CSV)
        #[arg(long)]
        docs: Option<PathBuf>,

        /// Document format (inferred from the extension when omitted)
        #[arg(long)]
        format: Option<FormatArg>,

        /// CoNLL file to validate
        #[arg(long)]
        conll: Option<PathBuf>,

        /// Raw span annotations JSONL ({doc_id, begin, end, label, confidence})
        #[arg(long)]
        annotations: Option<PathBuf>,

        /// Write validated documents as normalized JSONL
        #[arg(long = "to-jsonl")]
        to_jsonl: Option<PathBuf>,

        /// Resolve annotations against --docs and write CoNLL
        #[arg(long = "to-conll")]
        to_conll: Option<PathBuf>,

        /// Alias table JSON extending the built-in label tables
        #[arg(long = "alias-tables")]
        alias_tables: Option<PathBuf>,
    },

    /// Full pipeline from a config file: backends, metrics, curves, timelines
    Run,

    /// Score existing predictions files against gold labels
    Score {
        /// Task to score
        #[arg(long, value_enum)]
        task: TaskArg,
        #[command(flatten)]
        inputs: ScoreArgs,
    },

    /// Emit ROC/PR/F-vs-cutoff curve CSVs from existing predictions
    Curves {
        /// Task to score (binary or attack)
        #[arg(long, value_enum)]
        task: TaskArg,
        #[command(flatten)]
        inputs: ScoreArgs,
    },

    /// Emit cumulative event timelines (attack task)
    Timeline {
        #[command(flatten)]
        inputs: ScoreArgs,
    },

    /// Run backends for timing only
    Bench,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn overrides_of(cli: &Cli) -> Overrides {
    Overrides {
        out_dir: cli.out.clone(),
        threshold: cli.threshold,
        batch_size: cli.batch_size,
        concurrency: cli.concurrency,
        reproducible: cli.reproducible,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .context("this subcommand requires --config")?;
    let mut config = RunConfig::from_file(path)?;
    config.apply(&overrides_of(cli));
    Ok(config)
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run => {
            let config = load_config(cli)?;
            run_and_emit(&config, &EmitOptions::default())
        }
        Command::Bench => {
            let config = load_config(cli)?;
            bench(&config)
        }
        Command::Score { task, inputs } => {
            let config = score_config(cli, (*task).into(), inputs)?;
            run_and_emit(
                &config,
                &EmitOptions {
                    metrics: true,
                    curves: false,
                    timelines: false,
                },
            )
        }
        Command::Curves { task, inputs } => {
            let task: Task = (*task).into();
            if task == Task::Ner {
                bail!("curves are defined for the binary and attack tasks");
            }
            let config = score_config(cli, task, inputs)?;
            run_and_emit(
                &config,
                &EmitOptions {
                    metrics: false,
                    curves: true,
                    timelines: false,
                },
            )
        }
        Command::Timeline { inputs } => {
            let config = score_config(cli, Task::Attack, inputs)?;
            run_and_emit(
                &config,
                &EmitOptions {
                    metrics: false,
                    curves: false,
                    timelines: true,
                },
            )
        }
        Command::Ingest {
            docs,
            format,
            conll,
            annotations,
            to_jsonl,
            to_conll,
            alias_tables,
        } => ingest(
            cli,
            docs.as_deref(),
            format.map(CorpusFormat::from),
            conll.as_deref(),
            annotations.as_deref(),
            to_jsonl.as_deref(),
            to_conll.as_deref(),
            alias_tables.as_deref(),
        ),
    }
}

fn run_and_emit(config: &RunConfig, options: &EmitOptions) -> Result<ExitCode> {
    let outcome = harness::run(config)?;
    let written = emit_reports(
        &outcome.report,
        &outcome.manifest,
        &outcome.artifacts,
        &config.out_dir,
        options,
    )?;
    print_summary(&outcome);
    println!(
        "wrote {} file(s) to {}",
        written.len(),
        config.out_dir.display()
    );
    if outcome.failed_backends > 0 {
        eprintln!(
            "{} backend(s) failed; partial artifacts were written",
            outcome.failed_backends
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(outcome: &harness::RunOutcome) {
    let speed: BTreeMap<&str, f64> = outcome
        .report
        .relative_speed
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|(n, x)| (n.as_str(), *x))
        .collect();
    println!(
        "task: {}  threshold: {}",
        outcome.report.task, outcome.report.threshold
    );
    for backend in &outcome.report.backends {
        let mut line = format!("  {}: {}", backend.name, backend.status.label());
        if let Some(timing) = &backend.timing {
            line.push_str(&format!(
                "  total {:.3}s  per-doc {:.6}s",
                timing.total_secs, timing.per_doc_secs
            ));
        }
        if let Some(x) = speed.get(backend.name.as_str()) {
            line.push_str(&format!("  {:.2}x", x));
        }
        if backend.parse_failures > 0 {
            line.push_str(&format!("  parse failures: {}", backend.parse_failures));
        }
        println!("{line}");
    }
}

fn bench(config: &RunConfig) -> Result<ExitCode> {
    let outcome = harness::bench(config)?;
    let relative: BTreeMap<&str, f64> = outcome
        .relative
        .iter()
        .map(|(n, x)| (n.as_str(), *x))
        .collect();
    println!(
        "{:<24} {:>10} {:>12} {:>14} {:>10}",
        "backend", "docs", "total (s)", "per-doc (s)", "speed"
    );
    let mut rows = Vec::new();
    for row in &outcome.rows {
        match &row.status {
            BackendStatus::Ok => {
                println!(
                    "{:<24} {:>10} {:>12.3} {:>14.6} {:>9.2}x",
                    row.name,
                    row.docs,
                    row.total_secs,
                    row.per_doc_secs,
                    relative.get(row.name.as_str()).copied().unwrap_or(1.0)
                );
            }
            BackendStatus::Failed(message) => {
                println!("{:<24} failed: {message}", row.name);
            }
        }
        rows.push(serde_json::json!({
            "name": row.name,
            "status": row.status.label(),
            "docs": row.docs,
            "total_secs": row.total_secs,
            "per_doc_secs": row.per_doc_secs,
            "relative_speed": relative.get(row.name.as_str()),
        }));
    }
    std::fs::create_dir_all(&config.out_dir)?;
    let path = config.out_dir.join("bench.json");
    std::fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n")?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_predictions_arg(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) => (name.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "predictions".into());
            (name, path)
        }
    }
}

/// Build a RunConfig around predictions-file backends for the score-style
/// subcommands.
fn score_config(cli: &Cli, task: Task, inputs: &ScoreArgs) -> Result<RunConfig> {
    let backends: Vec<BackendDescriptor> = inputs
        .predictions
        .iter()
        .map(|spec| {
            let (name, path) = parse_predictions_arg(spec);
            BackendDescriptor {
                name,
                kind: BackendKind::PredictionsFile { path },
            }
        })
        .collect();
    let mut config = RunConfig {
        task,
        corpus: CorpusConfig {
            documents: inputs.docs.clone(),
            format: inputs.format.map(CorpusFormat::from),
            conll: inputs.conll.clone(),
        },
        split: None,
        backends,
        threshold: 0.5,
        batch_size: 1,
        concurrency: 4,
        out_dir: PathBuf::from("out"),
        seed: 0,
        alias_tables: inputs.alias_tables.clone(),
        bucketing: evbench_core::timeseries::Bucketing::Month,
        window: None,
        reproducible: false,
    };
    config.apply(&overrides_of(cli));
    Ok(config)
}

#[allow(clippy::too_many_arguments)]
fn ingest(
    cli: &Cli,
    docs: Option<&Path>,
    format: Option<CorpusFormat>,
    conll: Option<&Path>,
    annotations: Option<&Path>,
    to_jsonl: Option<&Path>,
    to_conll: Option<&Path>,
    alias_tables: Option<&Path>,
) -> Result<ExitCode> {
    let taxonomy = match alias_tables {
        Some(path) => Taxonomy::with_alias_file(path)?,
        None => Taxonomy::builtin(),
    };

    if let Some(path) = conll {
        let text = std::fs::read_to_string(path)?;
        let sequences = corpus::parse_conll(&text, &taxonomy)?;
        let tokens: usize = sequences.iter().map(|s| s.len()).sum();
        println!(
            "{}: {} sentence(s), {} token(s), valid",
            path.display(),
            sequences.len(),
            tokens
        );
        return Ok(ExitCode::SUCCESS);
    }

    let docs_path = docs.context("ingest needs --docs or --conll")?;
    let format = match format {
        Some(f) => f,
        None => match docs_path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            Some("csv") => CorpusFormat::Csv,
            _ => bail!(
                "cannot infer format of {}; pass --format",
                docs_path.display()
            ),
        },
    };
    let documents = corpus::load_documents(docs_path, format, &taxonomy)?;
    println!(
        "{}: {} document(s), valid",
        docs_path.display(),
        documents.len()
    );

    if let Some(out) = to_jsonl {
        let mut text = String::new();
        for doc in &documents {
            text.push_str(&corpus::document_to_json(doc).to_string());
            text.push('\n');
        }
        std::fs::write(out, text)?;
        println!("wrote {}", out.display());
    }

    if let Some(out) = to_conll {
        let anns_path =
            annotations.context("--to-conll needs --annotations with raw entity spans")?;
        let threshold = cli.threshold.unwrap_or(0.5);
        let annotations = corpus::load_annotations(anns_path)?;
        let sequences = corpus::resolve_corpus_annotations(
            &taxonomy,
            &documents,
            &annotations,
            threshold,
            &SimpleTokenizer,
        );
        let tagged: usize = sequences
            .iter()
            .flat_map(|s| s.tags.iter())
            .filter(|t| t.starts_with("B-"))
            .count();
        std::fs::write(out, corpus::write_conll(&sequences))?;
        println!(
            "wrote {} ({} sentence(s), {} tagged span(s), threshold {})",
            out.display(),
            sequences.len(),
            tagged,
            threshold
        );
    }

    Ok(ExitCode::SUCCESS)
}
