//! `splitkit`: command-line driver for the split-and-rephrase corpus
//! pipeline.
//!
//! Exit codes: 0 when the run finished without record errors, 1 for bad
//! input or configuration (including record-level errors), 2 for internal
//! failures. Log verbosity follows `RUST_LOG`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use splitkit::pipeline::{self, PipelineConfig, PipelineError, RunSummary};

#[derive(Parser, Debug)]
#[command(name = "splitkit", version, about = "Split-and-rephrase corpus pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Extract 1-2 and 2-1 pairs from aligned bitext.
    Ingest,
    /// Mark pairs Filtered or Rejected(reason).
    Filter,
    /// Assign split categories using constituency trees.
    Categorize,
    /// Pad pairs and derive the edit labels.
    Label,
    /// Filter, categorize and label in one pass.
    Process,
    /// Evaluate the edit-aware loss on supplied probabilities.
    LossEval,
    /// Score system outputs.
    Evaluate,
    /// Corpus statistics.
    Stats,
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write the run summary as JSON here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true)]
    min_overlap: Option<f64>,
    #[arg(long, global = true)]
    min_sim: Option<f64>,
    /// Bracketed trees, one `<id>\t<tree>` per line.
    #[arg(long, global = true)]
    trees: Option<PathBuf>,
    #[arg(long, global = true)]
    conllu: Option<PathBuf>,
    /// PPDB-style paraphrase table.
    #[arg(long, global = true)]
    ppdb: Option<PathBuf>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    src: Option<PathBuf>,
    #[arg(long, global = true)]
    tgt: Option<PathBuf>,
    #[arg(long, global = true)]
    align: Option<PathBuf>,
    #[arg(long, global = true)]
    translations: Option<PathBuf>,
    /// Per-position probabilities for loss evaluation.
    #[arg(long, global = true)]
    probs: Option<PathBuf>,
    #[arg(long, global = true)]
    weight: Option<f64>,
    #[arg(long, global = true)]
    sources: Option<PathBuf>,
    /// Reference file; repeat for several references.
    #[arg(long = "references", global = true)]
    references: Vec<PathBuf>,
    #[arg(long, global = true)]
    max_n: Option<usize>,
    /// Score without the paraphrase table even if one is configured.
    #[arg(long, global = true)]
    no_paraphrase: bool,
    /// Externally computed BERTScore to include in the report.
    #[arg(long, global = true)]
    bert_score: Option<f64>,
}

fn build_config(o: &Opts) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &o.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let p = &mut cfg.paths;
    for (slot, val) in [
        (&mut p.input, &o.input),
        (&mut p.output, &o.output),
        (&mut p.report, &o.report),
        (&mut p.trees, &o.trees),
        (&mut p.conllu, &o.conllu),
        (&mut p.ppdb, &o.ppdb),
        (&mut p.src, &o.src),
        (&mut p.tgt, &o.tgt),
        (&mut p.align, &o.align),
        (&mut p.translations, &o.translations),
        (&mut p.probs, &o.probs),
        (&mut p.sources, &o.sources),
    ] {
        if val.is_some() {
            slot.clone_from(val);
        }
    }
    if !o.references.is_empty() {
        p.references.clone_from(&o.references);
    }
    if let Some(v) = o.min_overlap {
        cfg.filter.min_overlap = v;
    }
    if let Some(v) = o.min_sim {
        cfg.filter.min_similarity = v;
    }
    if let Some(v) = o.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = o.weight {
        cfg.loss.weight = v;
    }
    if let Some(v) = o.max_n {
        cfg.metrics.max_n = v;
    }
    if o.no_paraphrase {
        cfg.metrics.use_paraphrase = false;
    }
    if o.bert_score.is_some() {
        cfg.metrics.bert_score = o.bert_score;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command, cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let summary = match command {
        Command::Ingest => pipeline::run_ingest(cfg)?,
        Command::Filter => pipeline::run_filter(cfg)?,
        Command::Categorize => pipeline::run_categorize(cfg)?,
        Command::Label => pipeline::run_label(cfg)?,
        Command::Process => pipeline::run_process(cfg)?,
        Command::LossEval => pipeline::run_loss_eval(cfg)?,
        Command::Evaluate => {
            let (summary, report) = pipeline::run_evaluate(cfg)?;
            if cfg.paths.output.is_none() {
                println!("{report}");
            }
            summary
        }
        Command::Stats => {
            let (summary, stats) = pipeline::run_stats(cfg)?;
            if cfg.paths.output.is_none() {
                println!("{stats}");
            }
            summary
        }
    };
    pipeline::write_report(cfg, &summary)?;
    Ok(summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| build_config(&cli.opts).and_then(|cfg| run(cli.command, &cfg)));
    match outcome {
        Ok(Ok(summary)) => {
            eprint!("{summary}");
            if summary.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Ok(Err(e)) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(2)
        }
    }
}
