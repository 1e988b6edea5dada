//! Stage drivers: configuration, per-record stage functions, and file-level
//! runs with summaries.
//!
//! Record-level stage functions are pure. Rejected records pass through
//! categorize and label untouched. A record whose stage fails is left out
//! of the output and reported in the summary; the run itself continues.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::categorize::{classify_with_rule, CategorizeError};
use crate::corpus::{read_pairs, CorpusError, PairRecord, PairWriter, Sentence, Status};
use crate::edit_align::{align_pair, AlignError, MIN_COPY_RUN};
use crate::filter::{run_filters, FilterConfig, FilterError};
use crate::ingest::{self, IngestConfig, IngestCounts, IngestError};
use crate::loss::{self, LossError, ProbFile};
use crate::metrics::{self, CorpusStats, EvalOptions, MetricError, MetricReport, ParaphraseTable};
use crate::parse::{self, annotation_id, AnnotatedSentence, ConlluError, ConstituencyTree, SidecarError, Slot};

/// Tag for labelled records with a 0 label on a position that is not a copy.
pub const TAG_DELTA_UNCOPIED: &str = "delta_uncopied";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub conllu: Option<PathBuf>,
    pub trees: Option<PathBuf>,
    pub ppdb: Option<PathBuf>,
    pub translations: Option<PathBuf>,
    /// Bitext and alignment files for ingest.
    pub src: Option<PathBuf>,
    pub tgt: Option<PathBuf>,
    pub align: Option<PathBuf>,
    /// Probability file for loss evaluation.
    pub probs: Option<PathBuf>,
    /// Source sentences for evaluation, one per line.
    pub sources: Option<PathBuf>,
    /// Reference files for evaluation, one reference per line each.
    pub references: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    /// Copied positions in a row that end the changes-near-split window.
    pub min_copy_run: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig { min_copy_run: MIN_COPY_RUN }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub max_n: usize,
    pub use_paraphrase: bool,
    /// Externally computed BERTScore to show in the report.
    pub bert_score: Option<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { max_n: metrics::sari::DEFAULT_MAX_N, use_paraphrase: true, bert_score: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Weight of the classifier term in the joint loss.
    pub weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { weight: 1.0 }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub filter: FilterConfig,
    pub label: LabelConfig,
    pub metrics: MetricConfig,
    pub loss: LossConfig,
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            filter: FilterConfig::default(),
            label: LabelConfig::default(),
            metrics: MetricConfig::default(),
            loss: LossConfig::default(),
            jobs: default_jobs(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.jobs == 0 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        if self.label.min_copy_run == 0 {
            return Err(PipelineError::Config("label.min_copy_run must be at least 1".into()));
        }
        if self.metrics.max_n == 0 {
            return Err(PipelineError::Config("metrics.max_n must be at least 1".into()));
        }
        if self.loss.weight.is_nan() || self.loss.weight < 0.0 {
            return Err(PipelineError::Config(format!("loss.weight = {} must be non-negative", self.loss.weight)));
        }
        self.filter.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Errors that stop a run.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl PipelineError {
    /// Process exit code: 1 for bad input or configuration, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Input(_) => 1,
            PipelineError::Internal(_) => 2,
        }
    }
}

fn input_err(path: &Path, e: impl fmt::Display) -> PipelineError {
    PipelineError::Input(format!("{}: {e}", path.display()))
}

fn output_err(path: &Path, e: io::Error) -> PipelineError {
    PipelineError::Internal(format!("writing {}: {e}", path.display()))
}

/// A failure confined to one record.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Categorize(#[from] CategorizeError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("{0}")]
    Record(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    /// Record id, or `line N` when the record could not be read.
    pub record: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LossSummary {
    pub pairs: usize,
    pub mean_seq_loss: f64,
    /// Over pairs that carry class probabilities.
    pub mean_joint_loss: Option<f64>,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub stage: String,
    pub input: usize,
    pub output: usize,
    pub errors: Vec<RecordError>,
    pub rejections: BTreeMap<String, usize>,
    pub categories: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<CorpusStatsRow>,
}

impl RunSummary {
    fn new(stage: &str) -> Self {
        RunSummary { stage: stage.to_owned(), ..Default::default() }
    }

    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn count_record(&mut self, pair: &PairRecord) {
        if let Some(reason) = pair.status.rejection() {
            *self.rejections.entry(reason.to_owned()).or_default() += 1;
        }
        if let Some(c) = pair.category {
            *self.categories.entry(c.as_str().to_owned()).or_default() += 1;
        }
        for t in &pair.tags {
            *self.tags.entry(t.clone()).or_default() += 1;
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stage: {}", self.stage)?;
        writeln!(f, "records in: {}, out: {}, errors: {}", self.input, self.output, self.errors.len())?;
        for (k, v) in &self.rejections {
            writeln!(f, "rejected {k}: {v}")?;
        }
        for (k, v) in &self.categories {
            writeln!(f, "category {k}: {v}")?;
        }
        if let Some(c) = &self.ingest {
            writeln!(
                f,
                "alignments: {}, kept: {}, not_1_2: {}, missing_translation: {}",
                c.input, c.output, c.not_1_2, c.missing_translation
            )?;
        }
        if let Some(l) = &self.loss {
            writeln!(f, "pairs: {}, mean seq loss: {:.6}, skipped: {}", l.pairs, l.mean_seq_loss, l.skipped)?;
            if let Some(j) = l.mean_joint_loss {
                writeln!(f, "mean joint loss: {j:.6}")?;
            }
        }
        for e in self.errors.iter().take(20) {
            writeln!(f, "error {}: {}", e.record, e.message)?;
        }
        if self.errors.len() > 20 {
            writeln!(f, "... {} more errors", self.errors.len() - 20)?;
        }
        Ok(())
    }
}

/// Serializable copy of a metric report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReportRow {
    pub sari: f64,
    pub add: f64,
    pub keep: f64,
    pub del: f64,
    pub bert_score: Option<f64>,
    pub fkgl: f64,
    pub bleu: f64,
    pub slen: f64,
    pub olen: f64,
    pub self_bleu: f64,
    pub pct_new: f64,
}

impl From<&MetricReport> for MetricReportRow {
    fn from(r: &MetricReport) -> Self {
        MetricReportRow {
            sari: r.sari,
            add: r.sari_add,
            keep: r.sari_keep,
            del: r.sari_del,
            bert_score: r.bert_score,
            fkgl: r.fkgl,
            bleu: r.bleu,
            slen: r.slen,
            olen: r.olen,
            self_bleu: r.self_bleu,
            pct_new: r.pct_new,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStatsRow {
    pub n_pairs: usize,
    pub n_unique: usize,
    pub pct_new: f64,
    pub long_len: f64,
    pub split_len: f64,
}

impl From<&CorpusStats> for CorpusStatsRow {
    fn from(s: &CorpusStats) -> Self {
        CorpusStatsRow {
            n_pairs: s.n_pairs,
            n_unique: s.n_unique,
            pct_new: s.pct_new,
            long_len: s.long_len,
            split_len: s.split_len,
        }
    }
}

// ---- record-level stages ----

pub type Annotations = BTreeMap<String, AnnotatedSentence>;
pub type Trees = HashMap<String, ConstituencyTree>;

fn merge_annotation(target: &mut Sentence, ann: &AnnotatedSentence, id: &str) -> Result<(), StageError> {
    if ann.sentence.tokens != target.tokens {
        return Err(StageError::Record(format!("annotation `{id}` tokens differ from the record")));
    }
    let text = std::mem::take(&mut target.text);
    *target = ann.sentence.clone();
    target.text = text;
    Ok(())
}

/// Copies CoNLL-U layers onto the record's sentences where available.
pub fn annotate(mut pair: PairRecord, annotations: &Annotations) -> Result<PairRecord, StageError> {
    let slots = [Slot::Long, Slot::First, Slot::Second];
    for slot in slots {
        let id = annotation_id(&pair.id, slot);
        if let Some(ann) = annotations.get(&id) {
            let s = match slot {
                Slot::Long => &mut pair.long,
                Slot::First => &mut pair.split[0],
                Slot::Second => &mut pair.split[1],
            };
            merge_annotation(s, ann, &id)?;
        }
    }
    Ok(pair)
}

pub fn filter_record(
    pair: PairRecord,
    cfg: &FilterConfig,
    annotations: Option<&Annotations>,
) -> Result<PairRecord, StageError> {
    let pair = match annotations {
        Some(a) => annotate(pair, a)?,
        None => pair,
    };
    Ok(run_filters(pair, cfg, None)?)
}

pub fn categorize_record(mut pair: PairRecord, trees: &Trees) -> Result<PairRecord, StageError> {
    if matches!(pair.status, Status::Rejected(_)) {
        return Ok(pair);
    }
    let (category, rule) = classify_with_rule(&pair, trees.get(&pair.id))?;
    pair.category = Some(category);
    pair.tag(&format!("rule:{}", rule.as_str()));
    Ok(pair)
}

pub fn label_record(mut pair: PairRecord, cfg: &LabelConfig) -> Result<PairRecord, StageError> {
    if matches!(pair.status, Status::Rejected(_)) {
        return Ok(pair);
    }
    let category = pair.category.ok_or_else(|| StageError::Record("record has no category".into()))?;
    let a = align_pair(&pair, category, cfg.min_copy_run)?;
    if !a.uncopied_zeros().is_empty() {
        pair.tag(TAG_DELTA_UNCOPIED);
    }
    pair.delta = Some(a);
    Ok(pair)
}

/// Filter, categorize and label one record in a single pass.
pub fn process_record(
    pair: PairRecord,
    cfg: &PipelineConfig,
    annotations: Option<&Annotations>,
    trees: &Trees,
) -> Result<PairRecord, StageError> {
    let pair = filter_record(pair, &cfg.filter, annotations)?;
    let pair = categorize_record(pair, trees)?;
    label_record(pair, &cfg.label)
}

/// Applies `f` to every record on `jobs` threads, keeping input order.
pub fn par_map<T, U, F>(items: Vec<T>, jobs: usize, f: F) -> Result<Vec<U>, PipelineError>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

/// Runs a record-level stage over `records` and tallies the outcome.
pub fn run_stage<F>(
    stage: &str,
    records: Vec<PairRecord>,
    jobs: usize,
    f: F,
) -> Result<(Vec<PairRecord>, RunSummary), PipelineError>
where
    F: Fn(PairRecord) -> Result<PairRecord, StageError> + Sync + Send,
{
    let mut summary = RunSummary::new(stage);
    summary.input = records.len();
    let results = par_map(records, jobs, |p| {
        let id = p.id.clone();
        f(p).map_err(|e| RecordError { record: id, message: e.to_string() })
    })?;
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(p) => {
                summary.count_record(&p);
                out.push(p);
            }
            Err(e) => summary.errors.push(e),
        }
    }
    summary.output = out.len();
    Ok((out, summary))
}

// ---- file-level runs ----

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, PipelineError> {
    let p = p.as_deref().ok_or_else(|| PipelineError::Input(format!("missing {what} path")))?;
    if !p.exists() {
        return Err(PipelineError::Input(format!("{what} `{}` does not exist", p.display())));
    }
    Ok(p)
}

fn output_path(cfg: &PipelineConfig) -> Result<&Path, PipelineError> {
    cfg.paths.output.as_deref().ok_or_else(|| PipelineError::Input("missing output path".into()))
}

/// Reads a pair file; unreadable lines become record errors.
pub fn load_records(path: &Path) -> Result<(Vec<PairRecord>, Vec<RecordError>), PipelineError> {
    let reader = read_pairs(path).map_err(|e| input_err(path, e))?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for item in reader {
        match item {
            Ok(p) => records.push(p),
            Err(CorpusError::Io(e)) => return Err(input_err(path, e)),
            Err(e) => errors.push(RecordError {
                record: e.line().map_or_else(|| "?".to_owned(), |l| format!("line {l}")),
                message: e.to_string(),
            }),
        }
    }
    Ok((records, errors))
}

fn write_records(path: &Path, records: &[PairRecord]) -> Result<(), PipelineError> {
    let mut w = PairWriter::create(path).map_err(|e| output_err(path, e))?;
    for r in records {
        w.write(r).map_err(|e| output_err(path, e))?;
    }
    w.finish().map_err(|e| output_err(path, e))?;
    Ok(())
}

fn load_annotations(cfg: &PipelineConfig) -> Result<Option<Annotations>, PipelineError> {
    match &cfg.paths.conllu {
        None => Ok(None),
        Some(_) => {
            let p = require(&cfg.paths.conllu, "conllu")?;
            parse::read_conllu(p).map(Some).map_err(|e: ConlluError| input_err(p, e))
        }
    }
}

fn load_trees(cfg: &PipelineConfig) -> Result<Trees, PipelineError> {
    let p = require(&cfg.paths.trees, "trees")?;
    parse::read_tree_sidecar(p).map_err(|e: SidecarError| input_err(p, e))
}

fn staged_input(cfg: &PipelineConfig) -> Result<(Vec<PairRecord>, Vec<RecordError>), PipelineError> {
    load_records(require(&cfg.paths.input, "input")?)
}

fn finish_stage(
    cfg: &PipelineConfig,
    records: Vec<PairRecord>,
    read_errors: Vec<RecordError>,
    stage: &str,
    f: impl Fn(PairRecord) -> Result<PairRecord, StageError> + Sync + Send,
) -> Result<RunSummary, PipelineError> {
    let out_path = output_path(cfg)?;
    let n_read_errors = read_errors.len();
    let (out, mut summary) = run_stage(stage, records, cfg.jobs, f)?;
    summary.input += n_read_errors;
    let mut errors = read_errors;
    errors.append(&mut summary.errors);
    summary.errors = errors;
    write_records(out_path, &out)?;
    Ok(summary)
}

pub fn run_ingest(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let src = require(&cfg.paths.src, "source bitext")?;
    let tgt = require(&cfg.paths.tgt, "target bitext")?;
    let align = require(&cfg.paths.align, "alignment")?;
    let tr_path = require(&cfg.paths.translations, "translations")?;
    let out_path = output_path(cfg)?;
    let translations = ingest::read_translations(tr_path).map_err(|e| input_err(tr_path, e))?;
    let bitext = ingest::load_bitext(src, tgt, align).map_err(|e: IngestError| input_err(align, e))?;

    let mut summary = RunSummary::new("ingest");
    let mut selector = ingest::Selector::new(&cfg.ingest, &translations);
    let mut writer = PairWriter::create(out_path).map_err(|e| output_err(out_path, e))?;
    for item in bitext {
        summary.input += 1;
        match item {
            Ok(rec) => {
                if let Some(pair) = selector.select(&rec) {
                    summary.count_record(&pair);
                    writer.write(&pair).map_err(|e| output_err(out_path, e))?;
                    summary.output += 1;
                }
            }
            Err(IngestError::Io(e)) => return Err(input_err(align, e)),
            Err(e) => {
                let record = match &e {
                    IngestError::Format { line, .. } | IngestError::IndexOutOfRange { line, .. } => {
                        format!("line {line}")
                    }
                    _ => "?".to_owned(),
                };
                summary.errors.push(RecordError { record, message: e.to_string() });
            }
        }
    }
    writer.finish().map_err(|e| output_err(out_path, e))?;
    summary.ingest = Some(selector.counts);
    Ok(summary)
}

pub fn run_filter(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let annotations = load_annotations(cfg)?;
    let (records, errors) = staged_input(cfg)?;
    finish_stage(cfg, records, errors, "filter", |p| filter_record(p, &cfg.filter, annotations.as_ref()))
}

pub fn run_categorize(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let trees = load_trees(cfg)?;
    let (records, errors) = staged_input(cfg)?;
    finish_stage(cfg, records, errors, "categorize", |p| categorize_record(p, &trees))
}

pub fn run_label(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let (records, errors) = staged_input(cfg)?;
    finish_stage(cfg, records, errors, "label", |p| label_record(p, &cfg.label))
}

/// Filter, categorize and label in one pass over the input.
pub fn run_process(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let annotations = load_annotations(cfg)?;
    let trees = load_trees(cfg)?;
    let (records, errors) = staged_input(cfg)?;
    finish_stage(cfg, records, errors, "process", |p| process_record(p, cfg, annotations.as_ref(), &trees))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairLoss {
    pub id: String,
    pub seq_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_loss: Option<f64>,
}

/// Loss of one labelled record. `Ok(None)` for records without labels.
pub fn record_loss(pair: &PairRecord, probs: &ProbFile, weight: f64) -> Result<Option<PairLoss>, StageError> {
    let Some(a) = &pair.delta else { return Ok(None) };
    let entry = probs
        .entries
        .get(&pair.id)
        .ok_or_else(|| StageError::Record("no probabilities for this record".into()))?;
    let seq = loss::seq_loss(a, &entry.matrix)?;
    let joint = match (entry.class_probs, pair.category) {
        (Some(cls), Some(gold)) => Some(loss::joint_loss(seq, &cls, gold, weight)?),
        _ => None,
    };
    Ok(Some(PairLoss { id: pair.id.clone(), seq_loss: seq, joint_loss: joint }))
}

pub fn run_loss_eval(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let probs_path = require(&cfg.paths.probs, "probabilities")?;
    let probs = loss::read_prob_file(probs_path).map_err(|e| input_err(probs_path, e))?;
    let (records, read_errors) = staged_input(cfg)?;
    let out_path = output_path(cfg)?;

    let mut summary = RunSummary::new("loss-eval");
    summary.input = records.len() + read_errors.len();
    summary.errors = read_errors;
    let weight = cfg.loss.weight;
    let results = par_map(records, cfg.jobs, |p| (p.id.clone(), record_loss(&p, &probs, weight)))?;

    let file = File::create(out_path).map_err(|e| output_err(out_path, e))?;
    let mut w = BufWriter::new(file);
    let mut ls = LossSummary::default();
    let (mut seq_sum, mut joint_sum, mut n_joint) = (0.0, 0.0, 0usize);
    for (id, r) in results {
        match r {
            Ok(Some(pl)) => {
                ls.pairs += 1;
                seq_sum += pl.seq_loss;
                if let Some(j) = pl.joint_loss {
                    joint_sum += j;
                    n_joint += 1;
                }
                let line = serde_json::to_string(&pl).map_err(|e| PipelineError::Internal(e.to_string()))?;
                writeln!(w, "{line}").map_err(|e| output_err(out_path, e))?;
                summary.output += 1;
            }
            Ok(None) => ls.skipped += 1,
            Err(e) => summary.errors.push(RecordError { record: id, message: e.to_string() }),
        }
    }
    w.flush().map_err(|e| output_err(out_path, e))?;
    if ls.pairs > 0 {
        ls.mean_seq_loss = seq_sum / ls.pairs as f64;
    }
    ls.mean_joint_loss = (n_joint > 0).then(|| joint_sum / n_joint as f64);
    summary.loss = Some(ls);
    Ok(summary)
}

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>, PipelineError> {
    let f = File::open(path).map_err(|e| input_err(path, e))?;
    BufReader::new(f)
        .lines()
        .map(|l| l.map(|l| crate::text::whitespace_tokens(&l)).map_err(|e| input_err(path, e)))
        .collect()
}

/// Scores system outputs; returns the summary and the report.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<(RunSummary, MetricReport), PipelineError> {
    cfg.validate()?;
    let out_path = require(&cfg.paths.input, "system output")?;
    let src_path = require(&cfg.paths.sources, "sources")?;
    if cfg.paths.references.is_empty() {
        return Err(PipelineError::Input("no reference files".into()));
    }
    let outputs = read_token_lines(out_path)?;
    let sources = read_token_lines(src_path)?;
    let mut references: Vec<Vec<Vec<String>>> = vec![Vec::new(); outputs.len()];
    for rp in &cfg.paths.references {
        if !rp.exists() {
            return Err(PipelineError::Input(format!("reference `{}` does not exist", rp.display())));
        }
        let lines = read_token_lines(rp)?;
        if lines.len() != outputs.len() {
            return Err(input_err(rp, format!("{} lines, system output has {}", lines.len(), outputs.len())));
        }
        for (slot, r) in references.iter_mut().zip(lines) {
            slot.push(r);
        }
    }
    if sources.len() != outputs.len() {
        return Err(input_err(src_path, format!("{} lines, system output has {}", sources.len(), outputs.len())));
    }
    let table: Option<ParaphraseTable> = match (&cfg.paths.ppdb, cfg.metrics.use_paraphrase) {
        (Some(_), true) => {
            let p = require(&cfg.paths.ppdb, "ppdb")?;
            Some(metrics::read_ppdb(p).map_err(|e| input_err(p, e))?)
        }
        _ => None,
    };
    let opts = EvalOptions { max_n: cfg.metrics.max_n, table: table.as_ref(), bert_score: cfg.metrics.bert_score };
    let report = metrics::evaluate(&sources, &outputs, &references, &opts)
        .map_err(|e: MetricError| PipelineError::Input(e.to_string()))?;
    let mut summary = RunSummary::new("evaluate");
    summary.input = outputs.len();
    summary.output = outputs.len();
    summary.metrics = Some(MetricReportRow::from(&report));
    if let Some(p) = &cfg.paths.output {
        fs::write(p, format!("{report}\n")).map_err(|e| output_err(p, e))?;
    }
    Ok((summary, report))
}

/// Corpus statistics over the records that were not rejected.
pub fn run_stats(cfg: &PipelineConfig) -> Result<(RunSummary, CorpusStats), PipelineError> {
    cfg.validate()?;
    let (records, errors) = staged_input(cfg)?;
    let mut summary = RunSummary::new("stats");
    summary.input = records.len() + errors.len();
    summary.errors = errors;
    let kept: Vec<&PairRecord> = records.iter().filter(|p| p.status.rejection().is_none()).collect();
    summary.output = kept.len();
    let stats = metrics::length_stats(kept).map_err(|e| PipelineError::Input(e.to_string()))?;
    summary.stats = Some(CorpusStatsRow::from(&stats));
    if let Some(p) = &cfg.paths.output {
        fs::write(p, format!("{stats}\n")).map_err(|e| output_err(p, e))?;
    }
    Ok((summary, stats))
}

/// Writes the summary as JSON to `cfg.paths.report` when set.
pub fn write_report(cfg: &PipelineConfig, summary: &RunSummary) -> Result<(), PipelineError> {
    if let Some(p) = &cfg.paths.report {
        let json = serde_json::to_string_pretty(summary).map_err(|e| PipelineError::Internal(e.to_string()))?;
        fs::write(p, json + "\n").map_err(|e| output_err(p, e))?;
    }
    Ok(())
}

/// Category histogram in [`SplitCategory::ALL`](crate::corpus::SplitCategory::ALL) order.
pub fn category_histogram(records: &[PairRecord]) -> [usize; 3] {
    let mut h = [0; 3];
    for c in records.iter().filter_map(|p| p.category) {
        h[c.index()] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SplitCategory;
    use crate::parse::parse_bracketed;

    fn pair(id: &str, long: &str, s1: &str, s2: &str) -> PairRecord {
        let mut p = PairRecord::new(id, Sentence::new(long), Sentence::new(s1), Sentence::new(s2));
        p.long.heads = Some((0..p.long.len()).collect());
        p
    }

    fn cfg() -> PipelineConfig {
        let mut c = PipelineConfig { jobs: 2, ..Default::default() };
        c.filter.require_verb = false;
        c
    }

    fn records() -> (Vec<PairRecord>, Trees) {
        let recs = vec![
            pair("a", "the virus spreads and can kill", "the virus spreads .", "it can kill"),
            pair("b", "one ; two", "one .", "two ."),
            pair("c", "alpha beta gamma", "delta epsilon", "zeta"),
        ];
        let mut trees = Trees::new();
        for (id, t) in [("a", "(S (VP x) (CC and) (VP y))"), ("b", "(S (NP x) (VP y))"), ("c", "(S (NP x) (VP y))")] {
            trees.insert(id.to_owned(), parse_bracketed(t).unwrap());
        }
        (recs, trees)
    }

    #[test]
    fn fused_equals_staged() {
        let (recs, trees) = records();
        let c = cfg();
        let (f, _) = run_stage("filter", recs.clone(), 2, |p| filter_record(p, &c.filter, None)).unwrap();
        let (g, _) = run_stage("categorize", f, 2, |p| categorize_record(p, &trees)).unwrap();
        let (staged, _) = run_stage("label", g, 2, |p| label_record(p, &c.label)).unwrap();
        let (fused, summary) = run_stage("process", recs, 3, |p| process_record(p, &c, None, &trees)).unwrap();
        assert_eq!(staged, fused);
        assert_eq!(summary.rejections.get("low_overlap"), Some(&1));
        assert_eq!(fused[0].category, Some(SplitCategory::ChangesNearSplit));
        assert_eq!(fused[1].category, Some(SplitCategory::DirectInsertion));
        assert!(fused[2].delta.is_none());
        assert_eq!(category_histogram(&fused), [1, 1, 0]);
    }

    #[test]
    fn missing_tree_is_a_record_error() {
        let (recs, _) = records();
        let (out, s) = run_stage("categorize", recs, 1, |p| categorize_record(p, &Trees::new())).unwrap();
        assert_eq!(out.len(), 0);
        assert_eq!(s.errors.len(), 3);
        assert!(!s.ok());
    }

    #[test]
    fn order_is_kept() {
        let v: Vec<usize> = (0..1000).collect();
        assert_eq!(par_map(v.clone(), 4, |x| x * 2).unwrap(), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn config_toml() {
        let c = PipelineConfig::from_toml("jobs = 3\n[filter]\nmin_overlap = 0.3\n[paths]\ninput = \"x.jsonl\"\n").unwrap();
        assert_eq!(c.jobs, 3);
        assert_eq!(c.filter.min_overlap, 0.3);
        assert_eq!(c.filter.min_similarity, 0.4);
        assert_eq!(c.label.min_copy_run, 3);
        assert_eq!(c.paths.input.as_deref(), Some(Path::new("x.jsonl")));
        assert!(PipelineConfig::from_toml("jobs = 0").unwrap().validate().is_err());
        assert!(PipelineConfig::from_toml("[filter]\nmin_overlap = 2.0").unwrap().validate().is_err());
        assert!(PipelineConfig::from_toml("nonsense = [").is_err());
    }

    #[test]
    fn annotation_merge() {
        let p = pair("r", "a b", "a", "b");
        let mut ann = Annotations::new();
        let s = Sentence::from_tokens(&["a", "b"]).with_lemmas(&["A", "B"]).with_heads(&[0, 1]);
        ann.insert("r.long".into(), AnnotatedSentence { graph: s.dependency_graph().unwrap(), sentence: s });
        let merged = annotate(p.clone(), &ann).unwrap();
        assert_eq!(merged.long.lemmas.as_deref(), Some(&["A".to_owned(), "B".to_owned()][..]));
        let bad = Sentence::from_tokens(&["x"]);
        ann.insert("r.s1".into(), AnnotatedSentence { graph: parse::DependencyGraph::from_heads(&[0]), sentence: bad });
        assert!(annotate(p, &ann).is_err());
    }
}
