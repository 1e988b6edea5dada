//! Pair records and their JSON Lines persistence.
//!
//! One line holds one [`PairRecord`]:
//!
//! ```text
//! {"id":"ep-17","long":{"text":"…","tokens":[…],"lemmas":[…],"upos":[…]},
//!  "split":[{…},{…}],"pivot_language":"fr","source_corpus":"europarl",
//!  "scores":{"overlap_r":0.5},"category":"changes_near_split",
//!  "delta":{…},"tags":[…],"status":{"state":"filtered"}}
//! ```
//!
//! Optional members (`lemmas`, `upos`, `heads`, `deprels`, `category`,
//! `delta`, `tags`) are omitted when absent. Field order is fixed by the
//! struct declarations, so writing the same records twice yields identical
//! bytes.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit_align::EditAlignment;
use crate::parse::DependencyGraph;
use crate::text;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },
}

impl CorpusError {
    /// Line number for record-level errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Io(_) => None,
            CorpusError::Schema { line, .. } | CorpusError::DuplicateId { line, .. } => {
                Some(*line)
            }
        }
    }
}

/// A tokenized sentence with optional annotation layers aligned to `tokens`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upos: Option<Vec<String>>,
    /// Dependency heads, 0 for the artificial root, otherwise 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deprels: Option<Vec<String>>,
}

impl Sentence {
    /// Sentence with whitespace tokens and no annotations.
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = text::whitespace_tokens(&text);
        Sentence { text, tokens, lemmas: None, upos: None, heads: None, deprels: None }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_owned()).collect();
        Sentence { text: tokens.join(" "), tokens, lemmas: None, upos: None, heads: None, deprels: None }
    }

    pub fn with_lemmas<S: AsRef<str>>(mut self, lemmas: &[S]) -> Self {
        self.lemmas = Some(lemmas.iter().map(|t| t.as_ref().to_owned()).collect());
        self
    }

    pub fn with_upos<S: AsRef<str>>(mut self, upos: &[S]) -> Self {
        self.upos = Some(upos.iter().map(|t| t.as_ref().to_owned()).collect());
        self
    }

    pub fn with_heads(mut self, heads: &[usize]) -> Self {
        self.heads = Some(heads.to_vec());
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The dependency graph, when heads were attached.
    pub fn dependency_graph(&self) -> Option<DependencyGraph> {
        let heads = self.heads.clone()?;
        let deprels = self
            .deprels
            .clone()
            .unwrap_or_else(|| vec!["_".to_owned(); heads.len()]);
        Some(DependencyGraph { n: heads.len(), heads, deprels })
    }

    /// Checks that every annotation layer has one entry per token.
    pub fn check_layers(&self) -> Result<(), String> {
        let n = self.tokens.len();
        let layers: [(&str, Option<usize>); 4] = [
            ("lemmas", self.lemmas.as_ref().map(Vec::len)),
            ("upos", self.upos.as_ref().map(Vec::len)),
            ("heads", self.heads.as_ref().map(Vec::len)),
            ("deprels", self.deprels.as_ref().map(Vec::len)),
        ];
        for (name, len) in layers {
            if let Some(len) = len {
                if len != n {
                    return Err(format!("{name} has {len} entries for {n} tokens"));
                }
            }
        }
        Ok(())
    }
}

/// How much rephrasing a split requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCategory {
    DirectInsertion,
    ChangesNearSplit,
    ChangesAcrossSentence,
}

impl SplitCategory {
    pub const ALL: [SplitCategory; 3] = [
        SplitCategory::DirectInsertion,
        SplitCategory::ChangesNearSplit,
        SplitCategory::ChangesAcrossSentence,
    ];

    /// Position in classifier outputs.
    pub fn index(self) -> usize {
        match self {
            SplitCategory::DirectInsertion => 0,
            SplitCategory::ChangesNearSplit => 1,
            SplitCategory::ChangesAcrossSentence => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitCategory::DirectInsertion => "direct_insertion",
            SplitCategory::ChangesNearSplit => "changes_near_split",
            SplitCategory::ChangesAcrossSentence => "changes_across_sentence",
        }
    }
}

impl fmt::Display for SplitCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum Status {
    #[default]
    Raw,
    Filtered,
    Rejected(String),
}

impl Status {
    pub fn is_filtered(&self) -> bool {
        matches!(self, Status::Filtered)
    }

    pub fn rejection(&self) -> Option<&str> {
        match self {
            Status::Rejected(reason) => Some(reason),
            _ => None,
        }
    }
}

/// One aligned long sentence and its two-sentence split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub long: Sentence,
    pub split: [Sentence; 2],
    #[serde(default)]
    pub pivot_language: String,
    #[serde(default)]
    pub source_corpus: String,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<SplitCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<EditAlignment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default)]
    pub status: Status,
}

impl PairRecord {
    pub fn new(id: impl Into<String>, long: Sentence, s1: Sentence, s2: Sentence) -> Self {
        PairRecord {
            id: id.into(),
            long,
            split: [s1, s2],
            pivot_language: String::new(),
            source_corpus: String::new(),
            scores: BTreeMap::new(),
            category: None,
            delta: None,
            tags: Vec::new(),
            status: Status::Raw,
        }
    }

    /// Adds `tag` unless it is already present.
    pub fn tag(&mut self, tag: &str) {
        if !self.tags.iter().any(|t| t == tag) {
            self.tags.push(tag.to_owned());
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// Target sequence: first split, `[SEP]`, second split.
    pub fn target_tokens(&self) -> Vec<String> {
        let [s1, s2] = &self.split;
        let mut y = Vec::with_capacity(s1.len() + s2.len() + 1);
        y.extend(s1.tokens.iter().cloned());
        y.push(text::SEP.to_owned());
        y.extend(s2.tokens.iter().cloned());
        y
    }

    /// Structural checks applied when a record is read back.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty record id".to_owned());
        }
        if let Status::Rejected(reason) = &self.status {
            if reason.is_empty() {
                return Err("rejected record without a reason".to_owned());
            }
        }
        for (name, sentence) in [("long", &self.long), ("split[0]", &self.split[0]), ("split[1]", &self.split[1])] {
            sentence.check_layers().map_err(|e| format!("{name}: {e}"))?;
        }
        Ok(())
    }
}

/// Streaming reader over a JSON Lines pair file.
///
/// Malformed lines surface as `Err` items carrying their line number; the
/// iterator keeps going afterwards.
pub struct PairReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> PairReader<R> {
    pub fn new(reader: R) -> Self {
        PairReader { lines: reader.lines(), line_no: 0, seen: HashSet::new() }
    }
}

impl<R: BufRead> Iterator for PairReader<R> {
    type Item = Result<PairRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = self.line_no;
            let record: PairRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    return Some(Err(CorpusError::Schema { line: line_no, message: e.to_string() }))
                }
            };
            if let Err(message) = record.validate() {
                return Some(Err(CorpusError::Schema { line: line_no, message }));
            }
            if !self.seen.insert(record.id.clone()) {
                return Some(Err(CorpusError::DuplicateId { line: line_no, id: record.id }));
            }
            return Some(Ok(record));
        }
    }
}

/// Opens `path` for streaming. Records come back in file order.
pub fn read_pairs(path: impl AsRef<Path>) -> Result<PairReader<BufReader<File>>, CorpusError> {
    let file = File::open(path)?;
    Ok(PairReader::new(BufReader::new(file)))
}

/// Line-at-a-time writer for pair records.
pub struct PairWriter<W: Write> {
    out: W,
    written: usize,
}

impl PairWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(PairWriter::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> PairWriter<W> {
    pub fn new(out: W) -> Self {
        PairWriter { out, written: 0 }
    }

    pub fn write(&mut self, record: &PairRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> io::Result<usize> {
        self.out.flush()?;
        Ok(self.written)
    }
}

/// Writes one record per line and returns the number written.
pub fn write_pairs<'a, I>(records: I, path: impl AsRef<Path>) -> io::Result<usize>
where
    I: IntoIterator<Item = &'a PairRecord>,
{
    let mut writer = PairWriter::create(path)?;
    for record in records {
        writer.write(record)?;
    }
    writer.finish()
}
