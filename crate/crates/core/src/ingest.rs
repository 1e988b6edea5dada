//! Pair extraction from sentence-aligned bitext.
//!
//! Inputs are two plain-text files with one sentence per line, an alignment
//! file, and a TSV with English renderings of the foreign lines.
//!
//! Alignment lines list 0-based line indices on each side separated by a
//! dash, optionally preceded by a document id and a tab (`<TAB>` below):
//!
//! ```text
//! doc17<TAB>4 5 - 3
//! 6 - 4
//! ```
//!
//! The translation file has `<foreign line index>\t<English text>` lines.
//! Only alignments with one sentence on one side and two on the other are
//! kept. The single sentence becomes the long sentence and the pair of
//! sentences the split, whichever language they came from.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Lines};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PairRecord, Sentence};

pub const TAG_TRANSLATED_LONG: &str = "translated_long";
pub const TAG_TRANSLATED_SPLIT: &str = "translated_split";
/// The long sentence is shorter than one of its split sentences.
pub const TAG_AMBIGUOUS_ORIENTATION: &str = "ambiguous_orientation";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("alignment line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("alignment line {line}: {side} index {index} out of range (file has {len} lines)")]
    IndexOutOfRange { line: usize, side: &'static str, index: usize, len: usize },
    #[error("translation file line {line}: {message}")]
    Translation { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentRecord {
    pub doc_id: String,
    /// Line in the alignment file, 1-based.
    pub line: usize,
    pub src_indices: Vec<usize>,
    pub tgt_indices: Vec<usize>,
    pub src_texts: Vec<String>,
    pub tgt_texts: Vec<String>,
}

/// Parses `[doc<TAB>]i j - k` into `(doc, src, tgt)`. A side may be empty.
pub fn parse_alignment_line(line: &str) -> Result<(String, Vec<usize>, Vec<usize>), String> {
    let (doc, sides) = match line.split_once('\t') {
        Some((d, s)) => (d.trim().to_owned(), s),
        None => (String::new(), line),
    };
    let (l, r) = sides.split_once('-').ok_or("missing `-` between sides")?;
    let side = |s: &str| -> Result<Vec<usize>, String> {
        let idx = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| format!("bad index `{t}`")))
            .collect::<Result<Vec<_>, _>>()?;
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err("indices must be strictly increasing".into());
        }
        Ok(idx)
    };
    Ok((doc, side(l)?, side(r)?))
}

fn read_lines(path: &Path) -> io::Result<Vec<String>> {
    BufReader::new(File::open(path)?).lines().collect()
}

/// Alignments with their sentence texts attached, in file order.
pub struct Bitext {
    src: Vec<String>,
    tgt: Vec<String>,
    lines: Lines<BufReader<File>>,
    line_no: usize,
}

pub fn load_bitext(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    align_path: impl AsRef<Path>,
) -> Result<Bitext, IngestError> {
    let src = read_lines(src_path.as_ref())?;
    let tgt = read_lines(tgt_path.as_ref())?;
    if src.len() != tgt.len() {
        log::warn!("bitext sides differ in length: {} vs {} lines", src.len(), tgt.len());
    }
    let lines = BufReader::new(File::open(align_path)?).lines();
    Ok(Bitext { src, tgt, lines, line_no: 0 })
}

impl Bitext {
    fn resolve(&self, line: &str) -> Result<AlignmentRecord, IngestError> {
        let (doc_id, src_indices, tgt_indices) =
            parse_alignment_line(line).map_err(|message| IngestError::Format { line: self.line_no, message })?;
        let fetch = |side: &'static str, texts: &[String], idx: &[usize]| {
            idx.iter()
                .map(|&i| {
                    texts.get(i).cloned().ok_or(IngestError::IndexOutOfRange {
                        line: self.line_no,
                        side,
                        index: i,
                        len: texts.len(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(AlignmentRecord {
            src_texts: fetch("source", &self.src, &src_indices)?,
            tgt_texts: fetch("target", &self.tgt, &tgt_indices)?,
            doc_id,
            line: self.line_no,
            src_indices,
            tgt_indices,
        })
    }
}

impl Iterator for Bitext {
    type Item = Result<AlignmentRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            match line {
                Err(e) => return Some(Err(e.into())),
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Some(self.resolve(&l)),
            }
        }
    }
}

/// English renderings of foreign lines, keyed by 0-based line index.
pub type Translations = HashMap<usize, String>;

pub fn read_translations(path: impl AsRef<Path>) -> Result<Translations, IngestError> {
    parse_translations(BufReader::new(File::open(path)?))
}

pub fn parse_translations<R: BufRead>(reader: R) -> Result<Translations, IngestError> {
    let mut out = Translations::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| IngestError::Translation { line: i + 1, message };
        let (idx, text) = line.split_once('\t').ok_or_else(|| err("expected `<index>\\t<text>`".into()))?;
        let idx: usize = idx.trim().parse().map_err(|_| err(format!("bad index `{idx}`")))?;
        if out.insert(idx, text.to_owned()).is_some() {
            return Err(err(format!("duplicate index {idx}")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnglishSide {
    #[default]
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub english_side: EnglishSide,
    pub pivot_language: String,
    pub source_corpus: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { english_side: EnglishSide::Source, pivot_language: String::new(), source_corpus: String::new() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestCounts {
    pub input: usize,
    pub output: usize,
    pub not_1_2: usize,
    pub missing_translation: usize,
}

impl IngestCounts {
    pub fn dropped(&self) -> usize {
        self.not_1_2 + self.missing_translation
    }
}

/// Turns resolved alignments into pair records, counting what it drops.
pub struct Selector<'a> {
    cfg: &'a IngestConfig,
    translations: &'a Translations,
    pub counts: IngestCounts,
}

impl<'a> Selector<'a> {
    pub fn new(cfg: &'a IngestConfig, translations: &'a Translations) -> Self {
        Selector { cfg, translations, counts: IngestCounts::default() }
    }

    pub fn select(&mut self, rec: &AlignmentRecord) -> Option<PairRecord> {
        self.counts.input += 1;
        let (en_texts, fo_idx) = match self.cfg.english_side {
            EnglishSide::Source => (&rec.src_texts, &rec.tgt_indices),
            EnglishSide::Target => (&rec.tgt_texts, &rec.src_indices),
        };
        let (n_en, n_fo) = (en_texts.len(), fo_idx.len());
        if !matches!((n_en, n_fo), (1, 2) | (2, 1)) {
            self.counts.not_1_2 += 1;
            return None;
        }
        let mut translated = Vec::with_capacity(n_fo);
        for i in fo_idx {
            match self.translations.get(i) {
                Some(t) => translated.push(t.clone()),
                None => {
                    log::warn!("alignment line {}: no translation for foreign line {i}", rec.line);
                    self.counts.missing_translation += 1;
                    return None;
                }
            }
        }
        let (long, split, tag) = if n_en == 1 {
            (en_texts[0].clone(), translated, TAG_TRANSLATED_SPLIT)
        } else {
            (translated[0].clone(), en_texts.clone(), TAG_TRANSLATED_LONG)
        };
        let id = if rec.doc_id.is_empty() { format!("{}", rec.line) } else { format!("{}:{}", rec.doc_id, rec.line) };
        let mut pair = PairRecord::new(id, Sentence::new(long), Sentence::new(&split[0]), Sentence::new(&split[1]));
        pair.pivot_language = self.cfg.pivot_language.clone();
        pair.source_corpus = self.cfg.source_corpus.clone();
        pair.tag(tag);
        if pair.long.len() < pair.split[0].len().max(pair.split[1].len()) {
            pair.tag(TAG_AMBIGUOUS_ORIENTATION);
        }
        self.counts.output += 1;
        Some(pair)
    }
}

/// Keeps the 1-2 and 2-1 alignments of `records`.
pub fn select_one_to_two<'r>(
    records: impl IntoIterator<Item = &'r AlignmentRecord>,
    cfg: &IngestConfig,
    translations: &Translations,
) -> (Vec<PairRecord>, IngestCounts) {
    let mut sel = Selector::new(cfg, translations);
    let pairs = records.into_iter().filter_map(|r| sel.select(r)).collect();
    (pairs, sel.counts)
}
