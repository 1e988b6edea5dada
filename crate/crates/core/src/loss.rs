//! Edit-aware sequence loss, evaluated on probabilities produced elsewhere.
//!
//! At each padded position the supervised token is the source token where
//! `delta` is 0 and the target token where it is 1. The loss is the mean
//! negative log probability of those tokens. The joint objective adds the
//! weighted cross-entropy of a three-way split-category classifier.
//!
//! Probability files are JSON Lines. The first line holds the vocabulary,
//! every following line one record:
//!
//! ```text
//! {"vocab": ["[PAD]", "[SEP]", "the", ...]}
//! {"id": "p1", "rows": [[0.1, 0.0, 0.9, ...], ...], "class_probs": [0.2, 0.7, 0.1]}
//! ```
//!
//! `rows` has one probability vector per padded position, each as wide as
//! the vocabulary. `class_probs` is optional and ordered like
//! [`SplitCategory::ALL`].

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::SplitCategory;
use crate::edit_align::EditAlignment;

/// Allowed deviation of a probability vector's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("{rows} probability rows for {positions} positions")]
    LengthMismatch { rows: usize, positions: usize },
    #[error("token `{token}` at position {position} is not in the vocabulary")]
    VocabMiss { token: String, position: usize },
    #[error("row {row} has {width} entries, vocabulary has {vocab}")]
    RowWidth { row: usize, width: usize, vocab: usize },
    #[error("row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },
    #[error("probability {value} outside [0, 1] in row {row}")]
    OutOfRange { row: usize, value: f64 },
    #[error("class probabilities sum to {0}")]
    ClassSum(f64),
    #[error("weight must be a non-negative number, got {0}")]
    BadWeight(f64),
    #[error("alignment has no positions")]
    Empty,
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Per-position distributions over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    pub vocab: Arc<Vocab>,
    pub rows: Vec<Vec<f64>>,
}

impl ProbMatrix {
    pub fn new(vocab: Arc<Vocab>, rows: Vec<Vec<f64>>) -> Result<Self, LossError> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != vocab.len() {
                return Err(LossError::RowWidth { row: r, width: row.len(), vocab: vocab.len() });
            }
            if let Some(&value) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(LossError::OutOfRange { row: r, value });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(LossError::RowSum { row: r, sum });
            }
        }
        Ok(ProbMatrix { vocab, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbs {
    pub probs: [f64; 3],
}

impl ClassProbs {
    pub fn new(probs: [f64; 3]) -> Result<Self, LossError> {
        if let Some(&value) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(LossError::OutOfRange { row: 0, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(LossError::ClassSum(sum));
        }
        Ok(ClassProbs { probs })
    }

    pub fn of(&self, category: SplitCategory) -> f64 {
        self.probs[category.index()]
    }
}

/// The teacher-forced history: source tokens where `delta` is 0, target
/// tokens where it is 1.
pub fn mix_history(alignment: &EditAlignment) -> Vec<String> {
    alignment
        .delta
        .iter()
        .zip(alignment.x_padded.iter().zip(&alignment.y_padded))
        .map(|(&d, (x, y))| if d == 0 { x.clone() } else { y.clone() })
        .collect()
}

/// Probability assigned to the supervised token at every position.
pub fn selected_probs(alignment: &EditAlignment, probs: &ProbMatrix) -> Result<Vec<f64>, LossError> {
    if probs.len() != alignment.len() {
        return Err(LossError::LengthMismatch { rows: probs.len(), positions: alignment.len() });
    }
    mix_history(alignment)
        .iter()
        .enumerate()
        .map(|(i, tok)| {
            let v = probs.vocab.get(tok).ok_or_else(|| LossError::VocabMiss { token: tok.clone(), position: i })?;
            Ok(probs.rows[i][v])
        })
        .collect()
}

/// Mean negative log probability of the supervised tokens. The
/// probabilities must already be conditioned on [`mix_history`]; that
/// cannot be checked here.
pub fn seq_loss(alignment: &EditAlignment, probs: &ProbMatrix) -> Result<f64, LossError> {
    if alignment.is_empty() {
        return Err(LossError::Empty);
    }
    let p = selected_probs(alignment, probs)?;
    Ok(p.iter().map(|p| -p.ln()).sum::<f64>() / p.len() as f64)
}

/// `seq + weight * -ln P(gold)`. A zero gold probability gives +inf.
pub fn joint_loss(seq: f64, cls: &ClassProbs, gold: SplitCategory, weight: f64) -> Result<f64, LossError> {
    if weight.is_nan() || weight < 0.0 {
        return Err(LossError::BadWeight(weight));
    }
    if weight == 0.0 {
        return Ok(seq);
    }
    let p = cls.of(gold);
    if p == 0.0 {
        log::warn!("classifier gives probability 0 to gold category {gold}; joint loss is infinite");
        return Ok(f64::INFINITY);
    }
    Ok(seq + weight * -p.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbEntry {
    pub matrix: ProbMatrix,
    pub class_probs: Option<ClassProbs>,
}

#[derive(Debug, Clone)]
pub struct ProbFile {
    pub vocab: Arc<Vocab>,
    pub entries: BTreeMap<String, ProbEntry>,
}

#[derive(Deserialize)]
struct Header {
    vocab: Vec<String>,
}

#[derive(Deserialize)]
struct Line {
    id: String,
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    class_probs: Option<[f64; 3]>,
}

pub fn read_prob_file(path: impl AsRef<Path>) -> Result<ProbFile, LossError> {
    parse_prob_file(BufReader::new(File::open(path)?))
}

pub fn parse_prob_file<R: BufRead>(reader: R) -> Result<ProbFile, LossError> {
    let mut lines = reader.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let (_, first) = lines.next().ok_or(LossError::Format { line: 1, message: "missing vocabulary line".into() })?;
    let header: Header =
        serde_json::from_str(&first?).map_err(|e| LossError::Format { line: 1, message: e.to_string() })?;
    let vocab = Arc::new(Vocab::new(header.vocab));
    let mut entries = BTreeMap::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let rec: Line =
            serde_json::from_str(&line?).map_err(|e| LossError::Format { line: line_no, message: e.to_string() })?;
        let with_line = |e: LossError| LossError::Format { line: line_no, message: e.to_string() };
        let matrix = ProbMatrix::new(vocab.clone(), rec.rows).map_err(with_line)?;
        let class_probs = rec.class_probs.map(ClassProbs::new).transpose().map_err(with_line)?;
        if entries.contains_key(&rec.id) {
            return Err(LossError::Format { line: line_no, message: format!("duplicate id `{}`", rec.id) });
        }
        entries.insert(rec.id, ProbEntry { matrix, class_probs });
    }
    Ok(ProbFile { vocab, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn alignment(x: &str, y: &str, delta: &[u8], split: usize) -> EditAlignment {
        EditAlignment { x_padded: v(x), y_padded: v(y), split_x: split, split_y: split, delta: delta.to_vec() }
    }

    /// Rows putting probability `p` on `tokens[i]` and the rest on "z".
    fn peaked(tokens: &[&str], p: &[f64]) -> ProbMatrix {
        let mut vocab: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        vocab.sort();
        vocab.dedup();
        vocab.push("z".into());
        let vocab = Arc::new(Vocab::new(vocab));
        let rows = tokens
            .iter()
            .zip(p)
            .map(|(t, &p)| {
                let mut row = vec![0.0; vocab.len()];
                row[vocab.get(t).unwrap()] = p;
                row[vocab.len() - 1] += 1.0 - p;
                row
            })
            .collect();
        ProbMatrix::new(vocab, rows).unwrap()
    }

    #[test]
    fn hand_case() {
        let a = alignment("a b [PAD]", "a [SEP] c", &[0, 1, 1], 1);
        let m = peaked(&["a", "[SEP]", "c"], &[0.5, 0.8, 0.25]);
        let want = -(0.5f64.ln() + 0.8f64.ln() + 0.25f64.ln()) / 3.0;
        assert!((seq_loss(&a, &m).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.76753).abs() < 1e-5);
    }

    #[test]
    fn history_mixes_by_delta() {
        let a = alignment(
            "The virus spreads and [PAD] [PAD] can kill",
            "The virus spreads . [SEP] It can kill",
            &[0, 0, 0, 1, 1, 1, 0, 0],
            4,
        );
        assert_eq!(mix_history(&a), v("The virus spreads . [SEP] It can kill"));
        let ones = EditAlignment { delta: vec![1; 8], ..a.clone() };
        assert_eq!(mix_history(&ones), a.y_padded);
        let zeros = EditAlignment { delta: vec![0; 8], ..a.clone() };
        assert_eq!(mix_history(&zeros), a.x_padded);
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let a = alignment("a [PAD]", "a [SEP]", &[0, 1], 1);
        assert_eq!(seq_loss(&a, &peaked(&["a", "[SEP]"], &[1.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let a = alignment("a [PAD]", "a [SEP]", &[0, 1], 1);
        assert!(matches!(seq_loss(&a, &peaked(&["a"], &[1.0])), Err(LossError::LengthMismatch { .. })));
        assert!(matches!(seq_loss(&a, &peaked(&["a", "b"], &[1.0, 1.0])), Err(LossError::VocabMiss { position: 1, .. })));
        let vocab = Arc::new(Vocab::new(v("a b")));
        assert!(matches!(ProbMatrix::new(vocab.clone(), vec![vec![0.5, 0.4]]), Err(LossError::RowSum { .. })));
        assert!(matches!(ProbMatrix::new(vocab, vec![vec![1.0]]), Err(LossError::RowWidth { .. })));
    }

    #[test]
    fn joint() {
        let cls = ClassProbs::new([0.5, 0.25, 0.25]).unwrap();
        let j = joint_loss(0.5, &cls, SplitCategory::DirectInsertion, 1.0).unwrap();
        assert!((j - (0.5 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert!((j - 1.19314).abs() < 1e-5);
        assert_eq!(joint_loss(0.5, &cls, SplitCategory::ChangesNearSplit, 0.0).unwrap(), 0.5);
        let sure = ClassProbs::new([0.0, 1.0, 0.0]).unwrap();
        assert_eq!(joint_loss(0.3, &sure, SplitCategory::ChangesNearSplit, 1.0).unwrap(), 0.3);
        assert_eq!(joint_loss(0.3, &sure, SplitCategory::DirectInsertion, 1.0).unwrap(), f64::INFINITY);
        assert!(joint_loss(0.3, &sure, SplitCategory::DirectInsertion, -1.0).is_err());
        assert!(ClassProbs::new([0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn prob_file() {
        let text = concat!(
            "{\"vocab\": [\"a\", \"[SEP]\"]}\n",
            "{\"id\": \"p\", \"rows\": [[1.0, 0.0], [0.5, 0.5]], \"class_probs\": [0.2, 0.3, 0.5]}\n",
            "\n",
            "{\"id\": \"q\", \"rows\": []}\n",
        );
        let f = parse_prob_file(text.as_bytes()).unwrap();
        assert_eq!(f.entries.len(), 2);
        assert_eq!(f.entries["p"].class_probs.unwrap().probs, [0.2, 0.3, 0.5]);
        assert!(f.entries["q"].class_probs.is_none());
        let a = alignment("a [PAD]", "a [SEP]", &[0, 1], 1);
        let loss = seq_loss(&a, &f.entries["p"].matrix).unwrap();
        assert!((loss - std::f64::consts::LN_2 / 2.0).abs() < 1e-12);

        let dup = "{\"vocab\": [\"a\"]}\n{\"id\": \"p\", \"rows\": []}\n{\"id\": \"p\", \"rows\": []}\n";
        assert!(matches!(parse_prob_file(dup.as_bytes()), Err(LossError::Format { line: 3, .. })));
        let bad = "{\"vocab\": [\"a\"]}\n{\"id\": \"p\", \"rows\": [[0.3]]}\n";
        assert!(matches!(parse_prob_file(bad.as_bytes()), Err(LossError::Format { line: 2, .. })));
    }
}
