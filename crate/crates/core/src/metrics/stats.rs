//! Conservativeness and length statistics.

use std::collections::HashSet;
use std::fmt;

use crate::corpus::PairRecord;

use super::readability::sentences;
use super::{normalize, MetricError};

/// Share of output tokens (occurrences, case-insensitive) whose type never
/// appears in the source, in percent. `[SEP]` is ignored.
pub fn pct_new<S: AsRef<str>>(source: &[S], output: &[S]) -> Result<f64, MetricError> {
    let src = normalize(source);
    let out = normalize(output);
    if out.is_empty() {
        return Err(MetricError::EmptyOutput);
    }
    let types: HashSet<&str> = src.iter().map(String::as_str).collect();
    let new = out.iter().filter(|t| !types.contains(t.as_str())).count();
    Ok(100.0 * new as f64 / out.len() as f64)
}

/// Mean tokens per sentence, sentences split as for readability.
pub fn sentence_length<S: AsRef<str>>(outputs: &[Vec<S>]) -> Result<f64, MetricError> {
    let (mut tokens, mut sents) = (0usize, 0usize);
    for o in outputs {
        for s in sentences(o) {
            tokens += s.len();
            sents += 1;
        }
    }
    if sents == 0 {
        return Err(MetricError::EmptyOutput);
    }
    Ok(tokens as f64 / sents as f64)
}

/// Mean tokens per output, `[SEP]` excluded.
pub fn output_length<S: AsRef<str>>(outputs: &[Vec<S>]) -> Result<f64, MetricError> {
    if outputs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let total: usize = outputs.iter().map(|o| normalize(o).len()).sum();
    Ok(total as f64 / outputs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_pairs: usize,
    /// Distinct long sentences.
    pub n_unique: usize,
    /// Mean over pairs of the percentage of split-side tokens new w.r.t. the
    /// long sentence.
    pub pct_new: f64,
    /// Mean long-sentence length.
    pub long_len: f64,
    /// Mean length of the individual split sentences.
    pub split_len: f64,
    /// Mean tokens per sentence on the split side, re-segmented at
    /// sentence-final punctuation.
    pub slen: f64,
    /// Mean tokens of both split sentences together.
    pub olen: f64,
}

pub fn length_stats<'a>(pairs: impl IntoIterator<Item = &'a PairRecord>) -> Result<CorpusStats, MetricError> {
    let mut longs: HashSet<&str> = HashSet::new();
    let (mut n, mut pct, mut long_tok, mut split_tok) = (0usize, 0.0, 0usize, 0usize);
    let (mut seg_tok, mut seg_n) = (0usize, 0usize);
    for p in pairs {
        n += 1;
        longs.insert(p.long.text.as_str());
        let out = p.target_tokens();
        pct += pct_new(&p.long.tokens, &out)?;
        long_tok += p.long.len();
        split_tok += p.split[0].len() + p.split[1].len();
        for s in sentences(&out) {
            seg_tok += s.len();
            seg_n += 1;
        }
    }
    if n == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    let nf = n as f64;
    Ok(CorpusStats {
        n_pairs: n,
        n_unique: longs.len(),
        pct_new: pct / nf,
        long_len: long_tok as f64 / nf,
        split_len: split_tok as f64 / (2.0 * nf),
        slen: seg_tok as f64 / seg_n.max(1) as f64,
        olen: split_tok as f64 / nf,
    })
}

/// Corpus table row: #pairs, #unique, %new, Long, Split.
impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#pairs\t#unique\t%new\tLong\tSplit")?;
        write!(
            f,
            "{}\t{}\t{:.1}\t{:.1}\t{:.1}",
            self.n_pairs, self.n_unique, self.pct_new, self.long_len, self.split_len
        )
    }
}
