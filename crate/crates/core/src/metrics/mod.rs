//! Output scoring and corpus statistics.
//!
//! All scorers take whitespace tokens. N-gram metrics lowercase tokens and
//! drop `[SEP]` and `[PAD]` first.

pub mod bleu;
pub mod paraphrase;
pub mod readability;
pub mod sari;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use thiserror::Error;

pub use bleu::{bleu, bleu_stats, self_bleu, BleuStats};
pub use paraphrase::{parse_ppdb, read_ppdb, ParaphraseTable};
pub use readability::{fkgl, syllables};
pub use sari::{corpus_sari, sari, SariScore};
pub use stats::{length_stats, pct_new, CorpusStats};

use crate::text;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("sentence {index} has no references")]
    NoReferences { index: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("output has no tokens")]
    EmptyOutput,
    #[error("no words to score")]
    NoWords,
    #[error("n-gram order must be at least 1")]
    BadOrder,
    #[error("{sources} sources, {outputs} outputs, {references} reference sets")]
    LengthMismatch { sources: usize, outputs: usize, references: usize },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Lowercases and drops reserved tokens.
pub fn normalize<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !text::is_reserved(t))
        .map(str::to_lowercase)
        .collect()
}

/// Multiset of the order-`n` n-grams.
pub fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut m = BTreeMap::new();
    if n > 0 {
        for w in tokens.windows(n) {
            *m.entry(w).or_default() += 1;
        }
    }
    m
}

/// Occurrences of `phrase` as a contiguous run in `tokens`.
pub fn count_occurrences(tokens: &[String], phrase: &[&str]) -> usize {
    if phrase.is_empty() {
        return 0;
    }
    tokens.windows(phrase.len()).filter(|w| w.iter().zip(phrase).all(|(a, b)| a == b)).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub sari: f64,
    pub sari_add: f64,
    pub sari_keep: f64,
    pub sari_del: f64,
    /// Supplied from outside; not computed here.
    pub bert_score: Option<f64>,
    pub fkgl: f64,
    pub bleu: f64,
    pub slen: f64,
    pub olen: f64,
    pub self_bleu: f64,
    pub pct_new: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOptions<'a> {
    pub max_n: usize,
    pub table: Option<&'a ParaphraseTable>,
    pub bert_score: Option<f64>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        EvalOptions { max_n: sari::DEFAULT_MAX_N, table: None, bert_score: None }
    }
}

/// Scores system outputs against their sources and references.
pub fn evaluate<S: AsRef<str> + Clone>(
    sources: &[Vec<S>],
    outputs: &[Vec<S>],
    references: &[Vec<Vec<S>>],
    opts: &EvalOptions<'_>,
) -> Result<MetricReport, MetricError> {
    let s = corpus_sari(sources, outputs, references, opts.table, opts.max_n)?;
    let pct: f64 = sources.iter().zip(outputs).map(|(s, o)| pct_new(s, o)).sum::<Result<f64, _>>()?;
    Ok(MetricReport {
        sari: s.sari,
        sari_add: s.add,
        sari_keep: s.keep,
        sari_del: s.del,
        bert_score: opts.bert_score,
        fkgl: fkgl(outputs)?,
        bleu: bleu(outputs, references, bleu::DEFAULT_MAX_N)?,
        slen: stats::sentence_length(outputs)?,
        olen: stats::output_length(outputs)?,
        self_bleu: self_bleu(outputs, sources)?,
        pct_new: pct / sources.len() as f64,
    })
}

pub const REPORT_COLUMNS: [&str; 11] =
    ["SARI", "add", "keep", "del", "BScore", "FK", "BLEU", "SLen", "OLen", "sBLEU", "%new"];

/// Header and one row, tab-separated, one decimal.
impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", REPORT_COLUMNS.join("\t"))?;
        let bs = self.bert_score.map_or_else(|| "-".to_owned(), |b| format!("{b:.1}"));
        write!(
            f,
            "{:.1}\t{:.1}\t{:.1}\t{:.1}\t{}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}",
            self.sari,
            self.sari_add,
            self.sari_keep,
            self.sari_del,
            bs,
            self.fkgl,
            self.bleu,
            self.slen,
            self.olen,
            self.self_bleu,
            self.pct_new
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn source_as_output() {
        let srcs = vec![v("the cat sat on the mat ."), v("it rained all day and we stayed in .")];
        let refs = vec![vec![v("the cat sat . [SEP] it was on the mat .")], vec![v("it rained all day . [SEP] we stayed in .")]];
        let r = evaluate(&srcs, &srcs, &refs, &EvalOptions::default()).unwrap();
        assert_eq!(r.sari_add, 0.0);
        assert_eq!(r.sari_del, 0.0);
        assert_eq!(r.pct_new, 0.0);
        assert_eq!(r.self_bleu, 100.0);
        assert!((r.sari - r.sari_keep / 3.0).abs() < 1e-12);
        let text = r.to_string();
        assert!(text.starts_with("SARI\tadd\tkeep\tdel\tBScore\tFK\tBLEU\tSLen\tOLen\tsBLEU\t%new\n"));
        assert!(text.contains("\t0.0\t-\t"));
    }

    #[test]
    fn helpers() {
        assert_eq!(normalize(&v("A [SEP] b [PAD]")), v("a b"));
        let t = v("a b a b");
        assert_eq!(ngram_counts(&t, 2)[&t[..2]], 2);
        assert!(ngram_counts(&t, 5).is_empty());
        assert_eq!(count_occurrences(&t, &["a", "b"]), 2);
        assert_eq!(count_occurrences(&t, &[]), 0);
    }
}
