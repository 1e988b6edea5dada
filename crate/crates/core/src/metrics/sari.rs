//! SARI with optional paraphrase matching.
//!
//! For each order n the source, output and reference n-grams are compared.
//! Source and output counts are multiplied by the number of references so
//! they are on the same scale as the summed reference counts.
//!
//! - keep: F1. Precision is over kept n-grams (in source and output),
//!   recall over n-grams both in the source and a reference.
//! - del: precision over n-grams deleted from the source that no reference
//!   keeps.
//! - add: F1 over n-gram sets new in the output, against n-grams new in the
//!   references.
//!
//! A component with nothing to score is 0. Each component is averaged over
//! n = 1..=max_n and scaled to 0..100; SARI is their mean.
//!
//! With a paraphrase table, an output n-gram absent from the references
//! still counts as correct when one of its paraphrases occurs in them. This
//! only affects output-side matches (keep precision, add precision and add
//! recall), so dropping the table never raises a score.

use std::collections::{BTreeMap, BTreeSet};

use super::{count_occurrences, ngram_counts, normalize, MetricError, ParaphraseTable};

pub const DEFAULT_MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SariScore {
    pub sari: f64,
    pub add: f64,
    pub keep: f64,
    pub del: f64,
}

/// Unscaled per-order components, each in 0..=1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SariComponents {
    pub add: f64,
    pub keep: f64,
    pub del: f64,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

struct Sides<'a> {
    src: &'a [String],
    out: &'a [String],
    refs: &'a [Vec<String>],
    table: Option<&'a ParaphraseTable>,
}

impl Sides<'_> {
    fn ref_occurrences(&self, phrase: &[&str]) -> usize {
        self.refs.iter().map(|r| count_occurrences(r, phrase)).sum()
    }

    /// Reference count of `g`, or of its best paraphrase when `g` itself is
    /// absent.
    fn ref_count_eff(&self, g: &[String], exact: usize) -> usize {
        match self.table {
            Some(t) if exact == 0 => t
                .paraphrases(&g.join(" "))
                .map(|p| self.ref_occurrences(&p.split(' ').collect::<Vec<_>>()))
                .max()
                .unwrap_or(0),
            _ => exact,
        }
    }

    /// Some paraphrase of the reference n-gram `g` is newly added in the
    /// output.
    fn paraphrase_added(&self, g: &[String]) -> bool {
        let Some(t) = self.table else { return false };
        t.paraphrases(&g.join(" ")).any(|p| {
            let p: Vec<&str> = p.split(' ').collect();
            count_occurrences(self.out, &p) > 0 && count_occurrences(self.src, &p) == 0
        })
    }
}

/// Components for a single order `n` on normalized tokens.
pub fn sari_ngram(
    src: &[String],
    out: &[String],
    refs: &[Vec<String>],
    table: Option<&ParaphraseTable>,
    n: usize,
) -> SariComponents {
    let k = refs.len();
    let sides = Sides { src, out, refs, table };
    let s: BTreeMap<&[String], usize> = ngram_counts(src, n).into_iter().map(|(g, c)| (g, c * k)).collect();
    let c: BTreeMap<&[String], usize> = ngram_counts(out, n).into_iter().map(|(g, c)| (g, c * k)).collect();
    let mut r: BTreeMap<&[String], usize> = BTreeMap::new();
    for rf in refs {
        for (g, cnt) in ngram_counts(rf, n) {
            *r.entry(g).or_default() += cnt;
        }
    }
    let rc = |g: &[String]| r.get(g).copied().unwrap_or(0);

    // keep
    let mut keep_p = 0.0;
    let mut n_keep = 0usize;
    let mut keep_good: BTreeMap<&[String], usize> = BTreeMap::new();
    for (&g, &sc) in &s {
        if let Some(&cc) = c.get(g) {
            let kept = sc.min(cc);
            let good = kept.min(sides.ref_count_eff(g, rc(g)));
            keep_p += good as f64 / kept as f64;
            n_keep += 1;
            keep_good.insert(g, kept.min(rc(g)));
        }
    }
    let keep_p = if n_keep > 0 { keep_p / n_keep as f64 } else { 0.0 };
    let mut keep_r = 0.0;
    let mut n_all = 0usize;
    for (&g, &sc) in &s {
        let all = sc.min(rc(g));
        if all > 0 {
            keep_r += keep_good.get(g).copied().unwrap_or(0) as f64 / all as f64;
            n_all += 1;
        }
    }
    let keep_r = if n_all > 0 { keep_r / n_all as f64 } else { 0.0 };

    // delete
    let mut del_p = 0.0;
    let mut n_del = 0usize;
    for (&g, &sc) in &s {
        let deleted = sc.saturating_sub(c.get(g).copied().unwrap_or(0));
        if deleted > 0 {
            del_p += deleted.saturating_sub(rc(g)) as f64 / deleted as f64;
            n_del += 1;
        }
    }
    let del_p = if n_del > 0 { del_p / n_del as f64 } else { 0.0 };

    // add
    let added: BTreeSet<&[String]> = c.keys().copied().filter(|g| !s.contains_key(g)).collect();
    let good_added = added.iter().filter(|g| sides.ref_count_eff(g, rc(g)) > 0).count();
    let ref_added: Vec<&[String]> = r.keys().copied().filter(|g| !s.contains_key(g)).collect();
    let covered = ref_added.iter().filter(|g| added.contains(*g) || sides.paraphrase_added(g)).count();
    let add_p = if added.is_empty() { 0.0 } else { good_added as f64 / added.len() as f64 };
    let add_r = if ref_added.is_empty() { 0.0 } else { covered as f64 / ref_added.len() as f64 };

    SariComponents { add: f1(add_p, add_r), keep: f1(keep_p, keep_r), del: del_p }
}

/// Sentence-level SARI. Tokens are lowercased and `[SEP]` is removed first.
pub fn sari<S: AsRef<str>>(
    source: &[S],
    output: &[S],
    references: &[Vec<S>],
    table: Option<&ParaphraseTable>,
    max_n: usize,
) -> Result<SariScore, MetricError> {
    if references.is_empty() {
        return Err(MetricError::NoReferences { index: 0 });
    }
    if max_n == 0 {
        return Err(MetricError::BadOrder);
    }
    let src = normalize(source);
    let out = normalize(output);
    let refs: Vec<Vec<String>> = references.iter().map(|r| normalize(r)).collect();
    let (mut add, mut keep, mut del) = (0.0, 0.0, 0.0);
    for n in 1..=max_n {
        let c = sari_ngram(&src, &out, &refs, table, n);
        add += c.add;
        keep += c.keep;
        del += c.del;
    }
    let m = max_n as f64;
    let (add, keep, del) = (100.0 * add / m, 100.0 * keep / m, 100.0 * del / m);
    Ok(SariScore { sari: (add + keep + del) / 3.0, add, keep, del })
}

/// Mean of sentence-level scores.
pub fn corpus_sari<S: AsRef<str>>(
    sources: &[Vec<S>],
    outputs: &[Vec<S>],
    references: &[Vec<Vec<S>>],
    table: Option<&ParaphraseTable>,
    max_n: usize,
) -> Result<SariScore, MetricError> {
    if sources.len() != outputs.len() || sources.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            sources: sources.len(),
            outputs: outputs.len(),
            references: references.len(),
        });
    }
    if sources.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut total = SariScore { sari: 0.0, add: 0.0, keep: 0.0, del: 0.0 };
    for (i, ((s, o), r)) in sources.iter().zip(outputs).zip(references).enumerate() {
        let sc = sari(s, o, r, table, max_n).map_err(|e| match e {
            MetricError::NoReferences { .. } => MetricError::NoReferences { index: i },
            e => e,
        })?;
        total.add += sc.add;
        total.keep += sc.keep;
        total.del += sc.del;
    }
    let n = sources.len() as f64;
    let (add, keep, del) = (total.add / n, total.keep / n, total.del / n);
    Ok(SariScore { sari: (add + keep + del) / 3.0, add, keep, del })
}
