//! Corpus-level BLEU.
//!
//! Clipped n-gram matches and candidate n-gram totals are summed over the
//! corpus before the precisions are combined. The brevity penalty uses the
//! reference length closest to each output (the shorter one on ties).
//! Orders for which the corpus has no candidate n-grams at all are left out
//! of the geometric mean, so very short corpora are not scored 0 by default.

use std::collections::BTreeMap;

use super::{ngram_counts, normalize, MetricError};

pub const DEFAULT_MAX_N: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped matches per order, index 0 is unigrams.
    pub matches: Vec<usize>,
    /// Candidate n-grams per order.
    pub totals: Vec<usize>,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    /// `matches / totals` per order; `None` where there are no candidates.
    pub fn precisions(&self) -> Vec<Option<f64>> {
        self.matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| (t > 0).then(|| m as f64 / t as f64))
            .collect()
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    pub fn score(&self) -> f64 {
        let ps: Vec<f64> = self.precisions().into_iter().flatten().collect();
        if ps.is_empty() || ps.contains(&0.0) {
            return 0.0;
        }
        let log_mean = ps.iter().map(|p| p.ln()).sum::<f64>() / ps.len() as f64;
        100.0 * self.brevity_penalty() * log_mean.exp()
    }
}

fn closest_ref_len(hyp: usize, refs: &[Vec<String>]) -> usize {
    refs.iter().map(Vec::len).min_by_key(|&r| (r.abs_diff(hyp), r)).unwrap_or(0)
}

pub fn bleu_stats<S: AsRef<str>>(
    outputs: &[Vec<S>],
    references: &[Vec<Vec<S>>],
    max_n: usize,
) -> Result<BleuStats, MetricError> {
    if outputs.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            sources: outputs.len(),
            outputs: outputs.len(),
            references: references.len(),
        });
    }
    if outputs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if max_n == 0 {
        return Err(MetricError::BadOrder);
    }
    let mut st = BleuStats { matches: vec![0; max_n], totals: vec![0; max_n], hyp_len: 0, ref_len: 0 };
    for (i, (out, refs)) in outputs.iter().zip(references).enumerate() {
        if refs.is_empty() {
            return Err(MetricError::NoReferences { index: i });
        }
        let hyp = normalize(out);
        let refs: Vec<Vec<String>> = refs.iter().map(|r| normalize(r)).collect();
        st.hyp_len += hyp.len();
        st.ref_len += closest_ref_len(hyp.len(), &refs);
        for n in 1..=max_n {
            let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
            for r in &refs {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_default();
                    *e = (*e).max(c);
                }
            }
            for (g, c) in ngram_counts(&hyp, n) {
                st.totals[n - 1] += c;
                st.matches[n - 1] += c.min(max_ref.get(g).copied().unwrap_or(0));
            }
        }
    }
    Ok(st)
}

/// Corpus BLEU on a 0..100 scale.
pub fn bleu<S: AsRef<str>>(outputs: &[Vec<S>], references: &[Vec<Vec<S>>], max_n: usize) -> Result<f64, MetricError> {
    Ok(bleu_stats(outputs, references, max_n)?.score())
}

/// BLEU of the outputs against their own sources.
pub fn self_bleu<S: AsRef<str> + Clone>(outputs: &[Vec<S>], sources: &[Vec<S>]) -> Result<f64, MetricError> {
    let refs: Vec<Vec<Vec<S>>> = sources.iter().map(|s| vec![s.clone()]).collect();
    bleu(outputs, &refs, DEFAULT_MAX_N)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn identity_is_100() {
        let xs = vec![v("the cat sat on the mat ."), v("a b")];
        let refs: Vec<Vec<Vec<String>>> = xs.iter().map(|x| vec![x.clone()]).collect();
        assert_eq!(bleu(&xs, &refs, 4).unwrap(), 100.0);
        assert_eq!(self_bleu(&xs, &xs).unwrap(), 100.0);
    }

    #[test]
    fn hand_case() {
        // "the the the the" vs "the cat": unigram clipped to 1 of 4
        let st = bleu_stats(&[v("the the the the")], &[vec![v("the cat")]], 2).unwrap();
        assert_eq!(st.matches, [1, 0]);
        assert_eq!(st.totals, [4, 3]);
        assert_eq!(st.score(), 0.0);

        let st = bleu_stats(&[v("a b c")], &[vec![v("a b d e"), v("a b c d e f")]], 2).unwrap();
        assert_eq!(st.matches, [3, 2]);
        assert_eq!(st.ref_len, 4);
        assert_eq!(st.totals, [3, 2]);
        let want = 100.0 * (1.0 - 4.0 / 3.0f64).exp();
        assert!((st.score() - want).abs() < 1e-9);
    }

    #[test]
    fn short_corpus_drops_empty_orders() {
        let st = bleu_stats(&[v("a b")], &[vec![v("a b")]], 4).unwrap();
        assert_eq!(st.totals, [2, 1, 0, 0]);
        assert_eq!(st.score(), 100.0);
    }

    #[test]
    fn errors() {
        let none: Vec<Vec<String>> = vec![];
        assert!(matches!(bleu(&none, &[], 4), Err(MetricError::EmptyCorpus)));
        assert!(matches!(bleu(&[v("a")], &[], 4), Err(MetricError::LengthMismatch { .. })));
        assert!(matches!(bleu(&[v("a")], &[vec![]], 4), Err(MetricError::NoReferences { index: 0 })));
    }
}
