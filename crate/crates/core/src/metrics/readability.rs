//! Flesch-Kincaid grade level.
//!
//! Counts are aggregated over the whole corpus:
//! `0.39 * words / sentences + 11.8 * syllables / words - 15.59`.
//!
//! A sentence ends at `[SEP]` or after a token ending in `.`, `!` or `?`;
//! a trailing unterminated stretch also counts. Words are tokens with at
//! least one alphanumeric character.
//!
//! Syllables are groups of consecutive vowels (`aeiouy`) among the word's
//! letters. A final silent `e` is not counted unless the word ends in a
//! consonant followed by `le`. Every word has at least one syllable.

use crate::text::SEP;

use super::MetricError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadabilityCounts {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
}

impl ReadabilityCounts {
    pub fn fkgl(&self) -> Result<f64, MetricError> {
        if self.words == 0 || self.sentences == 0 {
            return Err(MetricError::NoWords);
        }
        let w = self.words as f64;
        Ok(0.39 * w / self.sentences as f64 + 11.8 * self.syllables as f64 / w - 15.59)
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

pub fn syllables(word: &str) -> usize {
    let letters: Vec<char> = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return 1;
    }
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if groups > 1 && letters[n - 1] == 'e' {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le && !is_vowel(letters[n - 2]) {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Splits a token sequence into sentences; `[SEP]` tokens are dropped.
pub fn sentences<S: AsRef<str>>(tokens: &[S]) -> Vec<Vec<&str>> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for t in tokens {
        let t = t.as_ref();
        if t == SEP {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        cur.push(t);
        if t.ends_with(['.', '!', '?']) {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

pub fn readability_counts<S: AsRef<str>>(outputs: &[Vec<S>]) -> ReadabilityCounts {
    let mut c = ReadabilityCounts::default();
    for out in outputs {
        let sents = sentences(out);
        c.sentences += sents.iter().filter(|s| s.iter().any(|t| is_word(t))).count();
        for t in sents.iter().flatten().filter(|t| is_word(t)) {
            c.words += 1;
            c.syllables += syllables(t);
        }
    }
    c
}

pub fn fkgl<S: AsRef<str>>(outputs: &[Vec<S>]) -> Result<f64, MetricError> {
    readability_counts(outputs).fkgl()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn cat_sat() {
        let k = fkgl(&[v("The cat sat.")]).unwrap();
        assert!((k - -2.62).abs() < 1e-9);
    }

    #[test]
    fn repetition_is_invariant() {
        let one = fkgl(&[v("The ornithologist considered it .")]).unwrap();
        let two = fkgl(&[v("The ornithologist considered it . [SEP] The ornithologist considered it .")]).unwrap();
        assert!((one - two).abs() < 1e-9);
    }

    #[test]
    fn longer_sentences_raise_grade() {
        let short = fkgl(&[v("a cat sat . a dog ran .")]).unwrap();
        let long = fkgl(&[v("a cat sat a dog ran .")]).unwrap();
        assert!(long > short);
    }

    #[test]
    fn syllable_heuristic() {
        assert_eq!(syllables("cat"), 1);
        assert_eq!(syllables("make"), 1);
        assert_eq!(syllables("the"), 1);
        assert_eq!(syllables("table"), 2);
        assert_eq!(syllables("free"), 1);
        assert_eq!(syllables("beautiful"), 3);
        assert_eq!(syllables("rhythm"), 1);
        assert_eq!(syllables("42"), 1);
    }

    #[test]
    fn sentence_split() {
        let toks = v("A b . [SEP] c d ! e");
        let s = sentences(&toks);
        assert_eq!(s, vec![vec!["A", "b", "."], vec!["c", "d", "!"], vec!["e"]]);
        assert!(matches!(fkgl(&[v(". ,")]), Err(MetricError::NoWords)));
    }
}
