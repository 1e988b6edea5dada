//! Noise and misalignment filters for aligned pairs.
//!
//! Checks run in a fixed order and the first failure becomes the rejection
//! reason:
//!
//! 1. reserved tokens (`[SEP]`, `[PAD]`) anywhere in the pair
//! 2. a token of the long sentence with punctuation pasted between two
//!    sentences (`ramp.The`)
//! 3. the long sentence's dependency graph splits into several components
//! 4. lexical overlap ratio below `min_overlap`
//! 5. a sentence without a verb
//! 6. similarity below `min_similarity`

use std::collections::{HashMap, HashSet, VecDeque};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PairRecord, Sentence, Status};
use crate::parse::{DependencyGraph, GraphError};
use crate::text;

pub const SCORE_OVERLAP: &str = "overlap_r";
pub const SCORE_SIMILARITY: &str = "similarity";
pub const TAG_FALLBACK_LEMMAS: &str = "fallback_lemmas";
pub const TAG_FALLBACK_SIMILARITY: &str = "fallback_similarity";
pub const TAG_MISSING_POS: &str = "missing_pos";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("{0} sentence has no tokens")]
    EmptySentence(&'static str),
    #[error("empty lemma set in {0}")]
    EmptyLemmaSet(&'static str),
    #[error("missing annotation: {0}")]
    MissingAnnotation(&'static str),
    #[error("dependency graph: {0}")]
    Graph(#[from] GraphError),
    #[error("dependency graph covers {graph} tokens but the sentence has {tokens}")]
    GraphTokenMismatch { graph: usize, tokens: usize },
    #[error("invalid filter config: {0}")]
    Config(String),
}

/// What to do with a sentence that has no UPOS layer and no lexicon hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPosPolicy {
    Pass,
    #[default]
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_overlap: f64,
    pub min_similarity: f64,
    pub require_verb: bool,
    pub check_connectivity: bool,
    /// Use token F1 between long and split when no similarity score is
    /// supplied. This is a lexical stand-in, not a neural score.
    pub similarity_fallback: bool,
    pub missing_pos: MissingPosPolicy,
    /// Lowercased verb forms consulted when UPOS tags are missing.
    pub verb_lexicon: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_overlap: 0.25,
            min_similarity: 0.4,
            require_verb: true,
            check_connectivity: true,
            similarity_fallback: true,
            missing_pos: MissingPosPolicy::Fail,
            verb_lexicon: Vec::new(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        for (name, v) in [("min_overlap", self.min_overlap), ("min_similarity", self.min_similarity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(FilterError::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    ReservedToken,
    IntratokenPunct,
    Disconnected,
    LowOverlap,
    MissingVerb,
    LowSimilarity,
}

impl RejectReason {
    pub const ALL: [RejectReason; 6] = [
        RejectReason::ReservedToken,
        RejectReason::IntratokenPunct,
        RejectReason::Disconnected,
        RejectReason::LowOverlap,
        RejectReason::MissingVerb,
        RejectReason::LowSimilarity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::ReservedToken => "reserved_token",
            RejectReason::IntratokenPunct => "intratoken_punct",
            RejectReason::Disconnected => "disconnected",
            RejectReason::LowOverlap => "low_overlap",
            RejectReason::MissingVerb => "missing_verb",
            RejectReason::LowSimilarity => "low_similarity",
        }
    }
}

/// True iff some token has a punctuation character with at least two
/// letters before it and at least two letters after it inside the token.
pub fn has_intratoken_punct(sentence: &Sentence) -> bool {
    sentence.tokens.iter().any(|t| token_has_inner_punct(t))
}

fn token_has_inner_punct(token: &str) -> bool {
    let total = token.chars().filter(|&c| text::is_letter(c)).count();
    let mut before = 0;
    for c in token.chars() {
        if text::is_letter(c) {
            before += 1;
        } else if text::is_punct(c) && before >= 2 && total - before >= 2 {
            return true;
        }
    }
    false
}

/// True iff the undirected head-dependent graph over all tokens has exactly
/// one component. Attachments to the artificial root are not edges.
pub fn is_connected(dep: &DependencyGraph) -> Result<bool, GraphError> {
    dep.validate()?;
    if dep.n == 0 {
        return Ok(false);
    }
    let mut adj = vec![Vec::new(); dep.n];
    for (i, &h) in dep.heads.iter().enumerate() {
        if h != 0 && h - 1 != i {
            adj[i].push(h - 1);
            adj[h - 1].push(i);
        }
    }
    let mut seen = vec![false; dep.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    Ok(reached == dep.n)
}

/// Unique lemmas of a sentence. Falls back to lowercased surface tokens when
/// no lemma layer is present; the flag reports the fallback.
pub fn lemma_set(sentence: &Sentence) -> (HashSet<String>, bool) {
    match &sentence.lemmas {
        Some(lemmas) => (lemmas.iter().cloned().collect(), false),
        None => (sentence.tokens.iter().map(|t| t.to_lowercase()).collect(), true),
    }
}

/// Lexical overlap ratio over lemma sets: the minimum of the coverage of
/// each split half by the long sentence and the coverage of their union.
pub fn overlap_ratio(long: &Sentence, s1: &Sentence, s2: &Sentence) -> Result<f64, FilterError> {
    let (l, _) = lemma_set(long);
    let (a, _) = lemma_set(s1);
    let (b, _) = lemma_set(s2);
    overlap_ratio_sets(&l, &a, &b)
}

pub fn overlap_ratio_sets(
    long: &HashSet<String>,
    s1: &HashSet<String>,
    s2: &HashSet<String>,
) -> Result<f64, FilterError> {
    for (name, set) in [("long", long), ("split[0]", s1), ("split[1]", s2)] {
        if set.is_empty() {
            return Err(FilterError::EmptyLemmaSet(name));
        }
    }
    let cover = |part: &HashSet<String>| part.iter().filter(|x| long.contains(*x)).count() as f64 / part.len() as f64;
    let union: HashSet<String> = s1.union(s2).cloned().collect();
    Ok(cover(s1).min(cover(s2)).min(cover(&union)))
}

/// Whether any token is tagged VERB or AUX. `None` when there is no UPOS layer.
pub fn contains_verb(sentence: &Sentence) -> Option<bool> {
    sentence
        .upos
        .as_ref()
        .map(|tags| tags.iter().any(|t| t == "VERB" || t == "AUX"))
}

/// Multiset token F1 between the long sentence and the concatenated split,
/// lowercased. Used only when no external similarity is available.
pub fn token_f1(long: &Sentence, split: &[Sentence; 2]) -> f64 {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in &long.tokens {
        *counts.entry(t.to_lowercase()).or_default() += 1;
    }
    let split_len = split[0].len() + split[1].len();
    let mut hit = 0usize;
    for t in split.iter().flat_map(|s| &s.tokens) {
        if let Some(c) = counts.get_mut(&t.to_lowercase()) {
            if *c > 0 {
                *c -= 1;
                hit += 1;
            }
        }
    }
    if hit == 0 {
        return 0.0;
    }
    let p = hit as f64 / split_len as f64;
    let r = hit as f64 / long.len() as f64;
    2.0 * p * r / (p + r)
}

fn verb_check(sentence: &Sentence, cfg: &FilterConfig, record: &mut PairRecord) -> bool {
    if let Some(found) = contains_verb(sentence) {
        return found;
    }
    if !cfg.verb_lexicon.is_empty() {
        let hit = sentence
            .tokens
            .iter()
            .any(|t| cfg.verb_lexicon.iter().any(|v| *v == t.to_lowercase()));
        if hit {
            return true;
        }
    }
    warn!("record {}: no UPOS layer for verb check ({:?})", record.id, cfg.missing_pos);
    record.tag(TAG_MISSING_POS);
    cfg.missing_pos == MissingPosPolicy::Pass
}

/// Runs every check and marks the record `Filtered` or `Rejected(reason)`.
///
/// `sim` overrides `scores.similarity` from the record. The overlap ratio
/// and the similarity used are stored in `scores`.
pub fn run_filters(mut pair: PairRecord, cfg: &FilterConfig, sim: Option<f64>) -> Result<PairRecord, FilterError> {
    cfg.validate()?;
    let [s1, s2] = &pair.split;
    for (name, s) in [("long", &pair.long), ("split[0]", s1), ("split[1]", s2)] {
        if s.is_empty() {
            return Err(FilterError::EmptySentence(name));
        }
    }

    let reserved = [&pair.long, s1, s2]
        .iter()
        .any(|s| s.tokens.iter().any(|t| text::is_reserved(t)));

    let (l, fl) = lemma_set(&pair.long);
    let (a, fa) = lemma_set(s1);
    let (b, fb) = lemma_set(s2);
    let r = overlap_ratio_sets(&l, &a, &b)?;

    let graph = if cfg.check_connectivity {
        let g = pair
            .long
            .dependency_graph()
            .ok_or(FilterError::MissingAnnotation("dependency heads for the long sentence"))?;
        if g.n != pair.long.len() {
            return Err(FilterError::GraphTokenMismatch { graph: g.n, tokens: pair.long.len() });
        }
        Some(g)
    } else {
        None
    };

    let sim = match sim.or_else(|| pair.scores.get(SCORE_SIMILARITY).copied()) {
        Some(s) => Some(s),
        None if cfg.similarity_fallback => {
            pair.tag(TAG_FALLBACK_SIMILARITY);
            Some(token_f1(&pair.long, &pair.split))
        }
        None => None,
    };

    if fl || fa || fb {
        pair.tag(TAG_FALLBACK_LEMMAS);
    }
    pair.scores.insert(SCORE_OVERLAP.to_owned(), r);
    if let Some(s) = sim {
        pair.scores.insert(SCORE_SIMILARITY.to_owned(), s);
    }

    let reason = first_failure(&mut pair, cfg, reserved, graph.as_ref(), r, sim)?;
    pair.status = match reason {
        Some(reason) => Status::Rejected(reason.as_str().to_owned()),
        None => Status::Filtered,
    };
    Ok(pair)
}

fn first_failure(
    pair: &mut PairRecord,
    cfg: &FilterConfig,
    reserved: bool,
    graph: Option<&DependencyGraph>,
    r: f64,
    sim: Option<f64>,
) -> Result<Option<RejectReason>, FilterError> {
    if reserved {
        return Ok(Some(RejectReason::ReservedToken));
    }
    if has_intratoken_punct(&pair.long) {
        return Ok(Some(RejectReason::IntratokenPunct));
    }
    if let Some(g) = graph {
        if !is_connected(g)? {
            return Ok(Some(RejectReason::Disconnected));
        }
    }
    if r < cfg.min_overlap {
        return Ok(Some(RejectReason::LowOverlap));
    }
    if cfg.require_verb {
        let sentences = [pair.long.clone(), pair.split[0].clone(), pair.split[1].clone()];
        for s in &sentences {
            if !verb_check(s, cfg, pair) {
                return Ok(Some(RejectReason::MissingVerb));
            }
        }
    }
    if let Some(s) = sim {
        if s < cfg.min_similarity {
            return Ok(Some(RejectReason::LowSimilarity));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[&str]) -> HashSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn tok(t: &str) -> Sentence {
        Sentence::from_tokens(&[t])
    }

    #[test]
    fn intratoken_punct_cases() {
        assert!(has_intratoken_punct(&tok("ramp.The")));
        assert!(!has_intratoken_punct(&tok("U.S.")));
        assert!(!has_intratoken_punct(&tok("end.")));
        assert!(!has_intratoken_punct(&tok("e.g.")));
        assert!(!has_intratoken_punct(&tok("don't")));
        assert!(has_intratoken_punct(&tok("Straße!Die")));
        assert!(!has_intratoken_punct(&Sentence::new("He left . She stayed .")));
    }

    #[test]
    fn connectivity() {
        let tree = DependencyGraph::from_heads(&[2, 0, 2, 5, 2]);
        assert!(is_connected(&tree).unwrap());
        assert!(!is_connected(&DependencyGraph::from_heads(&[0, 0])).unwrap());
        assert!(!is_connected(&DependencyGraph::from_heads(&[2, 0, 0, 3])).unwrap());
        assert!(is_connected(&DependencyGraph::from_heads(&[0])).unwrap());
        assert!(!is_connected(&DependencyGraph::from_heads(&[])).unwrap());
        let bad = DependencyGraph { n: 3, heads: vec![0, 1], deprels: vec![] };
        assert!(is_connected(&bad).is_err());
    }

    #[test]
    fn overlap_examples() {
        let r = overlap_ratio_sets(&set(&["a", "b", "c"]), &set(&["a", "b"]), &set(&["c"])).unwrap();
        assert_eq!(r, 1.0);
        let r = overlap_ratio_sets(
            &set(&["the", "cat", "sat"]),
            &set(&["the", "cat", "ran"]),
            &set(&["dog", "sat"]),
        )
        .unwrap();
        assert_eq!(r, 0.5);
        assert!(matches!(
            overlap_ratio_sets(&set(&["a"]), &set(&[]), &set(&["a"])),
            Err(FilterError::EmptyLemmaSet("split[0]"))
        ));
    }

    #[test]
    fn overlap_uses_lowercased_tokens_without_lemmas() {
        let l = Sentence::new("The Cat sat");
        let r = overlap_ratio(&l, &Sentence::new("the cat"), &Sentence::new("SAT")).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn verb_detection() {
        let s = |tags: &[&str]| Sentence::from_tokens(&vec!["x"; tags.len()]).with_upos(tags);
        assert_eq!(contains_verb(&s(&["DET", "NOUN", "VERB"])), Some(true));
        assert_eq!(contains_verb(&s(&["DET", "NOUN", "PUNCT"])), Some(false));
        assert_eq!(contains_verb(&s(&["AUX", "DET", "NOUN"])), Some(true));
        assert_eq!(contains_verb(&Sentence::new("no tags")), None);
    }

    #[test]
    fn token_f1_values() {
        let long = Sentence::new("a b c d");
        let split = [Sentence::new("a b ."), Sentence::new("C d .")];
        // 4 hits, precision 4/6, recall 4/4
        let expected = 2.0 * (4.0 / 6.0) / (4.0 / 6.0 + 1.0);
        assert!((token_f1(&long, &split) - expected).abs() < 1e-12);
        assert_eq!(token_f1(&long, &[Sentence::new("x"), Sentence::new("y")]), 0.0);
    }

    fn annotated(tokens: &[&str], upos: &[&str], heads: &[usize]) -> Sentence {
        Sentence::from_tokens(tokens).with_upos(upos).with_heads(heads)
    }

    fn pair(long: Sentence) -> PairRecord {
        PairRecord::new(
            "p",
            long,
            annotated(&["He", "left", "."], &["PRON", "VERB", "PUNCT"], &[2, 0, 2]),
            annotated(&["She", "stayed", "."], &["PRON", "VERB", "PUNCT"], &[2, 0, 2]),
        )
    }

    #[test]
    fn clean_pair_is_filtered() {
        let long = annotated(
            &["He", "left", "and", "she", "stayed", "."],
            &["PRON", "VERB", "CCONJ", "PRON", "VERB", "PUNCT"],
            &[2, 0, 5, 5, 2, 2],
        );
        let out = run_filters(pair(long), &FilterConfig::default(), Some(0.9)).unwrap();
        assert_eq!(out.status, Status::Filtered);
        assert_eq!(out.scores[SCORE_SIMILARITY], 0.9);
        assert!(out.has_tag(TAG_FALLBACK_LEMMAS));
        let again = run_filters(out.clone(), &FilterConfig::default(), None).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn pasted_sentences_are_rejected() {
        let long = annotated(
            &["He", "left.She", "stayed", "and", "cried."],
            &["PRON", "VERB", "VERB", "CCONJ", "VERB"],
            &[2, 0, 2, 5, 3],
        );
        let out = run_filters(pair(long), &FilterConfig::default(), Some(0.9)).unwrap();
        assert_eq!(out.status, Status::Rejected("intratoken_punct".into()));
    }

    #[test]
    fn low_overlap_is_rejected() {
        let long = annotated(
            &["Birds", "sing", "loudly", "today", "outside", "now", "again", "too", "often", "there"],
            &["NOUN", "VERB", "ADV", "NOUN", "ADV", "ADV", "ADV", "ADV", "ADV", "ADV"],
            &[2, 0, 2, 2, 2, 2, 2, 2, 2, 2],
        );
        let out = run_filters(pair(long), &FilterConfig::default(), Some(0.9)).unwrap();
        assert_eq!(out.status, Status::Rejected("low_overlap".into()));
        assert_eq!(out.scores[SCORE_OVERLAP], 0.0);
    }

    #[test]
    fn reserved_tokens_and_missing_heads() {
        let long = annotated(&["He", "[SEP]", "left", "."], &["PRON", "X", "VERB", "PUNCT"], &[3, 3, 0, 3]);
        let out = run_filters(pair(long), &FilterConfig::default(), Some(0.9)).unwrap();
        assert_eq!(out.status, Status::Rejected("reserved_token".into()));

        let long = Sentence::new("He left and she stayed .");
        assert!(matches!(
            run_filters(pair(long.clone()), &FilterConfig::default(), None),
            Err(FilterError::MissingAnnotation(_))
        ));
        let cfg = FilterConfig { check_connectivity: false, ..FilterConfig::default() };
        let out = run_filters(pair(long), &cfg, None).unwrap();
        assert_eq!(out.status, Status::Rejected("missing_verb".into()));
        assert!(out.has_tag(TAG_MISSING_POS));
        assert!(out.has_tag(TAG_FALLBACK_SIMILARITY));
    }

    #[test]
    fn missing_pos_policy_and_lexicon() {
        let long = Sentence::new("He left and she stayed .");
        let pass = FilterConfig { check_connectivity: false, missing_pos: MissingPosPolicy::Pass, ..Default::default() };
        assert_eq!(run_filters(pair(long.clone()), &pass, Some(0.9)).unwrap().status, Status::Filtered);
        let lex = FilterConfig {
            check_connectivity: false,
            verb_lexicon: vec!["left".into(), "stayed".into()],
            ..Default::default()
        };
        let out = run_filters(pair(long), &lex, Some(0.9)).unwrap();
        assert_eq!(out.status, Status::Filtered);
        assert!(!out.has_tag(TAG_MISSING_POS));
    }

    #[test]
    fn config_bounds() {
        let cfg = FilterConfig { min_overlap: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn overlap_bounded_and_symmetric(
            l in prop::collection::hash_set("[a-f]", 1..6),
            a in prop::collection::hash_set("[a-h]", 1..6),
            b in prop::collection::hash_set("[a-h]", 1..6),
        ) {
            let r1 = overlap_ratio_sets(&l, &a, &b).unwrap();
            let r2 = overlap_ratio_sets(&l, &b, &a).unwrap();
            prop_assert_eq!(r1, r2);
            prop_assert!((0.0..=1.0).contains(&r1));
            let mut full = l.clone();
            full.extend(a.iter().cloned());
            full.extend(b.iter().cloned());
            prop_assert_eq!(overlap_ratio_sets(&full, &a, &b).unwrap(), 1.0);
        }
    }
}
