//! Split categorization.
//!
//! Rules are tried in order and the first match wins:
//!
//! 1. first-level `S CC S`, a colon or semicolon inside the long sentence,
//!    or a diff that only inserts the split → direct insertion
//! 2. first-level `S NP VP` or `SBAR NP VP` → changes across the sentence
//! 3. first-level `VP CC VP`, or the first five and last five source tokens
//!    copied → changes near the split
//! 4. anything else → changes across the sentence
//!
//! First-level labels skip punctuation children; see
//! [`crate::parse::first_level_labels`].

pub mod diff;

use thiserror::Error;

pub use diff::{token_diff, DiffOp, DiffScript, Hunk};

use crate::corpus::{PairRecord, SplitCategory};
use crate::parse::{first_level_labels, matches_pattern, ConstituencyTree};
use crate::text::{self, SEP};

/// Tokens at each end of the source that must be copied for rule 3.
pub const COPIED_EDGE: usize = 5;
/// Largest distance from `[SEP]` at which a split-only edit may sit.
pub const SPLIT_NEIGHBORHOOD: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategorizeError {
    #[error("no constituency tree for record `{0}`")]
    MissingTree(String),
    #[error("no split candidates")]
    NoCandidates,
}

/// The rule that decided a category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    CoordinatedClauses,
    ColonSemicolon,
    SplitOnlyDiff,
    PrecedingClause,
    CoordinatedVerbPhrases,
    CopiedEdges,
    Fallback,
}

impl Rule {
    pub fn category(self) -> SplitCategory {
        match self {
            Rule::CoordinatedClauses | Rule::ColonSemicolon | Rule::SplitOnlyDiff => SplitCategory::DirectInsertion,
            Rule::CoordinatedVerbPhrases | Rule::CopiedEdges => SplitCategory::ChangesNearSplit,
            Rule::PrecedingClause | Rule::Fallback => SplitCategory::ChangesAcrossSentence,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::CoordinatedClauses => "s_cc_s",
            Rule::ColonSemicolon => "colon_semicolon",
            Rule::SplitOnlyDiff => "split_only_diff",
            Rule::PrecedingClause => "preceding_clause",
            Rule::CoordinatedVerbPhrases => "vp_cc_vp",
            Rule::CopiedEdges => "copied_edges",
            Rule::Fallback => "fallback",
        }
    }
}

pub fn classify(pair: &PairRecord, tree: Option<&ConstituencyTree>) -> Result<SplitCategory, CategorizeError> {
    classify_with_rule(pair, tree).map(|(c, _)| c)
}

pub fn classify_with_rule(
    pair: &PairRecord,
    tree: Option<&ConstituencyTree>,
) -> Result<(SplitCategory, Rule), CategorizeError> {
    let tree = tree.ok_or_else(|| CategorizeError::MissingTree(pair.id.clone()))?;
    let x = &pair.long.tokens;
    let y = pair.target_tokens();
    let diff = token_diff(x, &y);
    let rule = classify_parts(x, &y, &first_level_labels(tree, true), &diff);
    Ok((rule.category(), rule))
}

/// Applies the rules to an already computed diff and first-level labels.
pub fn classify_parts(x: &[String], y: &[String], labels: &[String], diff: &DiffScript) -> Rule {
    if matches_pattern(labels, &["S", "CC", "S"]) {
        return Rule::CoordinatedClauses;
    }
    if has_inner_colon(x) {
        return Rule::ColonSemicolon;
    }
    if only_split_changes(diff, y) {
        return Rule::SplitOnlyDiff;
    }
    if matches_pattern(labels, &["S", "NP", "VP"]) || matches_pattern(labels, &["SBAR", "NP", "VP"]) {
        return Rule::PrecedingClause;
    }
    if matches_pattern(labels, &["VP", "CC", "VP"]) {
        return Rule::CoordinatedVerbPhrases;
    }
    if edges_copied(diff, COPIED_EDGE) {
        return Rule::CopiedEdges;
    }
    Rule::Fallback
}

/// A `:` or `;` token anywhere but the last position.
pub fn has_inner_colon(x: &[String]) -> bool {
    let n = x.len();
    x.iter().take(n.saturating_sub(1)).any(|t| t == ":" || t == ";")
}

fn is_final_punct(t: &str) -> bool {
    matches!(t, "." | "!" | "?")
}

/// True when every edit sits within [`SPLIT_NEIGHBORHOOD`] positions of
/// `[SEP]` and is one of: the separator, inserted sentence-final
/// punctuation, deleted punctuation, or a capitalization change.
pub fn only_split_changes(diff: &DiffScript, y: &[String]) -> bool {
    let Some(sep) = y.iter().position(|t| t == SEP) else {
        return false;
    };
    let mut deleted: Vec<(&str, usize)> = Vec::new();
    let mut inserted: Vec<(&str, usize)> = Vec::new();
    for loc in diff.located() {
        match loc.op {
            DiffOp::Copy(_) => {}
            DiffOp::Delete(t) => deleted.extend(t.iter().map(|s| (s.as_str(), loc.y))),
            DiffOp::Insert(t) => inserted.extend(t.iter().enumerate().map(|(k, s)| (s.as_str(), loc.y + k))),
        }
    }
    let near = |p: usize| p.abs_diff(sep) <= SPLIT_NEIGHBORHOOD;
    let recased = |a: &str, b: &str| a != b && a.to_lowercase() == b.to_lowercase();
    let deletions_ok = deleted
        .iter()
        .all(|&(t, p)| near(p) && (text::is_punct_token(t) || inserted.iter().any(|&(u, _)| recased(t, u))));
    let insertions_ok = inserted.iter().all(|&(t, p)| {
        near(p) && (t == SEP || is_final_punct(t) || deleted.iter().any(|&(u, _)| recased(t, u)))
    });
    deletions_ok && insertions_ok && inserted.iter().any(|&(t, _)| t == SEP)
}

/// The first `k` and last `k` source tokens all fall in Copy ops.
pub fn edges_copied(diff: &DiffScript, k: usize) -> bool {
    let mask = diff.copied_source_mask();
    let n = mask.len();
    if n == 0 {
        return false;
    }
    mask[..k.min(n)].iter().all(|&c| c) && mask[n - k.min(n)..].iter().all(|&c| c)
}

/// Picks the candidate whose left segment length is closest to the first
/// reference sentence; ties go to the leftmost candidate.
pub fn choose_split(candidates: &[usize], first_len: usize) -> Result<usize, CategorizeError> {
    candidates
        .iter()
        .copied()
        .min_by_key(|&c| (c.abs_diff(first_len), c))
        .ok_or(CategorizeError::NoCandidates)
}
