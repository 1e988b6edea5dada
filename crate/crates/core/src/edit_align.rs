//! Padded source/target alignment and per-position edit labels.
//!
//! The target is `s1 [SEP] s2`. The split in the source is the edit whose
//! target span holds `[SEP]`. Both sequences are padded around their split
//! points so that the parts before the split have equal length and the parts
//! from the split onwards have equal length:
//!
//! ```text
//! x: The virus spreads [PAD] [PAD] and can kill
//! y: The virus spreads .     [SEP] It  can kill
//! ```
//!
//! Pre-split pads go at the tail of the shorter pre-split part. Post-split
//! pads go at the head of the shorter post-split part, right after `[SEP]`
//! when the target is the shorter one, so `[SEP]` keeps its padded index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::categorize::{choose_split, token_diff, DiffScript};
use crate::corpus::{PairRecord, SplitCategory};
use crate::text::{PAD, SEP};

/// Copied positions in a row that end the window scan.
pub const MIN_COPY_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("target has no [SEP] token")]
    NoSeparator,
    #[error("target has {0} [SEP] tokens")]
    MultipleSeparators(usize),
    #[error("reserved token `{0}` in the input")]
    ReservedToken(String),
    #[error("no edit covers the [SEP] token")]
    SeparatorNotEdited,
    #[error("inconsistent lengths: x {x}, y {y}, delta {delta}")]
    Inconsistent { x: usize, y: usize, delta: usize },
    #[error("split index {split} outside a sequence of length {len}")]
    SplitOutOfRange { split: usize, len: usize },
}

/// Padded sequences with the split at the same index in both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedPair {
    pub x_padded: Vec<String>,
    pub y_padded: Vec<String>,
    pub split: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditAlignment {
    pub x_padded: Vec<String>,
    pub y_padded: Vec<String>,
    pub split_x: usize,
    pub split_y: usize,
    pub delta: Vec<u8>,
}

impl EditAlignment {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn edited(&self) -> usize {
        self.delta.iter().map(|&d| d as usize).sum()
    }

    /// Structural invariants: equal lengths, binary labels, `[SEP]` at the
    /// split, pads never facing each other.
    pub fn validate(&self) -> Result<(), AlignError> {
        let (x, y, d) = (self.x_padded.len(), self.y_padded.len(), self.delta.len());
        if x != y || y != d {
            return Err(AlignError::Inconsistent { x, y, delta: d });
        }
        if self.split_y >= y || self.y_padded[self.split_y] != SEP {
            return Err(AlignError::SplitOutOfRange { split: self.split_y, len: y });
        }
        if self.split_x >= x {
            return Err(AlignError::SplitOutOfRange { split: self.split_x, len: x });
        }
        if self.delta.iter().any(|&v| v > 1) {
            return Err(AlignError::Inconsistent { x, y, delta: d });
        }
        if self.x_padded.iter().zip(&self.y_padded).any(|(a, b)| a == PAD && b == PAD) {
            return Err(AlignError::ReservedToken(PAD.to_owned()));
        }
        Ok(())
    }

    /// Positions labelled 0 whose tokens differ. Empty when every unlabelled
    /// position is a copy.
    pub fn uncopied_zeros(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.delta[i] == 0 && self.x_padded[i] != self.y_padded[i])
            .collect()
    }
}

fn check_reserved<S: AsRef<str>>(tokens: &[S], allow_sep: bool) -> Result<(), AlignError> {
    for t in tokens {
        let t = t.as_ref();
        if t == PAD || (t == SEP && !allow_sep) {
            return Err(AlignError::ReservedToken(t.to_owned()));
        }
    }
    Ok(())
}

fn single_separator<S: AsRef<str>>(y: &[S]) -> Result<usize, AlignError> {
    let seps: Vec<usize> = y.iter().enumerate().filter(|(_, t)| t.as_ref() == SEP).map(|(i, _)| i).collect();
    match seps.len() {
        0 => Err(AlignError::NoSeparator),
        1 => Ok(seps[0]),
        n => Err(AlignError::MultipleSeparators(n)),
    }
}

/// Finds `(split_x, split_y)`: the `[SEP]` position in `y`, and the source
/// boundary of the edit that produced it.
///
/// When that edit deletes source tokens, each deleted position is a
/// candidate and the one whose left part is closest in length to the first
/// target sentence wins. A pure insertion splits at its own boundary.
pub fn locate_split<S: AsRef<str>>(diff: &DiffScript, y: &[S]) -> Result<(usize, usize), AlignError> {
    let split_y = single_separator(y)?;
    let hunks = diff.hunks();
    let covering = hunks.iter().find(|h| h.y_start <= split_y && split_y < h.y_end);
    // a copied [SEP] only happens when the source carries one; fall back to
    // the nearest edit, leftmost on ties
    let hunk = match covering {
        Some(h) => h,
        None => hunks
            .iter()
            .min_by_key(|h| {
                let d = if split_y < h.y_start { h.y_start - split_y } else { split_y + 1 - h.y_end.max(h.y_start + 1) };
                (d, h.x_start)
            })
            .ok_or(AlignError::SeparatorNotEdited)?,
    };
    let candidates: Vec<usize> = if hunk.x_end > hunk.x_start {
        (hunk.x_start..hunk.x_end).collect()
    } else {
        vec![hunk.x_start]
    };
    let split_x = choose_split(&candidates, split_y).expect("hunk yields at least one candidate");
    Ok((split_x, split_y))
}

pub fn pad_align<S: AsRef<str>>(x: &[S], y: &[S], split_x: usize, split_y: usize) -> Result<PaddedPair, AlignError> {
    if split_x > x.len() {
        return Err(AlignError::SplitOutOfRange { split: split_x, len: x.len() });
    }
    if split_y >= y.len() || y[split_y].as_ref() != SEP {
        return Err(AlignError::SplitOutOfRange { split: split_y, len: y.len() });
    }
    let own = |s: &[S]| s.iter().map(|t| t.as_ref().to_owned()).collect::<Vec<_>>();
    let pads = |n: usize| std::iter::repeat_n(PAD.to_owned(), n);

    let pre = split_x.max(split_y);
    let mut xp = own(&x[..split_x]);
    xp.extend(pads(pre - split_x));
    let mut yp = own(&y[..split_y]);
    yp.extend(pads(pre - split_y));

    let x_post = x.len() - split_x;
    let y_post = y.len() - split_y;
    let post = x_post.max(y_post);
    xp.extend(pads(post - x_post));
    xp.extend(own(&x[split_x..]));
    yp.push(SEP.to_owned());
    yp.extend(pads(post - y_post));
    yp.extend(own(&y[split_y + 1..]));

    Ok(PaddedPair { x_padded: xp, y_padded: yp, split: pre })
}

/// Labels each padded position: 1 where the token has to be generated from
/// the target, 0 where it is copied from the source.
///
/// - direct insertion: the split and its two neighbours
/// - changes near split: a window grown outwards from the split on each side
///   until the next position starts a run of at least `min_copy_run` copied
///   positions, or a shorter copied run that reaches the sequence boundary
/// - changes across sentence: every position
pub fn build_delta(category: SplitCategory, padded: &PaddedPair, min_copy_run: usize) -> Result<EditAlignment, AlignError> {
    let PaddedPair { x_padded, y_padded, split } = padded;
    let n = x_padded.len();
    if y_padded.len() != n {
        return Err(AlignError::Inconsistent { x: n, y: y_padded.len(), delta: n });
    }
    if *split >= n || y_padded[*split] != SEP {
        return Err(AlignError::SplitOutOfRange { split: *split, len: n });
    }
    let split = *split;
    let mut delta = vec![0u8; n];
    match category {
        SplitCategory::DirectInsertion => {
            delta[split.saturating_sub(1)..=(split + 1).min(n - 1)].fill(1);
        }
        SplitCategory::ChangesAcrossSentence => delta.fill(1),
        SplitCategory::ChangesNearSplit => {
            let copied: Vec<bool> = x_padded.iter().zip(y_padded).map(|(a, b)| a == b).collect();
            let (lo, hi) = near_split_window(&copied, split, min_copy_run.max(1));
            delta[lo..=hi].fill(1);
        }
    }
    Ok(EditAlignment {
        x_padded: x_padded.clone(),
        y_padded: y_padded.clone(),
        split_x: split,
        split_y: split,
        delta,
    })
}

/// Inclusive window bounds around `split`.
fn near_split_window(copied: &[bool], split: usize, min_run: usize) -> (usize, usize) {
    let n = copied.len();
    let mut lo = split;
    while lo > 0 {
        let j = lo - 1;
        if copied[j] {
            let run = copied[..=j].iter().rev().take_while(|&&c| c).count();
            if run >= min_run || run == j + 1 {
                break;
            }
        }
        lo = j;
    }
    let mut hi = split;
    while hi + 1 < n {
        let j = hi + 1;
        if copied[j] {
            let run = copied[j..].iter().take_while(|&&c| c).count();
            if run >= min_run || j + run == n {
                break;
            }
        }
        hi = j;
    }
    (lo, hi)
}

/// Runs diff, split location, padding and labelling for one categorized pair.
pub fn align_pair(pair: &PairRecord, category: SplitCategory, min_copy_run: usize) -> Result<EditAlignment, AlignError> {
    let x = &pair.long.tokens;
    let y = pair.target_tokens();
    check_reserved(x, false)?;
    check_reserved(&pair.split[0].tokens, false)?;
    check_reserved(&pair.split[1].tokens, false)?;
    let diff = token_diff(x, &y);
    let (split_x, split_y) = locate_split(&diff, &y)?;
    let padded = pad_align(x, &y, split_x, split_y)?;
    build_delta(category, &padded, min_copy_run)
}

/// Drops pad tokens.
pub fn strip_padding(tokens: &[String]) -> Vec<String> {
    tokens.iter().filter(|t| *t != PAD).cloned().collect()
}
