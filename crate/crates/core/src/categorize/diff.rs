//! Token-level diff by recursive longest common substring.
//!
//! The longest common contiguous block of the two sequences is kept as a
//! copy and the procedure recurses on the parts to its left and right. When
//! nothing is shared, the remaining source tokens are deleted and the
//! remaining target tokens inserted, in that order.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffOp {
    Copy(Vec<String>),
    Delete(Vec<String>),
    Insert(Vec<String>),
}

impl DiffOp {
    pub fn tokens(&self) -> &[String] {
        match self {
            DiffOp::Copy(t) | DiffOp::Delete(t) | DiffOp::Insert(t) => t,
        }
    }

    pub fn is_copy(&self) -> bool {
        matches!(self, DiffOp::Copy(_))
    }
}

/// An op together with where it starts in the source and in the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Located<'a> {
    pub op: &'a DiffOp,
    pub x: usize,
    pub y: usize,
}

/// A maximal run of consecutive non-copy ops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub x_start: usize,
    pub x_end: usize,
    pub y_start: usize,
    pub y_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffScript {
    pub ops: Vec<DiffOp>,
}

impl DiffScript {
    pub fn located(&self) -> Vec<Located<'_>> {
        let (mut x, mut y) = (0, 0);
        self.ops
            .iter()
            .map(|op| {
                let here = Located { op, x, y };
                let n = op.tokens().len();
                match op {
                    DiffOp::Copy(_) => {
                        x += n;
                        y += n;
                    }
                    DiffOp::Delete(_) => x += n,
                    DiffOp::Insert(_) => y += n,
                }
                here
            })
            .collect()
    }

    pub fn hunks(&self) -> Vec<Hunk> {
        let mut out: Vec<Hunk> = Vec::new();
        let mut open = false;
        for loc in self.located() {
            let n = loc.op.tokens().len();
            match loc.op {
                DiffOp::Copy(_) => open = false,
                op => {
                    if !open {
                        out.push(Hunk { x_start: loc.x, x_end: loc.x, y_start: loc.y, y_end: loc.y });
                        open = true;
                    }
                    let h = out.last_mut().unwrap();
                    match op {
                        DiffOp::Delete(_) => h.x_end = loc.x + n,
                        _ => h.y_end = loc.y + n,
                    }
                }
            }
        }
        out
    }

    /// Copy and Delete spans in order.
    pub fn source(&self) -> Vec<String> {
        self.ops
            .iter()
            .filter(|op| !matches!(op, DiffOp::Insert(_)))
            .flat_map(|op| op.tokens().iter().cloned())
            .collect()
    }

    /// Copy and Insert spans in order.
    pub fn target(&self) -> Vec<String> {
        self.ops
            .iter()
            .filter(|op| !matches!(op, DiffOp::Delete(_)))
            .flat_map(|op| op.tokens().iter().cloned())
            .collect()
    }

    /// Per source position: whether the token lies inside a Copy op.
    pub fn copied_source_mask(&self) -> Vec<bool> {
        let mut mask = Vec::new();
        for op in &self.ops {
            match op {
                DiffOp::Copy(t) => mask.extend(std::iter::repeat_n(true, t.len())),
                DiffOp::Delete(t) => mask.extend(std::iter::repeat_n(false, t.len())),
                DiffOp::Insert(_) => {}
            }
        }
        mask
    }
}

/// Diffs two token sequences. Among equally long common blocks the one
/// starting earliest in `x` wins, then the one starting earliest in `y`.
pub fn token_diff<S: AsRef<str>>(x: &[S], y: &[S]) -> DiffScript {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut xi = Vec::with_capacity(x.len());
    for s in x {
        let next = ids.len() as u32;
        xi.push(*ids.entry(s.as_ref()).or_insert(next));
    }
    let mut yi = Vec::with_capacity(y.len());
    for s in y {
        let next = ids.len() as u32;
        yi.push(*ids.entry(s.as_ref()).or_insert(next));
    }
    let mut ops = Vec::new();
    diff_range(&xi, &yi, 0, 0, x, y, &mut ops);
    DiffScript { ops }
}

fn owned<S: AsRef<str>>(s: &[S]) -> Vec<String> {
    s.iter().map(|t| t.as_ref().to_owned()).collect()
}

fn diff_range<S: AsRef<str>>(
    xi: &[u32],
    yi: &[u32],
    x_off: usize,
    y_off: usize,
    x: &[S],
    y: &[S],
    ops: &mut Vec<DiffOp>,
) {
    let (len, sx, sy) = longest_common_block(xi, yi);
    if len == 0 {
        if !xi.is_empty() {
            ops.push(DiffOp::Delete(owned(&x[x_off..x_off + xi.len()])));
        }
        if !yi.is_empty() {
            ops.push(DiffOp::Insert(owned(&y[y_off..y_off + yi.len()])));
        }
        return;
    }
    diff_range(&xi[..sx], &yi[..sy], x_off, y_off, x, y, ops);
    ops.push(DiffOp::Copy(owned(&x[x_off + sx..x_off + sx + len])));
    diff_range(
        &xi[sx + len..],
        &yi[sy + len..],
        x_off + sx + len,
        y_off + sy + len,
        x,
        y,
        ops,
    );
}

/// (length, start in x, start in y) of the longest common block.
fn longest_common_block(x: &[u32], y: &[u32]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    let mut prev = vec![0usize; y.len() + 1];
    let mut cur = vec![0usize; y.len() + 1];
    for (i, &xv) in x.iter().enumerate() {
        for (j, &yv) in y.iter().enumerate() {
            cur[j + 1] = if xv == yv { prev[j] + 1 } else { 0 };
            let len = cur[j + 1];
            // cells are visited by increasing end in x, then in y, so the
            // first block of a given length has the earliest starts
            if len > best.0 {
                best = (len, i + 1 - len, j + 1 - len);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn identity_is_one_copy() {
        let d = token_diff(&v("a b"), &v("a b"));
        assert_eq!(d.ops, vec![DiffOp::Copy(v("a b"))]);
    }

    #[test]
    fn substitution_in_the_middle() {
        let d = token_diff(&v("a b c"), &v("a X c"));
        assert_eq!(
            d.ops,
            vec![DiffOp::Copy(v("a")), DiffOp::Delete(v("b")), DiffOp::Insert(v("X")), DiffOp::Copy(v("c"))]
        );
    }

    #[test]
    fn empty_sides() {
        assert!(token_diff::<&str>(&[], &[]).ops.is_empty());
        assert_eq!(token_diff(&v("a"), &[]).ops, vec![DiffOp::Delete(v("a"))]);
        assert_eq!(token_diff(&[], &v("a")).ops, vec![DiffOp::Insert(v("a"))]);
    }

    #[test]
    fn ties_prefer_earliest_source_block() {
        // "a" and "b" both have length 1; "a" starts first in x
        let d = token_diff(&v("a b"), &v("b a"));
        assert_eq!(
            d.ops,
            vec![DiffOp::Insert(v("b")), DiffOp::Copy(v("a")), DiffOp::Delete(v("b"))]
        );
        // same x start, earliest y start wins
        let d = token_diff(&v("a"), &v("a a"));
        assert_eq!(d.ops, vec![DiffOp::Copy(v("a")), DiffOp::Insert(v("a"))]);
    }

    #[test]
    fn hunks_and_mask() {
        let x = v("The virus spreads and can kill");
        let y = v("The virus spreads . [SEP] It can kill");
        let d = token_diff(&x, &y);
        assert_eq!(d.hunks(), vec![Hunk { x_start: 3, x_end: 4, y_start: 3, y_end: 6 }]);
        assert_eq!(d.copied_source_mask(), [true, true, true, false, true, true]);
    }

    proptest! {
        #[test]
        fn script_reconstructs_both_sides(
            x in prop::collection::vec("[a-d]", 0..10),
            y in prop::collection::vec("[a-d]", 0..10),
        ) {
            let d = token_diff(&x, &y);
            prop_assert_eq!(d.source(), x.clone());
            prop_assert_eq!(d.target(), y.clone());
            prop_assert_eq!(d.copied_source_mask().len(), x.len());
            // copies never sit next to each other
            prop_assert!(d.ops.windows(2).all(|w| !(w[0].is_copy() && w[1].is_copy())));
        }
    }
}
