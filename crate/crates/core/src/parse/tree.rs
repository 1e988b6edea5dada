//! Penn-Treebank style bracketed constituency trees.

use std::fmt;

use thiserror::Error;

use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty tree string")]
    Empty,
    #[error("unbalanced parenthesis at offset {0}")]
    Unbalanced(usize),
    #[error("missing label at offset {0}")]
    MissingLabel(usize),
    #[error("unexpected token `{token}` at offset {offset}")]
    UnexpectedToken { token: String, offset: usize },
    #[error("trailing input at offset {0}")]
    Trailing(usize),
}

/// A constituency tree. Leaves are preterminals: they carry a label and the
/// surface token and have no children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituencyTree {
    pub label: String,
    pub children: Vec<ConstituencyTree>,
    pub leaf_token: Option<String>,
}

impl ConstituencyTree {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        ConstituencyTree { label: label.into(), children: Vec::new(), leaf_token: Some(token.into()) }
    }

    pub fn node(label: impl Into<String>, children: Vec<ConstituencyTree>) -> Self {
        ConstituencyTree { label: label.into(), children, leaf_token: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf_token.is_some()
    }

    /// Surface tokens in order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.leaf_token {
            Some(tok) => out.push(tok),
            None => self.children.iter().for_each(|c| c.collect_tokens(out)),
        }
    }

    /// Skips single-child wrapper nodes such as `ROOT` and `TOP`.
    pub fn unwrap_root(&self) -> &ConstituencyTree {
        let mut node = self;
        while matches!(node.label.as_str(), "ROOT" | "TOP" | "")
            && node.children.len() == 1
            && !node.children[0].is_leaf()
        {
            node = &node.children[0];
        }
        node
    }
}

impl fmt::Display for ConstituencyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        if let Some(tok) = &self.leaf_token {
            write!(f, " {tok}")?;
        }
        for child in &self.children {
            write!(f, " {child}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Open(usize),
    Close(usize),
    Atom(&'a str, usize),
}

fn lex(input: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in input.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok::Atom(&input[s..i], s));
            }
            match c {
                '(' => toks.push(Tok::Open(i)),
                ')' => toks.push(Tok::Close(i)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok::Atom(&input[s..], s));
    }
    toks
}

/// Parses one bracketed tree. Whitespace between tokens is insignificant.
///
/// An outer unlabeled bracket with a single child, as written by the Penn
/// Treebank (`( (S …) )`), is removed.
pub fn parse_bracketed(input: &str) -> Result<ConstituencyTree, TreeError> {
    let toks = lex(input);
    if toks.is_empty() {
        return Err(TreeError::Empty);
    }
    check_balance(&toks)?;
    let mut pos = 0;
    let tree = parse_node(&toks, &mut pos)?;
    if let Some(t) = toks.get(pos) {
        return Err(TreeError::Trailing(offset(t)));
    }
    if tree.label.is_empty() && tree.children.len() == 1 {
        return Ok(tree.children.into_iter().next().unwrap());
    }
    if tree.label.is_empty() {
        return Err(TreeError::MissingLabel(offset(&toks[0])));
    }
    Ok(tree)
}

fn offset(t: &Tok<'_>) -> usize {
    match *t {
        Tok::Open(o) | Tok::Close(o) | Tok::Atom(_, o) => o,
    }
}

fn check_balance(toks: &[Tok<'_>]) -> Result<(), TreeError> {
    let mut open = Vec::new();
    for t in toks {
        match *t {
            Tok::Open(o) => open.push(o),
            Tok::Close(o) => {
                if open.pop().is_none() {
                    return Err(TreeError::Unbalanced(o));
                }
            }
            Tok::Atom(..) => {}
        }
    }
    match open.first() {
        // report the outermost bracket that never closed
        Some(&o) => Err(TreeError::Unbalanced(o)),
        None => Ok(()),
    }
}

fn parse_node(toks: &[Tok<'_>], pos: &mut usize) -> Result<ConstituencyTree, TreeError> {
    let open_at = match toks.get(*pos) {
        Some(Tok::Open(o)) => *o,
        Some(t) => {
            let token = match t {
                Tok::Atom(a, _) => a.to_string(),
                _ => ")".to_owned(),
            };
            return Err(TreeError::UnexpectedToken { token, offset: offset(t) });
        }
        None => return Err(TreeError::Empty),
    };
    *pos += 1;
    let label = match toks.get(*pos) {
        Some(Tok::Atom(a, _)) => {
            *pos += 1;
            a.to_string()
        }
        _ => String::new(),
    };
    let mut children = Vec::new();
    let mut leaf_token = None;
    loop {
        match toks.get(*pos) {
            Some(Tok::Close(_)) => {
                *pos += 1;
                break;
            }
            Some(Tok::Open(_)) => {
                if leaf_token.is_some() {
                    return Err(TreeError::UnexpectedToken { token: "(".into(), offset: offset(&toks[*pos]) });
                }
                children.push(parse_node(toks, pos)?);
            }
            Some(Tok::Atom(a, o)) => {
                if leaf_token.is_some() || !children.is_empty() {
                    return Err(TreeError::UnexpectedToken { token: a.to_string(), offset: *o });
                }
                leaf_token = Some(a.to_string());
                *pos += 1;
            }
            None => return Err(TreeError::Unbalanced(open_at)),
        }
    }
    if label.is_empty() && leaf_token.is_some() {
        return Err(TreeError::MissingLabel(open_at));
    }
    if leaf_token.is_none() && children.is_empty() {
        return Err(TreeError::UnexpectedToken { token: "()".into(), offset: open_at });
    }
    Ok(ConstituencyTree { label, children, leaf_token })
}

/// Drops functional suffixes and indices: `NP-SBJ-1` → `NP`, `S=2` → `S`.
/// Bracket labels such as `-LRB-` and `-NONE-` are kept as they are.
pub fn base_label(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    match label.find(['-', '=']) {
        Some(i) if i > 0 => &label[..i],
        _ => label,
    }
}

/// Punctuation preterminal labels: only P* characters or backticks, plus the
/// bracket tags.
pub fn is_punct_label(label: &str) -> bool {
    matches!(label, "-LRB-" | "-RRB-" | "-LCB-" | "-RCB-" | "-LSB-" | "-RSB-")
        || (!label.is_empty() && label.chars().all(|c| text::is_punct(c) || c == '`'))
}

/// Labels of the root's children, functional suffixes stripped. Single-child
/// `ROOT`/`TOP` wrappers are looked through.
pub fn first_level_labels(tree: &ConstituencyTree, skip_punct: bool) -> Vec<String> {
    tree.unwrap_root()
        .children
        .iter()
        .map(|c| base_label(&c.label))
        .filter(|l| !(skip_punct && is_punct_label(l)))
        .map(str::to_owned)
        .collect()
}

/// True iff `pattern` occurs as a contiguous run in `labels`.
pub fn matches_pattern<A: AsRef<str>, B: AsRef<str>>(labels: &[A], pattern: &[B]) -> bool {
    if pattern.is_empty() {
        return true;
    }
    labels
        .windows(pattern.len())
        .any(|w| w.iter().zip(pattern).all(|(a, b)| a.as_ref() == b.as_ref()))
}
