//! Readers for the syntactic inputs: bracketed constituency trees and
//! CoNLL-U dependency annotations.

pub mod conllu;
pub mod tree;

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conllu::{annotation_id, read_conllu, AnnotatedSentence, ConlluError, Slot};
pub use tree::{first_level_labels, matches_pattern, parse_bracketed, ConstituencyTree, TreeError};

/// Dependency heads over `n` tokens. Head 0 is the artificial root, other
/// heads are 1-based token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub n: usize,
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has {heads} heads for {n} tokens")]
    LengthMismatch { n: usize, heads: usize },
    #[error("head {head} of token {token} is outside 0..={n}")]
    HeadOutOfRange { token: usize, head: usize, n: usize },
}

impl DependencyGraph {
    pub fn from_heads(heads: &[usize]) -> Self {
        DependencyGraph { n: heads.len(), heads: heads.to_vec(), deprels: vec!["_".into(); heads.len()] }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.heads.len() != self.n {
            return Err(GraphError::LengthMismatch { n: self.n, heads: self.heads.len() });
        }
        for (i, &h) in self.heads.iter().enumerate() {
            if h > self.n {
                return Err(GraphError::HeadOutOfRange { token: i + 1, head: h, n: self.n });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected `<id>\\t<tree>`")]
    Format { line: usize },
    #[error("line {line}: {source}")]
    Tree { line: usize, source: TreeError },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
}

/// Reads a tree sidecar: one `<record-id>\t<bracketed tree>` per line.
pub fn read_tree_sidecar(path: impl AsRef<Path>) -> Result<HashMap<String, ConstituencyTree>, SidecarError> {
    parse_tree_sidecar(BufReader::new(File::open(path)?))
}

pub fn parse_tree_sidecar<R: BufRead>(reader: R) -> Result<HashMap<String, ConstituencyTree>, SidecarError> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, tree) = line.split_once('\t').ok_or(SidecarError::Format { line: line_no })?;
        let tree = parse_bracketed(tree).map_err(|source| SidecarError::Tree { line: line_no, source })?;
        if out.insert(id.trim().to_owned(), tree).is_some() {
            return Err(SidecarError::DuplicateId { line: line_no, id: id.trim().to_owned() });
        }
    }
    Ok(out)
}
