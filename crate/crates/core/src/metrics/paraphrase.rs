//! Phrase-level paraphrase table.
//!
//! Reads PPDB-style text where each line is
//! `lhs ||| phrase ||| paraphrase ||| features ||| ...`. Only the two phrase
//! fields are used. Entries are lowercased and stored in both directions.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::MetricError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseTable {
    entries: HashMap<String, BTreeSet<String>>,
}

fn norm(phrase: &str) -> String {
    phrase.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

impl ParaphraseTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut t = Self::new();
        for (a, b) in pairs {
            t.insert(a, b);
        }
        t
    }

    /// Adds `a <-> b`. Identical or empty phrases are ignored.
    pub fn insert(&mut self, a: &str, b: &str) {
        let (a, b) = (norm(a), norm(b));
        if a.is_empty() || b.is_empty() || a == b {
            return;
        }
        self.entries.entry(a.clone()).or_default().insert(b.clone());
        self.entries.entry(b).or_default().insert(a);
    }

    /// Paraphrases of a space-joined lowercased phrase.
    pub fn paraphrases(&self, phrase: &str) -> impl Iterator<Item = &str> {
        self.entries.get(phrase).into_iter().flatten().map(String::as_str)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.entries.contains_key(phrase)
    }

    /// Number of distinct phrases.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn read_ppdb(path: impl AsRef<Path>) -> Result<ParaphraseTable, MetricError> {
    parse_ppdb(BufReader::new(File::open(path)?))
}

pub fn parse_ppdb<R: BufRead>(reader: R) -> Result<ParaphraseTable, MetricError> {
    let mut table = ParaphraseTable::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() < 3 {
            return Err(MetricError::Format { line: i + 1, message: "expected `lhs ||| phrase ||| paraphrase`".into() });
        }
        table.insert(fields[1], fields[2]);
    }
    Ok(table)
}
