//! Corpus tooling for split-and-rephrase data.
//!
//! The crate covers the full life cycle of a one-to-two sentence corpus:
//!
//! - [`ingest`] turns sentence-aligned bitext into [`PairRecord`]s, keeping
//!   only 1-2 and 2-1 alignments.
//! - [`filter`] removes noisy alignments (pasted sentences, disconnected
//!   parses, low lexical overlap, verbless halves, low similarity).
//! - [`categorize`] assigns a [`SplitCategory`] from constituency patterns
//!   and a token diff.
//! - [`edit_align`] pads source and target around the split and derives the
//!   per-position edit labels.
//! - [`loss`] evaluates the edit-aware sequence loss on externally produced
//!   probabilities.
//! - [`metrics`] scores system outputs (SARI with paraphrase matching, BLEU,
//!   self-BLEU, FKGL, %new, lengths).
//! - [`pipeline`] chains the stages with configuration and run summaries.
//!
//! Every stage reads and writes the JSON Lines schema defined in [`corpus`].

pub mod categorize;
pub mod corpus;
pub mod edit_align;
pub mod filter;
pub mod ingest;
pub mod loss;
pub mod metrics;
pub mod parse;
pub mod pipeline;
pub mod text;

pub use categorize::{classify, DiffOp, DiffScript};
pub use corpus::{read_pairs, write_pairs, PairRecord, Sentence, SplitCategory, Status};
pub use edit_align::EditAlignment;
pub use filter::FilterConfig;
pub use parse::{ConstituencyTree, DependencyGraph};
