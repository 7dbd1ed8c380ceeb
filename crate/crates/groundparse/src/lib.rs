//! Grounded constituency induction: a greedy span-merging parser over token
//! embeddings, reduced-expressivity variants of its scorer and composer,
//! policy-gradient training against concreteness or image-matching rewards,
//! bracketing metrics, and an analysis battery for the learned values.

pub mod analysis;
pub mod embed;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod par;
pub mod parser;
pub mod score;
pub mod synth;
pub mod train;
pub mod treebank;
pub mod types;
mod vecmath;

pub use error::{Error, Result};
pub use types::{Caption, Corpus, LabeledConstituent, LabeledTree, Span, SpanTree, Token};
