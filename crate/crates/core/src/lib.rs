//! Entity suggestion by example over a frequency-weighted isA taxonomy.
//!
//! Given a few seed entities (`china`, `india`, `brazil`), infer the concepts
//! they share and rank the entities that best complete them (`russia`).
//!
//! The pipeline is split into modules that mirror its stages:
//!
//! * [`taxonomy`]: loading, interning and count-based probabilities.
//! * [`inference`]: concept posteriors `P(c|q)` (Naive Bayes and Noisy-Or).
//! * [`granularity`]: concept weights `δ(c)` (popularity penalty and
//!   hitting-time based fine-grained selection), plus the offline index.
//! * [`ranking`]: PRM and REM scoring, candidate generation, KNN baseline.
//! * [`evaluation`]: ground-truth lists, query sampling, metrics and the
//!   paired t-test on KL distances.
//! * [`cli`]: the `taxo-suggest` command line, including the REPL.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod granularity;
pub mod inference;
pub mod ranking;
pub mod stats;
pub mod synthetic;
pub mod taxonomy;

pub use error::{Error, Result};
pub use granularity::{Granularity, HittingIndexSet, HittingParams, HittingSource};
pub use inference::{ConceptDistribution, ConceptModel, Query, SmoothingConfig};
pub use ranking::{Method, ModelConfig, RankedSuggestions, RankingModel};
pub use taxonomy::{ParseMode, Taxonomy, TermId};
