//! Bias auditing with the Word Embedding Association Test (WEAT) for German
//! peer-review corpora.
//!
//! The pipeline has three stages that share one battery of nine tests:
//!
//! 1. [`cooccur`] counts sentences in the raw corpus where a target word and an
//!    attribute word of one test appear together, overall and per rating band.
//! 2. [`glove`] trains word vectors from scratch on the corpus (or a subset) and
//!    [`weat`] scores them.
//! 3. [`weat`] scores any externally exported vector table in the same text
//!    format ([`embed`]) and compares suites before and after fine-tuning.

pub mod cooccur;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod glove;
pub mod report;
pub mod synth;
pub mod text;
pub mod weat;
pub mod wordlists;

pub use cooccur::{scan, subset_matrix, CooccurrenceHit, CooccurrenceReport, SubsetMatrix};
pub use corpus::{load_corpus, Band, Corpus, CorpusFormat, Gender, RatingAxis, Review, SubsetSpec};
pub use embed::{cosine, load_table, EmbeddingTable, LookupPolicy};
pub use error::{Error, Result};
pub use glove::{build_cooc, train, CoocMatrix, TrainConfig, TrainOutput};
pub use report::{render, Format, Render, RunManifest};
pub use text::{split_sentences, tokenize, Profile};
pub use weat::{
    diff_suites, effect_size, permutation_pvalue, run_suite, DeltaReport, PValueMode, SuiteReport,
    WeatOptions, WeatResult,
};
pub use wordlists::{builtin_german_battery, load_tests, Axis, WeatTest, WordList};
