//! Loaders for word vectors, connective posteriors, corpora and labeled
//! evaluation data, plus keyword-filtered training corpus construction.

mod labeled;
mod messages;
mod posteriors;
mod vectors;

pub use labeled::{load_labeled_dataset, LabeledDataset, LabeledInput, LabeledItem};
pub use messages::{
    build_training_corpus, load_corpus, MessageContent, RawMessage, TaggedWord, DEFAULT_KEYWORDS,
};
pub use posteriors::{
    default_posterior_table, load_posterior_table, normalize_connective, LabelVocab, Level,
    PosteriorTable,
};
pub use vectors::{load_word_vectors, WordVectorTable};

use std::path::Path;

use crate::error::{Error, Result};

/// Reads a keyword file: one connective per line, `#` comments allowed.
pub fn load_keywords(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_connective)
        .collect())
}
