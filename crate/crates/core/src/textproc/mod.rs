//! Tokenization, stopword removal, stemming and tf-idf similarity.

pub mod lancaster;
mod tfidf;

pub use tfidf::{build_tfidf, SparseVector, TfIdfIndex};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");

/// Version tag of the shipped stopword list; bump when the file changes.
pub const STOPWORDS_VERSION: &str = "en-318-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenPipelineConfig {
    pub stopwords: BTreeSet<String>,
    pub min_token_length: usize,
    pub lowercase: bool,
}

impl Default for TokenPipelineConfig {
    fn default() -> Self {
        TokenPipelineConfig {
            stopwords: default_stopwords(),
            min_token_length: 2,
            lowercase: true,
        }
    }
}

pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS_EN
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Splits on non-alphanumeric characters, drops digit-only and short
/// tokens and stopwords, then stems what is left.
pub fn preprocess(text: &str, config: &TokenPipelineConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .map(|t| {
            if config.lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .filter(|t| t.chars().count() >= config.min_token_length)
        .filter(|t| !config.stopwords.contains(t))
        .map(|t| lancaster::stem(&t))
        .filter(|s| !s.is_empty())
        .collect()
}
