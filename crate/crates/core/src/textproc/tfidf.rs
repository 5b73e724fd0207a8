use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{preprocess, TokenPipelineConfig};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Sparse non-negative vector with strictly increasing column indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut v = SparseVector::default();
        for (i, &x) in dense.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i as u32);
                v.values.push(x);
            }
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Cosine similarity clamped to `[0, 1]`; zero vectors give 0.
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return 0.0;
        }
        (self.dot(other) / denom).clamp(0.0, 1.0)
    }
}

/// tf-idf vectors of every corpus document over a fixed stem vocabulary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "IndexRepr", into = "IndexRepr")]
pub struct TfIdfIndex {
    /// Stems in column order (sorted).
    terms: Vec<String>,
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
    doc_ids: Vec<String>,
    docs: Vec<SparseVector>,
    doc_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct IndexRepr {
    terms: Vec<String>,
    idf: Vec<f64>,
    doc_ids: Vec<String>,
    docs: Vec<SparseVector>,
}

impl From<IndexRepr> for TfIdfIndex {
    fn from(r: IndexRepr) -> Self {
        TfIdfIndex {
            vocabulary: r
                .terms
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, t)| (t, i))
                .collect(),
            doc_index: r
                .doc_ids
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, t)| (t, i))
                .collect(),
            terms: r.terms,
            idf: r.idf,
            doc_ids: r.doc_ids,
            docs: r.docs,
        }
    }
}

impl From<TfIdfIndex> for IndexRepr {
    fn from(i: TfIdfIndex) -> Self {
        IndexRepr {
            terms: i.terms,
            idf: i.idf,
            doc_ids: i.doc_ids,
            docs: i.docs,
        }
    }
}

impl TfIdfIndex {
    /// Builds the index from already preprocessed documents.
    ///
    /// `tf` is the raw count of a stem in the document, `idf = ln(n / df)`.
    pub fn from_stems(doc_ids: Vec<String>, docs: &[Vec<String>]) -> Result<Self> {
        assert_eq!(doc_ids.len(), docs.len());
        if docs.iter().all(Vec::is_empty) {
            return Err(Error::domain(
                "tf-idf: no document has any token left after preprocessing",
            ));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for s in seen {
                *df.entry(s).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let terms: Vec<String> = df.keys().map(|s| s.to_string()).collect();
        let idf: Vec<f64> = df.values().map(|&d| (n / d as f64).ln()).collect();
        let vocabulary: HashMap<String, usize> = terms
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();

        let mut index = TfIdfIndex {
            doc_index: doc_ids
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, t)| (t, i))
                .collect(),
            terms,
            vocabulary,
            idf,
            doc_ids,
            docs: Vec::new(),
        };
        index.docs = docs.iter().map(|d| index.project(d)).collect();
        Ok(index)
    }

    /// tf-idf vector of an arbitrary stem sequence; unknown stems are ignored.
    pub fn project<S: AsRef<str>>(&self, stems: &[S]) -> SparseVector {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for s in stems {
            if let Some(&col) = self.vocabulary.get(s.as_ref()) {
                *counts.entry(col).or_default() += 1;
            }
        }
        let mut v = SparseVector::default();
        for (col, tf) in counts {
            let w = tf as f64 * self.idf[col];
            if w != 0.0 {
                v.indices.push(col as u32);
                v.values.push(w);
            }
        }
        v
    }

    pub fn vocabulary_len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, stem: &str) -> Option<usize> {
        self.vocabulary.get(stem).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Vector of the document at position `idx` (corpus order).
    pub fn vector_at(&self, idx: usize) -> &SparseVector {
        &self.docs[idx]
    }

    pub fn vector(&self, id: &str) -> Result<&SparseVector> {
        self.doc_index
            .get(id)
            .map(|&i| &self.docs[i])
            .ok_or_else(|| Error::Lookup {
                kind: "document",
                id: id.to_string(),
            })
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.vector(a)?.cosine(self.vector(b)?))
    }
}

/// Preprocesses every article (title then body) and builds the index.
pub fn build_tfidf(corpus: &Corpus, config: &TokenPipelineConfig) -> Result<TfIdfIndex> {
    if corpus.is_empty() {
        return Err(Error::domain("tf-idf: empty corpus"));
    }
    let docs: Vec<Vec<String>> = corpus
        .articles()
        .iter()
        .map(|a| preprocess(&a.text(), config))
        .collect();
    let ids = corpus.articles().iter().map(|a| a.id.clone()).collect();
    TfIdfIndex::from_stems(ids, &docs)
}
