use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_lda, LdaConfig};
use crate::error::{Error, Result};
use crate::textproc::{SparseVector, TfIdfIndex};

/// Multinomial naive Bayes over non-negative (possibly fractional) feature
/// weights with add-one smoothing.
#[derive(Debug, Clone)]
pub struct MultinomialNb {
    classes: Vec<usize>,
    log_prior: Vec<f64>,
    /// `log_prob[c][j]`
    log_prob: Vec<Vec<f64>>,
}

impl MultinomialNb {
    pub fn fit(features: &[&SparseVector], labels: &[usize], n_features: usize) -> Self {
        let mut by_class: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
        for (x, &y) in features.iter().zip(labels) {
            let entry = by_class
                .entry(y)
                .or_insert_with(|| (0, vec![0.0; n_features]));
            entry.0 += 1;
            for (&j, &v) in x.indices.iter().zip(&x.values) {
                entry.1[j as usize] += v;
            }
        }
        let n = labels.len() as f64;
        let mut nb = MultinomialNb {
            classes: Vec::new(),
            log_prior: Vec::new(),
            log_prob: Vec::new(),
        };
        for (c, (count, mass)) in by_class {
            let total: f64 = mass.iter().sum::<f64>() + n_features as f64;
            nb.classes.push(c);
            nb.log_prior.push((count as f64 / n).ln());
            nb.log_prob
                .push(mass.iter().map(|m| ((m + 1.0) / total).ln()).collect());
        }
        nb
    }

    /// Most likely class; ties go to the smallest label.
    pub fn predict(&self, x: &SparseVector) -> usize {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (c, (&prior, lp)) in self
            .classes
            .iter()
            .zip(self.log_prior.iter().zip(&self.log_prob))
        {
            let score = prior
                + x.indices
                    .iter()
                    .zip(&x.values)
                    .map(|(&j, &v)| v * lp[j as usize])
                    .sum::<f64>();
            if score > best.0 || best.1 == usize::MAX {
                best = (score, *c);
            }
        }
        best.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_test: usize,
    /// Topics too small to appear in both the training and test split.
    pub dropped_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionReport {
    pub rows: Vec<KScore>,
    pub chosen_k: usize,
    pub notes: Vec<String>,
}

impl KSelectionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,precision,recall,f1\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.k, r.precision, r.recall, r.f1);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectKConfig {
    pub candidates: Vec<usize>,
    /// Doc-topic prior is `alpha_total / k` for each candidate.
    pub alpha_total: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub lda_seed: u64,
    pub split_seed: u64,
    pub test_fraction: f64,
}

impl Default for SelectKConfig {
    fn default() -> Self {
        SelectKConfig {
            candidates: (1..=10).map(|i| i * 10).collect(),
            alpha_total: 50.0,
            beta: 0.01,
            iterations: 1000,
            burn_in: 800,
            lda_seed: 0,
            split_seed: 0,
            test_fraction: 0.2,
        }
    }
}

impl SelectKConfig {
    pub fn lda_config(&self, k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.alpha_total / k as f64,
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.lda_seed.wrapping_add(k as u64),
        }
    }
}

/// Largest F1; ties go to the smaller k.
pub fn choose_k(rows: &[KScore]) -> Option<usize> {
    let mut best: Option<&KScore> = None;
    for r in rows {
        best = match best {
            None => Some(r),
            Some(b) if r.f1 > b.f1 || (r.f1 == b.f1 && r.k < b.k) => Some(r),
            keep => keep,
        };
    }
    best.map(|r| r.k)
}

struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
    dropped: Vec<usize>,
}

/// Per-class shuffled split; classes that cannot populate both sides are dropped.
fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> Split {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
        dropped: Vec::new(),
    };
    for (c, mut members) in by_class {
        let n_test = ((members.len() as f64 * test_fraction).round() as usize).max(1);
        if members.len() < 2 || n_test >= members.len() {
            split.dropped.push(c);
            continue;
        }
        members.shuffle(&mut rng);
        split.test.extend_from_slice(&members[..n_test]);
        split.train.extend_from_slice(&members[n_test..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    split
}

/// Macro-averaged precision, recall and F1 over `classes`.
fn macro_scores(truth: &[usize], predicted: &[usize], classes: &[usize]) -> (f64, f64, f64) {
    if classes.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for &c in classes {
        let tp = truth
            .iter()
            .zip(predicted)
            .filter(|&(&t, &p)| t == c && p == c)
            .count() as f64;
        let n_pred = predicted.iter().filter(|&&p| p == c).count() as f64;
        let n_true = truth.iter().filter(|&&t| t == c).count() as f64;
        let p = if n_pred > 0.0 { tp / n_pred } else { 0.0 };
        let r = if n_true > 0.0 { tp / n_true } else { 0.0 };
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let n = classes.len() as f64;
    (p_sum / n, r_sum / n, f_sum / n)
}

fn score_labels(
    labels: &[usize],
    features: &[&SparseVector],
    n_features: usize,
    k: usize,
    test_fraction: f64,
    split_seed: u64,
) -> KScore {
    let split = stratified_split(labels, test_fraction, split_seed);
    let train_x: Vec<&SparseVector> = split.train.iter().map(|&i| features[i]).collect();
    let train_y: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    let (precision, recall, f1) = if train_y.is_empty() || truth.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let nb = MultinomialNb::fit(&train_x, &train_y, n_features);
        let predicted: Vec<usize> = split
            .test
            .iter()
            .map(|&i| nb.predict(features[i]))
            .collect();
        let mut classes = truth.clone();
        classes.sort_unstable();
        classes.dedup();
        macro_scores(&truth, &predicted, &classes)
    };
    KScore {
        k,
        precision,
        recall,
        f1,
        n_test: truth.len(),
        dropped_classes: split.dropped,
    }
}

/// For each candidate k: fit LDA, label articles by primary topic, and score
/// how well a naive Bayes classifier on tf-idf features recovers the labels
/// on a stratified held-out split. Candidates run in parallel.
pub fn select_k(
    doc_ids: &[String],
    stems: &[Vec<String>],
    index: &TfIdfIndex,
    config: &SelectKConfig,
) -> Result<KSelectionReport> {
    if config.candidates.is_empty() {
        return Err(Error::domain("select_k: empty candidate list"));
    }
    if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
        return Err(Error::domain("select_k: test fraction must lie in (0, 1)"));
    }
    let rows: Vec<Result<KScore>> = config
        .candidates
        .par_iter()
        .map(|&k| {
            let model = fit_lda(doc_ids, stems, &config.lda_config(k))?;
            let features: Vec<&SparseVector> = model
                .doc_ids
                .iter()
                .map(|id| index.vector(id))
                .collect::<Result<_>>()?;
            Ok(score_labels(
                &model.primary_topic,
                &features,
                index.vocabulary_len(),
                k,
                config.test_fraction,
                config.split_seed,
            ))
        })
        .collect();
    let rows: Vec<KScore> = rows.into_iter().collect::<Result<_>>()?;
    let notes = rows
        .iter()
        .filter(|r| !r.dropped_classes.is_empty())
        .map(|r| {
            format!(
                "k={}: topics {:?} too small for a train/test split, excluded from scoring",
                r.k, r.dropped_classes
            )
        })
        .collect();
    Ok(KSelectionReport {
        chosen_k: choose_k(&rows).expect("non-empty"),
        rows,
        notes,
    })
}
