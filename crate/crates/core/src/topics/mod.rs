//! Latent topics: LDA by collapsed Gibbs sampling, fold-in inference for
//! unseen text, and choice of the topic count by classification quality.

mod select;

pub use select::{choose_k, select_k, KScore, KSelectionReport, MultinomialNb, SelectKConfig};

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50 / k`, `beta = 0.01`, 1000 sweeps of which 800 burn-in.
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            burn_in: 800,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::domain(format!("LDA needs k >= 2, got {}", self.k)));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::domain("LDA priors alpha and beta must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::domain(format!(
                "LDA burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state over integer-coded documents.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    /// `n_dk[d * k + t]`
    n_dk: Vec<u32>,
    /// `n_kw[t * v + w]`
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: Vec<Vec<u32>>, vocab_size: usize, config: &LdaConfig) -> Self {
        let k = config.k;
        assert!(k <= u16::MAX as usize, "too many topics");
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut s = GibbsSampler {
            k,
            v: vocab_size,
            alpha: config.alpha,
            beta: config.beta,
            n_dk: vec![0; docs.len() * k],
            n_kw: vec![0; k * vocab_size],
            n_k: vec![0; k],
            z: Vec::with_capacity(docs.len()),
            docs: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            scratch: vec![0.0; k],
        };
        for (d, doc) in docs.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.random_range(0..k);
                zd.push(t as u16);
                s.n_dk[d * k + t] += 1;
                s.n_kw[t * vocab_size + w as usize] += 1;
                s.n_k[t] += 1;
            }
            s.z.push(zd);
        }
        s.docs = docs;
        s.rng = rng;
        s
    }

    pub fn sweep(&mut self) {
        let (k, v) = (self.k, self.v);
        let vbeta = v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_dk[d * k + old] -= 1;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.n_dk[d * k + t] as f64 + self.alpha)
                        * (self.n_kw[t * v + w] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    total += p;
                    self.scratch[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.scratch.iter().position(|&c| u < c).unwrap_or(k - 1);
                self.z[d][i] = new as u16;
                self.n_dk[d * k + new] += 1;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.docs.iter().map(|d| d.len() as u64).sum()
    }

    /// Tokens currently assigned to any topic.
    pub fn assigned_tokens(&self) -> u64 {
        self.n_k.iter().map(|&c| c as u64).sum()
    }

    /// Recounts every table from the assignments and compares.
    pub fn counts_consistent(&self) -> bool {
        let (k, v) = (self.k, self.v);
        let mut n_dk = vec![0u32; self.docs.len() * k];
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        for (d, (doc, zd)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &t) in doc.iter().zip(zd) {
                n_dk[d * k + t as usize] += 1;
                n_kw[t as usize * v + w as usize] += 1;
                n_k[t as usize] += 1;
            }
        }
        n_dk == self.n_dk && n_kw == self.n_kw && n_k == self.n_k
    }

    fn theta_into(&self, acc: &mut [Vec<f64>]) {
        let k = self.k;
        let kalpha = k as f64 * self.alpha;
        for (d, row) in acc.iter_mut().enumerate() {
            let nd = self.docs[d].len() as f64;
            for t in 0..k {
                row[t] += (self.n_dk[d * k + t] as f64 + self.alpha) / (nd + kalpha);
            }
        }
    }

    fn phi_into(&self, acc: &mut [Vec<f64>]) {
        let v = self.v;
        let vbeta = v as f64 * self.beta;
        for (t, row) in acc.iter_mut().enumerate() {
            let denom = self.n_k[t] as f64 + vbeta;
            for w in 0..v {
                row[w] += (self.n_kw[t * v + w] as f64 + self.beta) / denom;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: LdaConfig,
    /// Stems in column order of `topic_word`.
    pub vocabulary: Vec<String>,
    /// `k x V`, rows sum to 1.
    pub topic_word: Vec<Vec<f64>>,
    /// Fitted articles, in corpus order.
    pub doc_ids: Vec<String>,
    /// `n x k` relevance `r(a, u)`, rows sum to 1.
    pub doc_topic: Vec<Vec<f64>>,
    pub primary_topic: Vec<usize>,
    /// Articles excluded for having no stems.
    pub rejects: Vec<String>,
}

/// Relevance of unseen text to each topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicInference {
    pub relevance: Vec<f64>,
    pub primary_topic: usize,
    /// Set when no stem was in the model vocabulary.
    pub warning: Option<String>,
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate() {
        if x > values[best] {
            best = i;
        }
    }
    best
}

fn normalize(row: &mut [f64]) {
    let z: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= z);
}

/// Fits LDA on pre-processed stems (one sequence per article, corpus order).
pub fn fit_lda(
    doc_ids: &[String],
    stems: &[Vec<String>],
    config: &LdaConfig,
) -> Result<TopicModel> {
    fit_lda_observed(doc_ids, stems, config, |_| {})
}

/// [`fit_lda`] calling `observe` after every sweep.
pub fn fit_lda_observed<F>(
    doc_ids: &[String],
    stems: &[Vec<String>],
    config: &LdaConfig,
    mut observe: F,
) -> Result<TopicModel>
where
    F: FnMut(&GibbsSampler),
{
    assert_eq!(doc_ids.len(), stems.len());
    config.validate()?;
    let mut rejects = Vec::new();
    let mut kept_ids = Vec::new();
    let mut kept = Vec::new();
    for (id, s) in doc_ids.iter().zip(stems) {
        if s.is_empty() {
            rejects.push(id.clone());
        } else {
            kept_ids.push(id.clone());
            kept.push(s);
        }
    }
    if config.k > kept.len() {
        return Err(Error::domain(format!(
            "LDA: k = {} exceeds the number of usable articles ({})",
            config.k,
            kept.len()
        )));
    }
    let vocabulary: Vec<String> = kept
        .iter()
        .flat_map(|s| s.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let column: HashMap<&str, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();
    let docs: Vec<Vec<u32>> = kept
        .iter()
        .map(|s| s.iter().map(|w| column[w.as_str()]).collect())
        .collect();

    let mut sampler = GibbsSampler::new(docs, vocabulary.len(), config);
    let mut theta = vec![vec![0.0; config.k]; kept.len()];
    let mut phi = vec![vec![0.0; vocabulary.len()]; config.k];
    for it in 0..config.iterations {
        sampler.sweep();
        observe(&sampler);
        if it >= config.burn_in {
            sampler.theta_into(&mut theta);
            sampler.phi_into(&mut phi);
        }
    }
    theta.iter_mut().for_each(|r| normalize(r));
    phi.iter_mut().for_each(|r| normalize(r));
    let primary_topic = theta.iter().map(|r| argmax(r)).collect();
    Ok(TopicModel {
        config: config.clone(),
        vocabulary,
        topic_word: phi,
        doc_ids: kept_ids,
        doc_topic: theta,
        primary_topic,
        rejects,
    })
}

const FOLD_IN_SWEEPS: usize = 200;
const FOLD_IN_BURN_IN: usize = 100;

impl TopicModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    fn doc_position(&self, article_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == article_id)
    }

    pub fn primary_topic_of(&self, article_id: &str) -> Option<usize> {
        self.doc_position(article_id).map(|i| self.primary_topic[i])
    }

    pub fn relevance_of(&self, article_id: &str) -> Option<&[f64]> {
        self.doc_position(article_id)
            .map(|i| self.doc_topic[i].as_slice())
    }

    /// Primary topic per article id.
    pub fn primary_map(&self) -> HashMap<&str, usize> {
        self.doc_ids
            .iter()
            .map(String::as_str)
            .zip(self.primary_topic.iter().copied())
            .collect()
    }

    /// The `n` most probable stems of topic `u`.
    pub fn top_words(&self, u: usize, n: usize) -> Vec<(String, f64)> {
        let row = &self.topic_word[u];
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(n)
            .map(|w| (self.vocabulary[w].clone(), row[w]))
            .collect()
    }

    /// Fold-in Gibbs sampling with the topic-word distributions held fixed.
    pub fn infer<S: AsRef<str>>(&self, stems: &[S]) -> TopicInference {
        let k = self.k();
        let words: Vec<usize> = stems
            .iter()
            .filter_map(|s| {
                self.vocabulary
                    .binary_search_by(|w| w.as_str().cmp(s.as_ref()))
                    .ok()
            })
            .collect();
        if words.is_empty() {
            return TopicInference {
                relevance: vec![1.0 / k as f64; k],
                primary_topic: 0,
                warning: Some("no stem of the text is in the topic vocabulary".into()),
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut n_k = vec![0u32; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                n_k[t] += 1;
                t
            })
            .collect();
        let alpha = self.config.alpha;
        let nd = words.len() as f64;
        let mut acc = vec![0.0; k];
        let mut cdf = vec![0.0; k];
        for it in 0..FOLD_IN_SWEEPS {
            for (i, &w) in words.iter().enumerate() {
                n_k[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (n_k[t] as f64 + alpha) * self.topic_word[t][w];
                    cdf[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let t = cdf.iter().position(|&c| u < c).unwrap_or(k - 1);
                z[i] = t;
                n_k[t] += 1;
            }
            if it >= FOLD_IN_BURN_IN {
                for t in 0..k {
                    acc[t] += (n_k[t] as f64 + alpha) / (nd + k as f64 * alpha);
                }
            }
        }
        normalize(&mut acc);
        TopicInference {
            primary_topic: argmax(&acc),
            relevance: acc,
            warning: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<String>, Vec<Vec<String>>) {
        let raw = [
            "apple pear plum apple pear",
            "pear plum apple plum",
            "bolt nut screw bolt",
            "screw nut bolt nut screw",
            "apple plum pear",
            "nut bolt screw",
        ];
        let ids = (0..raw.len()).map(|i| format!("d{i}")).collect();
        let stems = raw
            .iter()
            .map(|s| s.split(' ').map(str::to_string).collect())
            .collect();
        (ids, stems)
    }

    fn quick(k: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            alpha: 0.5,
            iterations: 200,
            burn_in: 100,
            ..LdaConfig::new(k, seed)
        }
    }

    #[test]
    fn config_validation() {
        assert!(LdaConfig::new(1, 0).validate().is_err());
        let mut c = LdaConfig::new(4, 0);
        assert_eq!(c.alpha, 12.5);
        c.burn_in = c.iterations;
        assert!(c.validate().is_err());
    }

    #[test]
    fn separates_two_obvious_topics() {
        let (ids, stems) = toy();
        let m = fit_lda(&ids, &stems, &quick(2, 7)).unwrap();
        let fruit = m.primary_topic[0];
        assert_ne!(fruit, m.primary_topic[2]);
        assert_eq!(
            m.primary_topic,
            vec![fruit, fruit, 1 - fruit, 1 - fruit, fruit, 1 - fruit]
        );
        let top: Vec<String> = m.top_words(fruit, 3).into_iter().map(|w| w.0).collect();
        assert!(top
            .iter()
            .all(|w| ["apple", "pear", "plum"].contains(&w.as_str())));
    }

    #[test]
    fn counts_conserved_each_sweep() {
        let (ids, stems) = toy();
        let mut checks = 0;
        fit_lda_observed(&ids, &stems, &quick(3, 1), |s| {
            assert_eq!(s.assigned_tokens(), s.total_tokens());
            assert!(s.counts_consistent());
            checks += 1;
        })
        .unwrap();
        assert_eq!(checks, 200);
    }

    #[test]
    fn rejects_and_too_many_topics() {
        let (mut ids, mut stems) = toy();
        ids.push("empty".into());
        stems.push(Vec::new());
        let m = fit_lda(&ids, &stems, &quick(2, 1)).unwrap();
        assert_eq!(m.rejects, vec!["empty".to_string()]);
        assert_eq!(m.doc_ids.len(), 6);
        assert!(fit_lda(&ids, &stems, &quick(7, 1)).is_err());
    }

    #[test]
    fn argmax_ties_to_smallest() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn inference_fallback_and_stability() {
        let (ids, stems) = toy();
        let m = fit_lda(&ids, &stems, &quick(2, 3)).unwrap();
        let none = m.infer(&["zzz"]);
        assert_eq!(none.relevance, vec![0.5, 0.5]);
        assert!(none.warning.is_some());
        let once = m.infer(&stems[2]);
        let mut twice = stems[2].clone();
        twice.extend(stems[2].clone());
        assert_eq!(once.primary_topic, m.infer(&twice).primary_topic);
        assert_eq!(once.primary_topic, m.primary_topic[2]);
        assert_eq!(once, m.infer(&stems[2]));
    }
}
