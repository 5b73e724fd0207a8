//! Ground-truth synthetic corpora.
//!
//! Topic volumes follow a stationary vector autoregression with an intercept
//! (so the process has a non-zero mean level) and optional multiplicative
//! log-normal noise. Articles are drawn from an LDA-style generative process
//! over planted topic-word distributions. Each day, the volume of a topic is
//! split among its live articles in proportion to a popularity weight that
//! decays exponentially with age (per-kind half-life), so summing article
//! visits reproduces the rounded topic volume exactly. Articles belong to
//! short-lived "stories" that share vocabulary and a popularity multiplier,
//! which gives similar recent articles similar visit counts.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Article, ArticleKind, Corpus, EarlyOffset, VisitSeries};
use crate::error::{Error, Result};
use crate::textproc::{preprocess, TokenPipelineConfig};

/// Vector autoregression `V(t) = c + sum_l A_l V(t-l)`, parameterized by its
/// lag matrices and stationary mean (the intercept is derived).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarProcess {
    /// `lag_coefficients[l][u][v]`: weight of topic `v` at lag `l + 1` in topic `u`.
    pub lag_coefficients: Vec<Vec<Vec<f64>>>,
    pub means: Vec<f64>,
}

impl VarProcess {
    /// Each topic depends on itself at lags 1 and 2 and on the next topic
    /// (cyclically) at lag 1. Row sums are 0.9, so the process is stationary.
    pub fn ring(k: usize, mean: f64) -> Self {
        let mut a1 = vec![vec![0.0; k]; k];
        let mut a2 = vec![vec![0.0; k]; k];
        for u in 0..k {
            if k > 1 {
                a1[u][u] = 0.55;
                a1[u][(u + 1) % k] = 0.15;
            } else {
                a1[u][u] = 0.7;
            }
            a2[u][u] = 0.2;
        }
        VarProcess {
            lag_coefficients: vec![a1, a2],
            means: vec![mean; k],
        }
    }

    /// Damped oscillators (complex root pair of modulus `radius`, period
    /// `period * (1 + 0.3 u)` days), topic `u` driven by topic `u - 1` at
    /// lag 1. The coupling is acyclic, so the spectral radius is `radius`.
    pub fn oscillators(k: usize, mean: f64, radius: f64, period: f64, coupling: f64) -> Self {
        let mut a1 = vec![vec![0.0; k]; k];
        let mut a2 = vec![vec![0.0; k]; k];
        for u in 0..k {
            let omega = 2.0 * std::f64::consts::PI / (period * (1.0 + 0.3 * u as f64));
            a1[u][u] = 2.0 * radius * omega.cos();
            a2[u][u] = -radius * radius;
            if u > 0 {
                a1[u][u - 1] = coupling;
            }
        }
        VarProcess {
            lag_coefficients: vec![a1, a2],
            means: vec![mean; k],
        }
    }

    /// Each topic follows itself at lags 1 and 2 and `partners` other
    /// topics (drawn with `seed`) at lag 1. Row sums stay below one.
    pub fn sparse_coupled(k: usize, partners: usize, mean: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let partners = partners.min(k.saturating_sub(1));
        let mut a1 = vec![vec![0.0; k]; k];
        let mut a2 = vec![vec![0.0; k]; k];
        for u in 0..k {
            a1[u][u] = 0.45;
            a2[u][u] = 0.15;
            let mut others: Vec<usize> = (0..k).filter(|&v| v != u).collect();
            for j in 0..partners {
                let pick = rng.random_range(j..others.len());
                others.swap(j, pick);
                a1[u][others[j]] = 0.3 / partners as f64;
            }
        }
        VarProcess {
            lag_coefficients: vec![a1, a2],
            means: vec![mean; k],
        }
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn order(&self) -> usize {
        self.lag_coefficients.len()
    }

    /// `c = (I - sum_l A_l) mu`.
    pub fn intercepts(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .map(|u| {
                let pull: f64 = self
                    .lag_coefficients
                    .iter()
                    .map(|a| (0..k).map(|v| a[u][v] * self.means[v]).sum::<f64>())
                    .sum();
                self.means[u] - pull
            })
            .collect()
    }

    /// Companion matrix of the lag polynomial (size `k * order`).
    pub fn companion(&self) -> Vec<Vec<f64>> {
        let k = self.k();
        let p = self.order();
        let n = k * p;
        let mut m = vec![vec![0.0; n]; n];
        for (l, a) in self.lag_coefficients.iter().enumerate() {
            for u in 0..k {
                for v in 0..k {
                    m[u][l * k + v] = a[u][v];
                }
            }
        }
        for i in k..n {
            m[i][i - k] = 1.0;
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.order() == 0 {
            return Err(Error::domain("VAR needs at least one topic and one lag"));
        }
        for a in &self.lag_coefficients {
            if a.len() != k || a.iter().any(|r| r.len() != k) {
                return Err(Error::domain(format!("VAR lag matrices must be {k}x{k}")));
            }
        }
        if self.means.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::domain("VAR means must be positive"));
        }
        let rho = spectral_radius(&self.companion());
        if !(rho < 1.0) {
            return Err(Error::domain(format!(
                "non-stationary VAR: companion spectral radius {rho:.6} >= 1"
            )));
        }
        Ok(())
    }
}

/// Spectral radius via Gelfand's formula on repeated squaring.
pub fn spectral_radius(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let frob = |a: &[Vec<f64>]| a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let nrm = frob(&a);
    if nrm == 0.0 {
        return 0.0;
    }
    a.iter_mut().flatten().for_each(|x| *x /= nrm);
    let mut log_scale = nrm.ln();
    let mut estimate = nrm;
    for j in 1..=48 {
        let mut sq = vec![vec![0.0; n]; n];
        for i in 0..n {
            for (l, &ail) in a[i].iter().enumerate() {
                if ail == 0.0 {
                    continue;
                }
                for (s, &alj) in sq[i].iter_mut().zip(&a[l]) {
                    *s += ail * alj;
                }
            }
        }
        let nrm = frob(&sq);
        if nrm == 0.0 {
            return 0.0;
        }
        sq.iter_mut().flatten().for_each(|x| *x /= nrm);
        a = sq;
        log_scale = 2.0 * log_scale + nrm.ln();
        estimate = (log_scale / 2f64.powi(j)).exp();
    }
    estimate
}

/// Simulates `n_days` of topic volumes after `burn_in` discarded days.
/// Returns `volumes[u][t]`.
pub fn simulate_var(
    process: &VarProcess,
    n_days: usize,
    burn_in: usize,
    noise_scale: f64,
    init_perturbation: f64,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    let k = process.k();
    let p = process.order();
    let c = process.intercepts();
    let total = p + burn_in + n_days;
    let mut v = vec![vec![0.0; total]; k];
    for u in 0..k {
        for t in 0..p {
            let jitter: f64 = rng.random_range(-1.0..=1.0);
            v[u][t] = process.means[u] * (1.0 + init_perturbation * jitter);
        }
    }
    let half_var = 0.5 * noise_scale * noise_scale;
    for t in p..total {
        for u in 0..k {
            let mut m = c[u];
            for (l, a) in process.lag_coefficients.iter().enumerate() {
                for (w, series) in a[u].iter().zip(&v) {
                    m += w * series[t - l - 1];
                }
            }
            let shock = if noise_scale > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                (noise_scale * z - half_var).exp()
            } else {
                1.0
            };
            v[u][t] = m.max(0.0) * shock;
        }
    }
    v.into_iter().map(|s| s[p + burn_in..].to_vec()).collect()
}

/// Follow-up stories within a topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryConfig {
    /// Probability that a primary-topic token comes from the story word set.
    pub focus: f64,
    pub words_per_story: usize,
    /// Stories running concurrently within a topic.
    pub concurrent: usize,
    pub mean_duration_days: f64,
    /// Log-normal sigma of the story popularity multiplier.
    pub popularity_sigma: f64,
}

impl Default for StoryConfig {
    fn default() -> Self {
        StoryConfig {
            focus: 0.5,
            words_per_story: 8,
            concurrent: 3,
            mean_duration_days: 5.0,
            popularity_sigma: 0.6,
        }
    }
}

impl StoryConfig {
    /// No story structure: every article is its own story with unit popularity.
    pub fn none() -> Self {
        StoryConfig {
            focus: 0.0,
            words_per_story: 0,
            concurrent: 1,
            mean_duration_days: 1.0,
            popularity_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub k_true: usize,
    pub vocab_size: usize,
    pub n_articles: usize,
    pub n_days: usize,
    /// Lag coefficients and mean levels of the topic-volume process.
    pub var: VarProcess,
    pub noise_scale: f64,
    pub halflife_news_days: f64,
    pub halflife_opinion_days: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub mixing_weights: Vec<f64>,
    pub words_per_article: usize,
    pub title_words: usize,
    /// Weight of the primary topic in each article's topic mixture.
    pub topic_purity: f64,
    /// Probability mass a topic puts on its own vocabulary block.
    pub block_mass: f64,
    pub news_fraction: f64,
    /// Log-normal sigma of the per-article popularity multiplier.
    pub popularity_sigma: f64,
    pub story: StoryConfig,
    /// Expected fraction of publication-day visits seen after 5m, 1h, 6h.
    pub early_fractions: [f64; 3],
    pub burn_in_days: usize,
    pub max_age_days: usize,
    pub init_perturbation: f64,
}

impl SynthSpec {
    pub fn new(k: usize, n_articles: usize, n_days: usize, seed: u64) -> Self {
        SynthSpec {
            k_true: k,
            vocab_size: 60 * k + 100,
            n_articles,
            n_days,
            var: VarProcess::ring(k, 4000.0),
            noise_scale: 0.1,
            halflife_news_days: 3.0,
            halflife_opinion_days: 7.0,
            seed,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
            mixing_weights: vec![1.0 / k as f64; k],
            words_per_article: 80,
            title_words: 8,
            topic_purity: 0.85,
            block_mass: 0.9,
            news_fraction: 0.6,
            popularity_sigma: 0.25,
            story: StoryConfig::default(),
            early_fractions: [0.02, 0.12, 0.45],
            burn_in_days: 30,
            max_age_days: 90,
            init_perturbation: 0.3,
        }
    }

    /// Pure single-topic documents over disjoint vocabulary blocks, no
    /// stories: the easiest setting for topic recovery.
    pub fn noiseless_topics(k: usize, n_articles: usize, seed: u64) -> Self {
        let mut s = SynthSpec::new(k, n_articles, 60, seed);
        s.topic_purity = 1.0;
        s.block_mass = 1.0;
        s.story = StoryConfig::none();
        s.noise_scale = 0.0;
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain(format!("synthetic spec: {m}")));
        if self.k_true == 0 || self.n_articles == 0 || self.n_days == 0 {
            return bad("k_true, n_articles and n_days must be positive".into());
        }
        if self.vocab_size < self.k_true * 2 {
            return bad(format!(
                "vocab_size {} too small for {} topics",
                self.vocab_size, self.k_true
            ));
        }
        if self.var.k() != self.k_true {
            return bad(format!(
                "VAR has {} topics, expected {}",
                self.var.k(),
                self.k_true
            ));
        }
        if self.mixing_weights.len() != self.k_true
            || self.mixing_weights.iter().any(|&w| !(w >= 0.0))
            || self.mixing_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("mixing weights must be k non-negative values with positive sum".into());
        }
        if !(0.0..=1.0).contains(&self.topic_purity) || !(0.0..=1.0).contains(&self.block_mass) {
            return bad("topic_purity and block_mass must lie in [0, 1]".into());
        }
        if !(self.halflife_news_days > 0.0 && self.halflife_opinion_days > 0.0) {
            return bad("half-lives must be positive".into());
        }
        if self.noise_scale < 0.0 || !(0.0..=1.0).contains(&self.news_fraction) {
            return bad("noise_scale must be >= 0 and news_fraction in [0, 1]".into());
        }
        let [f5, f1, f6] = self.early_fractions;
        if !(0.0 < f5 && f5 <= f1 && f1 <= f6 && f6 <= 1.0) {
            return bad("early fractions must satisfy 0 < 5m <= 1h <= 6h <= 1".into());
        }
        if self.words_per_article == 0 || self.max_age_days == 0 {
            return bad("words_per_article and max_age_days must be positive".into());
        }
        if self.story.focus > 0.0 && self.story.words_per_story == 0 {
            return bad("story focus needs a non-empty story word set".into());
        }
        if self.story.concurrent == 0 || self.story.mean_duration_days < 1.0 {
            return bad("stories need concurrent >= 1 and mean duration >= 1 day".into());
        }
        self.var.validate()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + Days::new(day as u64)
    }
}

/// Everything the generator planted, for tests only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub start_date: NaiveDate,
    pub vocabulary: Vec<String>,
    /// Planted topic-word distributions over `vocabulary`.
    pub topic_word: Vec<Vec<f64>>,
    pub mixing_weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// `volumes[u][day]` before rounding.
    pub volumes: Vec<Vec<f64>>,
    /// Planted primary topic per article, in corpus order.
    pub primary_topics: Vec<(String, usize)>,
    /// Story id per article, in corpus order.
    pub stories: Vec<(String, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TruthRecord {
    Meta {
        start_date: NaiveDate,
        mixing_weights: Vec<f64>,
        intercepts: Vec<f64>,
    },
    Vocabulary {
        words: Vec<String>,
    },
    TopicWord {
        topic: usize,
        weights: Vec<f64>,
    },
    Volume {
        topic: usize,
        date: NaiveDate,
        value: f64,
    },
    PrimaryTopic {
        article_id: String,
        topic: usize,
        story: usize,
    },
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.topic_word.len()
    }

    pub fn primary_topic(&self, article_id: &str) -> Option<usize> {
        self.primary_topics
            .iter()
            .find(|(id, _)| id == article_id)
            .map(|&(_, u)| u)
    }

    /// Line-delimited JSON, one tagged record per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |r: &TruthRecord| -> Result<()> {
            let line = serde_json::to_string(r).expect("record serializes");
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))
        };
        put(&TruthRecord::Meta {
            start_date: self.start_date,
            mixing_weights: self.mixing_weights.clone(),
            intercepts: self.intercepts.clone(),
        })?;
        put(&TruthRecord::Vocabulary {
            words: self.vocabulary.clone(),
        })?;
        for (topic, weights) in self.topic_word.iter().enumerate() {
            put(&TruthRecord::TopicWord {
                topic,
                weights: weights.clone(),
            })?;
        }
        for (topic, series) in self.volumes.iter().enumerate() {
            for (day, &value) in series.iter().enumerate() {
                put(&TruthRecord::Volume {
                    topic,
                    date: self.start_date + Days::new(day as u64),
                    value,
                })?;
            }
        }
        for ((article_id, topic), (_, story)) in self.primary_topics.iter().zip(&self.stories) {
            put(&TruthRecord::PrimaryTopic {
                article_id: article_id.clone(),
                topic: *topic,
                story: *story,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut truth = GroundTruth {
            start_date: NaiveDate::MIN,
            vocabulary: Vec::new(),
            topic_word: Vec::new(),
            mixing_weights: Vec::new(),
            intercepts: Vec::new(),
            volumes: Vec::new(),
            primary_topics: Vec::new(),
            stories: Vec::new(),
        };
        let mut volumes: BTreeMap<(usize, NaiveDate), f64> = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TruthRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            match rec {
                TruthRecord::Meta {
                    start_date,
                    mixing_weights,
                    intercepts,
                } => {
                    truth.start_date = start_date;
                    truth.mixing_weights = mixing_weights;
                    truth.intercepts = intercepts;
                }
                TruthRecord::Vocabulary { words } => truth.vocabulary = words,
                TruthRecord::TopicWord { topic, weights } => {
                    if truth.topic_word.len() <= topic {
                        truth.topic_word.resize(topic + 1, Vec::new());
                    }
                    truth.topic_word[topic] = weights;
                }
                TruthRecord::Volume { topic, date, value } => {
                    volumes.insert((topic, date), value);
                }
                TruthRecord::PrimaryTopic {
                    article_id,
                    topic,
                    story,
                } => {
                    truth.stories.push((article_id.clone(), story));
                    truth.primary_topics.push((article_id, topic));
                }
            }
        }
        for ((topic, _), value) in volumes {
            if truth.volumes.len() <= topic {
                truth.volumes.resize(topic + 1, Vec::new());
            }
            truth.volumes[topic].push(value);
        }
        Ok(truth)
    }
}

const STREAM_VOCAB: u64 = 1;
const STREAM_VOLUME: u64 = 2;
const STREAM_ARTICLES: u64 = 3;
const STREAM_TEXT: u64 = 4;
const STREAM_EARLY: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Pronounceable pseudo-words that survive preprocessing unchanged, so the
/// planted vocabulary coincides with the fitted stem vocabulary.
fn make_vocabulary(size: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    const ONSETS: &[&str] = &[
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gr",
        "kr", "pl", "st", "tr",
    ];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    const CODAS: &[&str] = &["", "", "k", "m", "n", "p", "r", "x"];
    let config = TokenPipelineConfig::default();
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(size);
    while words.len() < size {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
        if seen.contains(&w) {
            continue;
        }
        if preprocess(&w, &config) == [w.as_str()] {
            seen.insert(w.clone());
            words.push(w);
        }
    }
    words
}

fn planted_topics(spec: &SynthSpec) -> Vec<Vec<f64>> {
    let k = spec.k_true;
    let v = spec.vocab_size;
    let block = v / k;
    (0..k)
        .map(|u| {
            let mut row = vec![(1.0 - spec.block_mass) / v as f64; v];
            let raw: Vec<f64> = (0..block).map(|r| 1.0 / ((r + 1) as f64).sqrt()).collect();
            let z: f64 = raw.iter().sum();
            for (r, w) in raw.iter().enumerate() {
                row[u * block + r] += spec.block_mass * w / z;
            }
            row
        })
        .collect()
}

struct Story {
    id: usize,
    last_day: usize,
    popularity: f64,
}

struct Draft {
    topic: usize,
    day: usize,
    kind: ArticleKind,
    story: usize,
    weight: f64,
}

/// Generates a corpus and the ground truth it was drawn from.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Corpus, GroundTruth)> {
    spec.validate()?;
    let k = spec.k_true;
    let vocabulary = make_vocabulary(spec.vocab_size, &mut stream(spec.seed, STREAM_VOCAB));
    let topic_word = planted_topics(spec);
    let block = spec.vocab_size / k;

    let volumes = simulate_var(
        &spec.var,
        spec.n_days,
        spec.burn_in_days,
        spec.noise_scale,
        spec.init_perturbation,
        &mut stream(spec.seed, STREAM_VOLUME),
    );

    // Article metadata: day, topic, kind, story, popularity weight.
    let mut rng = stream(spec.seed, STREAM_ARTICLES);
    let mixing =
        WeightedIndex::new(&spec.mixing_weights).map_err(|e| Error::domain(e.to_string()))?;
    let article_pop =
        LogNormal::new(0.0, spec.popularity_sigma).map_err(|e| Error::domain(e.to_string()))?;
    let story_pop = LogNormal::new(0.0, spec.story.popularity_sigma)
        .map_err(|e| Error::domain(e.to_string()))?;
    let mut slots: Vec<Vec<Option<Story>>> = (0..k)
        .map(|_| (0..spec.story.concurrent).map(|_| None).collect())
        .collect();
    let mut stories: Vec<Vec<usize>> = Vec::new();
    let mut drafts = Vec::with_capacity(spec.n_articles);
    for i in 0..spec.n_articles {
        let day = i * spec.n_days / spec.n_articles;
        let topic = if i < k && day == 0 {
            i
        } else {
            mixing.sample(&mut rng)
        };
        let kind = if rng.random::<f64>() < spec.news_fraction {
            ArticleKind::News
        } else {
            ArticleKind::Opinion
        };
        let slot = rng.random_range(0..spec.story.concurrent);
        let expired = slots[topic][slot].as_ref().is_none_or(|s| s.last_day < day);
        if expired {
            let extra = if spec.story.mean_duration_days > 1.0 {
                let p = 1.0 / spec.story.mean_duration_days;
                let mut n = 0;
                while rng.random::<f64>() >= p {
                    n += 1;
                }
                n
            } else {
                0
            };
            let mut words = Vec::with_capacity(spec.story.words_per_story);
            for _ in 0..spec.story.words_per_story.min(block) {
                words.push(topic * block + rng.random_range(0..block));
            }
            slots[topic][slot] = Some(Story {
                id: stories.len(),
                last_day: day + extra,
                popularity: story_pop.sample(&mut rng),
            });
            stories.push(words);
        }
        let story = slots[topic][slot].as_ref().expect("story slot filled");
        drafts.push(Draft {
            topic,
            day,
            kind,
            story: story.id,
            weight: story.popularity * article_pop.sample(&mut rng),
        });
    }

    // Text.
    let mut rng = stream(spec.seed, STREAM_TEXT);
    let topic_samplers: Vec<WeightedIndex<f64>> = topic_word
        .iter()
        .map(|row| WeightedIndex::new(row).expect("positive topic row"))
        .collect();
    let unit_gamma = Gamma::new(1.0, 1.0).expect("valid gamma");
    let width = (spec.n_articles.max(1) as f64).log10().floor() as usize + 1;
    let mut articles = Vec::with_capacity(spec.n_articles);
    for (i, d) in drafts.iter().enumerate() {
        let mut mixture: Vec<f64> = (0..k).map(|_| unit_gamma.sample(&mut rng)).collect();
        let z: f64 = mixture.iter().sum();
        for (u, m) in mixture.iter_mut().enumerate() {
            *m = (1.0 - spec.topic_purity) * *m / z;
            if u == d.topic {
                *m += spec.topic_purity;
            }
        }
        let mixer = WeightedIndex::new(&mixture).expect("positive mixture");
        let story_words = &stories[d.story];
        let tokens: Vec<&str> = (0..spec.words_per_article)
            .map(|_| {
                let z = mixer.sample(&mut rng);
                let w = if z == d.topic
                    && !story_words.is_empty()
                    && rng.random::<f64>() < spec.story.focus
                {
                    story_words[rng.random_range(0..story_words.len())]
                } else {
                    topic_samplers[z].sample(&mut rng)
                };
                vocabulary[w].as_str()
            })
            .collect();
        let split = spec.title_words.min(tokens.len());
        articles.push(Article {
            id: format!("a{:0width$}", i, width = width),
            title: tokens[..split].join(" "),
            body: tokens[split..].join(" "),
            published_at: spec.date(d.day),
            kind: d.kind,
        });
    }

    // Visits: split each topic's daily volume over its live articles.
    let mut daily: Vec<Vec<(NaiveDate, u64)>> = vec![Vec::new(); spec.n_articles];
    let mut live: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0;
    for t in 0..spec.n_days {
        while next < drafts.len() && drafts[next].day == t {
            live[drafts[next].topic].push(next);
            next += 1;
        }
        for u in 0..k {
            live[u].retain(|&a| t - drafts[a].day < spec.max_age_days);
            if live[u].is_empty() {
                continue;
            }
            let total = volumes[u][t].round().max(0.0) as u64;
            let weights: Vec<f64> = live[u]
                .iter()
                .map(|&a| {
                    let d = &drafts[a];
                    let hl = match d.kind {
                        ArticleKind::News => spec.halflife_news_days,
                        ArticleKind::Opinion => spec.halflife_opinion_days,
                    };
                    d.weight * 0.5f64.powf((t - d.day) as f64 / hl)
                })
                .collect();
            for (&a, v) in live[u].iter().zip(largest_remainder(total, &weights)) {
                if v > 0 {
                    daily[a].push((spec.date(t), v));
                }
            }
        }
    }

    // Early measurements by nested binomial thinning of day-0 visits.
    let mut rng = stream(spec.seed, STREAM_EARLY);
    let [f5, f1, f6] = spec.early_fractions;
    let mut visits = Vec::with_capacity(spec.n_articles);
    for ((a, d), rows) in articles.iter().zip(&drafts).zip(daily) {
        let day0 = rows
            .first()
            .filter(|(date, _)| *date == spec.date(d.day))
            .map_or(0, |&(_, v)| v);
        let c6 = thin(day0, f6, &mut rng);
        let c1 = thin(c6, f1 / f6, &mut rng);
        let c5 = thin(c1, f5 / f1, &mut rng);
        let early = vec![
            (EarlyOffset::FiveMinutes, c5),
            (EarlyOffset::OneHour, c1),
            (EarlyOffset::SixHours, c6),
        ];
        visits.push(VisitSeries::new(a.id.clone(), a.published_at, rows, early)?);
    }

    let truth = GroundTruth {
        start_date: spec.start_date,
        vocabulary,
        topic_word,
        mixing_weights: {
            let z: f64 = spec.mixing_weights.iter().sum();
            spec.mixing_weights.iter().map(|w| w / z).collect()
        },
        intercepts: spec.var.intercepts(),
        volumes,
        primary_topics: articles
            .iter()
            .zip(&drafts)
            .map(|(a, d)| (a.id.clone(), d.topic))
            .collect(),
        stories: articles
            .iter()
            .zip(&drafts)
            .map(|(a, d)| (a.id.clone(), d.story))
            .collect(),
    };
    Ok((Corpus::new(articles, visits)?, truth))
}

fn thin(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if n == 0 || p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Integer split of `total` proportional to `weights`, exact in sum.
fn largest_remainder(total: u64, weights: &[f64]) -> Vec<u64> {
    let z: f64 = weights.iter().sum();
    if z <= 0.0 || total == 0 {
        return vec![0; weights.len()];
    }
    let shares: Vec<f64> = weights.iter().map(|w| total as f64 * w / z).collect();
    let mut out: Vec<u64> = shares.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_is_exact() {
        let v = largest_remainder(10, &[1.0, 1.0, 1.0]);
        assert_eq!(v.iter().sum::<u64>(), 10);
        assert_eq!(v, vec![4, 3, 3]);
        assert_eq!(largest_remainder(0, &[1.0]), vec![0]);
    }

    #[test]
    fn spectral_radius_known_cases() {
        let r = spectral_radius(&[vec![0.5, 0.0], vec![0.0, -0.8]]);
        assert!((r - 0.8).abs() < 1e-9);
        // Rotation scaled by 0.9: complex pair of modulus 0.9.
        let (c, s) = (0.9 * 0.3f64.cos(), 0.9 * 0.3f64.sin());
        let r = spectral_radius(&[vec![c, -s], vec![s, c]]);
        assert!((r - 0.9).abs() < 1e-9);
        assert_eq!(spectral_radius(&[vec![0.0, 1.0], vec![0.0, 0.0]]), 0.0);
    }

    #[test]
    fn rejects_non_stationary_var() {
        let mut spec = SynthSpec::new(2, 20, 10, 1);
        spec.var.lag_coefficients[0][0][0] = 1.2;
        let err = generate_synthetic(&spec).unwrap_err();
        assert!(err.to_string().contains("non-stationary"), "{err}");
    }

    #[test]
    fn noiseless_volumes_follow_recurrence() {
        let process = VarProcess::ring(3, 1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = simulate_var(&process, 50, 10, 0.0, 0.4, &mut rng);
        let c = process.intercepts();
        for t in process.order()..50 {
            for u in 0..3 {
                let mut pred = c[u];
                for (l, a) in process.lag_coefficients.iter().enumerate() {
                    pred += (0..3).map(|w| a[u][w] * v[w][t - l - 1]).sum::<f64>();
                }
                assert!((pred - v[u][t]).abs() <= 1e-9 * v[u][t]);
            }
        }
    }

    #[test]
    fn vocabulary_is_stable_under_preprocessing() {
        let words = make_vocabulary(300, &mut stream(9, STREAM_VOCAB));
        let cfg = TokenPipelineConfig::default();
        let unique: HashSet<_> = words.iter().collect();
        assert_eq!(unique.len(), 300);
        for w in &words {
            assert_eq!(preprocess(w, &cfg), vec![w.clone()]);
        }
    }
}
