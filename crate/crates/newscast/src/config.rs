//! Pipeline configuration, read from TOML. Every key is optional; a missing
//! file means all defaults. See `README.md` for the full key list.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use newscast_core::articlepred::analytics::AnalyticsConfig;
use newscast_core::articlepred::{
    parse_variant_label, AggregateForm, ArticlePredictorConfig, NeighborCutoff, Variant,
};
use newscast_core::corpus::{EarlyOffset, SynthSpec, VarProcess};
use newscast_core::forecast::{BacktestConfig, ForecastSetup};
use newscast_core::textproc::{default_stopwords, TokenPipelineConfig};
use newscast_core::topics::{LdaConfig, SelectKConfig};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    pub text: TextConfig,
    pub topics: TopicsConfig,
    pub forecast: ForecastConfig,
    pub articles: ArticlesConfig,
    pub analytics: AnalyticsConfig,
    pub serve: ServeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            synth: SynthConfig::default(),
            text: TextConfig::default(),
            topics: TopicsConfig::default(),
            forecast: ForecastConfig::default(),
            articles: ArticlesConfig::default(),
            analytics: AnalyticsConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

/// Generator settings for `synth`. Topic `u` has mean volume
/// `mean_volume * mean_ratio^(u - (k - 1) / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub k: usize,
    pub n_articles: usize,
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub mean_volume: f64,
    pub mean_ratio: f64,
    pub noise_scale: f64,
    pub halflife_news_days: f64,
    pub halflife_opinion_days: f64,
    pub news_fraction: f64,
    pub words_per_article: usize,
    pub topic_purity: f64,
    pub block_mass: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SynthSpec::new(5, 3000, 150, 0);
        SynthConfig {
            k: 5,
            n_articles: 3000,
            n_days: 150,
            start_date: s.start_date,
            mean_volume: 4000.0,
            mean_ratio: 2.0,
            noise_scale: s.noise_scale,
            halflife_news_days: s.halflife_news_days,
            halflife_opinion_days: s.halflife_opinion_days,
            news_fraction: s.news_fraction,
            words_per_article: s.words_per_article,
            topic_purity: s.topic_purity,
            block_mass: s.block_mass,
        }
    }
}

impl SynthConfig {
    pub fn spec(&self, seed: u64) -> SynthSpec {
        let mut s = SynthSpec::new(self.k, self.n_articles, self.n_days, seed);
        let mid = (self.k as f64 - 1.0) / 2.0;
        let mut var = VarProcess::ring(self.k, self.mean_volume);
        var.means = (0..self.k)
            .map(|u| self.mean_volume * self.mean_ratio.powf(u as f64 - mid))
            .collect();
        s.var = var;
        s.start_date = self.start_date;
        s.noise_scale = self.noise_scale;
        s.halflife_news_days = self.halflife_news_days;
        s.halflife_opinion_days = self.halflife_opinion_days;
        s.news_fraction = self.news_fraction;
        s.words_per_article = self.words_per_article;
        s.topic_purity = self.topic_purity;
        s.block_mass = self.block_mass;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub min_token_length: usize,
    pub lowercase: bool,
    /// Added to the built-in English list.
    pub extra_stopwords: Vec<String>,
}

impl Default for TextConfig {
    fn default() -> Self {
        let t = TokenPipelineConfig::default();
        TextConfig {
            min_token_length: t.min_token_length,
            lowercase: t.lowercase,
            extra_stopwords: Vec::new(),
        }
    }
}

impl TextConfig {
    pub fn tokens(&self) -> TokenPipelineConfig {
        let mut stopwords = default_stopwords();
        stopwords.extend(self.extra_stopwords.iter().map(|w| w.to_lowercase()));
        TokenPipelineConfig {
            stopwords,
            min_token_length: self.min_token_length,
            lowercase: self.lowercase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub k: usize,
    /// Defaults to `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Candidate topic counts for `select-k`.
    pub candidates: Vec<usize>,
    pub test_fraction: f64,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        let l = LdaConfig::new(5, 0);
        TopicsConfig {
            k: 5,
            alpha: None,
            beta: l.beta,
            iterations: l.iterations,
            burn_in: l.burn_in,
            candidates: vec![3, 5, 10],
            test_fraction: SelectKConfig::default().test_fraction,
        }
    }
}

impl TopicsConfig {
    pub fn lda(&self, seed: u64) -> LdaConfig {
        let mut l = LdaConfig::new(self.k, seed);
        if let Some(a) = self.alpha {
            l.alpha = a;
        }
        l.beta = self.beta;
        l.iterations = self.iterations;
        l.burn_in = self.burn_in;
        l
    }

    pub fn select_k(&self, seed: u64) -> SelectKConfig {
        SelectKConfig {
            candidates: self.candidates.clone(),
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            lda_seed: seed,
            split_seed: seed,
            test_fraction: self.test_fraction,
            ..SelectKConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    #[serde(flatten)]
    pub setup: ForecastSetup,
    /// Horizons scored by `backtest-topics`.
    pub horizons: Vec<usize>,
    pub stride: usize,
    /// Days ahead covered by the forecasters stored in a snapshot.
    pub snapshot_horizon: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let b = BacktestConfig::default();
        ForecastConfig {
            setup: b.setup,
            horizons: b.horizons,
            stride: b.stride,
            snapshot_horizon: 7,
        }
    }
}

impl ForecastConfig {
    pub fn backtest(&self) -> BacktestConfig {
        BacktestConfig {
            setup: self.setup.clone(),
            horizons: self.horizons.clone(),
            stride: self.stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArticlesConfig {
    pub horizon: usize,
    pub delta: usize,
    pub theta: f64,
    pub aggregate: AggregateForm,
    pub cutoff: NeighborCutoff,
    pub train_fraction: f64,
    /// Variant labels fitted into a snapshot; the first is the default.
    pub variants: Vec<String>,
    /// Grid for `eval-articles`.
    pub eval_variants: Vec<String>,
    pub eval_thetas: Vec<f64>,
    pub eval_deltas: Vec<usize>,
}

impl Default for ArticlesConfig {
    fn default() -> Self {
        let p = ArticlePredictorConfig::default();
        ArticlesConfig {
            horizon: p.horizon,
            delta: p.delta,
            theta: p.theta,
            aggregate: p.aggregate,
            cutoff: p.cutoff,
            train_fraction: p.train_fraction,
            variants: ["NN_T_PT", "NN", "T", "NN_T"].map(String::from).to_vec(),
            eval_variants: [
                "NN",
                "T",
                "NN_T",
                "NN_T_PT",
                "EARLY_5m",
                "EARLY_1h",
                "EARLY_6h",
                "EARLY_NN_T_PT_1h",
            ]
            .map(String::from)
            .to_vec(),
            eval_thetas: vec![p.theta],
            eval_deltas: vec![p.delta],
        }
    }
}

impl ArticlesConfig {
    pub fn predictor(
        &self,
        variant: Variant,
        early_offset: Option<EarlyOffset>,
        forecast: &ForecastSetup,
    ) -> ArticlePredictorConfig {
        ArticlePredictorConfig {
            horizon: self.horizon,
            delta: self.delta,
            theta: self.theta,
            variant,
            early_offset,
            aggregate: self.aggregate,
            cutoff: self.cutoff,
            forecast: forecast.clone(),
            train_fraction: self.train_fraction,
        }
    }
}

pub fn parse_variants(labels: &[String]) -> AppResult<Vec<(Variant, Option<EarlyOffset>)>> {
    labels
        .iter()
        .map(|l| parse_variant_label(l).map_err(AppError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub bind: String,
    pub history_days: usize,
    pub max_neighbors: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            bind: "127.0.0.1:8080".to_string(),
            history_days: 14,
            max_neighbors: 10,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        let c: PipelineConfig =
            toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: Option<&Path>) -> AppResult<Self> {
        match path {
            None => Ok(PipelineConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| AppError::io(p, e))?;
                Self::from_toml(&text).map_err(|e| match e {
                    AppError::Config(m) => AppError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: String| Err(AppError::Config(m));
        if self.articles.variants.is_empty() {
            return bad("articles.variants must name at least one variant".into());
        }
        for (v, o) in parse_variants(&self.articles.variants)?
            .into_iter()
            .chain(parse_variants(&self.articles.eval_variants)?)
        {
            self.articles
                .predictor(v, o, &self.forecast.setup)
                .validate()
                .map_err(|e| AppError::Config(e.to_string()))?;
        }
        self.synth
            .spec(self.seed)
            .validate()
            .and_then(|_| self.topics.lda(self.seed).validate())
            .map_err(|e| AppError::Config(e.to_string()))?;
        if self.topics.candidates.iter().any(|&k| k < 2) {
            return bad("topics.candidates must all be at least 2".into());
        }
        if self.forecast.setup.window == 0 || self.forecast.setup.delta == 0 {
            return bad("forecast.window and forecast.delta must be positive".into());
        }
        if self.forecast.horizons.is_empty() || self.forecast.horizons.contains(&0) {
            return bad("forecast.horizons must be a non-empty list of positive days".into());
        }
        if self.forecast.snapshot_horizon == 0 {
            return bad("forecast.snapshot_horizon must be positive".into());
        }
        if self.serve.history_days == 0 {
            return bad("serve.history_days must be positive".into());
        }
        Ok(())
    }
}
