//! Pre-publication popularity of single articles.
//!
//! Every feature of an article published on day `t_a` is read from data
//! dated strictly before `t_a`: neighbor visits are cut off the day before
//! publication, topic volumes are lagged, and the topic-volume forecast is
//! fitted on the panel prefix. The target is `N_a(t_a + h)`, the cumulative
//! visits through day `t_a + h`.

pub mod analytics;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EarlyOffset};
use crate::error::{Error, Result};
use crate::forecast::{ForecastSetup, TopicVolumePanel};
use crate::metrics::Mape;
use crate::regression::{LinearRegression, Standardizer};
use crate::textproc::{preprocess, SparseVector, TfIdfIndex, TokenPipelineConfig};
use crate::topics::TopicModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "NN")]
    Nn,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "NN_T")]
    NnT,
    #[serde(rename = "NN_T_PT")]
    NnTPt,
    #[serde(rename = "EARLY")]
    Early,
    /// `NN_T_PT` plus the raw early count.
    #[serde(rename = "EARLY_NN_T_PT")]
    EarlyNnTPt,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Nn,
        Variant::T,
        Variant::NnT,
        Variant::NnTPt,
        Variant::Early,
        Variant::EarlyNnTPt,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Nn => "NN",
            Variant::T => "T",
            Variant::NnT => "NN_T",
            Variant::NnTPt => "NN_T_PT",
            Variant::Early => "EARLY",
            Variant::EarlyNnTPt => "EARLY_NN_T_PT",
        }
    }

    fn uses_neighbors(self) -> bool {
        matches!(
            self,
            Variant::Nn | Variant::NnT | Variant::NnTPt | Variant::EarlyNnTPt
        )
    }

    fn uses_topic(self) -> bool {
        matches!(
            self,
            Variant::T | Variant::NnT | Variant::NnTPt | Variant::EarlyNnTPt
        )
    }

    fn uses_forecast(self) -> bool {
        matches!(self, Variant::NnTPt | Variant::EarlyNnTPt)
    }

    pub fn uses_early(self) -> bool {
        matches!(self, Variant::Early | Variant::EarlyNnTPt)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown variant `{s}` (expected one of NN, T, NN_T, NN_T_PT, EARLY, EARLY_NN_T_PT)"
                ))
            })
    }
}

/// How neighbor visits are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateForm {
    /// `sum(sim * N) / sum(sim)`: similarity-weighted mean of visits.
    #[default]
    WeightedVisits,
    /// `sum(sim * N) / sum(N)`: visit-weighted mean of similarities.
    WeightedSimilarity,
}

/// Date through which neighbor visits are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborCutoff {
    /// Visits through the day before the anchor is published.
    #[default]
    DayBefore,
    /// Visits through the anchor's publication day. Reads same-day data.
    PublicationDay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArticlePredictorConfig {
    /// Days after publication of the target `N_a(t_a + h)`.
    pub horizon: usize,
    /// Number of lag days feeding the NN and T features.
    pub delta: usize,
    pub theta: f64,
    pub variant: Variant,
    pub early_offset: Option<EarlyOffset>,
    pub aggregate: AggregateForm,
    pub cutoff: NeighborCutoff,
    /// Topic-volume forecaster behind the PT feature.
    pub forecast: ForecastSetup,
    /// Chronologically earliest share of eligible articles used for training.
    pub train_fraction: f64,
}

impl Default for ArticlePredictorConfig {
    fn default() -> Self {
        ArticlePredictorConfig {
            horizon: 3,
            delta: 3,
            theta: 0.1,
            variant: Variant::NnTPt,
            early_offset: None,
            aggregate: AggregateForm::default(),
            cutoff: NeighborCutoff::default(),
            forecast: ForecastSetup::default(),
            train_fraction: 0.8,
        }
    }
}

impl ArticlePredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.delta == 0 {
            return Err(Error::domain(
                "article predictor: horizon and delta must be at least 1",
            ));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::domain(format!(
                "article predictor: theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if self.variant.uses_early() != self.early_offset.is_some() {
            return Err(Error::domain(format!(
                "article predictor: an early offset is required for {} and only for EARLY variants",
                self.variant
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::domain(
                "article predictor: train fraction must lie in (0, 1)",
            ));
        }
        Ok(())
    }

    /// First panel day an article may be published on to be used in
    /// training or evaluation. The same for every variant so that variants
    /// are compared on identical articles.
    pub fn min_history(&self) -> usize {
        (self.forecast.window + self.horizon + self.forecast.delta).max(self.delta)
    }

    fn log_target(&self) -> bool {
        self.variant == Variant::Early
    }
}

/// Articles published on `day` that are at least `theta`-similar to an anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub anchor: String,
    pub day: NaiveDate,
    pub theta: f64,
    /// `(article id, cosine)`, most similar first.
    pub members: Vec<(String, f64)>,
}

/// Everything about the article being predicted that features need.
#[derive(Debug, Clone)]
pub struct Subject {
    /// Corpus id, or a label for drafts.
    pub label: String,
    /// Set for stored articles so they never count as their own neighbor.
    pub article_id: Option<String>,
    pub vector: SparseVector,
    pub topic: usize,
    pub published_at: NaiveDate,
    /// Early cumulative counts; empty for drafts.
    pub early: Vec<(EarlyOffset, u64)>,
    pub warnings: Vec<String>,
}

/// Unpublished article text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draft {
    pub title: String,
    pub body: String,
    pub planned: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArticleInput {
    Stored(String),
    Draft(Draft),
}

/// Read-only data every prediction consults.
#[derive(Clone, Copy)]
pub struct PredictionContext<'a> {
    pub corpus: &'a Corpus,
    pub index: &'a TfIdfIndex,
    pub panel: &'a TopicVolumePanel,
    pub model: &'a TopicModel,
    pub tokens: &'a TokenPipelineConfig,
}

impl<'a> PredictionContext<'a> {
    pub fn stored(&self, id: &str) -> Result<Subject> {
        let (article, series) = self.corpus.get(id)?;
        let topic = self.model.primary_topic_of(id).ok_or_else(|| {
            Error::domain(format!(
                "article `{id}` has no topic (no text left after preprocessing)"
            ))
        })?;
        Ok(Subject {
            label: id.to_string(),
            article_id: Some(id.to_string()),
            vector: self.index.vector(id)?.clone(),
            topic,
            published_at: article.published_at,
            early: series.early().to_vec(),
            warnings: Vec::new(),
        })
    }

    /// A draft whose text matches a corpus article exactly reuses that
    /// article's fitted topic; anything else is folded into the model.
    pub fn draft(&self, draft: &Draft) -> Subject {
        let text = format!("{}\n{}", draft.title, draft.body);
        let stems = preprocess(&text, self.tokens);
        let known = self
            .corpus
            .articles()
            .iter()
            .find(|a| a.title == draft.title && a.body == draft.body)
            .and_then(|a| self.model.primary_topic_of(&a.id));
        let mut warnings = Vec::new();
        let topic = match known {
            Some(u) => u,
            None => {
                let inf = self.model.infer(&stems);
                warnings.extend(inf.warning);
                inf.primary_topic
            }
        };
        Subject {
            label: "draft".to_string(),
            article_id: None,
            vector: self.index.project(&stems),
            topic,
            published_at: draft.planned,
            early: Vec::new(),
            warnings,
        }
    }

    pub fn subject(&self, input: &ArticleInput) -> Result<Subject> {
        match input {
            ArticleInput::Stored(id) => self.stored(id),
            ArticleInput::Draft(d) => Ok(self.draft(d)),
        }
    }
}

fn day_offset(date: NaiveDate, days: i64) -> NaiveDate {
    if days >= 0 {
        date.checked_add_days(Days::new(days as u64))
            .expect("date in range")
    } else {
        date.checked_sub_days(Days::new((-days) as u64))
            .expect("date in range")
    }
}

/// Same-day neighbors of `subject` among articles published on `day`.
pub fn neighbor_set(
    index: &TfIdfIndex,
    corpus: &Corpus,
    subject: &Subject,
    day: NaiveDate,
    theta: f64,
) -> Result<NeighborSet> {
    if day >= subject.published_at {
        return Err(Error::domain(format!(
            "neighbors of `{}` must come from before its publication on {}, got {day}",
            subject.label, subject.published_at
        )));
    }
    let mut members: Vec<(String, f64)> = corpus
        .published_on(day)
        .iter()
        .map(|&i| &corpus.article(i).id)
        .filter(|id| subject.article_id.as_deref() != Some(id.as_str()))
        .map(|id| Ok((id.clone(), subject.vector.cosine(index.vector(id)?))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&(_, s)| s >= theta)
        .collect();
    members.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(NeighborSet {
        anchor: subject.label.clone(),
        day,
        theta,
        members,
    })
}

/// Neighbor aggregate `X_a(t)`; `None` for an empty set.
pub fn nn_aggregate(
    neighbors: &NeighborSet,
    corpus: &Corpus,
    t_a: NaiveDate,
    form: AggregateForm,
    cutoff: NeighborCutoff,
) -> Result<Option<f64>> {
    if neighbors.members.is_empty() {
        return Ok(None);
    }
    let upto = match cutoff {
        NeighborCutoff::DayBefore => day_offset(t_a, -1),
        NeighborCutoff::PublicationDay => t_a,
    };
    let (mut num, mut sims, mut visits) = (0.0, 0.0, 0.0);
    for (id, s) in &neighbors.members {
        let n = corpus.cumulative_visits(id, upto)? as f64;
        num += s * n;
        sims += s;
        visits += n;
    }
    Ok(Some(match form {
        AggregateForm::WeightedVisits => num / sims,
        AggregateForm::WeightedSimilarity if visits > 0.0 => num / visits,
        AggregateForm::WeightedSimilarity => 0.0,
    }))
}

/// Feature values behind one prediction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    /// `X_a(t)` for `t = t_a - delta .. t_a - 1`; `None` marks an empty set.
    pub nn_aggregates: Option<Vec<Option<f64>>>,
    pub topic: Option<usize>,
    /// `V(u_a, t)` over the same lag days.
    pub topic_volumes: Option<Vec<f64>>,
    /// Forecast of `V(u_a, t_a + h)`.
    pub topic_forecast: Option<f64>,
    pub early: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticlePrediction {
    pub subject: String,
    pub published_at: NaiveDate,
    pub variant: Variant,
    /// Predicted `N_a(t_a + h)`.
    pub predicted: f64,
    /// Set when the raw model output was negative and replaced by zero.
    pub clamped: bool,
    pub components: Components,
    pub warnings: Vec<String>,
}

/// Column names of the design matrix for `config`.
pub fn feature_names(config: &ArticlePredictorConfig) -> Vec<String> {
    let v = config.variant;
    let lags = (1..=config.delta).rev();
    let mut names = Vec::new();
    if v == Variant::Early {
        names.push("log1p_early".to_string());
        return names;
    }
    if v.uses_neighbors() {
        names.extend(lags.clone().map(|i| format!("nn_lag{i}")));
        names.extend(lags.clone().map(|i| format!("nn_empty_lag{i}")));
    }
    if v.uses_topic() {
        names.extend(lags.map(|i| format!("topic_lag{i}")));
    }
    if v.uses_forecast() {
        names.push("topic_forecast".to_string());
    }
    if v.uses_early() {
        names.push("early".to_string());
    }
    names
}

fn missing_dates(panel: &TopicVolumePanel, from: i64, to: i64) -> Vec<NaiveDate> {
    let len = panel.len() as i64;
    (from..to)
        .filter(|&t| t < 0 || t >= len)
        .map(|t| day_offset(panel.start, t))
        .collect()
}

/// Forecast of `V(topic, t + horizon)` from the panel before day `t`.
pub fn topic_forecast(
    panel: &TopicVolumePanel,
    setup: &ForecastSetup,
    topic: usize,
    t: i64,
    horizon: usize,
) -> Result<f64> {
    let missing = missing_dates(panel, t.min(0), t);
    if !missing.is_empty() || t > panel.len() as i64 {
        let mut missing = missing;
        missing.extend(missing_dates(panel, panel.len() as i64, t));
        return Err(Error::InsufficientHistory { missing });
    }
    Ok(setup
        .forecast_at(panel, topic, t as usize, horizon + 1)?
        .1
        .value)
}

fn components<F>(
    ctx: &PredictionContext<'_>,
    config: &ArticlePredictorConfig,
    subject: &Subject,
    forecast: F,
) -> Result<Components>
where
    F: Fn(usize, i64) -> Result<f64>,
{
    let v = config.variant;
    let delta = config.delta as i64;
    let mut c = Components::default();
    if v.uses_early() {
        let offset = config.early_offset.expect("validated");
        let count = subject
            .early
            .iter()
            .find(|&&(o, _)| o == offset)
            .map(|&(_, n)| n)
            .ok_or_else(|| {
                Error::domain(format!(
                    "`{}` has no early measurement at {}",
                    subject.label,
                    offset.label()
                ))
            })?;
        c.early = Some(count);
    }
    if v == Variant::Early {
        return Ok(c);
    }
    if v.uses_neighbors() {
        let mut xs = Vec::with_capacity(config.delta);
        for i in (1..=delta).rev() {
            let day = day_offset(subject.published_at, -i);
            let set = neighbor_set(ctx.index, ctx.corpus, subject, day, config.theta)?;
            xs.push(nn_aggregate(
                &set,
                ctx.corpus,
                subject.published_at,
                config.aggregate,
                config.cutoff,
            )?);
        }
        c.nn_aggregates = Some(xs);
    }
    if v.uses_topic() || v.uses_forecast() {
        let t = ctx.panel.offset(subject.published_at);
        let missing = missing_dates(ctx.panel, t - delta, t);
        if !missing.is_empty() {
            return Err(Error::InsufficientHistory { missing });
        }
        c.topic = Some(subject.topic);
        if v.uses_topic() {
            let series = ctx.panel.series(subject.topic);
            c.topic_volumes = Some(((t - delta)..t).map(|d| series[d as usize]).collect());
        }
        if v.uses_forecast() {
            c.topic_forecast = Some(forecast(subject.topic, t)?);
        }
    }
    Ok(c)
}

fn design_row(config: &ArticlePredictorConfig, c: &Components) -> Vec<f64> {
    if config.variant == Variant::Early {
        return vec![(c.early.unwrap_or(0) as f64).ln_1p()];
    }
    let mut row = Vec::new();
    if let Some(xs) = &c.nn_aggregates {
        row.extend(xs.iter().map(|x| x.unwrap_or(0.0)));
        row.extend(xs.iter().map(|x| if x.is_none() { 1.0 } else { 0.0 }));
    }
    if let Some(vs) = &c.topic_volumes {
        row.extend_from_slice(vs);
    }
    if let Some(f) = c.topic_forecast {
        row.push(f);
    }
    if config.variant.uses_early() {
        row.push(c.early.unwrap_or(0) as f64);
    }
    row
}

/// Held-out scores of a fitted predictor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mape: Option<f64>,
    pub n_test: usize,
    /// Test articles with zero target visits, left out of the MAPE.
    pub n_skipped: usize,
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticlePredictor {
    pub config: ArticlePredictorConfig,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer<f64>,
    pub regression: LinearRegression<f64>,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub evaluation: Evaluation,
}

impl ArticlePredictor {
    /// Model output mapped back to visits, clamped at zero.
    fn output(&self, row: &[f64]) -> (f64, bool) {
        let raw = self.regression.predict(&self.standardizer.transform(row));
        let raw = if self.config.log_target() {
            raw.exp_m1()
        } else {
            raw
        };
        if raw < 0.0 {
            (0.0, true)
        } else {
            (raw, false)
        }
    }
}

/// Articles usable for training and evaluation under `config`, in
/// publication order (ties by corpus position).
pub fn eligible_articles(
    ctx: &PredictionContext<'_>,
    config: &ArticlePredictorConfig,
) -> Vec<usize> {
    let Some((_, last)) = ctx.corpus.date_range() else {
        return Vec::new();
    };
    let min_t = config.min_history() as i64;
    let mut out: Vec<usize> = (0..ctx.corpus.len())
        .filter(|&i| {
            let a = ctx.corpus.article(i);
            ctx.panel.offset(a.published_at) >= min_t
                && day_offset(a.published_at, config.horizon as i64) <= last
                && ctx.model.primary_topic_of(&a.id).is_some()
                && config
                    .early_offset
                    .is_none_or(|o| ctx.corpus.series(i).early_at(o).is_some())
        })
        .collect();
    out.sort_by_key(|&i| (ctx.corpus.article(i).published_at, i));
    out
}

/// `N_a(t_a + h)`.
pub fn target_visits(corpus: &Corpus, idx: usize, horizon: usize) -> u64 {
    let a = corpus.article(idx);
    corpus
        .series(idx)
        .through(day_offset(a.published_at, horizon as i64))
}

/// Fits one linear regression on the chronologically first
/// `train_fraction` of eligible articles and scores it on the rest.
pub fn fit_article_predictor(
    ctx: &PredictionContext<'_>,
    config: &ArticlePredictorConfig,
) -> Result<ArticlePredictor> {
    config.validate()?;
    let eligible = eligible_articles(ctx, config);
    let names = feature_names(config);
    let n_train = (eligible.len() as f64 * config.train_fraction).floor() as usize;
    if n_train < names.len() + 2 {
        return Err(Error::domain(format!(
            "article predictor needs at least {} training articles for {} features, got {n_train} \
             ({} eligible)",
            names.len() + 2,
            names.len(),
            eligible.len()
        )));
    }

    let subjects: Vec<Subject> = eligible
        .iter()
        .map(|&i| ctx.stored(&ctx.corpus.article(i).id))
        .collect::<Result<_>>()?;
    let forecasts = forecast_cache(ctx, config, &subjects)?;
    let rows: Vec<Vec<f64>> = subjects
        .par_iter()
        .map(|s| {
            let c = components(ctx, config, s, |u, t| Ok(forecasts[&(u, t)]))?;
            Ok(design_row(config, &c))
        })
        .collect::<Result<_>>()?;
    let observed: Vec<f64> = eligible
        .iter()
        .map(|&i| target_visits(ctx.corpus, i, config.horizon) as f64)
        .collect();

    let (train_rows, test_rows) = rows.split_at(n_train);
    let standardizer = Standardizer::fit(train_rows, names.len());
    let design = standardizer.transform_all(train_rows);
    let targets: Vec<f64> = observed[..n_train]
        .iter()
        .map(|&n| if config.log_target() { n.ln_1p() } else { n })
        .collect();
    let regression = LinearRegression::fit(&design, &targets)?;
    let ids = |r: &[usize]| {
        r.iter()
            .map(|&i| ctx.corpus.article(i).id.clone())
            .collect()
    };
    let mut predictor = ArticlePredictor {
        config: config.clone(),
        feature_names: names,
        standardizer,
        regression,
        train_ids: ids(&eligible[..n_train]),
        test_ids: ids(&eligible[n_train..]),
        evaluation: Evaluation::default(),
    };
    let mut mape = Mape::new();
    let mut clamped = 0;
    for (row, &obs) in test_rows.iter().zip(&observed[n_train..]) {
        let (pred, c) = predictor.output(row);
        mape.add(obs, pred);
        clamped += c as usize;
    }
    predictor.evaluation = Evaluation {
        mape: mape.value(),
        n_test: test_rows.len(),
        n_skipped: mape.n_skipped,
        clamped,
    };
    Ok(predictor)
}

/// PT values for every distinct `(topic, day)` among `subjects`, fitted in
/// parallel. Empty for variants without the PT feature.
fn forecast_cache(
    ctx: &PredictionContext<'_>,
    config: &ArticlePredictorConfig,
    subjects: &[Subject],
) -> Result<HashMap<(usize, i64), f64>> {
    if !config.variant.uses_forecast() {
        return Ok(HashMap::new());
    }
    let keys: BTreeSet<(usize, i64)> = subjects
        .iter()
        .map(|s| (s.topic, ctx.panel.offset(s.published_at)))
        .collect();
    let keys: Vec<(usize, i64)> = keys.into_iter().collect();
    let values: Vec<f64> = keys
        .par_iter()
        .map(|&(u, t)| topic_forecast(ctx.panel, &config.forecast, u, t, config.horizon))
        .collect::<Result<_>>()?;
    Ok(keys.into_iter().zip(values).collect())
}

/// Predicts `N_a(t_a + h)` for a stored article or a draft.
pub fn predict_article(
    predictor: &ArticlePredictor,
    ctx: &PredictionContext<'_>,
    input: &ArticleInput,
) -> Result<ArticlePrediction> {
    let config = &predictor.config;
    let subject = ctx.subject(input)?;
    if config.variant.uses_early() && subject.article_id.is_none() {
        return Err(Error::domain(format!(
            "{} needs an early measurement, which a draft does not have",
            config.variant
        )));
    }
    let c = components(ctx, config, &subject, |u, t| {
        topic_forecast(ctx.panel, &config.forecast, u, t, config.horizon)
    })?;
    let (predicted, clamped) = predictor.output(&design_row(config, &c));
    Ok(ArticlePrediction {
        subject: subject.label,
        published_at: subject.published_at,
        variant: config.variant,
        predicted,
        clamped,
        components: c,
        warnings: subject.warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub variant: String,
    pub theta: f64,
    pub delta: usize,
    pub mape: Option<f64>,
    pub n_test: usize,
    pub n_skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArticleEvalReport {
    pub rows: Vec<EvalRow>,
}

impl ArticleEvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,theta,delta,mape,n_test,n_skipped\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.variant,
                r.theta,
                r.delta,
                r.mape.map_or(String::new(), |m| m.to_string()),
                r.n_test,
                r.n_skipped
            );
        }
        out
    }

    pub fn mape(&self, variant: &str, theta: f64, delta: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.theta == theta && r.delta == delta)
            .and_then(|r| r.mape)
    }
}

/// Report label: the variant, suffixed with the early offset when set.
pub fn variant_label(variant: Variant, offset: Option<EarlyOffset>) -> String {
    match offset {
        Some(o) => format!("{}_{}", variant.label(), o.label()),
        None => variant.label().to_string(),
    }
}

/// Inverse of [`variant_label`]. A bare `EARLY` label defaults to the 1h
/// offset.
pub fn parse_variant_label(label: &str) -> Result<(Variant, Option<EarlyOffset>)> {
    let (variant, offset) = match label.rsplit_once('_') {
        Some((head, tail))
            if tail.parse::<EarlyOffset>().is_ok() && !tail.chars().all(|c| c.is_ascii_digit()) =>
        {
            (head.parse::<Variant>()?, Some(tail.parse()?))
        }
        _ => (label.parse::<Variant>()?, None),
    };
    let offset = match (variant.uses_early(), offset) {
        (true, None) => Some(EarlyOffset::OneHour),
        (false, Some(_)) => {
            return Err(Error::Validation(format!(
                "variant `{label}` does not take an early offset"
            )))
        }
        (_, o) => o,
    };
    Ok((variant, offset))
}

/// Fits and scores every combination of variant, theta and delta. Variants
/// that do not read neighbors are evaluated once per delta, at the first
/// theta only.
pub fn evaluate_articles(
    ctx: &PredictionContext<'_>,
    base: &ArticlePredictorConfig,
    variants: &[(Variant, Option<EarlyOffset>)],
    thetas: &[f64],
    deltas: &[usize],
) -> Result<ArticleEvalReport> {
    let mut report = ArticleEvalReport::default();
    for &(variant, early_offset) in variants {
        for &delta in deltas {
            for (ti, &theta) in thetas.iter().enumerate() {
                if ti > 0 && !variant.uses_neighbors() {
                    continue;
                }
                let config = ArticlePredictorConfig {
                    variant,
                    early_offset,
                    theta,
                    delta,
                    ..base.clone()
                };
                let fitted = fit_article_predictor(ctx, &config)?;
                report.rows.push(EvalRow {
                    variant: variant_label(variant, early_offset),
                    theta,
                    delta,
                    mape: fitted.evaluation.mape,
                    n_test: fitted.evaluation.n_test,
                    n_skipped: fitted.evaluation.n_skipped,
                });
            }
        }
    }
    Ok(report)
}
