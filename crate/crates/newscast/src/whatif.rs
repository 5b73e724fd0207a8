//! Request and response bodies shared by `newscast predict` and the HTTP
//! service, and the functions that compute them from a snapshot.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use newscast_core::articlepred::{
    neighbor_set, predict_article, variant_label, ArticleInput, ArticlePredictor, Components,
    Draft, Subject,
};

use crate::error::{AppError, AppResult};
use crate::snapshot::Snapshot;

/// Body of `POST /whatif`. Missing fields are reported by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhatIfRequest {
    pub title: String,
    pub body: String,
    /// ISO-8601 date, `YYYY-MM-DD`.
    pub planned_date: String,
    /// Variant label; defaults to the snapshot's first variant (`NN_T_PT`).
    pub variant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub id: usize,
    pub label_words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborOut {
    pub id: String,
    pub title: String,
    pub published_at: NaiveDate,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedValue {
    pub date: NaiveDate,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub variant: String,
    pub planned_date: NaiveDate,
    pub horizon: usize,
    /// Predicted visits are cumulative through this date.
    pub target_date: NaiveDate,
    pub predicted_visits: f64,
    pub clamped: bool,
    pub topic: TopicSummary,
    /// Most similar articles from the lag days, by similarity descending.
    pub neighbors: Vec<NeighborOut>,
    pub topic_history: Vec<DatedValue>,
    /// Forecast volumes for the planned date and the days after it.
    pub topic_forecast: Vec<DatedValue>,
    pub components: Components,
    pub warnings: Vec<String>,
}

pub const LABEL_WORDS: usize = 10;

fn plus(date: NaiveDate, days: usize) -> NaiveDate {
    date.checked_add_days(Days::new(days as u64))
        .expect("date in range")
}

impl WhatIfRequest {
    pub fn validate(&self) -> AppResult<(Draft, Option<String>)> {
        if self.body.trim().is_empty() {
            return Err(AppError::field("body", "must not be empty"));
        }
        if self.planned_date.trim().is_empty() {
            return Err(AppError::field("planned_date", "is required (YYYY-MM-DD)"));
        }
        let planned =
            NaiveDate::parse_from_str(self.planned_date.trim(), "%Y-%m-%d").map_err(|e| {
                AppError::field(
                    "planned_date",
                    format!("`{}` is not a YYYY-MM-DD date: {e}", self.planned_date),
                )
            })?;
        if let Some(v) = &self.variant {
            newscast_core::articlepred::parse_variant_label(v)
                .map_err(|e| AppError::field("variant", e.to_string()))?;
        }
        Ok((
            Draft {
                title: self.title.clone(),
                body: self.body.clone(),
                planned,
            },
            self.variant.clone(),
        ))
    }
}

pub fn topic_summary(snapshot: &Snapshot, u: usize) -> TopicSummary {
    TopicSummary {
        id: u,
        label_words: snapshot
            .model
            .top_words(u, LABEL_WORDS)
            .into_iter()
            .map(|(w, _)| w)
            .collect(),
    }
}

/// Union of the neighbor sets over the lag days, best similarity per article.
fn neighbors(
    snapshot: &Snapshot,
    predictor: &ArticlePredictor,
    subject: &Subject,
) -> AppResult<Vec<NeighborOut>> {
    let config = &predictor.config;
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for d in 1..=config.delta {
        let Some(day) = subject.published_at.checked_sub_days(Days::new(d as u64)) else {
            continue;
        };
        let set = neighbor_set(
            &snapshot.index,
            &snapshot.corpus,
            subject,
            day,
            config.theta,
        )?;
        for (id, s) in set.members {
            let e = best.entry(id).or_insert(s);
            *e = e.max(s);
        }
    }
    let mut out: Vec<NeighborOut> = best
        .into_iter()
        .map(|(id, similarity)| {
            let a = snapshot.corpus.get(&id).expect("neighbor from corpus").0;
            NeighborOut {
                title: a.title.clone(),
                published_at: a.published_at,
                id,
                similarity,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.id.cmp(&b.id))
    });
    out.truncate(snapshot.meta.config.serve.max_neighbors);
    Ok(out)
}

/// Panel values on the `days` days before `date` that the panel covers.
pub fn history(snapshot: &Snapshot, u: usize, date: NaiveDate, days: usize) -> Vec<DatedValue> {
    let end = snapshot.panel.offset(date);
    let start = (end - days as i64).max(0);
    (start..end.min(snapshot.panel.len() as i64))
        .map(|t| DatedValue {
            date: snapshot.panel.date(t as usize),
            volume: snapshot.panel.values[u][t as usize],
        })
        .collect()
}

fn forecast_from(
    snapshot: &Snapshot,
    u: usize,
    date: NaiveDate,
    days: usize,
    warnings: &mut Vec<String>,
) -> Vec<DatedValue> {
    let setup = &snapshot.meta.config.forecast.setup;
    let origin = snapshot.panel.offset(date);
    if origin < 0 || origin > snapshot.panel.len() as i64 {
        warnings.push(format!(
            "no topic forecast: {date} is outside the panel ({} to the day after {})",
            snapshot.meta.panel_start, snapshot.meta.panel_end
        ));
        return Vec::new();
    }
    let mut out = Vec::new();
    for h in 1..=days {
        match setup.forecast_at(&snapshot.panel, u, origin as usize, h) {
            Ok((_, f)) => out.push(DatedValue {
                date: plus(date, h - 1),
                volume: f.value,
            }),
            Err(e) => {
                warnings.push(format!("no topic forecast: {e}"));
                return Vec::new();
            }
        }
    }
    out
}

/// Prediction for a stored article or a draft.
pub fn whatif(
    snapshot: &Snapshot,
    input: &ArticleInput,
    variant: Option<&str>,
) -> AppResult<WhatIfResponse> {
    let predictor = snapshot.predictor(variant)?;
    let ctx = snapshot.context();
    let prediction = predict_article(predictor, &ctx, input)?;
    let subject = ctx.subject(input)?;
    let config = &predictor.config;
    if !prediction.predicted.is_finite() {
        return Err(newscast_core::Error::Domain("prediction is not finite".into()).into());
    }
    let mut warnings = prediction.warnings.clone();
    let history_days = snapshot.meta.config.serve.history_days;
    let topic_history = history(snapshot, subject.topic, subject.published_at, history_days);
    let topic_forecast = forecast_from(
        snapshot,
        subject.topic,
        subject.published_at,
        config.horizon,
        &mut warnings,
    );
    Ok(WhatIfResponse {
        variant: variant_label(config.variant, config.early_offset),
        planned_date: subject.published_at,
        horizon: config.horizon,
        target_date: plus(subject.published_at, config.horizon),
        predicted_visits: prediction.predicted,
        clamped: prediction.clamped,
        topic: topic_summary(snapshot, subject.topic),
        neighbors: neighbors(snapshot, predictor, &subject)?,
        topic_history,
        topic_forecast,
        components: prediction.components,
        warnings,
    })
}

pub fn whatif_request(snapshot: &Snapshot, request: &WhatIfRequest) -> AppResult<WhatIfResponse> {
    let (draft, variant) = request.validate()?;
    whatif(snapshot, &ArticleInput::Draft(draft), variant.as_deref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionVsActual {
    pub id: String,
    pub title: String,
    pub published_at: NaiveDate,
    pub variant: String,
    pub horizon: usize,
    pub target_date: NaiveDate,
    pub predicted_visits: f64,
    pub clamped: bool,
    /// `None` when the target date lies past the observed data.
    pub actual_visits: Option<u64>,
    /// Absolute percentage error; `None` without an actual or when it is 0.
    pub ape: Option<f64>,
    /// Whether the article was in the predictor's training split.
    pub in_training: bool,
}

pub fn prediction_vs_actual(
    snapshot: &Snapshot,
    id: &str,
    variant: Option<&str>,
) -> AppResult<PredictionVsActual> {
    let (article, series) = snapshot.corpus.get(id)?;
    let predictor = snapshot.predictor(variant)?;
    let r = whatif(snapshot, &ArticleInput::Stored(id.to_string()), variant)?;
    let last = snapshot
        .corpus
        .date_range()
        .map(|(_, e)| e)
        .expect("non-empty corpus");
    let actual = (r.target_date <= last).then(|| series.through(r.target_date));
    Ok(PredictionVsActual {
        id: id.to_string(),
        title: article.title.clone(),
        published_at: article.published_at,
        variant: r.variant,
        horizon: r.horizon,
        target_date: r.target_date,
        predicted_visits: r.predicted_visits,
        clamped: r.clamped,
        actual_visits: actual,
        ape: actual
            .filter(|&a| a > 0)
            .map(|a| 100.0 * (r.predicted_visits - a as f64).abs() / a as f64),
        in_training: predictor.train_ids.iter().any(|t| t == id),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicInfo {
    pub id: usize,
    pub label_words: Vec<String>,
    pub word_weights: Vec<f64>,
    /// Articles whose primary topic this is.
    pub n_articles: usize,
}

pub fn topics(snapshot: &Snapshot) -> Vec<TopicInfo> {
    (0..snapshot.model.k())
        .map(|u| {
            let words = snapshot.model.top_words(u, LABEL_WORDS);
            TopicInfo {
                id: u,
                n_articles: snapshot
                    .model
                    .primary_topic
                    .iter()
                    .filter(|&&p| p == u)
                    .count(),
                label_words: words.iter().map(|(w, _)| w.clone()).collect(),
                word_weights: words.iter().map(|&(_, p)| p).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVolume {
    pub topic: usize,
    pub history: Vec<DatedValue>,
    /// From the snapshot's stored forecasters, for the days after the panel.
    pub forecast: Vec<DatedValue>,
}

pub fn topic_volume(snapshot: &Snapshot, u: usize, days: usize) -> AppResult<TopicVolume> {
    if u >= snapshot.model.k() {
        return Err(newscast_core::Error::Lookup {
            kind: "topic",
            id: u.to_string(),
        }
        .into());
    }
    let after = plus(snapshot.meta.panel_end, 1);
    let mut forecast: Vec<DatedValue> = snapshot
        .forecasters
        .iter()
        .filter(|f| f.topic == u)
        .map(|f| DatedValue {
            date: f.date,
            volume: f.forecast.value,
        })
        .collect();
    forecast.sort_by_key(|d| d.date);
    Ok(TopicVolume {
        topic: u,
        history: history(snapshot, u, after, days),
        forecast,
    })
}
