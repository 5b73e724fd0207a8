//! Topic-volume panel, lag correlations, feature selection, and direct
//! multi-horizon LR / SVR forecasters fitted on sliding windows.
//!
//! Time is indexed by panel day `t` (0 = first panel date). A forecaster
//! with horizon `h` at origin `t` reads the lags `t-delta ..= t-1` and
//! predicts `V(u, t+h-1)`. Its training samples are the `W` most recent
//! targets known at the origin, i.e. target days `t-W ..= t-1`.

mod backtest;

pub use backtest::{backtest, BacktestConfig, BacktestReport, BacktestRow};

use std::fmt::Write as _;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::r_squared;
use crate::regression::{LinearRegression, Standardizer};
use crate::svr::{LinearSvr, SvrParams};
use crate::topics::TopicModel;

/// `values[u][t]`: visits on day `t` to articles whose primary topic is `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVolumePanel {
    pub start: NaiveDate,
    pub values: Vec<Vec<f64>>,
}

impl TopicVolumePanel {
    pub fn from_matrix(start: NaiveDate, values: Vec<Vec<f64>>) -> Result<Self> {
        let len = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != len) {
            return Err(Error::Validation(
                "panel rows have different lengths".into(),
            ));
        }
        if values
            .iter()
            .flatten()
            .any(|&v| !(v >= 0.0) || !v.is_finite())
        {
            return Err(Error::Validation(
                "panel values must be finite and non-negative".into(),
            ));
        }
        Ok(TopicVolumePanel { start, values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.start + Days::new(t as u64)
    }

    pub fn end(&self) -> Option<NaiveDate> {
        self.len().checked_sub(1).map(|t| self.date(t))
    }

    /// Day index of `date`, which may lie outside the panel.
    pub fn offset(&self, date: NaiveDate) -> i64 {
        (date - self.start).num_days()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let d = self.offset(date);
        (d >= 0 && (d as usize) < self.len()).then_some(d as usize)
    }

    pub fn series(&self, u: usize) -> &[f64] {
        &self.values[u]
    }

    /// Copy with an extra topic appended.
    pub fn with_topic(&self, series: Vec<f64>) -> Result<Self> {
        let mut values = self.values.clone();
        values.push(series);
        TopicVolumePanel::from_matrix(self.start, values)
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        TopicVolumePanel {
            start: self.start,
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// CSV `date,topic_0,...,topic_{k-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for u in 0..self.k() {
            let _ = write!(out, ",topic_{u}");
        }
        out.push('\n');
        for t in 0..self.len() {
            let _ = write!(out, "{}", self.date(t));
            for u in 0..self.k() {
                let _ = write!(out, ",{}", self.values[u][t]);
            }
            out.push('\n');
        }
        out
    }
}

/// Sums daily visits per primary topic over the corpus date range.
pub fn build_panel(corpus: &Corpus, model: &TopicModel) -> Result<TopicVolumePanel> {
    let Some((start, end)) = corpus.date_range() else {
        return Err(Error::domain(
            "cannot build a topic panel from an empty corpus",
        ));
    };
    let primary = model.primary_map();
    let len = (end - start).num_days() as usize + 1;
    let mut values = vec![vec![0.0; len]; model.k()];
    for (i, a) in corpus.articles().iter().enumerate() {
        let &u = primary
            .get(a.id.as_str())
            .ok_or_else(|| Error::domain(format!("article `{}` has no topic assignment", a.id)))?;
        for &(date, v) in corpus.series(i).daily() {
            values[u][(date - start).num_days() as usize] += v as f64;
        }
    }
    TopicVolumePanel::from_matrix(start, values)
}

/// Squared correlation between `V(u, t)` and `V(u, t - delta)`.
pub fn autocorrelation(panel: &TopicVolumePanel, u: usize, delta: usize) -> Result<f64> {
    let x = panel.series(u);
    if x.len() <= delta + 2 {
        return Err(Error::domain(format!(
            "autocorrelation at lag {delta} needs more than {} points, series has {}",
            delta + 2,
            x.len()
        )));
    }
    r_squared(&x[delta..], &x[..x.len() - delta])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    pub delta: usize,
}

/// Inclusive range of panel day indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayWindow {
    pub start: usize,
    pub end: usize,
}

impl DayWindow {
    /// The `size` days before `origin`.
    pub fn before(origin: usize, size: usize) -> Result<Self> {
        if size == 0 || origin < size {
            return Err(Error::domain(format!(
                "a {size}-day window ending before day {origin} starts before the panel"
            )));
        }
        Ok(DayWindow {
            start: origin - size,
            end: origin - 1,
        })
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub target_topic: usize,
    /// Target first, then the others by decreasing correlation.
    pub selected_topics: Vec<usize>,
    pub lags: LagSpec,
    /// Mean and standard deviation of each selected topic over the window.
    pub standardization: Standardizer<f64>,
}

impl FeatureSchema {
    pub fn n_features(&self) -> usize {
        self.selected_topics.len() * self.lags.delta
    }

    /// Standardized lag features for origin `t` (topic-major, lag 1 first).
    fn features(&self, panel: &TopicVolumePanel, t: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_features());
        for (j, &v) in self.selected_topics.iter().enumerate() {
            let (m, s) = (self.standardization.means[j], self.standardization.stds[j]);
            for l in 1..=self.lags.delta {
                x.push((panel.values[v][t - l] - m) / s);
            }
        }
        x
    }
}

/// Keeps the target plus the `s - 1` topics with the largest zero-lag r²
/// against it on the window. Constant series count as r² = 0.
pub fn select_features(
    panel: &TopicVolumePanel,
    target: usize,
    s: usize,
    delta: usize,
    window: DayWindow,
) -> Result<FeatureSchema> {
    if delta == 0 {
        return Err(Error::domain("lag count delta must be at least 1"));
    }
    if target >= panel.k() {
        return Err(Error::Lookup {
            kind: "topic",
            id: target.to_string(),
        });
    }
    if window.len() < 10 || window.end >= panel.len() {
        return Err(Error::domain(format!(
            "feature selection window of {} days (ending at day {}) is too short or outside a {}-day panel",
            window.len(),
            window.end,
            panel.len()
        )));
    }
    let slice = |u: usize| &panel.values[u][window.start..=window.end];
    let y = slice(target);
    let mut ranked: Vec<(usize, f64)> = (0..panel.k())
        .filter(|&u| u != target)
        .map(|u| (u, r_squared(slice(u), y).unwrap_or(0.0)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut selected = vec![target];
    selected.extend(ranked.iter().take(s.max(1) - 1).map(|&(u, _)| u));
    let columns: Vec<Vec<f64>> = (window.start..=window.end)
        .map(|t| selected.iter().map(|&u| panel.values[u][t]).collect())
        .collect();
    Ok(FeatureSchema {
        target_topic: target,
        standardization: Standardizer::fit(&columns, selected.len()),
        selected_topics: selected,
        lags: LagSpec { delta },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForecasterKind {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "SVR")]
    Svr,
}

impl std::str::FromStr for ForecasterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LR" => Ok(ForecasterKind::Lr),
            "SVR" => Ok(ForecasterKind::Svr),
            _ => Err(Error::Validation(format!(
                "unknown forecaster kind `{s}` (LR or SVR)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedForecaster {
    pub kind: ForecasterKind,
    pub schema: FeatureSchema,
    pub horizon: usize,
    /// On standardized features and target.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub target_mean: f64,
    pub target_std: f64,
    pub svr: Option<SvrParams<f64>>,
    pub training_window: (NaiveDate, NaiveDate),
    pub ill_conditioned: bool,
    pub kkt_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub value: f64,
    pub clamped: bool,
}

/// Fits one direct forecaster for `horizon` on the target days in `window`.
pub fn fit_forecaster(
    panel: &TopicVolumePanel,
    schema: &FeatureSchema,
    kind: ForecasterKind,
    horizon: usize,
    window: DayWindow,
    svr: &SvrParams<f64>,
) -> Result<FittedForecaster> {
    if horizon == 0 {
        return Err(Error::domain("forecast horizon must be at least 1"));
    }
    if window.end >= panel.len() {
        return Err(Error::domain("training window extends past the panel"));
    }
    let delta = schema.lags.delta;
    let back = horizon - 1 + delta;
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for y in window.start..=window.end {
        if y < back {
            continue;
        }
        rows.push(schema.features(panel, y + 1 - horizon));
        targets.push(panel.values[schema.target_topic][y]);
    }
    let p = schema.n_features();
    if rows.len() < p + 2 {
        return Err(Error::domain(format!(
            "{} usable training samples for {p} features; need at least {}",
            rows.len(),
            p + 2
        )));
    }
    let n = targets.len() as f64;
    let target_mean = targets.iter().sum::<f64>() / n;
    let var = targets
        .iter()
        .map(|y| (y - target_mean).powi(2))
        .sum::<f64>()
        / n;
    let target_std = if var > 0.0 && var.is_finite() {
        var.sqrt()
    } else {
        1.0
    };
    let z: Vec<f64> = targets
        .iter()
        .map(|y| (y - target_mean) / target_std)
        .collect();
    let (weights, intercept, ill_conditioned, kkt_residual, hyper) = match kind {
        ForecasterKind::Lr => {
            let lr = LinearRegression::fit(&rows, &z)?;
            (lr.weights, lr.intercept, lr.ill_conditioned, None, None)
        }
        ForecasterKind::Svr => {
            let m = LinearSvr::fit(&rows, &z, svr)?;
            let kkt = m.kkt_residual;
            (m.weights, m.bias, false, Some(kkt), Some(*svr))
        }
    };
    Ok(FittedForecaster {
        kind,
        schema: schema.clone(),
        horizon,
        weights,
        intercept,
        target_mean,
        target_std,
        svr: hyper,
        training_window: (panel.date(window.start), panel.date(window.end)),
        ill_conditioned,
        kkt_residual,
    })
}

impl FittedForecaster {
    /// Lag dates that an origin at day offset `t` needs but the panel lacks.
    pub fn missing_lags(&self, panel: &TopicVolumePanel, t: i64) -> Vec<NaiveDate> {
        (1..=self.schema.lags.delta as i64)
            .map(|l| t - l)
            .filter(|&d| d < 0 || d >= panel.len() as i64)
            .map(|d| panel.start + chrono::Duration::days(d))
            .collect()
    }

    /// Predicts `V(u, t + h - 1)` for origin day offset `t`.
    pub fn forecast(&self, panel: &TopicVolumePanel, t: i64) -> Result<Forecast> {
        let missing = self.missing_lags(panel, t);
        if !missing.is_empty() {
            return Err(Error::InsufficientHistory { missing });
        }
        let x = self.schema.features(panel, t as usize);
        let z = self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        let value = self.target_mean + self.target_std * z;
        Ok(if value < 0.0 {
            Forecast {
                value: 0.0,
                clamped: true,
            }
        } else {
            Forecast {
                value,
                clamped: false,
            }
        })
    }
}

/// Everything needed to fit a forecaster at an origin except the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastSetup {
    pub kind: ForecasterKind,
    /// Training samples per fit (`W`).
    pub window: usize,
    pub delta: usize,
    pub s: usize,
    pub svr: SvrParams<f64>,
}

impl Default for ForecastSetup {
    fn default() -> Self {
        ForecastSetup {
            kind: ForecasterKind::Lr,
            window: 50,
            delta: 3,
            s: 4,
            svr: SvrParams::default(),
        }
    }
}

impl ForecastSetup {
    /// Selects features on the `window` days before `origin` and fits.
    pub fn fit_at(
        &self,
        panel: &TopicVolumePanel,
        topic: usize,
        origin: usize,
        horizon: usize,
    ) -> Result<FittedForecaster> {
        let w = DayWindow::before(origin, self.window)?;
        let schema = select_features(panel, topic, self.s, self.delta, w)?;
        fit_forecaster(panel, &schema, self.kind, horizon, w, &self.svr)
    }

    /// [`ForecastSetup::fit_at`] followed by the forecast of
    /// `V(topic, origin + horizon - 1)`.
    pub fn forecast_at(
        &self,
        panel: &TopicVolumePanel,
        topic: usize,
        origin: usize,
        horizon: usize,
    ) -> Result<(FittedForecaster, Forecast)> {
        let model = self.fit_at(panel, topic, origin, horizon)?;
        let f = model.forecast(panel, origin as i64)?;
        Ok((model, f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Article, ArticleKind, VisitSeries};
    use crate::topics::LdaConfig;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 3, day).unwrap()
    }

    fn model_for(ids: &[&str], topics: &[usize], k: usize) -> TopicModel {
        TopicModel {
            config: LdaConfig::new(k, 0),
            vocabulary: vec![],
            topic_word: vec![vec![]; k],
            doc_ids: ids.iter().map(|s| s.to_string()).collect(),
            doc_topic: topics.iter().map(|_| vec![1.0 / k as f64; k]).collect(),
            primary_topic: topics.to_vec(),
            rejects: vec![],
        }
    }

    fn article(id: &str, day: u32) -> Article {
        Article {
            id: id.into(),
            title: "t".into(),
            body: "b".into(),
            published_at: d(day),
            kind: ArticleKind::News,
        }
    }

    #[test]
    fn panel_sums_and_zero_fills() {
        let arts = vec![article("a", 1), article("b", 1), article("c", 1)];
        let visits = vec![
            VisitSeries::new("a", d(1), vec![(d(1), 3), (d(4), 1)], Vec::new()).unwrap(),
            VisitSeries::new("b", d(1), vec![(d(1), 4)], Vec::new()).unwrap(),
            VisitSeries::new("c", d(1), vec![(d(1), 2)], Vec::new()).unwrap(),
        ];
        let corpus = Corpus::new(arts, visits).unwrap();
        let panel = build_panel(&corpus, &model_for(&["a", "b", "c"], &[0, 0, 1], 2)).unwrap();
        assert_eq!(panel.len(), 4);
        assert_eq!(panel.values[0], vec![7.0, 0.0, 0.0, 1.0]);
        assert_eq!(panel.values[1], vec![2.0, 0.0, 0.0, 0.0]);
        let missing = model_for(&["a", "b"], &[0, 0], 2);
        assert!(build_panel(&corpus, &missing).is_err());
        assert!(panel
            .to_csv()
            .starts_with("date,topic_0,topic_1\n2024-03-01,7,2\n"));
    }

    #[test]
    fn autocorrelation_cases() {
        let periodic: Vec<f64> = (0..60).map(|t| [1.0, 5.0, 2.0][t % 3]).collect();
        let p = TopicVolumePanel::from_matrix(d(1), vec![periodic, vec![4.0; 60]]).unwrap();
        assert!((autocorrelation(&p, 0, 3).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            autocorrelation(&p, 1, 1),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(autocorrelation(&p, 0, 58).is_err());
    }

    fn ramp_panel() -> TopicVolumePanel {
        let a: Vec<f64> = (0..80)
            .map(|t| 100.0 + 10.0 * ((t as f64) * 0.3).sin())
            .collect();
        let b: Vec<f64> = (0..80).map(|t| 50.0 + ((t * 7) % 11) as f64).collect();
        let c: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        TopicVolumePanel::from_matrix(d(1), vec![a, b, c, vec![3.0; 80]]).unwrap()
    }

    #[test]
    fn feature_selection_rules() {
        let p = ramp_panel();
        let w = DayWindow::before(60, 40).unwrap();
        let s = select_features(&p, 0, 2, 3, w).unwrap();
        assert_eq!(s.selected_topics, vec![0, 2]);
        let all = select_features(&p, 1, 10, 3, w).unwrap();
        assert_eq!(all.selected_topics.len(), 4);
        assert_eq!(all.selected_topics[0], 1);
        assert!(select_features(&p, 0, 2, 3, DayWindow { start: 0, end: 5 }).is_err());
    }

    #[test]
    fn constant_and_clamped_models() {
        let p = ramp_panel();
        let w = DayWindow::before(60, 40).unwrap();
        let schema = select_features(&p, 3, 1, 2, w).unwrap();
        let m =
            fit_forecaster(&p, &schema, ForecasterKind::Lr, 2, w, &SvrParams::default()).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-9));
        assert_eq!(m.forecast(&p, 70).unwrap().value, 3.0);
        let mut neg = m.clone();
        neg.target_mean = -5.0;
        let f = neg.forecast(&p, 70).unwrap();
        assert_eq!(
            f,
            Forecast {
                value: 0.0,
                clamped: true
            }
        );
        let err = m.forecast(&p, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory { ref missing } if missing.len() == 1));
    }

    #[test]
    fn too_few_samples() {
        let p = ramp_panel();
        let w = DayWindow::before(30, 10).unwrap();
        let schema = select_features(&p, 0, 4, 3, w).unwrap();
        assert!(
            fit_forecaster(&p, &schema, ForecasterKind::Lr, 1, w, &SvrParams::default()).is_err()
        );
    }
}
