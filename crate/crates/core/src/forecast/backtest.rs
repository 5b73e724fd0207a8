use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DayWindow, ForecastSetup, TopicVolumePanel};
use crate::error::{Error, Result};
use crate::metrics::Mape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    #[serde(flatten)]
    pub setup: ForecastSetup,
    pub horizons: Vec<usize>,
    /// Evaluate every `stride`-th origin.
    pub stride: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            setup: ForecastSetup::default(),
            horizons: vec![2, 3, 7, 15, 30],
            stride: 1,
        }
    }
}

/// One report line; `None` topic or horizon means "averaged over all".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRow {
    pub topic: Option<usize>,
    pub horizon: Option<usize>,
    pub mape: Option<f64>,
    pub n_terms: usize,
    pub n_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub rows: Vec<BacktestRow>,
    pub origins: usize,
    pub max_kkt_residual: Option<f64>,
    pub ill_conditioned_fits: usize,
    pub clamped_forecasts: usize,
}

impl BacktestReport {
    fn find(&self, topic: Option<usize>, horizon: Option<usize>) -> Option<&BacktestRow> {
        self.rows
            .iter()
            .find(|r| r.topic == topic && r.horizon == horizon)
    }

    pub fn mape(&self, topic: usize, horizon: usize) -> Option<f64> {
        self.find(Some(topic), Some(horizon)).and_then(|r| r.mape)
    }

    /// Pooled over topics.
    pub fn horizon_mape(&self, horizon: usize) -> Option<f64> {
        self.find(None, Some(horizon)).and_then(|r| r.mape)
    }

    pub fn grand_mape(&self) -> Option<f64> {
        self.find(None, None).and_then(|r| r.mape)
    }

    /// CSV `topic,horizon,mape,n_terms,n_skipped`; pooled rows use `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic,horizon,mape,n_terms,n_skipped\n");
        let opt = |x: Option<usize>| x.map_or("all".to_string(), |v| v.to_string());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                opt(r.topic),
                opt(r.horizon),
                r.mape.map_or(String::new(), |m| m.to_string()),
                r.n_terms,
                r.n_skipped
            );
        }
        out
    }
}

struct Cell {
    observed: f64,
    forecast: f64,
    kkt: Option<f64>,
    ill: bool,
    clamped: bool,
}

/// Sliding-window evaluation: at every origin, for every topic and horizon,
/// select features and fit on the preceding window, then score the forecast.
pub fn backtest(panel: &TopicVolumePanel, config: &BacktestConfig) -> Result<BacktestReport> {
    let h_max = *config
        .horizons
        .iter()
        .max()
        .ok_or_else(|| Error::domain("backtest needs at least one horizon"))?;
    let setup = &config.setup;
    if config.horizons.contains(&0) || config.stride == 0 || setup.window == 0 {
        return Err(Error::domain(
            "horizons, stride and window must be positive",
        ));
    }
    let first = setup.window + h_max + setup.delta - 1;
    let needed = first + h_max;
    if panel.len() < needed {
        return Err(Error::domain(format!(
            "backtest with window {} and horizons up to {h_max} needs a panel of at least {needed} days, got {}",
            setup.window,
            panel.len()
        )));
    }
    let last = panel.len() - h_max;
    let origins: Vec<usize> = (first..=last).step_by(config.stride).collect();
    // Fails early on windows too short for feature selection.
    DayWindow::before(first, setup.window)?;

    let units: Vec<(usize, usize)> = (0..panel.k())
        .flat_map(|u| origins.iter().map(move |&t| (u, t)))
        .collect();
    let results: Vec<Result<Vec<Cell>>> = units
        .par_iter()
        .map(|&(u, t)| {
            config
                .horizons
                .iter()
                .map(|&h| {
                    let (model, f) = config.setup.forecast_at(panel, u, t, h)?;
                    Ok(Cell {
                        observed: panel.values[u][t + h - 1],
                        forecast: f.value,
                        kkt: model.kkt_residual,
                        ill: model.ill_conditioned,
                        clamped: f.clamped,
                    })
                })
                .collect()
        })
        .collect();

    let nh = config.horizons.len();
    let mut cells = vec![Mape::new(); panel.k() * nh];
    let mut report = BacktestReport {
        rows: Vec::new(),
        origins: origins.len(),
        max_kkt_residual: None,
        ill_conditioned_fits: 0,
        clamped_forecasts: 0,
    };
    for (&(u, _), res) in units.iter().zip(results) {
        for (j, c) in res?.into_iter().enumerate() {
            cells[u * nh + j].add(c.observed, c.forecast);
            if let Some(k) = c.kkt {
                report.max_kkt_residual =
                    Some(report.max_kkt_residual.map_or(k, |m: f64| m.max(k)));
            }
            report.ill_conditioned_fits += c.ill as usize;
            report.clamped_forecasts += c.clamped as usize;
        }
    }
    let row = |topic, horizon, m: &Mape| BacktestRow {
        topic,
        horizon,
        mape: m.value(),
        n_terms: m.n_terms,
        n_skipped: m.n_skipped,
    };
    let mut grand = Mape::new();
    for u in 0..panel.k() {
        for (j, &h) in config.horizons.iter().enumerate() {
            report.rows.push(row(Some(u), Some(h), &cells[u * nh + j]));
        }
    }
    for (j, &h) in config.horizons.iter().enumerate() {
        let mut pooled = Mape::new();
        for u in 0..panel.k() {
            pooled.merge(&cells[u * nh + j]);
        }
        grand.merge(&pooled);
        report.rows.push(row(None, Some(h), &pooled));
    }
    for u in 0..panel.k() {
        let mut pooled = Mape::new();
        for j in 0..nh {
            pooled.merge(&cells[u * nh + j]);
        }
        report.rows.push(row(Some(u), None, &pooled));
    }
    report.rows.push(row(None, None, &grand));
    Ok(report)
}
