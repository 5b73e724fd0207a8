//! Descriptive popularity statistics: visit CCDFs, growth curves and
//! shelf-life distributions, grouped by article kind.
//!
//! `N_a(t)` counts visits dated on or before `t`, so a horizon `H` covers
//! days `t_a ..= t_a + H`. Articles whose horizon runs past the last
//! observed day are censored and left out.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleKind, Corpus, VisitSeries};
use crate::error::{Error, Result};

fn plus(date: NaiveDate, days: usize) -> NaiveDate {
    date.checked_add_days(Days::new(days as u64))
        .expect("date in range")
}

fn shelf_life_of(
    series: &VisitSeries,
    published: NaiveDate,
    q: f64,
    horizon: usize,
) -> Option<usize> {
    let total = series.through(plus(published, horizon));
    if total == 0 {
        return None;
    }
    let threshold = q * total as f64;
    (0..=horizon).find(|&d| series.through(plus(published, d)) as f64 >= threshold)
}

/// Smallest `d` with `N_a(t_a + d) >= q * N_a(t_a + H)`.
pub fn shelf_life(corpus: &Corpus, article_id: &str, q: f64, horizon: usize) -> Result<usize> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!(
            "shelf-life quantile must lie in (0, 1], got {q}"
        )));
    }
    let (a, s) = corpus.get(article_id)?;
    shelf_life_of(s, a.published_at, q, horizon)
        .ok_or_else(|| Error::UndefinedShelfLife(article_id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsConfig {
    /// Horizon of the visit totals behind the CCDF.
    pub ccdf_horizon: usize,
    pub growth_horizon: usize,
    pub shelf_horizons: Vec<usize>,
    pub quantile: f64,
    /// Last day with complete visit data; defaults to the corpus end.
    pub observed_through: Option<NaiveDate>,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            ccdf_horizon: 30,
            growth_horizon: 30,
            shelf_horizons: vec![7, 15, 30, 60],
            quantile: 0.9,
            observed_through: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub kind: String,
    pub visits: u64,
    /// Share of articles with at least `visits` visits.
    pub ccdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub kind: String,
    pub day: usize,
    /// Mean of `N_a(t_a + day) / N_a(t_a + H)`.
    pub mean_fraction: f64,
    pub n_articles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShelfLifeBin {
    pub kind: String,
    pub horizon: usize,
    pub days: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShelfLifeSummary {
    pub kind: String,
    pub horizon: usize,
    pub mean: Option<f64>,
    pub n: usize,
    /// No visits within the horizon.
    pub n_undefined: usize,
    pub n_censored: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub ccdf: Vec<CcdfPoint>,
    pub growth: Vec<GrowthPoint>,
    pub shelf_life: Vec<ShelfLifeBin>,
    pub shelf_summary: Vec<ShelfLifeSummary>,
}

impl AnalyticsReport {
    pub fn ccdf_csv(&self) -> String {
        let mut out = String::from("kind,visits,ccdf\n");
        for p in &self.ccdf {
            let _ = writeln!(out, "{},{},{}", p.kind, p.visits, p.ccdf);
        }
        out
    }

    pub fn growth_csv(&self) -> String {
        let mut out = String::from("kind,day,mean_fraction,n_articles\n");
        for p in &self.growth {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p.kind, p.day, p.mean_fraction, p.n_articles
            );
        }
        out
    }

    pub fn shelf_life_csv(&self) -> String {
        let mut out = String::from("kind,horizon,days,count\n");
        for b in &self.shelf_life {
            let _ = writeln!(out, "{},{},{},{}", b.kind, b.horizon, b.days, b.count);
        }
        out
    }

    pub fn shelf_summary_csv(&self) -> String {
        let mut out = String::from("kind,horizon,mean,n,n_undefined,n_censored\n");
        for s in &self.shelf_summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.kind,
                s.horizon,
                s.mean.map_or(String::new(), |m| m.to_string()),
                s.n,
                s.n_undefined,
                s.n_censored
            );
        }
        out
    }

    pub fn mean_shelf_life(&self, kind: &str, horizon: usize) -> Option<f64> {
        self.shelf_summary
            .iter()
            .find(|s| s.kind == kind && s.horizon == horizon)
            .and_then(|s| s.mean)
    }
}

/// Groups: each kind present, then `all`.
fn groups(corpus: &Corpus) -> Vec<(String, Vec<usize>)> {
    let mut by_kind: BTreeMap<ArticleKind, Vec<usize>> = BTreeMap::new();
    for (i, a) in corpus.articles().iter().enumerate() {
        by_kind.entry(a.kind).or_default().push(i);
    }
    let mut out: Vec<(String, Vec<usize>)> = by_kind
        .into_iter()
        .map(|(k, v)| (k.as_str().to_string(), v))
        .collect();
    out.push(("all".to_string(), (0..corpus.len()).collect()));
    out
}

pub fn analytics(corpus: &Corpus, config: &AnalyticsConfig) -> Result<AnalyticsReport> {
    let Some((_, end)) = corpus.date_range() else {
        return Err(Error::domain("analytics needs a non-empty corpus"));
    };
    if !(config.quantile > 0.0 && config.quantile <= 1.0) {
        return Err(Error::domain("shelf-life quantile must lie in (0, 1]"));
    }
    let through = config.observed_through.unwrap_or(end);
    let complete = |i: usize, h: usize| plus(corpus.article(i).published_at, h) <= through;
    let total = |i: usize, h: usize| {
        corpus
            .series(i)
            .through(plus(corpus.article(i).published_at, h))
    };

    let mut report = AnalyticsReport::default();
    for (kind, members) in groups(corpus) {
        let mut totals: Vec<u64> = members
            .iter()
            .filter(|&&i| complete(i, config.ccdf_horizon))
            .map(|&i| total(i, config.ccdf_horizon))
            .collect();
        totals.sort_unstable();
        let n = totals.len();
        if n > 0 {
            report.ccdf.push(CcdfPoint {
                kind: kind.clone(),
                visits: 0,
                ccdf: 1.0,
            });
            let mut i = 0;
            while i < n {
                let x = totals[i];
                if x > 0 {
                    report.ccdf.push(CcdfPoint {
                        kind: kind.clone(),
                        visits: x,
                        ccdf: (n - i) as f64 / n as f64,
                    });
                }
                while i < n && totals[i] == x {
                    i += 1;
                }
            }
        }

        let h = config.growth_horizon;
        let curves: Vec<Vec<f64>> = members
            .iter()
            .filter(|&&i| complete(i, h) && total(i, h) > 0)
            .map(|&i| {
                let z = total(i, h) as f64;
                (0..=h).map(|d| total(i, d) as f64 / z).collect()
            })
            .collect();
        if !curves.is_empty() {
            for d in 0..=h {
                report.growth.push(GrowthPoint {
                    kind: kind.clone(),
                    day: d,
                    mean_fraction: curves.iter().map(|c| c[d]).sum::<f64>() / curves.len() as f64,
                    n_articles: curves.len(),
                });
            }
        }

        for &h in &config.shelf_horizons {
            let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
            let (mut n_undefined, mut n_censored) = (0, 0);
            for &i in &members {
                if !complete(i, h) {
                    n_censored += 1;
                    continue;
                }
                let a = corpus.article(i);
                match shelf_life_of(corpus.series(i), a.published_at, config.quantile, h) {
                    Some(d) => *hist.entry(d).or_default() += 1,
                    None => n_undefined += 1,
                }
            }
            let n: usize = hist.values().sum();
            let sum: usize = hist.iter().map(|(d, c)| d * c).sum();
            for (&days, &count) in &hist {
                report.shelf_life.push(ShelfLifeBin {
                    kind: kind.clone(),
                    horizon: h,
                    days,
                    count,
                });
            }
            report.shelf_summary.push(ShelfLifeSummary {
                kind: kind.clone(),
                horizon: h,
                mean: (n > 0).then(|| sum as f64 / n as f64),
                n,
                n_undefined,
                n_censored,
            });
        }
    }
    Ok(report)
}
