//! Articles, their daily visit series, and corpus file I/O.
//!
//! File formats:
//!
//! * articles: UTF-8 JSON lines, one object per line with fields
//!   `id`, `title`, `body`, `published_at` (ISO-8601 date) and `kind`
//!   (`"News"` or `"Opinion"`);
//! * visits: CSV with header `article_id,date,visits`; days without a row
//!   have zero visits;
//! * early measurements (optional): CSV with header
//!   `article_id,offset_minutes,cumulative_visits`, offsets in {5, 60, 360}.

mod synth;

pub use synth::{
    generate_synthetic, simulate_var, spectral_radius, GroundTruth, StoryConfig, SynthSpec,
    VarProcess,
};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArticleKind {
    News,
    Opinion,
}

impl ArticleKind {
    pub const ALL: [ArticleKind; 2] = [ArticleKind::News, ArticleKind::Opinion];

    pub fn as_str(self) -> &'static str {
        match self {
            ArticleKind::News => "News",
            ArticleKind::Opinion => "Opinion",
        }
    }
}

impl fmt::Display for ArticleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub body: String,
    pub published_at: NaiveDate,
    pub kind: ArticleKind,
}

impl Article {
    /// Title followed by body, the text every text model sees.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.title, self.body)
    }
}

/// Offsets after publication at which early cumulative counts are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EarlyOffset {
    #[serde(rename = "5m")]
    FiveMinutes,
    #[serde(rename = "1h")]
    OneHour,
    #[serde(rename = "6h")]
    SixHours,
}

impl EarlyOffset {
    pub const ALL: [EarlyOffset; 3] = [
        EarlyOffset::FiveMinutes,
        EarlyOffset::OneHour,
        EarlyOffset::SixHours,
    ];

    pub fn minutes(self) -> u32 {
        match self {
            EarlyOffset::FiveMinutes => 5,
            EarlyOffset::OneHour => 60,
            EarlyOffset::SixHours => 360,
        }
    }

    pub fn from_minutes(m: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.minutes() == m)
    }

    pub fn label(self) -> &'static str {
        match self {
            EarlyOffset::FiveMinutes => "5m",
            EarlyOffset::OneHour => "1h",
            EarlyOffset::SixHours => "6h",
        }
    }
}

impl FromStr for EarlyOffset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "5m" | "5" => Ok(EarlyOffset::FiveMinutes),
            "1h" | "60" => Ok(EarlyOffset::OneHour),
            "6h" | "360" => Ok(EarlyOffset::SixHours),
            _ => Err(Error::Validation(format!(
                "unknown early offset `{s}` (expected 5m, 1h or 6h)"
            ))),
        }
    }
}

/// Visit counts of one article: sparse daily rows plus early measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitSeries {
    pub article_id: String,
    daily: Vec<(NaiveDate, u64)>,
    /// `cumulative[i]` is the sum of `daily[..=i]`.
    cumulative: Vec<u64>,
    early: Vec<(EarlyOffset, u64)>,
}

impl VisitSeries {
    /// Builds a validated series. Rows may come in any order.
    pub fn new(
        article_id: impl Into<String>,
        published_at: NaiveDate,
        mut daily: Vec<(NaiveDate, u64)>,
        mut early: Vec<(EarlyOffset, u64)>,
    ) -> Result<Self> {
        let article_id = article_id.into();
        daily.sort_by_key(|&(d, _)| d);
        for pair in daily.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Validation(format!(
                    "article `{article_id}`: duplicate visit row for {}",
                    pair[0].0
                )));
            }
        }
        if let Some(&(first, _)) = daily.first() {
            if first < published_at {
                return Err(Error::Validation(format!(
                    "article `{article_id}`: visits on {first} precede publication on {published_at}"
                )));
            }
        }
        early.sort_by_key(|&(o, _)| o);
        for pair in early.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Validation(format!(
                    "article `{article_id}`: duplicate early measurement at {}",
                    pair[0].0.label()
                )));
            }
            if pair[1].1 < pair[0].1 {
                return Err(Error::Validation(format!(
                    "article `{article_id}`: early counts decrease between {} and {}",
                    pair[0].0.label(),
                    pair[1].0.label()
                )));
            }
        }
        let day0 = daily
            .iter()
            .find(|&&(d, _)| d == published_at)
            .map_or(0, |&(_, v)| v);
        if let Some(&(o, v)) = early.iter().find(|&&(_, v)| v > day0) {
            return Err(Error::Validation(format!(
                "article `{article_id}`: early count {v} at {} exceeds publication-day visits {day0}",
                o.label()
            )));
        }
        let cumulative = daily
            .iter()
            .scan(0u64, |acc, &(_, v)| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        Ok(VisitSeries {
            article_id,
            daily,
            cumulative,
            early,
        })
    }

    pub fn daily(&self) -> &[(NaiveDate, u64)] {
        &self.daily
    }

    pub fn early(&self) -> &[(EarlyOffset, u64)] {
        &self.early
    }

    pub fn early_at(&self, offset: EarlyOffset) -> Option<u64> {
        self.early
            .iter()
            .find(|&&(o, _)| o == offset)
            .map(|&(_, v)| v)
    }

    /// Visits recorded on `date` (zero when there is no row).
    pub fn on(&self, date: NaiveDate) -> u64 {
        self.daily
            .binary_search_by_key(&date, |&(d, _)| d)
            .map_or(0, |i| self.daily[i].1)
    }

    /// Sum of all daily rows dated on or before `date`.
    pub fn through(&self, date: NaiveDate) -> u64 {
        let n = self.daily.partition_point(|&(d, _)| d <= date);
        if n == 0 {
            0
        } else {
            self.cumulative[n - 1]
        }
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

/// Validated, immutable article collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    articles: Vec<Article>,
    visits: Vec<VisitSeries>,
    index: HashMap<String, usize>,
    by_day: BTreeMap<NaiveDate, Vec<usize>>,
    date_range: Option<(NaiveDate, NaiveDate)>,
}

impl Corpus {
    /// Builds a corpus. Articles without a series get an all-zero one.
    pub fn new(articles: Vec<Article>, visits: Vec<VisitSeries>) -> Result<Self> {
        let mut index = HashMap::with_capacity(articles.len());
        for (i, a) in articles.iter().enumerate() {
            if a.id.trim().is_empty() {
                return Err(Error::Validation(format!("article #{i} has an empty id")));
            }
            if a.title.trim().is_empty() && a.body.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "article `{}` has neither title nor body text",
                    a.id
                )));
            }
            if index.insert(a.id.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate article id `{}`",
                    a.id
                )));
            }
        }
        let mut slots: Vec<Option<VisitSeries>> = vec![None; articles.len()];
        for series in visits {
            let Some(&i) = index.get(&series.article_id) else {
                return Err(Error::ReferentialIntegrity(format!(
                    "visit series references unknown article `{}`",
                    series.article_id
                )));
            };
            if slots[i].is_some() {
                return Err(Error::Validation(format!(
                    "two visit series for article `{}`",
                    series.article_id
                )));
            }
            slots[i] = Some(series);
        }
        let visits: Vec<VisitSeries> = slots
            .into_iter()
            .zip(&articles)
            .map(|(s, a)| match s {
                Some(s) => Ok(s),
                None => VisitSeries::new(a.id.clone(), a.published_at, Vec::new(), Vec::new()),
            })
            .collect::<Result<_>>()?;
        for (a, s) in articles.iter().zip(&visits) {
            if let Some(&(first, _)) = s.daily.first() {
                if first < a.published_at {
                    return Err(Error::Validation(format!(
                        "article `{}`: visits on {first} precede publication",
                        a.id
                    )));
                }
            }
        }

        let mut by_day: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
        for (i, a) in articles.iter().enumerate() {
            by_day.entry(a.published_at).or_default().push(i);
        }
        let dates = articles
            .iter()
            .map(|a| a.published_at)
            .chain(visits.iter().flat_map(|s| s.daily.iter().map(|&(d, _)| d)));
        let date_range = dates.fold(None, |acc: Option<(NaiveDate, NaiveDate)>, d| match acc {
            None => Some((d, d)),
            Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
        });
        Ok(Corpus {
            articles,
            visits,
            index,
            by_day,
            date_range,
        })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn article(&self, idx: usize) -> &Article {
        &self.articles[idx]
    }

    pub fn series(&self, idx: usize) -> &VisitSeries {
        &self.visits[idx]
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::Lookup {
            kind: "article",
            id: id.to_string(),
        })
    }

    pub fn get(&self, id: &str) -> Result<(&Article, &VisitSeries)> {
        let i = self.position(id)?;
        Ok((&self.articles[i], &self.visits[i]))
    }

    /// First and last date touched by any publication or visit row.
    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        self.date_range
    }

    /// Indices of the articles published on `date`, in corpus order.
    pub fn published_on(&self, date: NaiveDate) -> &[usize] {
        self.by_day.get(&date).map_or(&[], Vec::as_slice)
    }

    /// Cumulative visits of an article from publication through `upto`.
    pub fn cumulative_visits(&self, article_id: &str, upto: NaiveDate) -> Result<u64> {
        let i = self.position(article_id)?;
        self.cumulative_at(i, upto)
    }

    pub fn cumulative_at(&self, idx: usize, upto: NaiveDate) -> Result<u64> {
        let a = &self.articles[idx];
        if upto < a.published_at {
            return Err(Error::domain(format!(
                "cumulative visits of `{}` requested through {upto}, before publication on {}",
                a.id, a.published_at
            )));
        }
        Ok(self.visits[idx].through(upto))
    }

    /// Returns a copy with every visit series rewritten by `f`.
    pub fn map_visits<F>(&self, mut f: F) -> Result<Corpus>
    where
        F: FnMut(&Article, &VisitSeries) -> (Vec<(NaiveDate, u64)>, Vec<(EarlyOffset, u64)>),
    {
        let visits = self
            .articles
            .iter()
            .zip(&self.visits)
            .map(|(a, s)| {
                let (daily, early) = f(a, s);
                VisitSeries::new(a.id.clone(), a.published_at, daily, early)
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(self.articles.clone(), visits)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads articles, visits and (optionally) early measurements.
pub fn load_corpus(
    articles_path: &Path,
    visits_path: &Path,
    early_path: Option<&Path>,
) -> Result<Corpus> {
    let articles = read_articles(articles_path)?;
    let published: HashMap<&str, NaiveDate> = articles
        .iter()
        .map(|a| (a.id.as_str(), a.published_at))
        .collect();

    let mut daily: HashMap<String, Vec<(NaiveDate, u64)>> = HashMap::new();
    for row in read_csv(visits_path, &["article_id", "date", "visits"])? {
        let (line, f) = row?;
        if !published.contains_key(f[0].as_str()) {
            return Err(Error::ReferentialIntegrity(format!(
                "{}:{line}: visits reference unknown article `{}`",
                visits_path.display(),
                f[0]
            )));
        }
        let date = NaiveDate::from_str(&f[1])
            .map_err(|e| parse_err(visits_path, line, format!("bad date `{}`: {e}", f[1])))?;
        let visits = parse_count(visits_path, line, &f[2])?;
        daily.entry(f[0].clone()).or_default().push((date, visits));
    }

    let mut early: HashMap<String, Vec<(EarlyOffset, u64)>> = HashMap::new();
    if let Some(path) = early_path {
        for row in read_csv(path, &["article_id", "offset_minutes", "cumulative_visits"])? {
            let (line, f) = row?;
            if !published.contains_key(f[0].as_str()) {
                return Err(Error::ReferentialIntegrity(format!(
                    "{}:{line}: early measurement references unknown article `{}`",
                    path.display(),
                    f[0]
                )));
            }
            let minutes: u32 = f[1]
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad offset `{}`", f[1])))?;
            let offset = EarlyOffset::from_minutes(minutes).ok_or_else(|| {
                parse_err(
                    path,
                    line,
                    format!("offset {minutes} not in {{5, 60, 360}}"),
                )
            })?;
            let v = parse_count(path, line, &f[2])?;
            early.entry(f[0].clone()).or_default().push((offset, v));
        }
    }

    let visits = articles
        .iter()
        .map(|a| {
            VisitSeries::new(
                a.id.clone(),
                a.published_at,
                daily.remove(&a.id).unwrap_or_default(),
                early.remove(&a.id).unwrap_or_default(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(articles, visits)
}

fn parse_count(path: &Path, line: usize, raw: &str) -> Result<u64> {
    let v: i64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad count `{raw}`")))?;
    if v < 0 {
        return Err(Error::Validation(format!(
            "{}:{line}: negative visit count {v}",
            path.display()
        )));
    }
    Ok(v as u64)
}

pub fn read_articles(path: &Path) -> Result<Vec<Article>> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let article: Article =
            serde_json::from_str(&line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        out.push(article);
    }
    Ok(out)
}

type CsvRow = Result<(usize, Vec<String>)>;

fn read_csv(path: &Path, header: &[&str]) -> Result<impl Iterator<Item = CsvRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let found = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let path = path.to_path_buf();
    let width = header.len();
    Ok(rdr.into_records().map(move |rec| {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(&path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(parse_err(&path, line, format!("expected {width} fields")));
        }
        Ok((line, rec.iter().map(str::to_string).collect()))
    }))
}

/// Writes the corpus in the formats read by [`load_corpus`].
pub fn write_corpus(
    corpus: &Corpus,
    articles_path: &Path,
    visits_path: &Path,
    early_path: Option<&Path>,
) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(articles_path).map_err(|e| Error::io(articles_path, e))?);
    for a in corpus.articles() {
        let line = serde_json::to_string(a).expect("article serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(articles_path, e))?;
    }
    w.flush().map_err(|e| Error::io(articles_path, e))?;

    let mut w = BufWriter::new(File::create(visits_path).map_err(|e| Error::io(visits_path, e))?);
    let io = |e| Error::io(visits_path, e);
    writeln!(w, "article_id,date,visits").map_err(io)?;
    for s in &corpus.visits {
        for &(d, v) in &s.daily {
            writeln!(w, "{},{},{}", csv_field(&s.article_id), d, v).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;

    if let Some(path) = early_path {
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        let io = |e| Error::io(path, e);
        writeln!(w, "article_id,offset_minutes,cumulative_visits").map_err(io)?;
        for s in &corpus.visits {
            for &(o, v) in &s.early {
                writeln!(w, "{},{},{}", csv_field(&s.article_id), o.minutes(), v).map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn article(id: &str, date: &str) -> Article {
        Article {
            id: id.into(),
            title: format!("title {id}"),
            body: "body".into(),
            published_at: d(date),
            kind: ArticleKind::News,
        }
    }

    #[test]
    fn cumulative_hand_cases() {
        let s = VisitSeries::new(
            "a",
            d("2024-01-01"),
            vec![
                (d("2024-01-01"), 5),
                (d("2024-01-02"), 4),
                (d("2024-01-03"), 1),
            ],
            vec![],
        )
        .unwrap();
        let c = Corpus::new(vec![article("a", "2024-01-01")], vec![s]).unwrap();
        assert_eq!(c.cumulative_visits("a", d("2024-01-02")).unwrap(), 9);
        assert_eq!(c.cumulative_visits("a", d("2024-01-01")).unwrap(), 5);
        assert_eq!(c.cumulative_visits("a", d("2024-02-01")).unwrap(), 10);
        assert!(matches!(
            c.cumulative_visits("a", d("2023-12-31")),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn empty_series_counts_zero() {
        let c = Corpus::new(vec![article("a", "2024-01-01")], vec![]).unwrap();
        assert_eq!(c.cumulative_visits("a", d("2024-01-09")).unwrap(), 0);
    }

    #[test]
    fn rejects_visits_before_publication() {
        let err = VisitSeries::new("a", d("2024-01-02"), vec![(d("2024-01-01"), 1)], vec![]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_decreasing_early_counts() {
        let err = VisitSeries::new(
            "a",
            d("2024-01-01"),
            vec![(d("2024-01-01"), 100)],
            vec![(EarlyOffset::FiveMinutes, 10), (EarlyOffset::OneHour, 5)],
        );
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = VisitSeries::new(
            "a",
            d("2024-01-01"),
            vec![(d("2024-01-01"), 3)],
            vec![(EarlyOffset::SixHours, 5)],
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Corpus::new(
            vec![article("a", "2024-01-01"), article("a", "2024-01-02")],
            vec![],
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn blank_text_rejected() {
        let mut a = article("a", "2024-01-01");
        a.title = "  ".into();
        a.body = "\n".into();
        assert!(Corpus::new(vec![a], vec![]).is_err());
    }

    #[test]
    fn early_offset_parsing() {
        assert_eq!("1h".parse::<EarlyOffset>().unwrap(), EarlyOffset::OneHour);
        assert_eq!(EarlyOffset::from_minutes(360), Some(EarlyOffset::SixHours));
        assert_eq!(EarlyOffset::from_minutes(30), None);
    }
}
