//! Trained snapshots: everything the service needs, in one versioned
//! directory.
//!
//! ```text
//! <dir>/snapshot.json         format tag, version, corpus digest, creation time, config
//! <dir>/corpus/articles.jsonl corpus in the `ingest` formats
//! <dir>/corpus/visits.csv
//! <dir>/corpus/early.csv
//! <dir>/index.json            tf-idf index
//! <dir>/topics.json           topic model
//! <dir>/panel.json            topic-volume panel
//! <dir>/forecasters.json      one forecaster per topic and horizon, origin = day after the panel
//! <dir>/predictors.json       fitted article predictors, one per variant
//! ```
//!
//! A snapshot is written to a staging directory next to the target and
//! renamed into place, so a failed build never leaves a partial directory.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use newscast_core::articlepred::{
    fit_article_predictor, variant_label, ArticlePredictor, PredictionContext, Variant,
};
use newscast_core::corpus::{load_corpus, write_corpus, Corpus, EarlyOffset};
use newscast_core::forecast::{build_panel, FittedForecaster, Forecast, TopicVolumePanel};
use newscast_core::textproc::{build_tfidf, preprocess, TfIdfIndex, TokenPipelineConfig};
use newscast_core::topics::{fit_lda, TopicModel};

use crate::config::{parse_variants, PipelineConfig};
use crate::error::{AppError, AppResult};
use crate::manifest::sha256_hex;

pub const SNAPSHOT_FORMAT: &str = "newscast-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

pub const ARTICLES_FILE: &str = "articles.jsonl";
pub const VISITS_FILE: &str = "visits.csv";
pub const EARLY_FILE: &str = "early.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub format: String,
    pub version: u32,
    pub corpus_digest: String,
    /// RFC 3339; taken from `SOURCE_DATE_EPOCH` when set.
    pub created_at: String,
    pub k: usize,
    pub panel_start: NaiveDate,
    pub panel_end: NaiveDate,
    pub variants: Vec<String>,
    pub config: PipelineConfig,
}

/// Forecaster fitted at the day after the panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicForecaster {
    pub topic: usize,
    pub horizon: usize,
    pub date: NaiveDate,
    pub model: FittedForecaster,
    pub forecast: Forecast,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    pub corpus: Corpus,
    pub index: TfIdfIndex,
    pub model: TopicModel,
    pub panel: TopicVolumePanel,
    pub forecasters: Vec<TopicForecaster>,
    pub predictors: Vec<ArticlePredictor>,
    pub tokens: TokenPipelineConfig,
}

/// Corpus directory file paths.
pub fn corpus_paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(ARTICLES_FILE),
        dir.join(VISITS_FILE),
        dir.join(EARLY_FILE),
    )
}

/// Loads a corpus directory; the early file is optional.
pub fn load_corpus_dir(dir: &Path) -> AppResult<Corpus> {
    let (a, v, e) = corpus_paths(dir);
    Ok(load_corpus(&a, &v, e.exists().then_some(e.as_path()))?)
}

pub fn write_corpus_dir(corpus: &Corpus, dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let (a, v, e) = corpus_paths(dir);
    Ok(write_corpus(corpus, &a, &v, Some(&e))?)
}

/// Digest over the three corpus files in canonical form.
pub fn corpus_digest(dir: &Path) -> AppResult<String> {
    let mut all = Vec::new();
    for name in [ARTICLES_FILE, VISITS_FILE, EARLY_FILE] {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(|e| AppError::io(&p, e))?;
        all.extend_from_slice(name.as_bytes());
        all.push(0);
        all.extend_from_slice(sha256_hex(&bytes).as_bytes());
        all.push(b'\n');
    }
    Ok(sha256_hex(&all))
}

fn creation_time() -> String {
    let ts = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| DateTime::<Utc>::from_timestamp(s, 0))
        .unwrap_or_else(Utc::now);
    ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn corpus_stems(corpus: &Corpus, tokens: &TokenPipelineConfig) -> Vec<Vec<String>> {
    corpus
        .articles()
        .iter()
        .map(|a| preprocess(&a.text(), tokens))
        .collect()
}

/// Text models and panel for a corpus.
pub fn fit_topics(
    corpus: &Corpus,
    config: &PipelineConfig,
) -> AppResult<(TfIdfIndex, TopicModel, TopicVolumePanel)> {
    let tokens = config.text.tokens();
    let index = build_tfidf(corpus, &tokens)?;
    let stems = corpus_stems(corpus, &tokens);
    let model = fit_lda(index.doc_ids(), &stems, &config.topics.lda(config.seed))?;
    let panel = build_panel(corpus, &model)?;
    Ok((index, model, panel))
}

impl Snapshot {
    /// Runs the full pipeline on `corpus`.
    pub fn build(corpus: Corpus, config: &PipelineConfig) -> AppResult<Self> {
        config.validate()?;
        let tokens = config.text.tokens();
        let (index, model, panel) = fit_topics(&corpus, config)?;
        let origin = panel.len();
        let next_day = panel
            .end()
            .and_then(|d| d.succ_opt())
            .expect("panel has days");

        let mut forecasters = Vec::new();
        for topic in 0..panel.k() {
            for horizon in 1..=config.forecast.snapshot_horizon {
                let (fitted, forecast) = config
                    .forecast
                    .setup
                    .forecast_at(&panel, topic, origin, horizon)?;
                forecasters.push(TopicForecaster {
                    topic,
                    horizon,
                    date: next_day + chrono::Days::new(horizon as u64 - 1),
                    model: fitted,
                    forecast,
                });
            }
        }

        let ctx = PredictionContext {
            corpus: &corpus,
            index: &index,
            panel: &panel,
            model: &model,
            tokens: &tokens,
        };
        let mut predictors = Vec::new();
        let mut labels = Vec::new();
        for (variant, offset) in parse_variants(&config.articles.variants)? {
            let pc = config
                .articles
                .predictor(variant, offset, &config.forecast.setup);
            predictors.push(fit_article_predictor(&ctx, &pc)?);
            labels.push(variant_label(variant, offset));
        }

        let meta = SnapshotMeta {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            corpus_digest: String::new(),
            created_at: creation_time(),
            k: model.k(),
            panel_start: panel.start,
            panel_end: panel.end().expect("panel has days"),
            variants: labels,
            config: config.clone(),
        };
        Ok(Snapshot {
            meta,
            corpus,
            index,
            model,
            panel,
            forecasters,
            predictors,
            tokens,
        })
    }

    pub fn context(&self) -> PredictionContext<'_> {
        PredictionContext {
            corpus: &self.corpus,
            index: &self.index,
            panel: &self.panel,
            model: &self.model,
            tokens: &self.tokens,
        }
    }

    /// The fitted predictor for a variant label; `None` picks the default.
    pub fn predictor(&self, label: Option<&str>) -> AppResult<&ArticlePredictor> {
        let Some(label) = label else {
            return Ok(&self.predictors[0]);
        };
        let (variant, offset): (Variant, Option<EarlyOffset>) =
            newscast_core::articlepred::parse_variant_label(label)?;
        let wanted = variant_label(variant, offset);
        self.predictors
            .iter()
            .zip(&self.meta.variants)
            .find(|(_, l)| **l == wanted)
            .map(|(p, _)| p)
            .ok_or_else(|| {
                newscast_core::Error::Lookup {
                    kind: "variant in this snapshot",
                    id: wanted,
                }
                .into()
            })
    }

    /// Writes the snapshot to `dir` atomically. `finish` runs on the
    /// staging directory before the rename (the CLI adds its manifest).
    pub fn save_with<F>(&self, dir: &Path, finish: F) -> AppResult<()>
    where
        F: FnOnce(&Path) -> AppResult<()>,
    {
        let parent = dir
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "snapshot".into());
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| AppError::io(&staging, e))?;
        }
        let result = self.write_into(&staging).and_then(|()| finish(&staging));
        if let Err(e) = result {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        if dir.exists() {
            let old = parent.join(format!(".{name}.old-{}", std::process::id()));
            fs::rename(dir, &old).map_err(|e| AppError::io(dir, e))?;
            fs::rename(&staging, dir).map_err(|e| AppError::io(dir, e))?;
            let _ = fs::remove_dir_all(&old);
        } else {
            fs::rename(&staging, dir).map_err(|e| AppError::io(dir, e))?;
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> AppResult<()> {
        self.save_with(dir, |_| Ok(()))
    }

    fn write_into(&self, dir: &Path) -> AppResult<()> {
        let corpus_dir = dir.join("corpus");
        write_corpus_dir(&self.corpus, &corpus_dir)?;
        let meta = SnapshotMeta {
            corpus_digest: corpus_digest(&corpus_dir)?,
            ..self.meta.clone()
        };
        write_json(&dir.join("snapshot.json"), &meta)?;
        write_json(&dir.join("index.json"), &self.index)?;
        write_json(&dir.join("topics.json"), &self.model)?;
        write_json(&dir.join("panel.json"), &self.panel)?;
        write_json(&dir.join("forecasters.json"), &self.forecasters)?;
        write_json(&dir.join("predictors.json"), &self.predictors)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> AppResult<Self> {
        let meta_path = dir.join("snapshot.json");
        if !meta_path.exists() {
            return Err(AppError::snapshot(
                dir,
                "no snapshot.json (not a snapshot directory)",
            ));
        }
        let head: serde_json::Value = read_json(&meta_path)?;
        let format = head
            .get("format")
            .and_then(|v| v.as_str())
            .unwrap_or_default();
        let version = head.get("version").and_then(|v| v.as_u64());
        if format != SNAPSHOT_FORMAT {
            return Err(AppError::snapshot(
                dir,
                format!("unknown format tag `{format}`"),
            ));
        }
        if version != Some(SNAPSHOT_VERSION as u64) {
            return Err(AppError::snapshot(
                dir,
                format!(
                    "snapshot version {} is not supported (this build reads version {SNAPSHOT_VERSION}); re-run `newscast fit`",
                    version.map_or("?".to_string(), |v| v.to_string())
                ),
            ));
        }
        let meta: SnapshotMeta = serde_json::from_value(head)
            .map_err(|e| AppError::snapshot(&meta_path, e.to_string()))?;
        let corpus_dir = dir.join("corpus");
        let digest = corpus_digest(&corpus_dir)?;
        if digest != meta.corpus_digest {
            return Err(AppError::snapshot(
                dir,
                "corpus files do not match the recorded digest",
            ));
        }
        let corpus = load_corpus_dir(&corpus_dir)?;
        let snap = Snapshot {
            tokens: meta.config.text.tokens(),
            corpus,
            index: read_json(&dir.join("index.json"))?,
            model: read_json(&dir.join("topics.json"))?,
            panel: read_json(&dir.join("panel.json"))?,
            forecasters: read_json(&dir.join("forecasters.json"))?,
            predictors: read_json(&dir.join("predictors.json"))?,
            meta,
        };
        snap.check(dir)?;
        Ok(snap)
    }

    fn check(&self, dir: &Path) -> AppResult<()> {
        let ids: Vec<&str> = self
            .corpus
            .articles()
            .iter()
            .map(|a| a.id.as_str())
            .collect();
        let fail = |m: &str| Err(AppError::snapshot(dir, m.to_string()));
        if self
            .index
            .doc_ids()
            .iter()
            .map(String::as_str)
            .ne(ids.iter().copied())
        {
            return fail("tf-idf index and corpus disagree on articles");
        }
        if self
            .model
            .doc_ids
            .iter()
            .any(|id| self.corpus.position(id).is_err())
        {
            return fail("topic model names articles missing from the corpus");
        }
        if self.panel.k() != self.model.k() || self.meta.k != self.model.k() {
            return fail("panel, topic model and metadata disagree on k");
        }
        if self.predictors.is_empty() || self.predictors.len() != self.meta.variants.len() {
            return fail("predictor list does not match the recorded variants");
        }
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let text = serde_json::to_string(value).expect("snapshot parts serialize");
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::snapshot(path, e.to_string()))
}
