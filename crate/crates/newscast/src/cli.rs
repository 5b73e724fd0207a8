//! `newscast <command> [--config path] [--seed n] [--out dir] ...`
//!
//! Every command that writes files also writes `manifest.json` into its
//! output directory. Exit codes: 0 success, 2 usage, 3 i/o, 4 invalid
//! input or config, 5 domain error, 6 unknown id, 7 solver failure,
//! 8 insufficient history.

use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use newscast_core::articlepred::analytics::analytics;
use newscast_core::articlepred::{evaluate_articles, ArticleInput, Variant};
use newscast_core::corpus::{generate_synthetic, load_corpus};
use newscast_core::forecast::backtest;
use newscast_core::textproc::build_tfidf;
use newscast_core::topics::select_k;

use crate::config::{parse_variants, PipelineConfig};
use crate::error::{AppError, AppResult};
use crate::manifest::{
    digest_file, digest_inputs, digest_outputs, write_atomic, FileDigest, Manifest,
};
use crate::service::{serve, AppState};
use crate::snapshot::{corpus_digest, corpus_stems, load_corpus_dir, write_corpus_dir, Snapshot};
use crate::whatif::{whatif, WhatIfRequest};

#[derive(Parser, Debug)]
#[command(
    name = "newscast",
    version,
    about = "News popularity forecasting pipeline and what-if service"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML config file; missing keys keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus with planted topics and ground truth.
    Synth,
    /// Validate and normalize a corpus from its three input files.
    Ingest {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        visits: PathBuf,
        #[arg(long)]
        early: Option<PathBuf>,
    },
    /// Score candidate topic counts.
    SelectK {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Fit topics, panel, forecasters and article predictors into a snapshot.
    Fit {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Sliding-window backtest of the topic-volume forecasters.
    BacktestTopics {
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Train/test evaluation of article predictor variants.
    EvalArticles {
        #[arg(long)]
        snapshot: PathBuf,
        /// Variant label such as NN_T_PT or EARLY_6h; repeatable.
        #[arg(long = "variant")]
        variants: Vec<String>,
        #[arg(long = "theta")]
        thetas: Vec<f64>,
        #[arg(long = "delta")]
        deltas: Vec<usize>,
    },
    /// Visit CCDFs, growth curves and shelf-life tables.
    Analytics {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// One-shot prediction for a stored article or a draft (JSON WhatIfRequest
    /// from `--draft` or stdin).
    Predict {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, conflicts_with = "draft")]
        article: Option<String>,
        /// `-` reads stdin, which is also the default.
        #[arg(long)]
        draft: Option<PathBuf>,
        #[arg(long)]
        variant: Option<String>,
    },
    /// Serve the HTTP API over a snapshot.
    Serve {
        #[arg(long)]
        snapshot: PathBuf,
        /// Overrides `serve.bind`.
        #[arg(long, env = "NEWSCAST_BIND")]
        bind: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest { .. } => "ingest",
            Command::SelectK { .. } => "select-k",
            Command::Fit { .. } => "fit",
            Command::BacktestTopics { .. } => "backtest-topics",
            Command::EvalArticles { .. } => "eval-articles",
            Command::Analytics { .. } => "analytics",
            Command::Predict { .. } => "predict",
            Command::Serve { .. } => "serve",
        }
    }
}

/// Drops the global flags (and their values) from the raw arguments.
fn command_args(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv.iter().skip(2) {
        if skip {
            skip = false;
            continue;
        }
        if ["--config", "--seed", "--out"].contains(&a.as_str()) {
            skip = true;
        } else if !["--config=", "--seed=", "--out="]
            .iter()
            .any(|p| a.starts_with(p))
        {
            out.push(a.clone());
        }
    }
    out
}

/// Collects written files and finishes with a manifest.
struct Run {
    command: &'static str,
    args: Vec<String>,
    config: PipelineConfig,
    inputs: Vec<FileDigest>,
    out: Option<PathBuf>,
    written: Vec<String>,
}

impl Run {
    fn out_dir(&self) -> AppResult<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| AppError::Usage(format!("`{}` needs --out <dir>", self.command)))
    }

    fn input(&mut self, path: &Path) -> AppResult<()> {
        if !path.exists() {
            return Err(AppError::io(
                path,
                std::io::Error::from(std::io::ErrorKind::NotFound),
            ));
        }
        self.inputs.extend(digest_inputs(path)?);
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> AppResult<()> {
        let path = self.out_dir()?.join(name);
        write_atomic(&path, bytes.as_ref())?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> AppResult<()> {
        let text = serde_json::to_string_pretty(value).expect("output serializes");
        self.write(name, text + "\n")
    }

    fn manifest(&self, outputs: Vec<FileDigest>) -> Manifest {
        Manifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.config.seed,
            args: self.args.clone(),
            config: self.config.clone(),
            inputs: self.inputs.clone(),
            outputs,
        }
    }

    fn finish(self) -> AppResult<()> {
        let dir = self.out_dir()?.to_path_buf();
        let mut outputs = Vec::new();
        for name in &self.written {
            outputs.push(FileDigest {
                path: name.clone(),
                sha256: digest_file(&dir.join(name))?,
            });
        }
        self.manifest(outputs).write(&dir)?;
        println!("wrote {} files to {}", self.written.len(), dir.display());
        Ok(())
    }
}

fn snapshot_config(common: &Common, snapshot: &Snapshot) -> AppResult<PipelineConfig> {
    let mut config = match &common.config {
        Some(p) => PipelineConfig::load(Some(p))?,
        None => snapshot.meta.config.clone(),
    };
    if let Some(s) = common.seed {
        config.seed = s;
    }
    Ok(config)
}

fn read_request(draft: Option<&Path>) -> AppResult<WhatIfRequest> {
    let text = match draft {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))?
        }
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| AppError::io("<stdin>", e))?;
            s
        }
    };
    serde_json::from_str(&text)
        .map_err(|e| AppError::field("body", format!("draft is not a valid WhatIfRequest: {e}")))
}

/// Parses `argv` (program name first) and runs the command.
pub fn run(argv: Vec<String>) -> AppResult<()> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(())
                }
                _ => Err(AppError::Usage(e.render().to_string())),
            };
        }
    };
    let common = cli.common.clone();
    let mut config = PipelineConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        config.seed = s;
    }
    let mut run = Run {
        command: cli.command.name(),
        args: command_args(&argv),
        config,
        inputs: Vec::new(),
        out: common.out.clone(),
        written: Vec::new(),
    };

    match cli.command {
        Command::Synth => {
            run.out_dir()?;
            let spec = run.config.synth.spec(run.config.seed);
            let (corpus, truth) = generate_synthetic(&spec)?;
            let dir = run.out_dir()?.to_path_buf();
            write_corpus_dir(&corpus, &dir)?;
            truth.write_jsonl(&dir.join("ground_truth.jsonl"))?;
            run.written.extend(
                [
                    "articles.jsonl",
                    "visits.csv",
                    "early.csv",
                    "ground_truth.jsonl",
                ]
                .map(String::from),
            );
            run.finish()
        }
        Command::Ingest {
            articles,
            visits,
            early,
        } => {
            run.out_dir()?;
            run.input(&articles)?;
            run.input(&visits)?;
            if let Some(e) = &early {
                run.input(e)?;
            }
            let corpus = load_corpus(&articles, &visits, early.as_deref())?;
            let dir = run.out_dir()?.to_path_buf();
            write_corpus_dir(&corpus, &dir)?;
            run.written
                .extend(["articles.jsonl", "visits.csv", "early.csv"].map(String::from));
            let (first, last) = corpus.date_range().expect("loaded corpus is non-empty");
            let summary = serde_json::json!({
                "n_articles": corpus.len(),
                "first_date": first,
                "last_date": last,
                "total_visits": (0..corpus.len()).map(|i| corpus.series(i).total()).sum::<u64>(),
                "corpus_digest": corpus_digest(&dir)?,
            });
            run.write_json("summary.json", &summary)?;
            run.finish()
        }
        Command::SelectK { corpus } => {
            run.out_dir()?;
            run.input(&corpus)?;
            let corpus = load_corpus_dir(&corpus)?;
            let tokens = run.config.text.tokens();
            let index = build_tfidf(&corpus, &tokens)?;
            let stems = corpus_stems(&corpus, &tokens);
            let report = select_k(
                index.doc_ids(),
                &stems,
                &index,
                &run.config.topics.select_k(run.config.seed),
            )?;
            run.write("k_selection.csv", report.to_csv())?;
            run.write_json("k_selection.json", &report)?;
            println!("chosen k = {}", report.chosen_k);
            run.finish()
        }
        Command::Fit { corpus } => {
            let dir = run.out_dir()?.to_path_buf();
            run.input(&corpus)?;
            let corpus = load_corpus_dir(&corpus)?;
            let snapshot = Snapshot::build(corpus, &run.config)?;
            snapshot.save_with(&dir, |staging| {
                run.manifest(digest_outputs(staging)?).write(staging)
            })?;
            println!(
                "snapshot with k = {} and variants {} written to {}",
                snapshot.meta.k,
                snapshot.meta.variants.join(", "),
                dir.display()
            );
            Ok(())
        }
        Command::BacktestTopics { snapshot } => {
            run.out_dir()?;
            run.input(&snapshot)?;
            let snap = Snapshot::load(&snapshot)?;
            run.config = snapshot_config(&common, &snap)?;
            let report = backtest(&snap.panel, &run.config.forecast.backtest())?;
            run.write("backtest.csv", report.to_csv())?;
            let summary = serde_json::json!({
                "origins": report.origins,
                "grand_mape": report.grand_mape(),
                "max_kkt_residual": report.max_kkt_residual,
                "ill_conditioned_fits": report.ill_conditioned_fits,
                "clamped_forecasts": report.clamped_forecasts,
            });
            run.write_json("backtest.json", &summary)?;
            if let Some(m) = report.grand_mape() {
                println!("mean MAPE over all topics and horizons: {m:.3}%");
            }
            run.finish()
        }
        Command::EvalArticles {
            snapshot,
            variants,
            thetas,
            deltas,
        } => {
            run.out_dir()?;
            run.input(&snapshot)?;
            let snap = Snapshot::load(&snapshot)?;
            run.config = snapshot_config(&common, &snap)?;
            let a = &run.config.articles;
            let labels = if variants.is_empty() {
                a.eval_variants.clone()
            } else {
                variants
            };
            let thetas = if thetas.is_empty() {
                a.eval_thetas.clone()
            } else {
                thetas
            };
            let deltas = if deltas.is_empty() {
                a.eval_deltas.clone()
            } else {
                deltas
            };
            let base = a.predictor(Variant::NnTPt, None, &run.config.forecast.setup);
            let report = evaluate_articles(
                &snap.context(),
                &base,
                &parse_variants(&labels)?,
                &thetas,
                &deltas,
            )?;
            for r in &report.rows {
                println!(
                    "{:<18} theta={:<5} delta={} MAPE={}",
                    r.variant,
                    r.theta,
                    r.delta,
                    r.mape.map_or("n/a".to_string(), |m| format!("{m:.3}%"))
                );
            }
            run.write("articles_eval.csv", report.to_csv())?;
            run.finish()
        }
        Command::Analytics { corpus } => {
            run.out_dir()?;
            run.input(&corpus)?;
            let corpus = load_corpus_dir(&corpus)?;
            let report = analytics(&corpus, &run.config.analytics)?;
            run.write("ccdf.csv", report.ccdf_csv())?;
            run.write("growth.csv", report.growth_csv())?;
            run.write("shelf_life.csv", report.shelf_life_csv())?;
            run.write("shelf_summary.csv", report.shelf_summary_csv())?;
            run.finish()
        }
        Command::Predict {
            snapshot,
            article,
            draft,
            variant,
        } => {
            run.input(&snapshot)?;
            let snap = Snapshot::load(&snapshot)?;
            run.config = snapshot_config(&common, &snap)?;
            let response = match article {
                Some(id) => whatif(&snap, &ArticleInput::Stored(id), variant.as_deref())?,
                None => {
                    if let Some(p) = draft.as_deref().filter(|p| *p != Path::new("-")) {
                        run.input(p)?;
                    }
                    let mut request = read_request(draft.as_deref())?;
                    if variant.is_some() {
                        request.variant = variant;
                    }
                    crate::whatif::whatif_request(&snap, &request)?
                }
            };
            let text = serde_json::to_string_pretty(&response).expect("response serializes");
            println!("{text}");
            if run.out.is_some() {
                run.write("prediction.json", text + "\n")?;
                let dir = run.out_dir()?.to_path_buf();
                let outputs = vec![FileDigest {
                    path: "prediction.json".into(),
                    sha256: digest_file(&dir.join("prediction.json"))?,
                }];
                run.manifest(outputs).write(&dir)?;
            }
            Ok(())
        }
        Command::Serve { snapshot, bind } => {
            let snap = Snapshot::load(&snapshot)?;
            let bind = bind.unwrap_or_else(|| snap.meta.config.serve.bind.clone());
            let state = AppState::new(snap, Some(snapshot));
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| AppError::io("tokio runtime", e))?;
            rt.block_on(serve(state, &bind))
        }
    }
}

pub fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("NEWSCAST_LOG")
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(text)) => {
            eprint!("{text}");
            if !text.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("newscast: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn global_flags_are_stripped_from_recorded_args() {
        let a = argv(
            "newscast eval-articles --snapshot s --out o --variant NN --seed=3 --config c.toml",
        );
        assert_eq!(command_args(&a), argv("--snapshot s --variant NN"));
    }

    #[test]
    fn unknown_command_is_a_usage_error() {
        match run(argv("newscast frobnicate")) {
            Err(e @ AppError::Usage(_)) => assert_eq!(e.exit_code(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_out_is_a_usage_error() {
        assert!(matches!(
            run(argv("newscast synth")),
            Err(AppError::Usage(_))
        ));
    }
}
