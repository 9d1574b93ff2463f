use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rubric_feedback::analytics::{corpus_adoption, grader_variance, scores_by_grader, summarize_all, usage_means};
use rubric_feedback::domain::{parse_drafts, validate_corpus, Catalog};
use rubric_feedback::events::{read_file, EventFiles, GradingEvent};
use rubric_feedback::pipeline::Pipeline;
use rubric_feedback::provider::{HttpChatClient, LlmClient, MockProvider, ProviderConfig, StructuredClient};
use rubric_feedback::quality::{aggregate, compare_conditions, group_units, FeedbackAnalyzer, FeedbackMessage};
use rubric_feedback::reliability::{inter_annotator, run_gold_evaluation, GoldMessage};
use rubric_feedback::scorer::{evaluate_against_gold, gold_map, score_corpus, score_distribution, verdict_map, GoldLabel};
use rubric_feedback::service::{http, FeedbackExport, ServiceConfig};
use rubric_feedback::Condition;
use serde_json::json;

#[derive(Parser)]
#[command(version, about = "Rubric-aligned essay feedback: grading service and offline tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP grading service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Import a line-delimited draft export into the service's data directory.
    Import {
        #[arg(long)]
        config: PathBuf,
        drafts: PathBuf,
    },
    /// Run the suggestion pipeline ahead of time for all assisted drafts.
    Precompute {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score drafts against their rubrics. Prints one JSON score record per
    /// line, then a summary record.
    Score {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        drafts: PathBuf,
        /// Gold labels (JSON array of {essay_id, rubric_id, met}).
        #[arg(long)]
        gold: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Analyze exported feedback: idea units, types, quality ratings.
    EvalFeedback {
        #[arg(long)]
        catalog: PathBuf,
        /// Directory of feedback export documents.
        #[arg(long)]
        exports: Option<PathBuf>,
        /// Double-annotated gold messages to measure the analyzer against.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Assignment the gold messages belong to; defaults to the first.
        #[arg(long)]
        assignment: Option<String>,
        /// Where to write unit-level records (JSON lines).
        #[arg(long)]
        units_out: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Reports from grading event logs (files or directories).
    Analytics {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Per-essay summaries instead of corpus reports.
        #[arg(long)]
        per_essay: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderChoice {
    Mock,
    Http,
}

#[derive(Args)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "mock")]
    provider: ProviderChoice,
    /// Seed of the mock provider.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Provider settings (TOML, same keys as `[provider.settings]`).
    #[arg(long)]
    provider_config: Option<PathBuf>,
}

impl ProviderArgs {
    fn client(&self) -> Result<StructuredClient> {
        let config: ProviderConfig = match &self.provider_config {
            Some(p) => toml::from_str(&read(p)?)?,
            None => ProviderConfig::default(),
        };
        let llm: Arc<dyn LlmClient> = match self.provider {
            ProviderChoice::Mock => Arc::new(MockProvider::new(self.seed)),
            ProviderChoice::Http => Arc::new(HttpChatClient::new()),
        };
        Ok(StructuredClient::new(llm, config)?)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn print(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json" || x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn load_events(paths: &[PathBuf]) -> Result<Vec<GradingEvent>> {
    let mut events = Vec::new();
    for p in paths {
        if p.is_dir() {
            events.extend(EventFiles::new(p)?.read_all()?);
        } else {
            events.extend(read_file(p)?);
        }
    }
    Ok(events)
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Serve { config } => {
            let config = ServiceConfig::load(&config)?;
            let service = Arc::new(config.build_service()?);
            http::serve(service, &config.bind).await?;
        }
        Command::Import { config, drafts } => {
            let service = ServiceConfig::load(&config)?.build_service()?;
            print(&service.import_drafts(&read(&drafts)?)?)?;
        }
        Command::Precompute { config } => {
            let service = ServiceConfig::load(&config)?.build_service()?;
            print(&service.precompute().await?)?;
        }
        Command::Score { catalog, drafts, gold, provider } => {
            let catalog = Catalog::from_json(&read(&catalog)?)?;
            let drafts = parse_drafts(&read(&drafts)?)?;
            let report = validate_corpus(&drafts, &catalog);
            if !report.is_clean() {
                tracing::warn!(issues = report.issues.len(), "draft corpus has issues");
            }
            let pipeline = Pipeline::new(provider.client()?);
            let results = score_corpus(&pipeline, &drafts, |d| catalog.get(&d.assignment_id), 4).await;
            let mut scores = Vec::new();
            for r in results {
                scores.push(r?);
            }
            let agreement = match gold {
                Some(path) => {
                    let labels: Vec<GoldLabel> = serde_json::from_str(&read(&path)?)?;
                    let gold = gold_map(&labels);
                    // Drafts outside the gold set are scored but not compared.
                    let machine = verdict_map(&scores).into_iter().filter(|(k, _)| gold.contains_key(k)).collect();
                    Some(evaluate_against_gold(&machine, &gold)?)
                }
                None => None,
            };
            let mut out = std::io::stdout().lock();
            for score in &scores {
                let mut record = serde_json::to_value(score)?;
                record["kind"] = json!("score");
                writeln!(out, "{record}")?;
            }
            let summary = json!({
                "kind": "summary",
                "distribution": score_distribution(&scores),
                "agreement": agreement,
            });
            writeln!(out, "{summary}")?;
        }
        Command::EvalFeedback { catalog, exports, gold, assignment, units_out, provider } => {
            let catalog = Catalog::from_json(&read(&catalog)?)?;
            let analyzer = FeedbackAnalyzer::new(provider.client()?);
            let mut out = serde_json::Map::new();
            let mut all_units = Vec::new();
            if let Some(dir) = exports {
                let mut messages: Vec<FeedbackMessage> = Vec::new();
                let mut essays = Vec::new();
                let mut assignment_of: BTreeMap<String, String> = BTreeMap::new();
                for path in json_files(&dir)? {
                    let export: FeedbackExport = serde_json::from_str(&read(&path)?)?;
                    let Some(a) = catalog.get(&export.assignment_id) else {
                        bail!("{}: unknown assignment {:?}", path.display(), export.assignment_id);
                    };
                    essays.push((export.essay_id.clone(), export.condition, a.rubric_items.len()));
                    assignment_of.insert(export.essay_id.clone(), a.id.clone());
                    messages.extend(export.messages());
                }
                let units = analyzer
                    .analyze_all(&messages, |m| assignment_of.get(&m.essay_id).and_then(|id| catalog.get(id)))
                    .await;
                let agg = aggregate(&group_units(&essays, &units));
                if let (Some(a), Some(b)) =
                    (agg.conditions.get(&Condition::FeedbackWriter), agg.conditions.get(&Condition::Baseline))
                {
                    match compare_conditions(a, b) {
                        Ok(cmp) => {
                            out.insert("comparison".into(), serde_json::to_value(cmp)?);
                        }
                        Err(e) => tracing::warn!(error = %e, "no condition comparison"),
                    }
                }
                out.insert("aggregate".into(), serde_json::to_value(&agg)?);
                all_units.extend(units);
            }
            if let Some(path) = gold {
                let gold: Vec<GoldMessage> = serde_json::from_str(&read(&path)?)?;
                let assignment = match &assignment {
                    Some(id) => catalog.get(id).with_context(|| format!("unknown assignment {id:?}"))?,
                    None => catalog.iter().next().context("empty catalog")?,
                };
                let (units, report) = run_gold_evaluation(&analyzer, &gold, |_| Some(assignment)).await?;
                out.insert("reliability".into(), serde_json::to_value(report)?);
                out.insert("inter_annotator".into(), serde_json::to_value(inter_annotator(&gold)?)?);
                all_units.extend(units);
            }
            if let Some(path) = units_out {
                let lines: Vec<String> =
                    all_units.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
                std::fs::write(&path, lines.join("\n") + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            print(&out)?;
        }
        Command::Analytics { logs, per_essay } => {
            let events = load_events(&logs)?;
            let summaries = summarize_all(&events);
            if per_essay {
                print(&summaries)?;
            } else {
                let scores = scores_by_grader(&events);
                let variance = if scores.is_empty() { None } else { Some(grader_variance(&scores)?) };
                print(&json!({
                    "events": events.len(),
                    "usage_means": usage_means(&summaries),
                    "adoption": corpus_adoption(&events),
                    "grader_variance": variance,
                }))?;
            }
        }
    }
    Ok(())
}
