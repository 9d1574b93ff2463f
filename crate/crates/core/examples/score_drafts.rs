//! Scores every fixture draft against its rubric and compares the machine
//! verdicts with the gold labels.
//!
//! cargo run --example score_drafts

use std::collections::BTreeMap;
use std::sync::Arc;

use rubric_feedback::domain::{parse_drafts, Catalog};
use rubric_feedback::pipeline::Pipeline;
use rubric_feedback::provider::{MockProvider, ProviderConfig, StructuredClient};
use rubric_feedback::scorer::{
    aggregate_score, evaluate_against_gold, gold_map, score_corpus, score_distribution, verdict_map, GoldLabel,
};
use rubric_feedback::{Stage, Weight};

fn fixture(name: &str) -> std::io::Result<String> {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/").to_string() + name)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    // Exact weighted totals.
    let weights = [Weight::integer(1), Weight::integer(2), Weight::new(1, 2)?];
    println!("met, missed, met -> {}", aggregate_score(&[true, false, true], &weights)?);

    let catalog = Catalog::from_json(&fixture("catalog.json")?)?;
    let drafts = parse_drafts(&fixture("drafts.jsonl")?)?;
    let client = StructuredClient::new(Arc::new(MockProvider::new(0)), ProviderConfig::default())?;
    let pipeline = Pipeline::new(client);
    let scores = score_corpus(&pipeline, &drafts, |d| catalog.get(&d.assignment_id), 8)
        .await
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    for stage in [Stage::First, Stage::Final] {
        let subset: Vec<_> = scores.iter().filter(|s| s.stage == stage).cloned().collect();
        if let Some(d) = score_distribution(&subset) {
            println!("{stage:?} drafts: n={} mean={:.3} min={:.3} max={:.3}", d.n, d.mean, d.min, d.max);
        }
    }

    let labels: Vec<GoldLabel> = serde_json::from_str(&fixture("scorer_gold.json")?)?;
    let gold = gold_map(&labels);
    let machine: BTreeMap<_, _> = verdict_map(&scores).into_iter().filter(|(k, _)| gold.contains_key(k)).collect();
    let report = evaluate_against_gold(&machine, &gold)?;
    println!(
        "against {} gold judgments: accuracy {:.3}, kappa {:?}",
        report.n_judgments, report.accuracy, report.kappa
    );
    Ok(())
}
