//! Splits feedback messages into idea units, tags and rates them, and
//! measures the analyzer against the double-annotated gold set.
//!
//! cargo run --example evaluate_feedback

use std::sync::Arc;

use rubric_feedback::domain::Catalog;
use rubric_feedback::provider::{MockProvider, ProviderConfig, StructuredClient};
use rubric_feedback::quality::{aggregate, compare_conditions, group_units, FeedbackAnalyzer, FeedbackMessage};
use rubric_feedback::reliability::{inter_annotator, run_gold_evaluation, GoldMessage};
use rubric_feedback::Condition;

fn fixture(name: &str) -> std::io::Result<String> {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/").to_string() + name)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let catalog = Catalog::from_json(&fixture("catalog.json")?)?;
    let gold: Vec<GoldMessage> = serde_json::from_str(&fixture("gold_messages.json")?)?;
    let client = StructuredClient::new(Arc::new(MockProvider::new(0)), ProviderConfig::default())?;
    let analyzer = FeedbackAnalyzer::new(client);

    let messages: Vec<FeedbackMessage> = gold.iter().map(|g| g.message.clone()).collect();
    let units = analyzer.analyze_all(&messages, |_| catalog.get("wa1")).await;
    for u in units.iter().take(5) {
        println!("{}#{} {:?}\n  types {:?}\n  quality {:?}", u.message_id, u.index, u.text, u.types, u.quality);
    }

    let mut essays: Vec<(String, Condition, usize)> = messages.iter().map(|m| (m.essay_id.clone(), m.condition, 35)).collect();
    essays.sort();
    essays.dedup();
    let agg = aggregate(&group_units(&essays, &units));
    if let (Some(fw), Some(base)) = (agg.conditions.get(&Condition::FeedbackWriter), agg.conditions.get(&Condition::Baseline)) {
        for row in compare_conditions(fw, base)?.rows {
            let p = row.welch.as_ref().and_then(|w| w.p_value);
            println!("{:<16} diff {:+.3}  p {p:?}", row.metric, row.difference);
        }
    }

    let human = inter_annotator(&gold)?;
    println!("\nannotator agreement: segmentation {:.2}, metric kappa {:?}", human.segmentation_accuracy, human.min_metric_kappa());
    let (_, machine) = run_gold_evaluation(&analyzer, &gold, |_| catalog.get("wa1")).await?;
    println!("mock analyzer vs gold: segmentation {:.2}, metric kappa {:?}", machine.segmentation_accuracy, machine.min_metric_kappa());
    Ok(())
}
