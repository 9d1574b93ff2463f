//! Runs the suggestion pipeline on a fixture draft with the deterministic
//! mock provider, then flips and regenerates one item.
//!
//! cargo run --example suggest_feedback [essay_id]

use std::sync::Arc;

use rubric_feedback::domain::{parse_drafts, Catalog};
use rubric_feedback::pipeline::Pipeline;
use rubric_feedback::provider::{MockProvider, ProviderConfig, StructuredClient};
use rubric_feedback::text::char_slice;

fn fixture(name: &str) -> std::io::Result<String> {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/").to_string() + name)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let catalog = Catalog::from_json(&fixture("catalog.json")?)?;
    let drafts = parse_drafts(&fixture("drafts.jsonl")?)?;
    let wanted = std::env::args().nth(1).unwrap_or_else(|| "wa1-stu002-first".into());
    let draft = drafts.iter().find(|d| d.essay_id == wanted).ok_or_else(|| anyhow::anyhow!("no draft {wanted}"))?;
    let assignment = catalog.get(&draft.assignment_id).ok_or_else(|| anyhow::anyhow!("no assignment"))?;

    let client = StructuredClient::new(Arc::new(MockProvider::new(7)), ProviderConfig::default())?;
    let pipeline = Pipeline::new(client);
    let bundles = pipeline.run_pipeline(draft, assignment).await;

    for b in bundles.iter().take(6) {
        println!("{} met={} [{:?}]", b.rubric_id, b.judgment.met, b.ai_suggestion.kind);
        println!("  why:  {}", b.judgment.rationale);
        println!("  hint: {}", b.ai_suggestion.text);
        if let Some(h) = &b.historic_suggestion {
            println!("  past: {}", h.text);
        }
        for r in &b.anchor.ranges {
            println!("  cites: {:?}", char_slice(&draft.text, r.start, r.end));
        }
    }
    let met = bundles.iter().filter(|b| b.judgment.met).count();
    println!("\n{met}/{} rubric items judged met", bundles.len());

    let flipped = pipeline.flip_judgment(&bundles[0], draft, assignment).await?;
    println!("\nafter flip: met={} hint: {}", flipped.judgment.met, flipped.ai_suggestion.text);
    let again = pipeline.regenerate_feedback(&flipped, draft, assignment).await?;
    println!("regenerated: {} (history {})", again.ai_suggestion.text, again.history.len());
    Ok(())
}
