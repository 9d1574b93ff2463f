//! Drives the grading service through its HTTP API in-process: imports the
//! fixture drafts, grades one assisted and one baseline essay, and reads
//! the analytics back.
//!
//! cargo run --example grading_service
//!
//! To run the same API as a server, see `service.toml` next to this file:
//! cargo run -- serve --config crates/core/examples/service.toml

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use rubric_feedback::domain::Catalog;
use rubric_feedback::pipeline::Pipeline;
use rubric_feedback::provider::{MockProvider, ProviderConfig, StructuredClient};
use rubric_feedback::service::{http, GradingService, Roster};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> std::io::Result<String> {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/").to_string() + name)
}

async fn call(app: &axum::Router, method: Method, uri: &str, body: Value) -> anyhow::Result<Value> {
    let request = Request::builder()
        .method(method.clone())
        .uri(uri)
        .header("content-type", "application/json")
        .body(if body.is_null() { Body::empty() } else { Body::from(body.to_string()) })?;
    let response = app.clone().oneshot(request).await?;
    let status = response.status();
    let bytes = axum::body::to_bytes(response.into_body(), usize::MAX).await?;
    let value: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method} {uri} -> {status}");
    Ok(value)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let client = StructuredClient::new(Arc::new(MockProvider::new(3)), ProviderConfig::default())?;
    let service = GradingService::builder(Catalog::from_json(&fixture("catalog.json")?)?, Roster::from_json(&fixture("roster.json")?)?)
        .pipeline(Pipeline::new(client))
        .reference_base("https://example.edu/rubrics")
        .build()?;
    let app = http::router(Arc::new(service));

    let import = Request::post("/drafts/import").body(Body::from(fixture("drafts.jsonl")?))?;
    let report = axum::body::to_bytes(app.clone().oneshot(import).await?.into_body(), usize::MAX).await?;
    let report: Value = serde_json::from_slice(&report)?;
    println!("imported {} drafts", report["persisted"]);

    // stu002 is assisted on wa1; stu001 is baseline.
    for essay in ["wa1-stu002-first", "wa1-stu001-first"] {
        let view = call(&app, Method::POST, "/sessions", json!({"grader_id": "head-ta", "essay_id": essay})).await?;
        let sid = view["session"]["session_id"].as_str().unwrap_or_default().to_string();
        println!("  condition {}, {} rubric boxes", view["session"]["condition"], view["session"]["boxes"].as_array().map_or(0, Vec::len));
        let actions = format!("/sessions/{sid}/actions");
        let first_box = &view["session"]["boxes"][0];
        if first_box["mode"] == "assisted" {
            println!("  first suggestion: {}", first_box["ai_suggestion"]["text"]);
            call(&app, Method::POST, &actions, json!({"type": "adopt_ai", "rubric_id": first_box["rubric_id"]})).await?;
            let second = &view["session"]["boxes"][1]["rubric_id"];
            call(&app, Method::POST, &actions, json!({"type": "flip", "rubric_id": second})).await?;
        } else {
            let refused = call(&app, Method::POST, &actions, json!({"type": "flip", "rubric_id": first_box["rubric_id"]})).await?;
            println!("  {}", refused["error"]);
            call(&app, Method::POST, &actions, json!({"type": "edit_final_text", "target": {"rubric": first_box["rubric_id"]}, "text": "State the incidence of the tax."})).await?;
        }
        call(&app, Method::POST, &actions, json!({"type": "add_freeform", "ranges": [{"start": 0, "end": 30}], "text": "Strong opening."})).await?;
        call(&app, Method::POST, &actions, json!({"type": "set_score", "score": 0.7})).await?;
        let export = call(&app, Method::POST, &format!("/sessions/{sid}/finalize"), Value::Null).await?;
        for c in export["comments"].as_array().into_iter().flatten() {
            println!("  exported {}: {}", c["target"], c["text"]);
        }
        let summary = call(&app, Method::GET, &format!("/analytics/essays/{essay}"), Value::Null).await?;
        println!("  summary: {summary}");
    }
    let adoption = call(&app, Method::GET, "/analytics/adoption", Value::Null).await?;
    println!("{}", serde_json::to_string_pretty(&adoption)?);
    Ok(())
}
