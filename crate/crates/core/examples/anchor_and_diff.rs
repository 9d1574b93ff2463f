//! Grounds quoted sentences in a draft, diffs a revision against it and
//! carries the highlight over to the revised text.
//!
//! cargo run --example anchor_and_diff

use rubric_feedback::text::{char_slice, compute_diff, ground_quotes, reanchor, segment_sentences};
use rubric_feedback::{EssayDraft, Stage};

fn draft(essay_id: &str, stage: Stage, text: &str) -> EssayDraft {
    EssayDraft {
        essay_id: essay_id.into(),
        student_id: "demo".into(),
        assignment_id: "wa1".into(),
        stage,
        text: text.into(),
        submitted_at: chrono::Utc::now(),
    }
}

fn main() -> anyhow::Result<()> {
    let first = draft(
        "demo-first",
        Stage::First,
        "A per-unit tax shifts the supply curve up. Prices rise for buyers. Sellers keep less per unit sold. \
         The deadweight loss is the lost surplus.",
    );
    let revised = draft(
        "demo-final",
        Stage::Final,
        "A per-unit tax shifts the supply curve up. Buyers pay more because demand is inelastic. \
         Sellers keep less per unit sold. The deadweight loss is the lost surplus.",
    );

    for s in segment_sentences(&first.text) {
        println!("sentence {:>3}..{:<3} {}", s.start, s.end, char_slice(&first.text, s.start, s.end));
    }

    // A slightly misquoted sentence still grounds by fuzzy match.
    let anchor = ground_quotes(&first, &["sellers keep less per unit sold", "The dead weight loss is the lost surplus."]);
    println!("\nanchor on first draft: {:?} {:?}", anchor.status, anchor.ranges);

    let diff = compute_diff(&first, &revised)?;
    println!("\ndiff:");
    for seg in &diff.segments {
        println!("  {:?}: {:?}", seg.kind, seg.text);
    }

    let moved = reanchor(&anchor, &diff)?;
    println!("\nanchor on final draft: {:?} {:?}", moved.status, moved.ranges);
    for r in &moved.ranges {
        println!("  -> {:?}", char_slice(&revised.text, r.start, r.end));
    }
    Ok(())
}
