//! Rubric-aligned, human-in-the-loop feedback for knowledge-intensive essays.
//!
//! An LLM pipeline proposes, per rubric item, the relevant sentences of a
//! draft, a met/not-met judgment with its rationale, and a hint-framed
//! feedback suggestion. Graders adopt, edit, flip, regenerate or dismiss each
//! suggestion in a grading session; students only ever see text a grader
//! explicitly inserted. Offline tooling scores essays against rubrics, audits
//! feedback quality, and summarizes grader behavior from the event log.
//!
//! | module | contents |
//! |---|---|
//! | [`domain`] | assignments, rubric items, drafts, conditions |
//! | [`text`] | segmentation, quote grounding, anchors, diffs, re-anchoring |
//! | [`provider`] | LLM client trait, HTTP client, deterministic mock, structured calls |
//! | [`pipeline`] | extract → judge → generate, flip and regenerate |
//! | [`scorer`] | rubric scoring, weighted totals, agreement with gold labels |
//! | [`quality`] | idea-unit segmentation, type and quality tagging, aggregates |
//! | [`reliability`] | analyzer agreement with gold labels and labeled examples |
//! | [`stats`] | Cohen's kappa, Welch's t-test, summary statistics |
//! | [`events`], [`analytics`] | append-only grading log and derived reports |
//! | [`service`] | sessions, condition gating, persistence, export, HTTP API |

pub mod analytics;
pub mod domain;
pub mod error;
pub mod events;
pub mod pipeline;
pub mod provider;
pub mod quality;
pub mod reliability;
pub mod scorer;
pub mod service;
pub mod stats;
pub mod text;

pub use domain::{Assignment, Catalog, Condition, EssayDraft, RubricItem, Stage, Weight};
pub use error::{
    AnchorError, DomainError, EventLogError, PipelineError, ProviderError, ScoringError, ServiceError, StatsError,
};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
