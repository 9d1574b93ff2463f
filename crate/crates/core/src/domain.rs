//! Shared vocabulary: assignments, rubric items, drafts, and study conditions.
//!
//! Everything here is immutable after load and validated on the way in.
//! Assignment catalogs are JSON documents; draft corpora are line-delimited
//! JSON with one draft record per line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use num_rational::Ratio;
use num_traits::Zero;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::DomainError;

/// Number of instructor-provided exemplar questions used for few-shot feedback.
pub const EXEMPLAR_COUNT: usize = 3;

/// A nonnegative rational rubric weight.
///
/// Accepted on the wire as a JSON integer, a finite decimal (`0.25`), or a
/// string holding either form or a fraction (`"3/8"`). Decimals are converted
/// exactly from their textual form, never through `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Ratio<u64>);

impl Weight {
    pub fn new(numer: u64, denom: u64) -> Result<Self, DomainError> {
        if denom == 0 {
            return Err(DomainError::InvalidWeight(format!("{numer}/0")));
        }
        Ok(Weight(Ratio::new(numer, denom)))
    }

    pub fn integer(value: u64) -> Self {
        Weight(Ratio::from_integer(value))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::integer(1)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Weight {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || DomainError::InvalidWeight(s.to_string());
        if s.starts_with('-') {
            return Err(DomainError::NegativeWeight(s.to_string()));
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Weight::new(n, d);
        }
        match s.split_once('.') {
            None => s.parse::<u64>().map(Weight::integer).map_err(|_| bad()),
            Some((int, frac)) => {
                if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
                let denom = 10u64.pow(frac.len() as u32);
                let frac: u64 = frac.parse().map_err(|_| bad())?;
                let numer = int
                    .checked_mul(denom)
                    .and_then(|v| v.checked_add(frac))
                    .ok_or_else(bad)?;
                Weight::new(numer, denom)
            }
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if *self.0.denom() == 1 {
            serializer.serialize_u64(*self.0.numer())
        } else {
            serializer.collect_str(self)
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        let text = match &value {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            other => return Err(de::Error::custom(format!("invalid weight: {other}"))),
        };
        text.parse().map_err(de::Error::custom)
    }
}

/// Free-text clarifications attached to a rubric item when adapting it for
/// an LLM reader. None of the fields is required.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementNotes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_terms: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term_explanations: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptable_alternatives: Option<String>,
}

impl RefinementNotes {
    /// Labeled, non-empty note lines in a stable order.
    pub fn lines(&self) -> Vec<(&'static str, &str)> {
        [
            ("Course context", &self.context_terms),
            ("Term explanations", &self.term_explanations),
            ("Where it applies", &self.localization),
            ("Expected depth", &self.expected_depth),
            ("Acceptable alternatives", &self.acceptable_alternatives),
        ]
        .into_iter()
        .filter_map(|(label, v)| v.as_deref().filter(|s| !s.trim().is_empty()).map(|s| (label, s)))
        .collect()
    }
}

/// One gradable criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricItem {
    pub id: String,
    /// LLM-facing wording.
    pub text: String,
    #[serde(default)]
    pub weight: Weight,
    /// Constructive comments reused across students. Never praise.
    #[serde(default)]
    pub historic_feedback: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_notes: Option<RefinementNotes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    First,
    Final,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::First => "first",
            Stage::Final => "final",
        })
    }
}

fn both_stages() -> BTreeSet<Stage> {
    [Stage::First, Stage::Final].into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub id: String,
    pub prompt_text: String,
    pub rubric_items: Vec<RubricItem>,
    pub exemplar_questions: Vec<String>,
    #[serde(default = "both_stages")]
    pub draft_stages: BTreeSet<Stage>,
}

impl Assignment {
    pub fn rubric(&self, rubric_id: &str) -> Option<&RubricItem> {
        self.rubric_items.iter().find(|r| r.id == rubric_id)
    }

    pub fn rubric_ids(&self) -> impl Iterator<Item = &str> {
        self.rubric_items.iter().map(|r| r.id.as_str())
    }

    /// Checks every structural invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<(), DomainError> {
        let mut problems = Vec::new();
        if self.id.trim().is_empty() {
            problems.push("assignment id is empty".to_string());
        }
        if self.rubric_items.is_empty() {
            problems.push("assignment has no rubric items".to_string());
        }
        if self.exemplar_questions.len() != EXEMPLAR_COUNT {
            problems.push(format!(
                "expected {EXEMPLAR_COUNT} exemplar questions, found {}",
                self.exemplar_questions.len()
            ));
        }
        if self.exemplar_questions.iter().any(|q| q.trim().is_empty()) {
            problems.push("exemplar question is empty".to_string());
        }
        if self.draft_stages.is_empty() {
            problems.push("assignment offers no draft stages".to_string());
        }
        let mut seen = BTreeSet::new();
        for item in &self.rubric_items {
            if !seen.insert(item.id.as_str()) {
                problems.push(format!("duplicate rubric id {:?}", item.id));
            }
            if item.id.trim().is_empty() {
                problems.push("rubric id is empty".to_string());
            }
            if item.text.trim().is_empty() {
                problems.push(format!("rubric {:?} has empty text", item.id));
            }
            if item.historic_feedback.iter().any(|h| h.trim().is_empty()) {
                problems.push(format!("rubric {:?} has an empty historic feedback entry", item.id));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DomainError::Validation {
                assignment_id: self.id.clone(),
                problems,
            })
        }
    }

    /// Stable digest of the rubric set, used as a cache key component.
    pub fn rubric_version(&self) -> String {
        let json = serde_json::to_vec(&self.rubric_items).expect("rubric items serialize");
        crate::digest_hex(&json)[..16].to_string()
    }
}

/// Parses and validates one assignment document.
pub fn load_assignment(source: &str) -> Result<Assignment, DomainError> {
    let assignment: Assignment = serde_json::from_str(source).map_err(DomainError::Parse)?;
    assignment.validate()?;
    Ok(assignment)
}

pub fn serialize_assignment(assignment: &Assignment) -> String {
    serde_json::to_string_pretty(assignment).expect("assignment serializes")
}

/// All assignments known to a deployment, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    assignments: BTreeMap<String, Assignment>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CatalogDoc {
    Many { assignments: Vec<Assignment> },
    One(Assignment),
}

impl Catalog {
    pub fn new(assignments: impl IntoIterator<Item = Assignment>) -> Result<Self, DomainError> {
        let mut map = BTreeMap::new();
        for a in assignments {
            a.validate()?;
            if map.contains_key(&a.id) {
                return Err(DomainError::DuplicateAssignment(a.id));
            }
            map.insert(a.id.clone(), a);
        }
        Ok(Catalog { assignments: map })
    }

    /// Accepts either `{"assignments": [...]}` or a single assignment object.
    pub fn from_json(source: &str) -> Result<Self, DomainError> {
        match serde_json::from_str::<CatalogDoc>(source) {
            Ok(CatalogDoc::Many { assignments }) => Catalog::new(assignments),
            Ok(CatalogDoc::One(a)) => Catalog::new([a]),
            Err(_) => {
                // Re-parse strictly as a single assignment for a useful message.
                load_assignment(source).and_then(|a| Catalog::new([a]))
            }
        }
    }

    pub fn to_json(&self) -> String {
        let list: Vec<&Assignment> = self.assignments.values().collect();
        serde_json::to_string_pretty(&serde_json::json!({ "assignments": list })).expect("catalog serializes")
    }

    pub fn get(&self, id: &str) -> Option<&Assignment> {
        self.assignments.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assignment> {
        self.assignments.values()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssayDraft {
    pub essay_id: String,
    pub student_id: String,
    pub assignment_id: String,
    pub stage: Stage,
    pub text: String,
    pub submitted_at: DateTime<Utc>,
}

impl EssayDraft {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Parses a line-delimited draft corpus. Blank lines are skipped; any
/// malformed line aborts with its line number.
pub fn parse_drafts(source: &str) -> Result<Vec<EssayDraft>, DomainError> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DomainError::Record { line: i + 1, source: e })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    FeedbackWriter,
    Baseline,
}

impl Condition {
    pub fn is_assisted(self) -> bool {
        matches!(self, Condition::FeedbackWriter)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::FeedbackWriter => "feedback_writer",
            Condition::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum CorpusIssue {
    UnknownAssignment { essay_id: String, assignment_id: String },
    DuplicateSubmission { student_id: String, assignment_id: String, stage: Stage, essay_ids: Vec<String> },
    DuplicateEssayId { essay_id: String },
    EmptyText { essay_id: String },
    StageNotOffered { essay_id: String, stage: Stage },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub drafts_checked: usize,
    pub issues: Vec<CorpusIssue>,
}

impl CorpusReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Reports every defect in a draft corpus without stopping at the first.
pub fn validate_corpus(drafts: &[EssayDraft], catalog: &Catalog) -> CorpusReport {
    let mut issues = Vec::new();
    let mut by_slot: BTreeMap<(&str, &str, Stage), Vec<&str>> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for d in drafts {
        if !ids.insert(d.essay_id.as_str()) {
            issues.push(CorpusIssue::DuplicateEssayId { essay_id: d.essay_id.clone() });
        }
        match catalog.get(&d.assignment_id) {
            None => issues.push(CorpusIssue::UnknownAssignment {
                essay_id: d.essay_id.clone(),
                assignment_id: d.assignment_id.clone(),
            }),
            Some(a) if !a.draft_stages.contains(&d.stage) => issues.push(CorpusIssue::StageNotOffered {
                essay_id: d.essay_id.clone(),
                stage: d.stage,
            }),
            Some(_) => {}
        }
        if d.text.trim().is_empty() {
            issues.push(CorpusIssue::EmptyText { essay_id: d.essay_id.clone() });
        }
        by_slot
            .entry((d.student_id.as_str(), d.assignment_id.as_str(), d.stage))
            .or_default()
            .push(d.essay_id.as_str());
    }
    for ((student, assignment, stage), essays) in by_slot {
        if essays.len() > 1 {
            issues.push(CorpusIssue::DuplicateSubmission {
                student_id: student.to_string(),
                assignment_id: assignment.to_string(),
                stage,
                essay_ids: essays.into_iter().map(str::to_string).collect(),
            });
        }
    }
    CorpusReport { drafts_checked: drafts.len(), issues }
}
