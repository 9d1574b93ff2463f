//! Feedback quality analysis: split final feedback into idea units, link
//! units to rubric items, tag feedback types, rate binary quality metrics,
//! and aggregate per condition.

use std::collections::{BTreeMap, BTreeSet};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, Condition};
use crate::error::StatsError;
use crate::provider::{parse_json, prompts, StructuredClient};
use crate::stats::{welch_from_summaries, SummaryStats, WelchResult};

/// Non-exclusive feedback type tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FeedbackTypes {
    pub summary: bool,
    pub praise: bool,
    pub problem: bool,
    pub solution: bool,
}

impl FeedbackTypes {
    pub fn any(&self) -> bool {
        self.summary || self.praise || self.problem || self.solution
    }

    pub fn labels(&self) -> Vec<&'static str> {
        [("summary", self.summary), ("praise", self.praise), ("problem", self.problem), ("solution", self.solution)]
            .into_iter()
            .filter_map(|(label, on)| on.then_some(label))
            .collect()
    }
}

/// Independence and actionability are rated only for problem or solution
/// units about content.
pub fn metrics_applicable(types: &FeedbackTypes, prose_mechanics_only: bool) -> bool {
    (types.problem || types.solution) && !prose_mechanics_only
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QualityRatings {
    pub accuracy: u8,
    pub tone: u8,
    pub independence: Option<u8>,
    pub actionability: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub message_id: String,
    pub essay_id: String,
    /// Absent for freeform comments.
    #[serde(default)]
    pub rubric_id: Option<String>,
    pub text: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitFlag {
    /// Segmentation failed; the unit is the whole message.
    Unsegmented,
    /// No type applies.
    Unclassifiable,
    ClassificationFailed,
    RatingFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaUnit {
    pub message_id: String,
    pub essay_id: String,
    pub condition: Condition,
    pub index: usize,
    /// Exact slice of the message; unit texts concatenate to the message.
    pub text: String,
    pub rubric_links: BTreeSet<String>,
    pub types: Option<FeedbackTypes>,
    #[serde(default)]
    pub prose_mechanics_only: bool,
    pub quality: Option<QualityRatings>,
    #[serde(default)]
    pub flags: BTreeSet<UnitFlag>,
}

impl IdeaUnit {
    pub fn applicable(&self) -> bool {
        self.types.is_some_and(|t| metrics_applicable(&t, self.prose_mechanics_only))
    }

    /// Rated units carry independence and actionability exactly when those
    /// metrics apply, and have at least one type.
    pub fn ratings_consistent(&self) -> bool {
        match (&self.quality, &self.types) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(q), Some(t)) => {
                let applicable = self.applicable();
                t.any() && q.independence.is_some() == applicable && q.actionability.is_some() == applicable
            }
        }
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentReply {
    units: Vec<SegmentUnit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentUnit {
    text: String,
    #[serde(default)]
    rubric_ids: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyReply {
    summary: bool,
    praise: bool,
    problem: bool,
    solution: bool,
    prose_mechanics_only: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RateReply {
    accuracy: u8,
    tone: u8,
    #[serde(default)]
    independence: Option<u8>,
    #[serde(default)]
    actionability: Option<u8>,
}

/// Locates the unit texts in order within `message` and turns them into an
/// exact cover: each piece runs from its own start to the next piece's start,
/// and only whitespace may be left between located texts.
pub fn align_units(message: &str, unit_texts: &[&str]) -> Result<Vec<String>, String> {
    if unit_texts.is_empty() {
        return Err("no units returned".into());
    }
    let mut starts = Vec::with_capacity(unit_texts.len());
    let mut cursor = 0usize;
    for (i, raw) in unit_texts.iter().enumerate() {
        let needle = raw.trim();
        if needle.is_empty() {
            return Err(format!("unit {i} is empty"));
        }
        let found = message[cursor..].find(needle).ok_or_else(|| format!("unit {i} is not a verbatim, in-order part of the message"))?;
        let start = cursor + found;
        if !message[cursor..start].trim().is_empty() {
            return Err(format!("text before unit {i} is not covered by any unit"));
        }
        starts.push(start);
        cursor = start + needle.len();
    }
    if !message[cursor..].trim().is_empty() {
        return Err("text after the last unit is not covered".into());
    }
    starts[0] = 0;
    let mut pieces = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(message.len());
        pieces.push(message[start..end].to_string());
    }
    Ok(pieces)
}

/// Runs the feedback analysis steps against a provider.
#[derive(Clone)]
pub struct FeedbackAnalyzer {
    client: StructuredClient,
    concurrency: usize,
}

impl FeedbackAnalyzer {
    pub fn new(client: StructuredClient) -> Self {
        FeedbackAnalyzer { client, concurrency: 8 }
    }

    pub fn with_concurrency(mut self, concurrency: usize) -> Self {
        self.concurrency = concurrency.max(1);
        self
    }

    /// Splits `message` into idea units linked to rubric items. A provider
    /// failure yields one unit covering the whole message, flagged.
    pub async fn segment_and_link(&self, message: &FeedbackMessage, assignment: &Assignment) -> Vec<IdeaUnit> {
        let rubrics: Vec<(String, String)> =
            assignment.rubric_items.iter().map(|r| (r.id.clone(), r.text.clone())).collect();
        let known: BTreeSet<&str> = assignment.rubric_ids().collect();
        let text = message.text.as_str();
        let parse = |raw: &str| -> Result<Vec<(String, BTreeSet<String>)>, String> {
            let reply: SegmentReply = parse_json(raw)?;
            for unit in &reply.units {
                if let Some(bad) = unit.rubric_ids.iter().find(|id| !known.contains(id.as_str())) {
                    return Err(format!("unknown rubric id {bad:?}"));
                }
            }
            let texts: Vec<&str> = reply.units.iter().map(|u| u.text.as_str()).collect();
            let pieces = align_units(text, &texts)?;
            Ok(pieces
                .into_iter()
                .zip(reply.units.iter())
                .map(|(piece, unit)| (piece, unit.rubric_ids.iter().cloned().collect()))
                .collect())
        };
        let request = prompts::segment_request(text, message.rubric_id.as_deref(), &rubrics);
        let unit = |index: usize, text: String, links: BTreeSet<String>| IdeaUnit {
            message_id: message.message_id.clone(),
            essay_id: message.essay_id.clone(),
            condition: message.condition,
            index,
            text,
            rubric_links: links,
            types: None,
            prose_mechanics_only: false,
            quality: None,
            flags: BTreeSet::new(),
        };
        match self.client.call(request, parse).await {
            Ok(pieces) => pieces.into_iter().enumerate().map(|(i, (text, links))| unit(i, text, links)).collect(),
            Err(e) => {
                tracing::warn!(message_id = %message.message_id, error = %e, "segmentation failed");
                let links = message.rubric_id.iter().filter(|id| known.contains(id.as_str())).cloned().collect();
                let mut whole = unit(0, text.to_string(), links);
                whole.flags.insert(UnitFlag::Unsegmented);
                vec![whole]
            }
        }
    }

    /// Sets the unit's type tags. No applicable type marks it unclassifiable.
    pub async fn classify_type(&self, mut unit: IdeaUnit) -> IdeaUnit {
        let parse = |raw: &str| parse_json::<ClassifyReply>(raw);
        match self.client.call(prompts::classify_request(unit.text.trim()), parse).await {
            Ok(reply) => {
                let types = FeedbackTypes {
                    summary: reply.summary,
                    praise: reply.praise,
                    problem: reply.problem,
                    solution: reply.solution,
                };
                if !types.any() {
                    unit.flags.insert(UnitFlag::Unclassifiable);
                }
                unit.types = Some(types);
                unit.prose_mechanics_only = reply.prose_mechanics_only;
            }
            Err(e) => {
                tracing::warn!(message_id = %unit.message_id, index = unit.index, error = %e, "classification failed");
                unit.flags.insert(UnitFlag::ClassificationFailed);
            }
        }
        unit
    }

    /// Rates a classified unit. Metrics that do not apply are never stored,
    /// whatever the provider returns for them.
    pub async fn rate_quality(&self, mut unit: IdeaUnit) -> IdeaUnit {
        let Some(types) = unit.types.filter(FeedbackTypes::any) else {
            return unit;
        };
        let applicable = metrics_applicable(&types, unit.prose_mechanics_only);
        let parse = |raw: &str| -> Result<QualityRatings, String> {
            let reply: RateReply = parse_json(raw)?;
            let binary = |name: &str, v: u8| if v <= 1 { Ok(v) } else { Err(format!("{name} must be 0 or 1")) };
            let accuracy = binary("accuracy", reply.accuracy)?;
            let tone = binary("tone", reply.tone)?;
            let (independence, actionability) = if applicable {
                let i = reply.independence.ok_or("independence is required for this unit")?;
                let a = reply.actionability.ok_or("actionability is required for this unit")?;
                (Some(binary("independence", i)?), Some(binary("actionability", a)?))
            } else {
                (None, None)
            };
            Ok(QualityRatings { accuracy, tone, independence, actionability })
        };
        let request = prompts::rate_request(unit.text.trim(), types, unit.prose_mechanics_only);
        match self.client.call(request, parse).await {
            Ok(q) => unit.quality = Some(q),
            Err(e) => {
                tracing::warn!(message_id = %unit.message_id, index = unit.index, error = %e, "rating failed");
                unit.flags.insert(UnitFlag::RatingFailed);
            }
        }
        unit
    }

    /// Segmentation, classification and rating for one message.
    pub async fn analyze_message(&self, message: &FeedbackMessage, assignment: &Assignment) -> Vec<IdeaUnit> {
        let mut out = Vec::new();
        for unit in self.segment_and_link(message, assignment).await {
            let unit = self.classify_type(unit).await;
            out.push(self.rate_quality(unit).await);
        }
        out
    }

    /// Analyzes messages concurrently; output keeps input order.
    pub async fn analyze_all<'a, F>(&self, messages: &'a [FeedbackMessage], assignment_for: F) -> Vec<IdeaUnit>
    where
        F: Fn(&FeedbackMessage) -> Option<&'a Assignment>,
    {
        let batches: Vec<Vec<IdeaUnit>> = stream::iter(messages.iter().map(|m| {
                let assignment = assignment_for(m);
                async move {
                    match assignment {
                        Some(a) => self.analyze_message(m, a).await,
                        None => {
                            tracing::warn!(message_id = %m.message_id, "no assignment for message; skipped");
                            Vec::new()
                        }
                    }
                }
            }).collect::<Vec<_>>())
            .buffered(self.concurrency)
            .collect()
            .await;
        batches.into_iter().flatten().collect()
    }
}

/// All idea units of one essay's final feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayUnits {
    pub essay_id: String,
    pub condition: Condition,
    pub rubric_count: usize,
    pub units: Vec<IdeaUnit>,
}

impl EssayUnits {
    pub fn word_count(&self) -> usize {
        self.units.iter().map(IdeaUnit::word_count).sum()
    }

    /// Distinct rubric items linked by at least one unit, over all items.
    pub fn rubric_coverage(&self) -> f64 {
        if self.rubric_count == 0 {
            return 0.0;
        }
        let linked: BTreeSet<&str> =
            self.units.iter().flat_map(|u| u.rubric_links.iter().map(String::as_str)).collect();
        linked.len() as f64 / self.rubric_count as f64
    }

    fn type_count(&self, pick: fn(&FeedbackTypes) -> bool) -> usize {
        self.units.iter().filter(|u| u.types.as_ref().is_some_and(pick)).count()
    }
}

/// Groups units by essay. `essays` lists every essay with its condition and
/// rubric count, so essays without feedback still appear.
pub fn group_units(essays: &[(String, Condition, usize)], units: &[IdeaUnit]) -> Vec<EssayUnits> {
    let mut by_essay: BTreeMap<&str, Vec<IdeaUnit>> = BTreeMap::new();
    for unit in units {
        by_essay.entry(unit.essay_id.as_str()).or_default().push(unit.clone());
    }
    essays
        .iter()
        .map(|(essay_id, condition, rubric_count)| EssayUnits {
            essay_id: essay_id.clone(),
            condition: *condition,
            rubric_count: *rubric_count,
            units: by_essay.remove(essay_id.as_str()).unwrap_or_default(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionAggregate {
    pub essays: usize,
    pub units: usize,
    /// Whitespace-delimited words per essay.
    pub word_count: SummaryStats,
    pub rubric_coverage: SummaryStats,
    /// Units of each type per essay.
    pub summary: SummaryStats,
    pub praise: SummaryStats,
    pub problem: SummaryStats,
    pub solution: SummaryStats,
    /// Metric values over rated units where the metric applies.
    pub accuracy: SummaryStats,
    pub tone: SummaryStats,
    pub independence: SummaryStats,
    pub actionability: SummaryStats,
}

impl ConditionAggregate {
    /// Metric rows in report order.
    pub fn rows(&self) -> [(&'static str, SummaryStats); 10] {
        [
            ("word_count", self.word_count),
            ("rubric_coverage", self.rubric_coverage),
            ("summary", self.summary),
            ("praise", self.praise),
            ("problem", self.problem),
            ("solution", self.solution),
            ("accuracy", self.accuracy),
            ("tone", self.tone),
            ("independence", self.independence),
            ("actionability", self.actionability),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalAggregate {
    pub conditions: BTreeMap<Condition, ConditionAggregate>,
}

fn aggregate_condition(essays: &[&EssayUnits]) -> ConditionAggregate {
    let per_essay = |f: &dyn Fn(&EssayUnits) -> f64| -> SummaryStats {
        SummaryStats::from_values(&essays.iter().map(|e| f(e)).collect::<Vec<_>>())
    };
    let rated: Vec<&QualityRatings> = essays.iter().flat_map(|e| e.units.iter()).filter_map(|u| u.quality.as_ref()).collect();
    let metric = |f: &dyn Fn(&QualityRatings) -> Option<u8>| -> SummaryStats {
        SummaryStats::from_values(&rated.iter().filter_map(|q| f(q)).map(f64::from).collect::<Vec<_>>())
    };
    ConditionAggregate {
        essays: essays.len(),
        units: essays.iter().map(|e| e.units.len()).sum(),
        word_count: per_essay(&|e| e.word_count() as f64),
        rubric_coverage: per_essay(&|e| e.rubric_coverage()),
        summary: per_essay(&|e| e.type_count(|t| t.summary) as f64),
        praise: per_essay(&|e| e.type_count(|t| t.praise) as f64),
        problem: per_essay(&|e| e.type_count(|t| t.problem) as f64),
        solution: per_essay(&|e| e.type_count(|t| t.solution) as f64),
        accuracy: metric(&|q| Some(q.accuracy)),
        tone: metric(&|q| Some(q.tone)),
        independence: metric(&|q| q.independence),
        actionability: metric(&|q| q.actionability),
    }
}

/// Per-condition aggregates. Independent of essay order.
pub fn aggregate(essays: &[EssayUnits]) -> EvalAggregate {
    let mut groups: BTreeMap<Condition, Vec<&EssayUnits>> = BTreeMap::new();
    for essay in essays {
        groups.entry(essay.condition).or_default().push(essay);
    }
    EvalAggregate { conditions: groups.into_iter().map(|(c, es)| (c, aggregate_condition(&es))).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub welch: Option<WelchResult>,
    pub a: SummaryStats,
    pub b: SummaryStats,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Means, spreads, differences and Welch statistics per metric. Both
/// conditions need at least two essays; metric rows with fewer than two
/// observations on a side carry no test.
pub fn compare_conditions(a: &ConditionAggregate, b: &ConditionAggregate) -> Result<ComparisonReport, StatsError> {
    if a.essays < 2 || b.essays < 2 {
        return Err(StatsError::TooFewObservations(a.essays, b.essays));
    }
    let rows = a
        .rows()
        .into_iter()
        .zip(b.rows())
        .map(|((metric, sa), (_, sb))| ComparisonRow {
            metric: metric.to_string(),
            welch: welch_from_summaries(sa, sb).ok(),
            a: sa,
            b: sb,
            difference: sa.mean - sb.mean,
        })
        .collect();
    Ok(ComparisonReport { rows })
}
