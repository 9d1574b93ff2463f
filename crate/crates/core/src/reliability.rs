//! Agreement of the feedback analyzer with hand-labeled gold data: a
//! double-annotated message set for segmentation, linking and ratings, and
//! single labeled examples for the type and quality taggers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::Assignment;
use crate::error::StatsError;
use crate::quality::{FeedbackAnalyzer, FeedbackMessage, FeedbackTypes, IdeaUnit, QualityRatings};
use crate::stats::{binary_confusion, cohen_kappa, KappaResult};
use crate::text::normalize_for_match;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldUnit {
    pub text: String,
    #[serde(default)]
    pub rubric_links: BTreeSet<String>,
    pub types: FeedbackTypes,
    #[serde(default)]
    pub prose_mechanics_only: bool,
    pub quality: QualityRatings,
}

/// One message labeled independently by two annotators, plus the
/// adjudicated labels used as gold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldMessage {
    pub message: FeedbackMessage,
    pub units: Vec<GoldUnit>,
    #[serde(default)]
    pub annotators: Vec<Vec<GoldUnit>>,
}

pub const TYPE_NAMES: [&str; 4] = ["summary", "praise", "problem", "solution"];
pub const METRIC_NAMES: [&str; 4] = ["accuracy", "tone", "independence", "actionability"];

pub fn type_flag(types: &FeedbackTypes, name: &str) -> Option<bool> {
    match name {
        "summary" => Some(types.summary),
        "praise" => Some(types.praise),
        "problem" => Some(types.problem),
        "solution" => Some(types.solution),
        _ => None,
    }
}

pub fn metric_value(q: &QualityRatings, name: &str) -> Option<u8> {
    match name {
        "accuracy" => Some(q.accuracy),
        "tone" => Some(q.tone),
        "independence" => q.independence,
        "actionability" => q.actionability,
        _ => None,
    }
}

/// The labels of one unit as seen by agreement scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitLabels {
    pub key: String,
    pub links: BTreeSet<String>,
    pub types: Option<FeedbackTypes>,
    pub quality: Option<QualityRatings>,
}

impl From<&GoldUnit> for UnitLabels {
    fn from(u: &GoldUnit) -> Self {
        UnitLabels {
            key: normalize_for_match(&u.text),
            links: u.rubric_links.clone(),
            types: Some(u.types),
            quality: Some(u.quality),
        }
    }
}

impl From<&IdeaUnit> for UnitLabels {
    fn from(u: &IdeaUnit) -> Self {
        UnitLabels { key: normalize_for_match(&u.text), links: u.rubric_links.clone(), types: u.types, quality: u.quality }
    }
}

/// Pairs units with equal normalized text, in order.
fn match_units<'a>(a: &'a [UnitLabels], b: &'a [UnitLabels]) -> Vec<(&'a UnitLabels, &'a UnitLabels)> {
    let mut used = vec![false; b.len()];
    let mut pairs = Vec::new();
    for x in a {
        if let Some(j) = (0..b.len()).find(|&j| !used[j] && b[j].key == x.key) {
            used[j] = true;
            pairs.push((x, &b[j]));
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub messages: usize,
    pub reference_units: usize,
    pub candidate_units: usize,
    /// Units with the same text and the same rubric links.
    pub matched_units: usize,
    /// matched / sum over messages of max(reference units, candidate units).
    pub segmentation_accuracy: f64,
    pub type_kappa: BTreeMap<String, KappaResult>,
    pub metric_kappa: BTreeMap<String, KappaResult>,
}

impl ReliabilityReport {
    /// Smallest defined metric kappa, if every metric has one.
    pub fn min_metric_kappa(&self) -> Option<f64> {
        METRIC_NAMES
            .iter()
            .map(|m| self.metric_kappa.get(*m).and_then(|k| k.kappa))
            .try_fold(f64::INFINITY, |acc, k| k.map(|k| acc.min(k)))
    }
}

/// Agreement between two labelings of the same messages. Type and metric
/// kappas are computed over text-matched units where both sides have a value.
pub fn agreement(per_message: &[(Vec<UnitLabels>, Vec<UnitLabels>)]) -> Result<ReliabilityReport, StatsError> {
    let (mut reference_units, mut candidate_units, mut matched, mut denominator) = (0, 0, 0, 0);
    let mut type_pairs: BTreeMap<&str, Vec<(bool, bool)>> = BTreeMap::new();
    let mut metric_pairs: BTreeMap<&str, Vec<(bool, bool)>> = BTreeMap::new();
    for (reference, candidate) in per_message {
        reference_units += reference.len();
        candidate_units += candidate.len();
        denominator += reference.len().max(candidate.len());
        for (r, c) in match_units(reference, candidate) {
            if r.links == c.links {
                matched += 1;
            }
            if let (Some(rt), Some(ct)) = (&r.types, &c.types) {
                for name in TYPE_NAMES {
                    type_pairs.entry(name).or_default().push((type_flag(rt, name).unwrap(), type_flag(ct, name).unwrap()));
                }
            }
            if let (Some(rq), Some(cq)) = (&r.quality, &c.quality) {
                for name in METRIC_NAMES {
                    if let (Some(x), Some(y)) = (metric_value(rq, name), metric_value(cq, name)) {
                        metric_pairs.entry(name).or_default().push((x == 1, y == 1));
                    }
                }
            }
        }
    }
    let kappas = |pairs: BTreeMap<&str, Vec<(bool, bool)>>| -> Result<BTreeMap<String, KappaResult>, StatsError> {
        pairs.into_iter().map(|(k, v)| Ok((k.to_string(), cohen_kappa(&binary_confusion(v))?))).collect()
    };
    Ok(ReliabilityReport {
        messages: per_message.len(),
        reference_units,
        candidate_units,
        matched_units: matched,
        segmentation_accuracy: if denominator == 0 { 1.0 } else { matched as f64 / denominator as f64 },
        type_kappa: kappas(type_pairs)?,
        metric_kappa: kappas(metric_pairs)?,
    })
}

/// Analyzer output against the adjudicated gold labels.
pub fn evaluate_against_gold(gold: &[GoldMessage], predicted: &[IdeaUnit]) -> Result<ReliabilityReport, StatsError> {
    let mut by_message: BTreeMap<&str, Vec<&IdeaUnit>> = BTreeMap::new();
    for u in predicted {
        by_message.entry(u.message_id.as_str()).or_default().push(u);
    }
    let pairs: Vec<_> = gold
        .iter()
        .map(|g| {
            let mut units = by_message.remove(g.message.message_id.as_str()).unwrap_or_default();
            units.sort_by_key(|u| u.index);
            (g.units.iter().map(UnitLabels::from).collect(), units.into_iter().map(UnitLabels::from).collect())
        })
        .collect();
    agreement(&pairs)
}

/// Agreement between the first two annotators of every message that has two.
pub fn inter_annotator(gold: &[GoldMessage]) -> Result<ReliabilityReport, StatsError> {
    let pairs: Vec<_> = gold
        .iter()
        .filter(|g| g.annotators.len() >= 2)
        .map(|g| {
            (
                g.annotators[0].iter().map(UnitLabels::from).collect(),
                g.annotators[1].iter().map(UnitLabels::from).collect(),
            )
        })
        .collect();
    agreement(&pairs)
}

/// Runs the analyzer on the gold messages and scores it.
pub async fn run_gold_evaluation<'a, F>(
    analyzer: &FeedbackAnalyzer,
    gold: &'a [GoldMessage],
    assignment_for: F,
) -> Result<(Vec<IdeaUnit>, ReliabilityReport), StatsError>
where
    F: Fn(&FeedbackMessage) -> Option<&'a Assignment>,
{
    let messages: Vec<FeedbackMessage> = gold.iter().map(|g| g.message.clone()).collect();
    let units = analyzer.analyze_all(&messages, |m| assignment_for(m)).await;
    let report = evaluate_against_gold(gold, &units)?;
    Ok((units, report))
}

/// One labeled example for a single type tag or quality metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledExample {
    pub text: String,
    /// A type name or a metric name.
    pub label: String,
    pub expected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleOutcome {
    pub text: String,
    pub label: String,
    pub expected: bool,
    /// None when the tagger produced no value for this label.
    pub predicted: Option<bool>,
}

impl ExampleOutcome {
    pub fn correct(&self) -> bool {
        self.predicted == Some(self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub outcomes: Vec<ExampleOutcome>,
    pub correct: usize,
    pub accuracy: f64,
}

/// Classifies and rates each example as a standalone unit and checks the
/// labeled tag.
pub async fn tag_examples(analyzer: &FeedbackAnalyzer, examples: &[LabeledExample]) -> ExampleReport {
    let mut outcomes = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let unit = IdeaUnit {
            message_id: format!("example-{i}"),
            essay_id: String::new(),
            condition: crate::domain::Condition::FeedbackWriter,
            index: 0,
            text: ex.text.clone(),
            rubric_links: BTreeSet::new(),
            types: None,
            prose_mechanics_only: false,
            quality: None,
            flags: BTreeSet::new(),
        };
        let unit = analyzer.classify_type(unit).await;
        let predicted = if TYPE_NAMES.contains(&ex.label.as_str()) {
            unit.types.and_then(|t| type_flag(&t, &ex.label))
        } else {
            let unit = analyzer.rate_quality(unit).await;
            unit.quality.and_then(|q| metric_value(&q, &ex.label)).map(|v| v == 1)
        };
        outcomes.push(ExampleOutcome { text: ex.text.clone(), label: ex.label.clone(), expected: ex.expected, predicted });
    }
    let correct = outcomes.iter().filter(|o| o.correct()).count();
    let accuracy = if outcomes.is_empty() { 0.0 } else { correct as f64 / outcomes.len() as f64 };
    ExampleReport { outcomes, correct, accuracy }
}
