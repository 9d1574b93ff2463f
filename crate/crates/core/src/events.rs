//! Append-only grading event log.
//!
//! Every grader action is one event. Event ids count up from 1 per essay and
//! timestamps never move backwards within an essay; small backwards steps
//! within the configured clock skew are clamped to the previous timestamp.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{Condition, Stage};
use crate::error::EventLogError;
use crate::pipeline::FeedbackSuggestion;
use crate::text::SpanAnchor;

pub const DEFAULT_CLOCK_SKEW_MS: i64 = 2_000;

/// The feedback item an action applies to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The feedback box of a rubric item.
    Rubric(String),
    /// A freeform comment.
    Comment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Open,
    Close,
    FlipJudgment,
    AddHistoric,
    AddAiConstructive,
    AddAiPositive,
    AddAdditionalFeedback,
    EditFinalText,
    RepositionHighlight,
    Regenerate,
    DeleteFeedback,
    SetScore,
}

/// Action with the payload needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload", rename_all = "snake_case")]
pub enum EventAction {
    Open { condition: Condition, stage: Stage, rubric_ids: Vec<String> },
    Close { score: Option<f64>, comments: usize },
    FlipJudgment { rubric_id: String, met: bool, suggestion: FeedbackSuggestion, stale: bool },
    AddHistoric { rubric_id: String, text: String },
    AddAiConstructive { rubric_id: String, text: String },
    AddAiPositive { rubric_id: String, text: String },
    AddAdditionalFeedback { comment_id: String, anchor: SpanAnchor, text: String },
    EditFinalText { target: Target, text: String },
    RepositionHighlight { target: Target, anchor: SpanAnchor },
    Regenerate { rubric_id: String, suggestion: FeedbackSuggestion },
    DeleteFeedback { target: Target },
    SetScore { score: f64 },
}

impl EventAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            EventAction::Open { .. } => ActionKind::Open,
            EventAction::Close { .. } => ActionKind::Close,
            EventAction::FlipJudgment { .. } => ActionKind::FlipJudgment,
            EventAction::AddHistoric { .. } => ActionKind::AddHistoric,
            EventAction::AddAiConstructive { .. } => ActionKind::AddAiConstructive,
            EventAction::AddAiPositive { .. } => ActionKind::AddAiPositive,
            EventAction::AddAdditionalFeedback { .. } => ActionKind::AddAdditionalFeedback,
            EventAction::EditFinalText { .. } => ActionKind::EditFinalText,
            EventAction::RepositionHighlight { .. } => ActionKind::RepositionHighlight,
            EventAction::Regenerate { .. } => ActionKind::Regenerate,
            EventAction::DeleteFeedback { .. } => ActionKind::DeleteFeedback,
            EventAction::SetScore { .. } => ActionKind::SetScore,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingEvent {
    pub event_id: u64,
    pub timestamp: DateTime<Utc>,
    pub grader_id: String,
    pub essay_id: String,
    pub assignment_id: String,
    pub session_id: String,
    #[serde(flatten)]
    pub action: EventAction,
}

impl GradingEvent {
    pub fn kind(&self) -> ActionKind {
        self.action.kind()
    }
}

#[derive(Debug, Clone, Copy)]
struct EssayCursor {
    last_id: u64,
    last_timestamp: DateTime<Utc>,
}

/// In-memory, append-only event log with per-essay ordering checks.
#[derive(Debug, Clone)]
pub struct EventLog {
    events: Vec<GradingEvent>,
    cursors: HashMap<String, EssayCursor>,
    clock_skew: Duration,
}

impl Default for EventLog {
    fn default() -> Self {
        EventLog::new(Duration::milliseconds(DEFAULT_CLOCK_SKEW_MS))
    }
}

impl EventLog {
    pub fn new(clock_skew: Duration) -> Self {
        EventLog { events: Vec::new(), cursors: HashMap::new(), clock_skew }
    }

    /// Rebuilds a log from stored events, re-checking every append.
    pub fn from_events(events: impl IntoIterator<Item = GradingEvent>, clock_skew: Duration) -> Result<Self, EventLogError> {
        let mut log = EventLog::new(clock_skew);
        for e in events {
            log.append(e)?;
        }
        Ok(log)
    }

    /// The id the next event for `essay_id` must carry.
    pub fn next_event_id(&self, essay_id: &str) -> u64 {
        self.cursors.get(essay_id).map_or(1, |c| c.last_id + 1)
    }

    /// Checks `event` against the essay's sequence and returns it as it
    /// would be stored (timestamp clamped), without appending.
    pub fn check(&self, mut event: GradingEvent) -> Result<GradingEvent, EventLogError> {
        let expected = self.next_event_id(&event.essay_id);
        if event.event_id != expected {
            return Err(EventLogError::OutOfOrder { essay_id: event.essay_id, expected, got: event.event_id });
        }
        if let Some(cursor) = self.cursors.get(&event.essay_id) {
            if event.timestamp < cursor.last_timestamp {
                let behind = cursor.last_timestamp - event.timestamp;
                if behind > self.clock_skew {
                    return Err(EventLogError::TimestampRegression {
                        essay_id: event.essay_id,
                        seconds: behind.num_milliseconds() as f64 / 1000.0,
                    });
                }
                event.timestamp = cursor.last_timestamp;
            }
        }
        Ok(event)
    }

    pub fn append(&mut self, event: GradingEvent) -> Result<&GradingEvent, EventLogError> {
        let event = self.check(event)?;
        self.cursors
            .insert(event.essay_id.clone(), EssayCursor { last_id: event.event_id, last_timestamp: event.timestamp });
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    pub fn events(&self) -> &[GradingEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn for_essay<'a>(&'a self, essay_id: &'a str) -> impl Iterator<Item = &'a GradingEvent> + 'a {
        self.events.iter().filter(move |e| e.essay_id == essay_id)
    }
}

/// Parses a line-delimited event file.
pub fn parse_events(source: &str) -> Result<Vec<GradingEvent>, EventLogError> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EventLogError::Parse { line: i + 1, source: e }))
        .collect()
}

pub fn to_jsonl(events: &[GradingEvent]) -> String {
    events.iter().map(|e| serde_json::to_string(e).expect("events serialize") + "\n").collect()
}

/// One append-only JSONL file per assignment under a directory.
#[derive(Debug, Clone)]
pub struct EventFiles {
    dir: PathBuf,
}

impl EventFiles {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, EventLogError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(EventFiles { dir })
    }

    pub fn path_for(&self, assignment_id: &str) -> PathBuf {
        let safe: String =
            assignment_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        self.dir.join(format!("events-{safe}.jsonl"))
    }

    pub fn append(&self, event: &GradingEvent) -> Result<(), EventLogError> {
        let mut file = OpenOptions::new().create(true).append(true).open(self.path_for(&event.assignment_id))?;
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    pub fn read(&self, assignment_id: &str) -> Result<Vec<GradingEvent>, EventLogError> {
        read_file(&self.path_for(assignment_id))
    }

    /// Events from every assignment file, in file-name order.
    pub fn read_all(&self) -> Result<Vec<GradingEvent>, EventLogError> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("events-") && n.ends_with(".jsonl"))
            })
            .collect();
        paths.sort();
        let mut out = Vec::new();
        for p in paths {
            out.extend(read_file(&p)?);
        }
        Ok(out)
    }
}

pub fn read_file(path: &Path) -> Result<Vec<GradingEvent>, EventLogError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EventLogError::Parse { line: i + 1, source: e })?);
    }
    Ok(out)
}
