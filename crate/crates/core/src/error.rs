use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("malformed document: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("malformed record on line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("assignment {assignment_id:?} is invalid: {}", problems.join("; "))]
    Validation { assignment_id: String, problems: Vec<String> },
    #[error("duplicate assignment id {0:?}")]
    DuplicateAssignment(String),
    #[error("invalid weight {0:?}")]
    InvalidWeight(String),
    #[error("negative weight {0:?}")]
    NegativeWeight(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnchorError {
    #[error("anchor belongs to draft {anchor:?}, expected {expected:?}")]
    DraftMismatch { anchor: String, expected: String },
    #[error("drafts do not belong to the same student and assignment")]
    UnrelatedDrafts,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider timed out")]
    Timeout,
    #[error("provider returned an error status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
    #[error("malformed provider payload: {0}")]
    Malformed(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

impl ProviderError {
    /// Transport-class failures are retried with backoff; the rest are not.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("rubric {rubric_id:?}: {source}")]
pub struct PipelineError {
    pub rubric_id: String,
    #[source]
    pub source: ProviderError,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("{verdicts} verdicts but {weights} weights")]
    LengthMismatch { verdicts: usize, weights: usize },
    #[error("all rubric weights are zero")]
    ZeroTotalWeight,
    #[error("machine and gold labels do not cover the same (essay, rubric) keys: {0}")]
    KeyMismatch(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("confusion matrix is not square")]
    NotSquare,
    #[error("need at least 2 observations in each group, got {0} and {1}")]
    TooFewObservations(usize, usize),
    #[error("empty group {0:?}")]
    EmptyGroup(String),
}

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("essay {essay_id:?}: expected event id {expected}, got {got}")]
    OutOfOrder { essay_id: String, expected: u64, got: u64 },
    #[error("essay {essay_id:?}: timestamp moved back {seconds:.3}s, beyond the allowed clock skew")]
    TimestampRegression { essay_id: String, seconds: f64 },
    #[error("no events recorded for essay {0:?}")]
    UnknownEssay(String),
    #[error("log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed log line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("grader {grader_id:?} is not assigned to essay {essay_id:?}")]
    Unauthorized { grader_id: String, essay_id: String },
    #[error("essay {0:?} is locked by an open session")]
    Locked(String),
    #[error("session {0:?} is finalized")]
    Finalized(String),
    #[error("action {action} is not available in the {condition} condition")]
    InvalidForCondition { action: &'static str, condition: crate::domain::Condition },
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("a score must be set before finalizing")]
    MissingScore,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Anchor(#[from] AnchorError),
    #[error(transparent)]
    Log(#[from] EventLogError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("storage: {0}")]
    Storage(String),
}
