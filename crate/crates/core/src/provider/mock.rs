//! Deterministic provider for tests, demos and offline runs.
//!
//! Without scripts, every reply is a pure function of the request context
//! and the seed: sentence extraction and judgments use keyword overlap with
//! the rubric text, feedback follows a fixed template, and the feedback
//! analysis steps use simple lexical cues. Scripted replies, queued per
//! `(request kind, rubric id)`, take precedence and can inject failures.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use async_trait::async_trait;

use super::{LlmClient, ProviderConfig, ProviderRequest, RequestContext, RequestKind};
use crate::error::ProviderError;
use crate::quality::FeedbackTypes;
use crate::text::{char_slice, segment_sentences};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScriptKey {
    pub kind: RequestKind,
    pub rubric_id: Option<String>,
}

impl ScriptKey {
    pub fn new(kind: RequestKind, rubric_id: Option<&str>) -> Self {
        ScriptKey { kind, rubric_id: rubric_id.map(str::to_string) }
    }
}

type Reply = Result<String, ProviderError>;

#[derive(Default)]
struct Scripts {
    once: HashMap<ScriptKey, VecDeque<Reply>>,
    always: HashMap<ScriptKey, Reply>,
}

pub struct MockProvider {
    seed: u64,
    scripts: Mutex<Scripts>,
    calls: AtomicUsize,
    last: Mutex<Option<ProviderRequest>>,
}

// Lead-ins that vary generated feedback across seeds and regenerations.
const LEADS: [&str; 6] = ["", "Take another look. ", "One more angle: ", "Revisit this part. ", "Think it through: ", "A hint: "];

const STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "also", "among", "and", "another", "any", "because", "been", "before",
    "being", "between", "both", "but", "can", "could", "does", "doing", "each", "either", "essay", "even", "every",
    "explain", "from", "further", "have", "having", "here", "how", "into", "least", "more", "most", "much",
    "must", "only", "other", "over", "same", "should", "some", "such", "than", "that", "their", "them", "then",
    "there", "these", "they", "this", "those", "through", "under", "very", "were", "what", "when", "where",
    "whether", "which", "while", "will", "with", "would", "your", "student", "students", "discuss", "mention",
    "identify", "describe", "clearly", "article", "example", "address", "assess", "recognize",
    "consider", "correctly", "relevant", "uses",
];

/// Content words of a text: lowercase, plural or third-person `s`
/// stripped, four letters or more, stopwords removed.
pub(crate) fn keywords(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .map(|w| singular(&w.to_lowercase()))
        .filter(|w| w.chars().count() >= 4 && !STOPWORDS.contains(&w.as_str()))
        .collect()
}

fn singular(w: &str) -> String {
    if w.len() <= 4 || !w.ends_with('s') || w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return w.to_string();
    }
    if let Some(stem) = w.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if let Some(stem) = w.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    w[..w.len() - 1].to_string()
}

fn contains_any(text: &str, needles: &[&str]) -> bool {
    needles.iter().any(|n| text.contains(n))
}

fn fnv(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for b in part.iter().chain(std::iter::once(&0xffu8)) {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider { seed, scripts: Mutex::default(), calls: AtomicUsize::new(0), last: Mutex::new(None) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Queues a one-shot reply for `key`.
    pub fn script(&self, key: ScriptKey, reply: Reply) {
        self.scripts.lock().unwrap().once.entry(key).or_default().push_back(reply);
    }

    /// Installs a reply returned for every request matching `key`.
    pub fn script_always(&self, key: ScriptKey, reply: Reply) {
        self.scripts.lock().unwrap().always.insert(key, reply);
    }

    pub fn clear_scripts(&self) {
        *self.scripts.lock().unwrap() = Scripts::default();
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn last_request(&self) -> Option<ProviderRequest> {
        self.last.lock().unwrap().clone()
    }

    fn scripted(&self, request: &ProviderRequest) -> Option<Reply> {
        let mut scripts = self.scripts.lock().unwrap();
        let exact = ScriptKey { kind: request.kind, rubric_id: request.rubric_id.clone() };
        let wildcard = ScriptKey { kind: request.kind, rubric_id: None };
        for key in [&exact, &wildcard] {
            if let Some(queue) = scripts.once.get_mut(key) {
                if let Some(reply) = queue.pop_front() {
                    return Some(reply);
                }
            }
            if let Some(reply) = scripts.always.get(key) {
                return Some(reply.clone());
            }
        }
        None
    }

    fn default_reply(&self, request: &ProviderRequest) -> String {
        match &request.context {
            RequestContext::Extract { rubric, draft_text } => {
                let wanted = keywords(&rubric.text);
                let mut scored: Vec<(usize, usize, &str)> = segment_sentences(draft_text)
                    .iter()
                    .map(|s| {
                        let text = char_slice(draft_text, s.start, s.end);
                        (keywords(text).intersection(&wanted).count(), s.index, text)
                    })
                    .filter(|(score, _, _)| *score > 0)
                    .collect();
                scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                scored.truncate(3);
                scored.sort_by_key(|s| s.1);
                let sentences: Vec<&str> = scored.into_iter().map(|s| s.2).collect();
                serde_json::json!({ "sentences": sentences }).to_string()
            }
            RequestContext::Judge { rubric, evidence, .. } => {
                let wanted = keywords(&rubric.text);
                // Judged on the best single sentence, so scattered mentions of
                // shared terms do not add up to a met item.
                let found = segment_sentences(evidence)
                    .iter()
                    .map(|s| keywords(char_slice(evidence, s.start, s.end)))
                    .max_by_key(|k| k.intersection(&wanted).count())
                    .unwrap_or_default();
                let covered = wanted.intersection(&found).count();
                let missing: Vec<&str> = wanted.difference(&found).map(String::as_str).take(3).collect();
                let met = !wanted.is_empty() && covered * 4 >= wanted.len() * 3;
                let mut rationale =
                    format!("The strongest highlighted sentence covers {} of {} key rubric terms", covered, wanted.len());
                if !missing.is_empty() {
                    rationale.push_str(&format!("; missing: {}", missing.join(", ")));
                }
                rationale.push('.');
                // Rationale first, then the verdict.
                format!(r#"{{"rationale": {}, "met": {}}}"#, serde_json::to_string(&rationale).unwrap(), met)
            }
            RequestContext::Generate { rubric, judgment, .. } => {
                let excerpt: String = judgment
                    .rationale
                    .split(['.', ';'])
                    .next()
                    .unwrap_or_default()
                    .chars()
                    .take(80)
                    .collect::<String>()
                    .trim()
                    .to_string();
                let lead = LEADS[((self.seed + request.variant as u64) % LEADS.len() as u64) as usize];
                let text = if judgment.met {
                    format!("{lead}Nice work on rubric {}: {excerpt}.", rubric.id)
                } else {
                    format!("{lead}Consider rubric {}: {excerpt}?", rubric.id)
                };
                serde_json::json!({ "feedback": text }).to_string()
            }
            RequestContext::Segment { message_text, message_rubric, rubrics } => {
                let rubric_words: Vec<(&str, BTreeSet<String>)> =
                    rubrics.iter().map(|(id, text)| (id.as_str(), keywords(text))).collect();
                let units: Vec<serde_json::Value> = segment_sentences(message_text)
                    .iter()
                    .map(|s| {
                        let text = char_slice(message_text, s.start, s.end);
                        let words = keywords(text);
                        let overlaps: Vec<(&str, usize)> = rubric_words
                            .iter()
                            .map(|(id, w)| (*id, w.intersection(&words).count()))
                            .filter(|(_, n)| *n >= 2)
                            .collect();
                        let best = overlaps.iter().map(|(_, n)| *n).max().unwrap_or(0);
                        let candidates: Vec<&str> =
                            overlaps.iter().filter(|(_, n)| *n == best).map(|(id, _)| *id).collect();
                        let links: Vec<&str> = match message_rubric.as_deref() {
                            Some(own) if candidates.is_empty() || candidates.contains(&own) => vec![own],
                            _ => candidates,
                        };
                        serde_json::json!({ "text": text, "rubric_ids": links })
                    })
                    .collect();
                serde_json::json!({ "units": units }).to_string()
            }
            RequestContext::Classify { unit_text } => {
                let t = unit_text.to_lowercase();
                let (types, mechanics) = lexical_types(&t);
                serde_json::json!({
                    "summary": types.summary,
                    "praise": types.praise,
                    "problem": types.problem,
                    "solution": types.solution,
                    "prose_mechanics_only": mechanics,
                })
                .to_string()
            }
            RequestContext::Rate { unit_text, types, prose_mechanics_only } => {
                let t = unit_text.to_lowercase();
                let question = t.contains('?');
                let words = t.split_whitespace().count();
                let tone = types.praise || types.summary || types.solution || question;
                let applicable = (types.problem || types.solution) && !prose_mechanics_only;
                let independence = (question
                    || contains_any(&t, &["remember to", "consider", "make sure you understand", "think about", "explore", "can you"]))
                    && !contains_any(&t, &["you should explicitly", "the answer is"]);
                let actionable = words >= 12 && (types.solution || question);
                let flag = |b: bool| if b { 1 } else { 0 };
                serde_json::json!({
                    "accuracy": 1,
                    "tone": flag(tone),
                    "independence": applicable.then(|| flag(independence)),
                    "actionability": applicable.then(|| flag(actionable)),
                })
                .to_string()
            }
        }
    }
}

/// Lexical cue classifier behind the mock's type tags.
fn lexical_types(t: &str) -> (FeedbackTypes, bool) {
    let trimmed = t.trim_start_matches(|c: char| !c.is_alphanumeric());
    let praise = contains_any(t, &[
        "great", "good job", "good work", "nice", "well done", "excellent", "well-written", "well written",
        "i appreciate", "strong ",
    ]);
    let summary = contains_any(t, &[
        "you mentioned", "you've mentioned", "you discussed", "you've discussed", "you've identified",
        "you identified", "your explanation", "you explain", "you describe", "you state", "you noted",
        "you argue", "you've explained",
    ]);
    let guiding_question = t.contains('?')
        && ["how", "what", "can ", "could", "why", "which", "who"].iter().any(|s| trimmed.starts_with(s));
    let solution = guiding_question
        || contains_any(t, &[
            "should", "could", "would", "be sure to", "remember to", "make sure", "consider", "i'd like you to",
            "try to", "don't forget", "compare", "i recommend", "i encourage",
        ]);
    let problem = contains_any(t, &[
        "not ", "isn't", "incorrect", "missing", "no ", "doesn't", "instead of", "mistake", "lack", "unclear",
        "wrong", "however", "weren't", "did you",
    ]) || (t.contains('?') && ["did ", "is ", "are ", "does "].iter().any(|s| trimmed.starts_with(s)));
    let mechanics = contains_any(t, &[
        "word count", "citation", "cite ", "grammar", "spelling", "concise", "formatting", "typo", "proofread",
        "page limit", "font",
    ]);
    (FeedbackTypes { summary, praise, problem, solution }, mechanics)
}

#[async_trait]
impl LlmClient for MockProvider {
    async fn complete(&self, request: &ProviderRequest, _config: &ProviderConfig) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        *self.last.lock().unwrap() = Some(request.clone());
        if let Some(reply) = self.scripted(request) {
            return reply;
        }
        // Unique per (kind, rubric, context, seed); kept for tracing.
        let key = fnv(&[
            request.kind.as_str().as_bytes(),
            request.rubric_id.as_deref().unwrap_or("").as_bytes(),
            &self.seed.to_le_bytes(),
        ]);
        tracing::trace!(key, kind = request.kind.as_str(), "mock reply");
        Ok(self.default_reply(request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keywords_drop_short_and_stop_words() {
        let k = keywords("Discuss the substitutes in consumption for almond milk markets.");
        assert!(k.contains("substitute"));
        assert!(k.contains("consumption"));
        assert!(k.contains("market"));
        assert!(!k.contains("discuss"));
        assert!(!k.contains("the"));
    }

    #[test]
    fn lexical_cues_on_typical_messages() {
        let (t, _) = lexical_types("great job identifying the shifts in supply.");
        assert!(t.praise && !t.summary);
        let (t, _) = lexical_types("you mentioned government expenditure.");
        assert!(t.summary);
        let (t, _) = lexical_types("remember to discuss the welfare of producers.");
        assert!(t.solution);
        let (t, _) = lexical_types("did you present any evidence from the article?");
        assert!(t.problem && !t.solution);
        let (_, mechanics) = lexical_types("please check your word count.");
        assert!(mechanics);
    }
}
