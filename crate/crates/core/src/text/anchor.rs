use serde::{Deserialize, Serialize};

use super::{segment_sentences, CharMap};
use crate::domain::EssayDraft;
use crate::error::AnchorError;

/// Minimum normalized similarity for a quote to ground onto a sentence.
pub const GROUNDING_THRESHOLD: f64 = 0.85;

/// Half-open char range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TextRange {
    pub start: usize,
    pub end: usize,
}

impl TextRange {
    pub fn new(start: usize, end: usize) -> Self {
        TextRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorStatus {
    Grounded,
    Repaired,
    Unanchored,
}

/// Char ranges binding a feedback box to evidence in one specific draft.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpanAnchor {
    pub draft_id: String,
    pub ranges: Vec<TextRange>,
    pub status: AnchorStatus,
}

impl SpanAnchor {
    pub fn unanchored(draft_id: impl Into<String>) -> Self {
        SpanAnchor { draft_id: draft_id.into(), ranges: Vec::new(), status: AnchorStatus::Unanchored }
    }

    pub fn is_anchored(&self) -> bool {
        self.status != AnchorStatus::Unanchored
    }

    /// The anchored text, ranges joined by a single space.
    pub fn excerpt(&self, text: &str) -> String {
        let map = CharMap::new(text);
        self.ranges
            .iter()
            .filter(|r| r.end <= map.len() && r.start < r.end)
            .map(|r| map.slice(r.start, r.end))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Case-folds, folds typographic punctuation to ASCII, and collapses
/// whitespace runs to one space.
pub fn normalize_for_match(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        let folded: &str = match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' | '`' | '\u{00B4}' => "'",
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' | '\u{00AB}' | '\u{00BB}' => "\"",
            '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}' | '\u{2212}' => "-",
            '\u{2026}' => "...",
            c if c.is_whitespace() => {
                pending_space = true;
                continue;
            }
            _ => {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.extend(c.to_lowercase());
                continue;
            }
        };
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push_str(folded);
    }
    out
}

/// Normalized Levenshtein similarity in `[0, 1]` between two strings after
/// [`normalize_for_match`].
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&normalize_for_match(a), &normalize_for_match(b))
}

/// Maps LLM-quoted sentences onto char ranges of the draft.
///
/// Each quote is split into sentences and every piece is matched to the
/// draft sentence with the highest normalized similarity (earliest wins on
/// ties). Pieces below [`GROUNDING_THRESHOLD`] are dropped. The anchor is
/// `Grounded` when every kept piece matched verbatim, `Repaired` when any
/// match was fuzzy, and `Unanchored` when nothing survived.
pub fn ground_quotes<S: AsRef<str>>(draft: &EssayDraft, quoted: &[S]) -> SpanAnchor {
    let map = CharMap::new(&draft.text);
    let sentences: Vec<(usize, usize, &str, String)> = segment_sentences(&draft.text)
        .into_iter()
        .map(|s| {
            let raw = map.slice(s.start, s.end);
            (s.start, s.end, raw, normalize_for_match(raw))
        })
        .collect();
    let mut ranges = Vec::new();
    let mut all_exact = true;
    for quote in quoted {
        let quote = quote.as_ref();
        let qmap = CharMap::new(quote);
        for piece in segment_sentences(quote) {
            let raw = qmap.slice(piece.start, piece.end);
            let norm = normalize_for_match(raw);
            let qlen = norm.chars().count();
            let mut best: Option<(f64, usize)> =
                sentences.iter().position(|s| s.3 == norm).map(|i| (1.0, i));
            for (i, (_, _, _, snorm)) in sentences.iter().enumerate() {
                if best.is_some_and(|(b, _)| b >= 1.0) {
                    break;
                }
                let slen = snorm.chars().count();
                let (lo, hi) = if qlen < slen { (qlen, slen) } else { (slen, qlen) };
                if hi == 0 || (lo as f64) / (hi as f64) < GROUNDING_THRESHOLD {
                    continue;
                }
                let score = strsim::normalized_levenshtein(&norm, snorm);
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, i));
                }
            }
            if let Some((_, i)) = best.filter(|(s, _)| *s >= GROUNDING_THRESHOLD) {
                let (start, end, sraw, _) = &sentences[i];
                if raw != *sraw {
                    all_exact = false;
                }
                ranges.push(TextRange::new(*start, *end));
            }
        }
    }
    ranges.sort();
    ranges.dedup();
    let status = if ranges.is_empty() {
        AnchorStatus::Unanchored
    } else if all_exact {
        AnchorStatus::Grounded
    } else {
        AnchorStatus::Repaired
    };
    SpanAnchor { draft_id: draft.essay_id.clone(), ranges, status }
}

/// Clips ranges to the draft, drops empty ones, and merges overlaps.
///
/// A valid anchor comes back unchanged. Any repair marks the result
/// `Repaired`; if no range survives it becomes `Unanchored`.
pub fn validate_anchor(anchor: &SpanAnchor, draft: &EssayDraft) -> Result<SpanAnchor, AnchorError> {
    if anchor.draft_id != draft.essay_id {
        return Err(AnchorError::DraftMismatch { anchor: anchor.draft_id.clone(), expected: draft.essay_id.clone() });
    }
    let len = draft.char_len();
    let mut ranges: Vec<TextRange> = anchor
        .ranges
        .iter()
        .map(|r| TextRange::new(r.start.min(len), r.end.min(len)))
        .filter(|r| !r.is_empty())
        .collect();
    ranges.sort();
    let mut merged: Vec<TextRange> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match merged.last_mut() {
            Some(last) if r.start < last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }
    let status = if merged.is_empty() {
        AnchorStatus::Unanchored
    } else if merged == anchor.ranges && anchor.status != AnchorStatus::Unanchored {
        anchor.status
    } else {
        AnchorStatus::Repaired
    };
    Ok(SpanAnchor { draft_id: anchor.draft_id.clone(), ranges: merged, status })
}
