//! Deterministic text mechanics: sentence segmentation, quote grounding,
//! anchor repair, draft diffing, and re-anchoring across drafts.
//!
//! All offsets are counted in Unicode scalar values (Rust `char`s), not
//! bytes, so they survive transport to clients that index by character.

mod anchor;
mod diff;
mod segment;

pub use anchor::{
    ground_quotes, normalize_for_match, similarity, validate_anchor, AnchorStatus, SpanAnchor, TextRange,
    GROUNDING_THRESHOLD,
};
pub use diff::{compute_diff, reanchor, sentence_alignment, DiffKind, DiffSegment, DraftDiff};
pub use segment::{segment_sentences, SentenceSpan};

/// Byte positions of every char boundary in a string, for O(1) slicing by
/// char offset.
pub(crate) struct CharMap<'a> {
    text: &'a str,
    bounds: Vec<usize>,
}

impl<'a> CharMap<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let mut bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bounds.push(text.len());
        CharMap { text, bounds }
    }

    pub(crate) fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub(crate) fn slice(&self, start: usize, end: usize) -> &'a str {
        &self.text[self.bounds[start]..self.bounds[end]]
    }
}

/// Substring of `text` between two char offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    CharMap::new(text).slice(start, end)
}
