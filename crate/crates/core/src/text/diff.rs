use serde::{Deserialize, Serialize};

use super::{segment_sentences, AnchorStatus, CharMap, SpanAnchor, TextRange};
use crate::domain::EssayDraft;
use crate::error::AnchorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffKind {
    Unchanged,
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSegment {
    pub kind: DiffKind,
    pub text: String,
}

/// Sentence-level difference between a first and a final draft.
///
/// Unchanged and removed segments concatenate to the first draft; unchanged
/// and added segments concatenate to the final draft.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftDiff {
    pub first_draft_id: String,
    pub final_draft_id: String,
    pub segments: Vec<DiffSegment>,
}

impl DraftDiff {
    fn reconstruct(&self, keep: DiffKind) -> String {
        self.segments
            .iter()
            .filter(|s| s.kind == DiffKind::Unchanged || s.kind == keep)
            .map(|s| s.text.as_str())
            .collect()
    }

    pub fn first_text(&self) -> String {
        self.reconstruct(DiffKind::Removed)
    }

    pub fn final_text(&self) -> String {
        self.reconstruct(DiffKind::Added)
    }

    pub fn is_identity(&self) -> bool {
        self.segments.iter().all(|s| s.kind == DiffKind::Unchanged)
    }
}

/// Longest-common-subsequence alignment of the two texts' sentences,
/// compared verbatim. Returns matched `(first_index, final_index)` pairs in
/// increasing order.
pub fn sentence_alignment(first: &[&str], second: &[&str]) -> Vec<(usize, usize)> {
    let prefix = first.iter().zip(second).take_while(|(a, b)| a == b).count();
    let suffix = first[prefix..]
        .iter()
        .rev()
        .zip(second[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let a = &first[prefix..first.len() - suffix];
    let b = &second[prefix..second.len() - suffix];
    let (n, m) = (a.len(), b.len());
    // table[i][j] = LCS length of a[i..] and b[j..]
    let mut table = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[at(i, j)] = if a[i] == b[j] {
                table[at(i + 1, j + 1)] + 1
            } else {
                table[at(i + 1, j)].max(table[at(i, j + 1)])
            };
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..prefix).map(|k| (k, k)).collect();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            pairs.push((prefix + i, prefix + j));
            i += 1;
            j += 1;
        } else if table[at(i + 1, j)] >= table[at(i, j + 1)] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs.extend((0..suffix).map(|k| (first.len() - suffix + k, second.len() - suffix + k)));
    pairs
}

struct Segmented<'a> {
    map: CharMap<'a>,
    spans: Vec<(usize, usize)>,
}

impl<'a> Segmented<'a> {
    fn new(text: &'a str) -> Self {
        let spans = segment_sentences(text).into_iter().map(|s| (s.start, s.end)).collect();
        Segmented { map: CharMap::new(text), spans }
    }

    fn sentences(&self) -> Vec<&'a str> {
        self.spans.iter().map(|&(s, e)| self.map.slice(s, e)).collect()
    }
}

fn whitespace_prefix(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y && x.is_whitespace()).map(|(x, _)| x.len_utf8()).sum()
}

fn whitespace_suffix(a: &str, b: &str) -> usize {
    a.chars()
        .rev()
        .zip(b.chars().rev())
        .take_while(|(x, y)| x == y && x.is_whitespace())
        .map(|(x, _)| x.len_utf8())
        .sum()
}

struct SegmentBuilder(Vec<DiffSegment>);

impl SegmentBuilder {
    fn push(&mut self, kind: DiffKind, text: &str) {
        if text.is_empty() {
            return;
        }
        match self.0.last_mut() {
            Some(last) if last.kind == kind => last.text.push_str(text),
            _ => self.0.push(DiffSegment { kind, text: text.to_string() }),
        }
    }

    /// Emits a changed region: shared leading/trailing whitespace stays
    /// unchanged, the rest is removed-then-added.
    fn region(&mut self, old: &str, new: &str) {
        let head = whitespace_prefix(old, new);
        let (old_rest, new_rest) = (&old[head..], &new[head..]);
        let tail = whitespace_suffix(old_rest, new_rest);
        self.push(DiffKind::Unchanged, &old[..head]);
        self.push(DiffKind::Removed, &old_rest[..old_rest.len() - tail]);
        self.push(DiffKind::Added, &new_rest[..new_rest.len() - tail]);
        self.push(DiffKind::Unchanged, &old_rest[old_rest.len() - tail..]);
    }
}

/// Diffs two drafts of the same student's essay at sentence granularity.
pub fn compute_diff(first: &EssayDraft, final_draft: &EssayDraft) -> Result<DraftDiff, AnchorError> {
    if first.student_id != final_draft.student_id || first.assignment_id != final_draft.assignment_id {
        return Err(AnchorError::UnrelatedDrafts);
    }
    let segments = diff_texts(&first.text, &final_draft.text);
    Ok(DraftDiff {
        first_draft_id: first.essay_id.clone(),
        final_draft_id: final_draft.essay_id.clone(),
        segments,
    })
}

pub(crate) fn diff_texts(old: &str, new: &str) -> Vec<DiffSegment> {
    let a = Segmented::new(old);
    let b = Segmented::new(new);
    let pairs = sentence_alignment(&a.sentences(), &b.sentences());
    let mut out = SegmentBuilder(Vec::new());
    let (mut pos_a, mut pos_b) = (0, 0);
    for (i, j) in pairs {
        let (sa, ea) = a.spans[i];
        let (sb, eb) = b.spans[j];
        out.region(a.map.slice(pos_a, sa), b.map.slice(pos_b, sb));
        out.push(DiffKind::Unchanged, a.map.slice(sa, ea));
        pos_a = ea;
        pos_b = eb;
    }
    out.region(a.map.slice(pos_a, a.map.len()), b.map.slice(pos_b, b.map.len()));
    out.0
}

/// Carries an anchor on the first draft over to the final draft.
///
/// Parts of ranges inside unchanged segments are shifted to their new
/// offsets; parts inside removed segments are dropped, as are whitespace-only
/// leftovers of a cut range. Losing anything marks the anchor `Repaired`;
/// losing everything makes it `Unanchored`.
pub fn reanchor(anchor: &SpanAnchor, diff: &DraftDiff) -> Result<SpanAnchor, AnchorError> {
    if anchor.draft_id != diff.first_draft_id {
        return Err(AnchorError::DraftMismatch { anchor: anchor.draft_id.clone(), expected: diff.first_draft_id.clone() });
    }
    // (first_start, first_end, final_start, text) for each unchanged segment
    let mut kept = Vec::new();
    let (mut pos_first, mut pos_final) = (0usize, 0usize);
    for seg in &diff.segments {
        let len = seg.text.chars().count();
        match seg.kind {
            DiffKind::Unchanged => {
                kept.push((pos_first, pos_first + len, pos_final, seg.text.as_str()));
                pos_first += len;
                pos_final += len;
            }
            DiffKind::Removed => pos_first += len,
            DiffKind::Added => pos_final += len,
        }
    }
    let mut mapped: Vec<TextRange> = Vec::new();
    let mut lost = false;
    for range in &anchor.ranges {
        let mut covered = 0;
        for &(fs, fe, gs, text) in &kept {
            let (mut s, mut e) = (range.start.max(fs), range.end.min(fe));
            if s >= e {
                continue;
            }
            let piece_len = e - s;
            if piece_len < range.len() {
                // A cut piece loses the whitespace at its edges.
                let map = CharMap::new(text);
                let piece = map.slice(s - fs, e - fs);
                let lead = piece.chars().take_while(|c| c.is_whitespace()).count();
                if lead == piece_len {
                    continue;
                }
                let trail = piece.chars().rev().take_while(|c| c.is_whitespace()).count();
                s += lead;
                e -= trail;
            }
            covered += piece_len;
            let target = TextRange::new(gs + (s - fs), gs + (e - fs));
            match mapped.last_mut() {
                Some(last) if last.end == target.start && covered > piece_len => last.end = target.end,
                _ => mapped.push(target),
            }
        }
        if covered < range.len() {
            lost = true;
        }
    }
    let status = if mapped.is_empty() {
        AnchorStatus::Unanchored
    } else if lost {
        AnchorStatus::Repaired
    } else {
        anchor.status
    };
    Ok(SpanAnchor { draft_id: diff.final_draft_id.clone(), ranges: mapped, status })
}
