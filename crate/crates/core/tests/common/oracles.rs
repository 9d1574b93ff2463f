//! Independent reference implementations used to check library results.

use rand::seq::IndexedRandom;
use rand::Rng;
use rubric_feedback::text::{compute_diff, segment_sentences, char_slice, DiffKind, DraftDiff};
use rubric_feedback::{EssayDraft, Stage};

use super::draft;

/// Length of the longest common subsequence of two sentence lists, from the
/// textbook quadratic table with no shortcuts.
pub fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            table[i][j] = if a[i - 1] == b[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    table[a.len()][b.len()]
}

pub fn sentences(text: &str) -> Vec<&str> {
    segment_sentences(text).into_iter().map(|s| char_slice(text, s.start, s.end)).collect()
}

const SUBJECTS: &[&str] = &[
    "The tax", "Oat milk", "Über drivers", "The café owner", "Demand", "Supply", "The naïve model", "Consumers",
    "Growers", "The state",
];
const VERBS: &[&str] = &["raises", "lowers", "shifts", "ignores", "explains", "changes"];
const OBJECTS: &[&str] = &[
    "the price", "total surplus", "the water bill", "the deadweight loss", "almond output", "the curve",
];
const ENDINGS: &[&str] = &[".", ".", ".", "?", "!", "\u{2026}"];
const SEPARATORS: &[&str] = &[" ", " ", "  ", "\n", "\n\n"];

/// A sentence from a small vocabulary, so that repeats are common.
pub fn random_sentence(rng: &mut impl Rng) -> String {
    format!(
        "{} {} {}{}",
        SUBJECTS.choose(rng).unwrap(),
        VERBS.choose(rng).unwrap(),
        OBJECTS.choose(rng).unwrap(),
        ENDINGS.choose(rng).unwrap()
    )
}

pub fn join_sentences(rng: &mut impl Rng, sentences: &[String]) -> String {
    let mut text = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            text.push_str(SEPARATORS.choose(rng).unwrap());
        }
        text.push_str(s);
    }
    text
}

/// A first draft of up to `max_sentences` sentences and a revision of it with
/// random deletions, insertions, rewrites and re-spacing.
pub fn random_draft_pair(rng: &mut impl Rng, max_sentences: usize, tag: usize) -> (EssayDraft, EssayDraft) {
    let n = rng.random_range(0..=max_sentences);
    let first: Vec<String> = (0..n).map(|_| random_sentence(rng)).collect();
    let mut revised = Vec::new();
    for s in &first {
        match rng.random_range(0..10) {
            0 => {}
            1 => revised.push(format!("{} Indeed.", s.trim_end_matches(['.', '?', '!', '\u{2026}']))),
            2 => {
                revised.push(random_sentence(rng));
                revised.push(s.clone());
            }
            _ => revised.push(s.clone()),
        }
    }
    for _ in 0..rng.random_range(0..3) {
        let at = rng.random_range(0..=revised.len());
        revised.insert(at, random_sentence(rng));
    }
    revised.truncate(max_sentences);
    let student = format!("p{tag}");
    (
        draft(&format!("{student}-first"), &student, Stage::First, &join_sentences(rng, &first)),
        draft(&format!("{student}-final"), &student, Stage::Final, &join_sentences(rng, &revised)),
    )
}

/// Checks a diff against the two texts and the LCS oracle.
///
/// Reconstruction must be exact. Every sentence of either draft must lie
/// entirely in unchanged text or entirely in changed text, unchanged
/// sentences must pair up in order with identical text, and the number of
/// pairs must equal the oracle's LCS length.
pub fn check_diff(first: &EssayDraft, final_draft: &EssayDraft) -> Result<DraftDiff, String> {
    let diff = compute_diff(first, final_draft).map_err(|e| e.to_string())?;
    if diff.first_text() != first.text {
        return Err(format!("{}: first draft does not reconstruct", first.essay_id));
    }
    if diff.final_text() != final_draft.text {
        return Err(format!("{}: final draft does not reconstruct", first.essay_id));
    }
    // Per-char unchanged flags for each side, and the mapping of unchanged
    // chars from first to final offsets.
    let mut kept_first = Vec::new();
    let mut kept_final = Vec::new();
    let mut map = Vec::new();
    let (mut pf, mut pg) = (0usize, 0usize);
    for seg in &diff.segments {
        let len = seg.text.chars().count();
        if len == 0 {
            return Err("empty segment".into());
        }
        match seg.kind {
            DiffKind::Unchanged => {
                for k in 0..len {
                    kept_first.push(true);
                    kept_final.push(true);
                    map.push(Some(pg + k));
                }
                pf += len;
                pg += len;
            }
            DiffKind::Removed => {
                kept_first.extend(std::iter::repeat_n(false, len));
                map.extend(std::iter::repeat_n(None, len));
                pf += len;
            }
            DiffKind::Added => {
                kept_final.extend(std::iter::repeat_n(false, len));
                pg += len;
            }
        }
    }
    let _ = pf;
    let side = |text: &str, kept: &[bool]| -> Result<Vec<(usize, usize, bool)>, String> {
        segment_sentences(text)
            .into_iter()
            .map(|s| {
                let flags = &kept[s.start..s.end];
                if flags.iter().all(|f| *f) {
                    Ok((s.start, s.end, true))
                } else if flags.iter().all(|f| !*f) {
                    Ok((s.start, s.end, false))
                } else {
                    Err(format!("sentence at {}..{} is partly unchanged", s.start, s.end))
                }
            })
            .collect()
    };
    let a = side(&first.text, &kept_first)?;
    let b = side(&final_draft.text, &kept_final)?;
    let mut pairs = Vec::new();
    for (start, end, kept) in &a {
        if !kept {
            continue;
        }
        let target = map[*start].expect("unchanged char maps");
        let j = b
            .iter()
            .position(|(s, e, k)| *k && *s == target && *e == target + (end - start))
            .ok_or_else(|| format!("unchanged sentence at {start} has no partner"))?;
        pairs.push(j);
    }
    if pairs.windows(2).any(|w| w[0] >= w[1]) {
        return Err("unchanged sentences are out of order".into());
    }
    if pairs.len() != b.iter().filter(|s| s.2).count() {
        return Err("unpaired unchanged sentence in the final draft".into());
    }
    let expected = lcs_len(&sentences(&first.text), &sentences(&final_draft.text));
    if pairs.len() != expected {
        return Err(format!("{} unchanged sentences, LCS oracle says {expected}", pairs.len()));
    }
    Ok(diff)
}

/// Closed-form Cohen's kappa of a 2×2 table `[[a, b], [c, d]]`, or `None`
/// where it is undefined.
pub fn kappa_2x2(a: u64, b: u64, c: u64, d: u64) -> Option<f64> {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let denominator = (a + b) * (b + d) + (a + c) * (c + d);
    if denominator == 0.0 {
        return None;
    }
    Some(2.0 * (a * d - b * c) / denominator)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `Σ wᵢ·metᵢ / Σ wᵢ` over integer weights as a reduced `(numerator,
/// denominator)` pair, or `None` when all weights are zero.
pub fn weighted_fraction(verdicts: &[bool], weights: &[u64]) -> Option<(u64, u64)> {
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let earned: u64 = verdicts.iter().zip(weights).filter(|(m, _)| **m).map(|(_, w)| w).sum();
    let g = gcd(earned, total);
    Some((earned / g, total / g))
}
