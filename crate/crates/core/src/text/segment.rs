use serde::{Deserialize, Serialize};

/// A sentence inside a draft, as a half-open char range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

// Lowercased words that take a trailing period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "e.g", "i.e", "cf", "al", "approx", "fig",
    "dept", "govt", "inc", "ltd", "corp", "co", "u.s", "u.k", "u.n", "u.s.a", "jan", "feb", "mar", "apr", "aug",
    "sept", "sep", "oct", "nov", "dec", "p", "pp", "vol", "ed", "eds", "est", "ca",
];

const TERMINATORS: &[char] = &['.', '?', '!', '…'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '”', '’', '»'];

fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut start = dot;
    while start > 0 && (chars[start - 1].is_alphabetic() || chars[start - 1] == '.') {
        start -= 1;
    }
    if start == dot {
        return false;
    }
    let word: String = chars[start..dot].iter().collect::<String>().to_lowercase();
    // Single capital letter initials ("J. Smith", "J. R. Tolkien"), but not
    // a lone letter followed by another one-letter sentence ("A. B?").
    if dot - start == 1 && chars[start].is_uppercase() {
        let mut next = dot + 1;
        while next < chars.len() && chars[next].is_whitespace() {
            next += 1;
        }
        let word_len = chars[next..].iter().take_while(|c| c.is_alphabetic()).count();
        let initial = word_len == 1 && chars.get(next + 1) == Some(&'.');
        return next < chars.len() && chars[next].is_uppercase() && (word_len >= 2 || initial);
    }
    ABBREVIATIONS.contains(&word.as_str())
}

/// Splits text into sentences with a rule-based segmenter.
///
/// A sentence ends at `.`, `?`, `!` or `…` (plus any closing quotes or
/// brackets) when followed by whitespace and a word that does not start in
/// lowercase, or by the end of the text. Periods after known abbreviations,
/// single-letter initials, and inside numbers do not end sentences. Every
/// line break is a hard boundary. Only whitespace lies between spans.
pub fn segment_sentences(text: &str) -> Vec<SentenceSpan> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut i = 0;
    let push = |spans: &mut Vec<SentenceSpan>, start: usize, mut end: usize| {
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > start {
            spans.push(SentenceSpan { index: spans.len(), start, end });
        }
    };
    while i < n {
        while i < n && chars[i].is_whitespace() {
            i += 1;
        }
        if i == n {
            break;
        }
        let start = i;
        let mut j = i;
        let end = loop {
            if j == n {
                break n;
            }
            let c = chars[j];
            if c == '\n' || c == '\r' {
                break j;
            }
            if TERMINATORS.contains(&c) {
                let mut k = j + 1;
                while k < n && TERMINATORS.contains(&chars[k]) {
                    k += 1;
                }
                while k < n && CLOSERS.contains(&chars[k]) {
                    k += 1;
                }
                if k == n {
                    break n;
                }
                if chars[k].is_whitespace() {
                    let single_period = c == '.' && k == j + 1;
                    let abbreviated = single_period && is_abbreviation(&chars, j);
                    let mut m = k;
                    while m < n && chars[m].is_whitespace() && chars[m] != '\n' && chars[m] != '\r' {
                        m += 1;
                    }
                    let next_lower = m < n && chars[m].is_lowercase();
                    if !abbreviated && !next_lower {
                        break k;
                    }
                }
                j = k;
                continue;
            }
            j += 1;
        };
        push(&mut spans, start, end);
        i = end;
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::char_slice;

    fn sentences(text: &str) -> Vec<&str> {
        segment_sentences(text).iter().map(|s| char_slice(text, s.start, s.end)).collect()
    }

    #[test]
    fn terminal_punctuation() {
        assert_eq!(sentences("A. B? C!"), vec!["A.", "B?", "C!"]);
    }

    #[test]
    fn abbreviations_and_decimals() {
        assert_eq!(sentences("Dr. Smith pays $3.50. Done."), vec!["Dr. Smith pays $3.50.", "Done."]);
    }

    #[test]
    fn empty_and_blank_input() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences(" \n\t ").is_empty());
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        assert_eq!(
            sentences("He said \"stop.\" Then he left. (It rained.) Fine"),
            vec!["He said \"stop.\"", "Then he left.", "(It rained.)", "Fine"]
        );
    }

    #[test]
    fn line_breaks_are_boundaries() {
        assert_eq!(sentences("Introduction\nThe market clears.\n\nNext para"), vec![
            "Introduction",
            "The market clears.",
            "Next para"
        ]);
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(sentences("Prices rose, e.g. for milk. Yes."), vec!["Prices rose, e.g. for milk.", "Yes."]);
    }

    #[test]
    fn offsets_are_chars_not_bytes() {
        let text = "Café prices rose. Über alles.";
        let spans = segment_sentences(text);
        assert_eq!(spans[1].start, 18);
        assert_eq!(sentences(text), vec!["Café prices rose.", "Über alles."]);
    }

    // Hand-segmented sentences with abbreviations, initials, decimals and
    // quotations. Joined with single spaces they must split back exactly.
    const FIXTURE: [&str; 30] = [
        "Dr. Smith pays $3.50 for a carton of almond milk.",
        "The price rose by 2.5 percent last year.",
        "According to the U.S. Department of Agriculture, water use doubled.",
        "Is this a negative externality?",
        "Yes!",
        "Farmers in California e.g. almond growers demand more water.",
        "Prof. Jones argued that the tax is too small.",
        "The Pigouvian tax equals the external marginal cost.",
        "J. Doe wrote the article in Jan. of this year.",
        "Oat milk and soy milk are substitutes in consumption.",
        "The government purchased the excess supply at $1.25 per unit.",
        "Consumer surplus falls while producer surplus rises.",
        "Deadweight loss is quite large here.",
        "What would happen if insulin were priced at marginal cost?",
        "The article, published by Acme Corp. in 2024, cites 3.7 million users.",
        "\"Free riders benefit without paying,\" the author wrote.",
        "A quota of 10.5 tons was imposed.",
        "Mr. and Mrs. Lee own a dairy farm.",
        "Social marginal cost exceeds private marginal cost.",
        "The market quantity is therefore too high.",
        "See Fig. 2 for the supply shift.",
        "Tradable permits offer another remedy.",
        "Who bears the burden of the tax?",
        "Both buyers and sellers share it, i.e. the incidence is split.",
        "The equilibrium price rises from $4.00 to $4.60.",
        "Water is a common resource.",
        "Overconsumption follows from non-excludability.",
        "St. Louis reported a similar shortage.",
        "The policy reduces quantity demanded, not demand.",
        "In sum, the market fails.",
    ];

    #[test]
    fn hand_segmented_fixture() {
        let text = FIXTURE.join(" ");
        assert_eq!(sentences(&text), FIXTURE.to_vec());
    }

    #[test]
    fn resegmenting_a_sentence_is_identity() {
        let text = FIXTURE.join(" ");
        for s in sentences(&text) {
            let again = segment_sentences(s);
            assert_eq!(again.len(), 1, "{s:?}");
            assert_eq!((again[0].start, again[0].end), (0, s.chars().count()));
        }
    }
}
