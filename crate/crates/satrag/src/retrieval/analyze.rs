//! Query slot analysis.
//!
//! The analyzer is a provider interface so an LLM can fill slots from
//! free-form questions; the bundled deterministic analyzer uses keyword
//! rules: the first temporal expression becomes the temporal hint, intent
//! comes from trigger-word lookup, and the remaining content words (minus
//! question scaffolding, numerals, and trigger words) form the attribute
//! hint. It never produces a subject hint — subject resolution then rides
//! on the attribute hint or an explicit upstream analyzer.

use super::{Intent, Query, QuerySlots, RetrievalError};
use crate::temporal::find_first_temporal;

/// Fills query slots. Implementations must be deterministic to make
/// retrieval reproducible under a fixed provider set.
pub trait QueryAnalyzer: Send + Sync {
    fn analyze(&self, q: &Query) -> Result<QuerySlots, RetrievalError>;
}

/// Intent triggers for time-series questions.
pub const TEMPORAL_COMPARISON_TRIGGERS: &[&str] =
    &["growth", "change", "increase", "decrease", "compared", "trend"];

/// Intent triggers for composition questions.
pub const SUBJECT_BREAKDOWN_TRIGGERS: &[&str] = &["breakdown", "total", "composition"];

/// Question scaffolding removed before forming the attribute hint.
pub const STOPWORDS: &[&str] = &[
    // articles, conjunctions, prepositions
    "a", "an", "the", "and", "or", "not", "of", "in", "on", "at", "for", "to",
    "from", "by", "with", "as", "per", "into", "onto", "over", "under",
    "between", "during", "within", "about", "across", "versus", "vs",
    // question words
    "what", "when", "where", "which", "who", "whom", "whose", "why", "how",
    // auxiliaries and copulas
    "is", "are", "was", "were", "be", "been", "being", "do", "does", "did",
    "done", "has", "have", "had", "having", "will", "would", "shall",
    "should", "can", "could", "may", "might", "must",
    // pronouns and determiners
    "it", "its", "this", "that", "these", "those", "there", "here", "they",
    "them", "their", "we", "our", "you", "your", "i", "he", "she", "his",
    "her", "much", "many", "any", "all", "each", "both", "such", "so",
    "than", "then", "if",
    // comparison verbs and magnitude words
    "exceed", "exceeds", "exceeded", "surpass", "surpasses", "surpassed",
    "reach", "reaches", "reached", "million", "billion", "thousand",
    "trillion", "percent",
];

/// Deterministic keyword-rule analyzer.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordAnalyzer;

impl KeywordAnalyzer {
    fn intent(text_lower: &str) -> Intent {
        if TEMPORAL_COMPARISON_TRIGGERS
            .iter()
            .any(|t| text_lower.contains(t))
        {
            Intent::TemporalComparison
        } else if SUBJECT_BREAKDOWN_TRIGGERS
            .iter()
            .any(|t| text_lower.contains(t))
        {
            Intent::SubjectBreakdown
        } else {
            Intent::PointLookup
        }
    }
}

impl QueryAnalyzer for KeywordAnalyzer {
    fn analyze(&self, q: &Query) -> Result<QuerySlots, RetrievalError> {
        let text_lower = q.text.to_lowercase();
        let intent = Self::intent(&text_lower);

        let temporal = find_first_temporal(&q.text);
        let temporal_hint = temporal.map(|(_, slice)| slice.to_string());

        // Blank out the matched temporal span before tokenizing the rest.
        let mut remainder = q.text.clone();
        if let Some((_, slice)) = temporal {
            if let Some(pos) = remainder.find(slice) {
                let blank = " ".repeat(slice.chars().count());
                remainder.replace_range(pos..pos + slice.len(), &blank);
            }
        }

        let mut content_words: Vec<&str> = Vec::new();
        for raw in remainder.split_whitespace() {
            let token = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if token.is_empty() {
                continue;
            }
            let lower = token.to_lowercase();
            if STOPWORDS.contains(&lower.as_str()) {
                continue;
            }
            if TEMPORAL_COMPARISON_TRIGGERS
                .iter()
                .chain(SUBJECT_BREAKDOWN_TRIGGERS)
                .any(|t| lower.contains(t))
            {
                continue;
            }
            if token
                .chars()
                .all(|c| c.is_ascii_digit() || c == '.' || c == ',')
            {
                continue;
            }
            content_words.push(token);
        }
        let attribute_hint = if content_words.is_empty() {
            None
        } else {
            Some(content_words.join(" "))
        };

        let slots = QuerySlots {
            subject_hint: None,
            temporal_hint,
            attribute_hint,
            intent,
        };
        if !slots.has_hint() {
            return Err(RetrievalError::NoSlots);
        }
        Ok(slots)
    }
}
