//! Deterministic offline providers.
//!
//! These run the full pipeline with no network: a bag-of-words hash
//! embedder, a completion double that echoes the prompt's Facts section, a
//! scripted completer for tests, and subject extractors (entity-based
//! default plus an LLM-backed variant).

use super::{Completer, Embedder, EmbeddingVector, ProviderError, SubjectExtractor};
use crate::cellgroups::DocumentMetadata;
use crate::ids::fnv1a64;
use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

/// Deterministic bag-of-words embedder: tokenize on non-alphanumeric
/// characters (case-folded), FNV-1a hash each token into one of
/// `dimension` buckets, accumulate counts, L2-normalize.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    pub dimension: usize,
    /// Maximum input length in characters.
    pub max_input_chars: usize,
}

pub const MOCK_DIMENSION: usize = 256;

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder {
            dimension: MOCK_DIMENSION,
            max_input_chars: 100_000,
        }
    }
}

impl MockEmbedder {
    fn embed_text(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let len = text.chars().count();
        if len > self.max_input_chars {
            return Err(ProviderError::InputTooLong {
                len,
                limit: self.max_input_chars,
            });
        }
        let mut components = vec![0.0f64; self.dimension];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let lowered = token.to_lowercase();
            let bucket = (fnv1a64(lowered.as_bytes()) % self.dimension as u64) as usize;
            components[bucket] += 1.0;
        }
        Ok(EmbeddingVector::new(components).normalized())
    }
}

impl Embedder for MockEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        texts.iter().map(|t| self.embed_text(t)).collect()
    }
}

/// Wraps any embedder and counts how many texts were embedded. Used to
/// prove code paths are embedding-free.
pub struct CountingEmbedder {
    inner: Arc<dyn Embedder>,
    calls: AtomicUsize,
    texts: AtomicUsize,
}

impl CountingEmbedder {
    pub fn new(inner: Arc<dyn Embedder>) -> CountingEmbedder {
        CountingEmbedder {
            inner,
            calls: AtomicUsize::new(0),
            texts: AtomicUsize::new(0),
        }
    }

    /// Number of `embed` invocations so far.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Number of individual texts embedded so far.
    pub fn text_count(&self) -> usize {
        self.texts.load(Ordering::SeqCst)
    }
}

impl Embedder for CountingEmbedder {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.texts.fetch_add(texts.len(), Ordering::SeqCst);
        self.inner.embed(texts)
    }
}

/// Completion double: returns the prompt's Facts section verbatim,
/// prefixed with "ECHO:". Lets generation-dependent metrics run with no
/// model access.
#[derive(Debug, Clone, Default)]
pub struct EchoCompleter;

impl Completer for EchoCompleter {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        if prompt.is_empty() {
            return Err(ProviderError::ProviderFailure(
                "empty prompt".to_string(),
            ));
        }
        let mut out = Vec::new();
        let mut in_facts = false;
        for line in prompt.lines() {
            if line.trim() == "Facts:" {
                in_facts = true;
                continue;
            }
            if in_facts {
                if line.trim().is_empty() {
                    break;
                }
                out.push(line);
            }
        }
        Ok(format!("ECHO:\n{}", out.join("\n")))
    }
}

/// Entity-enrichment double: answers the entity prompt with the first
/// word of the prompt's last "Document title:" line as a JSON body.
/// Keeps offline ingestion deterministic without a model.
#[derive(Debug, Clone, Default)]
pub struct PlaceholderEntityCompleter;

impl Completer for PlaceholderEntityCompleter {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let title_line = prompt
            .lines()
            .filter_map(|l| l.trim().strip_prefix("Document title:"))
            .last();
        let entity = title_line
            .and_then(|t| t.split_whitespace().next())
            .unwrap_or("Entity");
        Ok(serde_json::json!({"entity": entity, "type": "Placeholder"}).to_string())
    }
}

/// Validation double: accepts every candidate pair, answering with a
/// templated question/answer built from the prompt's cell lines.
/// Offline stand-in for an LLM validator.
#[derive(Debug, Clone, Default)]
pub struct FormulaicValidator;

impl Completer for FormulaicValidator {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let mut values = Vec::new();
        let mut headers = Vec::new();
        for line in prompt.lines() {
            let line = line.trim();
            if !line.starts_with("- value:") {
                continue;
            }
            for field in line.trim_start_matches("- ").split(" | ") {
                if let Some(v) = field.strip_prefix("value: ") {
                    values.push(v.trim().to_string());
                } else if let Some(h) = field.strip_prefix("headers: ") {
                    headers.push(h.trim().to_string());
                }
            }
        }
        if values.is_empty() {
            return Ok(
                serde_json::json!({"reject": true, "reason": "no cells rendered"}).to_string(),
            );
        }
        let question = format!("What values were recorded for {}?", headers.join(" and "));
        let answer = format!("The recorded values are {}.", values.join(" and "));
        Ok(serde_json::json!({"question": question, "answer": answer}).to_string())
    }
}

/// Test completer that replays a fixed script of responses in order,
/// falling back to a default once the script runs out.
pub struct ScriptedCompleter {
    script: Mutex<VecDeque<String>>,
    default: Option<String>,
    pub calls: AtomicUsize,
}

impl ScriptedCompleter {
    pub fn new(responses: Vec<String>) -> ScriptedCompleter {
        ScriptedCompleter {
            script: Mutex::new(responses.into()),
            default: None,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_default(mut self, default: &str) -> ScriptedCompleter {
        self.default = Some(default.to_string());
        self
    }
}

impl Completer for ScriptedCompleter {
    fn complete(&self, _prompt: &str) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let next = self.script.lock().expect("script lock").pop_front();
        match next.or_else(|| self.default.clone()) {
            Some(r) => Ok(r),
            None => Err(ProviderError::ProviderFailure(
                "script exhausted".to_string(),
            )),
        }
    }
}

/// Deterministic default: the subject path is the document entity, or
/// empty when no entity is known.
#[derive(Debug, Clone, Default)]
pub struct DefaultSubjectExtractor;

impl SubjectExtractor for DefaultSubjectExtractor {
    fn extract_subject(
        &self,
        doc_meta: &DocumentMetadata,
        _context: &str,
    ) -> Result<Vec<String>, ProviderError> {
        if doc_meta.entity.trim().is_empty() {
            Ok(Vec::new())
        } else {
            Ok(vec![doc_meta.entity.trim().to_string()])
        }
    }
}

/// LLM-backed subject extraction: asks the completer for a one-line
/// `A > B > C` answer; unparseable output falls back to the default rule.
pub struct LlmSubjectExtractor<C: Completer> {
    pub completer: C,
}

impl<C: Completer> LlmSubjectExtractor<C> {
    pub fn new(completer: C) -> Self {
        LlmSubjectExtractor { completer }
    }

    fn parse_answer(answer: &str) -> Result<Vec<String>, ProviderError> {
        let line = answer
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or("");
        if line.is_empty() {
            return Err(ProviderError::UnparseableSubject(answer.to_string()));
        }
        if line.contains('>') {
            let parts: Vec<String> = line.split('>').map(|p| p.trim().to_string()).collect();
            if parts.iter().all(|p| !p.is_empty()) {
                return Ok(parts);
            }
            return Err(ProviderError::UnparseableSubject(answer.to_string()));
        }
        // A single bare label is acceptable; free prose is not.
        if line.split_whitespace().count() <= 4 && !line.ends_with('.') {
            return Ok(vec![line.to_string()]);
        }
        Err(ProviderError::UnparseableSubject(answer.to_string()))
    }
}

impl<C: Completer> SubjectExtractor for LlmSubjectExtractor<C> {
    fn extract_subject(
        &self,
        doc_meta: &DocumentMetadata,
        context: &str,
    ) -> Result<Vec<String>, ProviderError> {
        let prompt = format!(
            "Identify the subject hierarchy for a table cell.\n\
             Document title: {}\nEntity: {}\nContext: {}\n\
             Answer with one line in the form: Parent > Child",
            doc_meta.title, doc_meta.entity, context
        );
        let answer = self.completer.complete(&prompt)?;
        match Self::parse_answer(&answer) {
            Ok(path) => Ok(path),
            Err(_) => DefaultSubjectExtractor.extract_subject(doc_meta, context),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::cosine;
    use super::*;

    fn meta(entity: &str) -> DocumentMetadata {
        DocumentMetadata {
            doc_id: "d".into(),
            title: "T".into(),
            entity: entity.into(),
            context_snippet: String::new(),
        }
    }

    #[test]
    fn identical_texts_embed_identically() {
        let e = MockEmbedder::default();
        let a = e.embed_one("Total assets 2019").unwrap();
        let b = e.embed_one("Total assets 2019").unwrap();
        assert_eq!(a, b);
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn token_order_does_not_matter() {
        let e = MockEmbedder::default();
        let a = e.embed_one("revenue 2019").unwrap();
        let b = e.embed_one("2019 revenue").unwrap();
        // Hand-derived: both texts have count 1 in the buckets for
        // "revenue" and "2019"; after normalization the vectors are equal.
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_tokens_are_orthogonal() {
        let e = MockEmbedder::default();
        // Fixture chosen collision-free for FNV-1a mod 256.
        let a = e.embed_one("alpha").unwrap();
        let b = e.embed_one("omega").unwrap();
        assert_eq!(cosine(&a, &b), 0.0);
    }

    #[test]
    fn case_folding_merges_tokens() {
        let e = MockEmbedder::default();
        let a = e.embed_one("ASSETS").unwrap();
        let b = e.embed_one("assets").unwrap();
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_scales_counts_but_cosine_sees_direction() {
        let e = MockEmbedder::default();
        let a = e.embed_one("cash cash cash").unwrap();
        let b = e.embed_one("cash").unwrap();
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_cosine_is_hand_computable() {
        let e = MockEmbedder::default();
        // "net income" vs "net" — one shared token of two:
        // cosine = 1 / sqrt(2).
        let a = e.embed_one("net income").unwrap();
        let b = e.embed_one("net").unwrap();
        assert!((cosine(&a, &b) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_long_input_errors() {
        let e = MockEmbedder {
            dimension: 16,
            max_input_chars: 5,
        };
        assert!(matches!(
            e.embed_one("abcdef"),
            Err(ProviderError::InputTooLong { len: 6, limit: 5 })
        ));
    }

    #[test]
    fn echo_returns_facts_section() {
        let prompt = "Answer using the evidence.\n\nFacts:\n[F1] X's Assets is 1,200 at 2019.\n[F2] Y's Costs is 800 at 2020.\n\nPassages:\n[P1] Some prose.\n\nQuestion: q?\n";
        let out = EchoCompleter.complete(prompt).unwrap();
        assert_eq!(
            out,
            "ECHO:\n[F1] X's Assets is 1,200 at 2019.\n[F2] Y's Costs is 800 at 2020."
        );
    }

    #[test]
    fn counting_embedder_counts() {
        let counter = CountingEmbedder::new(Arc::new(MockEmbedder::default()));
        assert_eq!(counter.call_count(), 0);
        counter
            .embed(&["a".to_string(), "b".to_string()])
            .unwrap();
        assert_eq!(counter.call_count(), 1);
        assert_eq!(counter.text_count(), 2);
    }

    #[test]
    fn default_extractor_returns_entity_or_empty() {
        let d = DefaultSubjectExtractor;
        assert_eq!(
            d.extract_subject(&meta("Morgan Stanley"), "").unwrap(),
            vec!["Morgan Stanley".to_string()]
        );
        assert!(d.extract_subject(&meta(""), "").unwrap().is_empty());
    }

    #[test]
    fn llm_extractor_parses_nested_form() {
        let llm = LlmSubjectExtractor::new(ScriptedCompleter::new(vec![
            "Hardware > Laptop".to_string(),
        ]));
        assert_eq!(
            llm.extract_subject(&meta("x"), "").unwrap(),
            vec!["Hardware".to_string(), "Laptop".to_string()]
        );
    }

    #[test]
    fn llm_extractor_falls_back_on_prose() {
        let llm = LlmSubjectExtractor::new(ScriptedCompleter::new(vec![
            "The subject of this document appears to be a financial filing."
                .to_string(),
        ]));
        assert_eq!(
            llm.extract_subject(&meta("Morgan Stanley"), "").unwrap(),
            vec!["Morgan Stanley".to_string()]
        );
    }
}
