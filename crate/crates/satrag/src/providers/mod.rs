//! Provider abstractions: embedding, completion, and subject extraction.
//!
//! The pipeline itself is pure; everything that could touch a model sits
//! behind these traits. Deterministic offline doubles live in [`mock`];
//! an OpenAI-compatible HTTP client lives in [`http`].

pub mod http;
pub mod mock;

pub use http::HttpProvider;
pub use mock::{
    CountingEmbedder, DefaultSubjectExtractor, EchoCompleter, FormulaicValidator,
    LlmSubjectExtractor, MockEmbedder, PlaceholderEntityCompleter, ScriptedCompleter,
};

use crate::cellgroups::DocumentMetadata;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider failure: {0}")]
    ProviderFailure(String),
    #[error("input of {len} characters exceeds provider limit {limit}")]
    InputTooLong { len: usize, limit: usize },
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("subject answer not in 'A > B > C' form: {0:?}")]
    UnparseableSubject(String),
}

/// A fixed-dimension embedding with its L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub components: Vec<f64>,
    pub norm: f64,
}

impl EmbeddingVector {
    /// Wrap raw components, computing the norm.
    pub fn new(components: Vec<f64>) -> EmbeddingVector {
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        EmbeddingVector { components, norm }
    }

    /// Scale components to unit norm (zero vectors stay zero).
    pub fn normalized(mut self) -> EmbeddingVector {
        if self.norm > 0.0 {
            for x in &mut self.components {
                *x /= self.norm;
            }
            self.norm = 1.0;
        }
        self
    }
}

/// Cosine similarity; zero vectors compare at 0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    debug_assert_eq!(a.components.len(), b.components.len());
    let dot: f64 = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(x, y)| x * y)
        .sum();
    dot / (a.norm * b.norm)
}

/// Embedding backend.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    /// One vector per input text, order preserved.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let mut out = self.embed(&[text.to_string()])?;
        Ok(out.remove(0))
    }
}

/// Completion backend.
pub trait Completer: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Subject-path extraction backend.
pub trait SubjectExtractor: Send + Sync {
    /// Ordered root→leaf subject labels for a cell's document context.
    fn extract_subject(
        &self,
        doc_meta: &DocumentMetadata,
        context: &str,
    ) -> Result<Vec<String>, ProviderError>;
}

/// What kind of backend a descriptor points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    Embedding,
    Completion,
}

/// Connection settings for a remote provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub kind: ProviderKind,
    /// Base URL; the OpenAI-compatible paths are appended to it.
    pub endpoint: String,
    pub model: String,
    /// Request timeout in milliseconds.
    pub timeout_ms: u64,
    /// Required for embedding providers.
    pub dimension: Option<usize>,
}

impl ProviderDescriptor {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if !self.endpoint.starts_with("http://") && !self.endpoint.starts_with("https://") {
            return Err(ProviderError::ProviderFailure(format!(
                "endpoint {:?} is not an http(s) URL",
                self.endpoint
            )));
        }
        if self.kind == ProviderKind::Embedding && self.dimension.is_none() {
            return Err(ProviderError::ProviderFailure(
                "embedding provider requires a dimension".to_string(),
            ));
        }
        Ok(())
    }
}
