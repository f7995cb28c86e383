//! Phase-one retrieval: hierarchical graph navigation.
//!
//! A query is analyzed into slot hints (subject / temporal / attribute +
//! intent), the hints are resolved to graph nodes by embedding similarity,
//! a forward (subject+temporal → attributes) and a reverse (attribute →
//! anchors) traversal run in parallel when their hints resolve, their
//! results intersect into composite keys, every leaf under a kept key is
//! scored against the query, structural neighbor expansion adds adjacent
//! temporal or sibling subject facts for comparison/breakdown intents, and
//! the merged candidates are ranked and truncated.
//!
//! A chunk-based retriever over raw passages and linearized table rows
//! serves as the graph-free baseline.

mod analyze;
mod baseline;
mod score;
mod traverse;

pub use analyze::{KeywordAnalyzer, QueryAnalyzer, STOPWORDS};
pub use baseline::{baseline_chunk_retrieve, corpus_chunks, Chunk, ChunkKind, ScoredChunk};
pub use score::{expand_neighbors, score_candidates};
pub use traverse::{
    forward_traverse, intersect_paths, resolve_label, reverse_traverse, ForwardResult,
    ReverseResult,
};

use crate::corpus::Corpus;
use crate::ids::NodeId;
use crate::providers::Embedder;
use crate::sat_graph::{CompositeKey, SatGraph};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A user question plus its contextual flag (1 = answering requires
/// surrounding document text in addition to table facts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    /// 0 = table-only, 1 = contextual.
    pub contextual_flag: u8,
}

impl Query {
    pub fn new(text: &str) -> Query {
        Query {
            text: text.to_string(),
            contextual_flag: 0,
        }
    }
}

/// What the query is asking for, which governs neighbor expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Intent {
    PointLookup,
    TemporalComparison,
    SubjectBreakdown,
}

/// Slot hints extracted from a query. At least one hint is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySlots {
    pub subject_hint: Option<String>,
    pub temporal_hint: Option<String>,
    pub attribute_hint: Option<String>,
    pub intent: Intent,
}

impl QuerySlots {
    pub fn has_hint(&self) -> bool {
        self.subject_hint.is_some()
            || self.temporal_hint.is_some()
            || self.attribute_hint.is_some()
    }
}

/// One retrieved fact: a leaf plus its resolved axis nodes and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTuple {
    pub subject: NodeId,
    pub temporal: NodeId,
    pub attribute: NodeId,
    pub value: String,
    /// Qualified source table id `doc_id/table_id`.
    pub source_table: String,
    pub cell_id: String,
    /// Similarity of the query to this fact's axis labels, in [0, 1].
    pub score: f64,
    /// 0 for directly retrieved facts; expansion distance otherwise.
    pub hops: usize,
}

impl EvidenceTuple {
    pub fn key(&self) -> CompositeKey {
        CompositeKey {
            subject: self.subject,
            temporal: self.temporal,
            attribute: self.attribute,
        }
    }
}

/// Retrieval mode: graph navigation or the chunk baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetrievalMode {
    SatGraph,
    ChunkBaseline,
}

/// Knobs for the retrieval pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub top_k: usize,
    /// Minimum cosine for a hint to resolve to a node label.
    pub similarity_threshold: f64,
    /// Neighbor expansion reach, in sibling positions.
    pub expansion_radius: usize,
    pub enable_sne: bool,
    pub enable_fusion: bool,
    pub mode: RetrievalMode,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            top_k: 5,
            similarity_threshold: 0.35,
            expansion_radius: 1,
            enable_sne: true,
            enable_fusion: true,
            mode: RetrievalMode::SatGraph,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RetrievalError {
    /// The analyzer could extract no hint at all.
    #[error("query yields no slot hints")]
    NoSlots,
    /// No graph node label reached the similarity threshold for any hint.
    #[error("no anchor resolved: {0}")]
    AnchorNotResolved(String),
    /// Both traversal directions ran but their results are disjoint.
    #[error("forward and reverse paths do not intersect")]
    EmptyIntersection,
}

/// Per-query trace: what resolved, how large each stage was, what fell
/// back. Serialized when verbose diagnostics are requested.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryDiagnostics {
    pub slots: Option<QuerySlots>,
    pub resolved_subject: Option<String>,
    pub resolved_temporal: Option<String>,
    pub resolved_attribute: Option<String>,
    pub forward_attribute_count: usize,
    pub reverse_anchor_count: usize,
    pub intersection_size: usize,
    pub expansion_added: usize,
    /// True when an empty intersection fell back to single-path union.
    pub intersection_fallback: bool,
    pub notes: Vec<String>,
}

/// Everything a retrieval run returns. Graph mode fills `evidence`;
/// chunk-baseline mode fills `chunks`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetrievalResult {
    pub evidence: Vec<EvidenceTuple>,
    pub chunks: Vec<ScoredChunk>,
    pub diagnostics: QueryDiagnostics,
}

impl Default for QuerySlots {
    fn default() -> Self {
        QuerySlots {
            subject_hint: None,
            temporal_hint: None,
            attribute_hint: None,
            intent: Intent::PointLookup,
        }
    }
}

/// Run the full retrieval pipeline for one query.
///
/// Slot-analysis or anchor-resolution failures are not errors at this
/// level: they produce an empty result with the failure recorded in the
/// diagnostics, so callers can decide to fall back to the chunk baseline.
/// `corpus` is only required for chunk-baseline mode.
pub fn retrieve(
    graph: &SatGraph,
    corpus: Option<&Corpus>,
    query: &Query,
    cfg: &RetrievalConfig,
    embedder: &dyn Embedder,
    analyzer: &dyn QueryAnalyzer,
) -> RetrievalResult {
    let mut result = RetrievalResult::default();

    if cfg.mode == RetrievalMode::ChunkBaseline {
        match corpus {
            Some(c) => {
                result.chunks = baseline_chunk_retrieve(c, query, embedder, cfg.top_k);
            }
            None => result
                .diagnostics
                .notes
                .push("chunk-baseline mode requires a corpus".to_string()),
        }
        return result;
    }

    let slots = match analyzer.analyze(query) {
        Ok(s) => s,
        Err(e) => {
            result.diagnostics.notes.push(e.to_string());
            return result;
        }
    };
    result.diagnostics.slots = Some(slots.clone());

    let forward = if slots.subject_hint.is_some() || slots.temporal_hint.is_some() {
        match forward_traverse(
            graph,
            slots.subject_hint.as_deref(),
            slots.temporal_hint.as_deref(),
            embedder,
            cfg.similarity_threshold,
        ) {
            Ok(f) => Some(f),
            Err(e) => {
                result.diagnostics.notes.push(format!("forward: {e}"));
                None
            }
        }
    } else {
        None
    };
    let reverse = match &slots.attribute_hint {
        Some(hint) => match reverse_traverse(
            graph,
            hint,
            embedder,
            cfg.similarity_threshold,
        ) {
            Ok(r) => Some(r),
            Err(e) => {
                result.diagnostics.notes.push(format!("reverse: {e}"));
                None
            }
        },
        None => None,
    };

    if let Some(f) = &forward {
        result.diagnostics.forward_attribute_count = f.attributes.len();
        result.diagnostics.resolved_subject =
            f.subject.map(|(id, _)| graph.subjects[&id].label.clone());
        result.diagnostics.resolved_temporal =
            f.temporal.map(|(id, _)| graph.temporals[&id].label());
    }
    if let Some(r) = &reverse {
        result.diagnostics.reverse_anchor_count = r.anchors.len();
        result.diagnostics.resolved_attribute =
            Some(graph.attributes[&r.attribute.0].label.clone());
    }

    if forward.is_none() && reverse.is_none() {
        result
            .diagnostics
            .notes
            .push(RetrievalError::AnchorNotResolved("no path available".into()).to_string());
        return result;
    }

    let keys = match intersect_paths(forward.as_ref(), reverse.as_ref(), graph) {
        Ok(keys) => keys,
        Err(RetrievalError::EmptyIntersection) => {
            result.diagnostics.intersection_fallback = true;
            result
                .diagnostics
                .notes
                .push("empty intersection; union of single-path candidates".to_string());
            let mut union = traverse::keys_from_forward(forward.as_ref(), graph);
            union.extend(traverse::keys_from_reverse(reverse.as_ref(), graph));
            union
        }
        Err(other) => {
            result.diagnostics.notes.push(other.to_string());
            return result;
        }
    };
    result.diagnostics.intersection_size = keys.len();
    if keys.is_empty() {
        return result;
    }

    let mut candidates = score_candidates(graph, &keys, query, embedder);

    if cfg.enable_sne && cfg.expansion_radius >= 1 && slots.intent != Intent::PointLookup {
        let mut expansions = Vec::new();
        for tuple in &candidates {
            expansions.extend(expand_neighbors(
                graph,
                tuple,
                slots.intent,
                cfg.expansion_radius,
            ));
        }
        result.diagnostics.expansion_added = expansions.len();
        candidates.extend(expansions);
    }

    // Dedup by cell id, keeping the best (highest score, fewest hops).
    let mut best: std::collections::BTreeMap<String, EvidenceTuple> =
        std::collections::BTreeMap::new();
    for tuple in candidates {
        match best.get(&tuple.cell_id) {
            Some(cur)
                if (cur.score, std::cmp::Reverse(cur.hops))
                    >= (tuple.score, std::cmp::Reverse(tuple.hops)) => {}
            _ => {
                best.insert(tuple.cell_id.clone(), tuple);
            }
        }
    }
    let mut ranked: Vec<EvidenceTuple> = best.into_values().collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.cell_id.cmp(&b.cell_id))
    });
    ranked.truncate(cfg.top_k);
    result.evidence = ranked;
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::MockEmbedder;
    use crate::sat_graph::{build_graph, FactTuple};

    fn fact(s: &str, t: &str, a: &str, v: &str, cell: &str) -> FactTuple {
        FactTuple {
            subject_path: vec![s.to_string()],
            temporal_raw: t.to_string(),
            attribute: a.to_string(),
            value: v.to_string(),
            cell_id: cell.to_string(),
        }
    }

    fn toy_graph() -> SatGraph {
        build_graph(&[
            fact("CompanyA", "2018", "Revenue", "90", "d1/t0/1/1"),
            fact("CompanyA", "2019", "Revenue", "100", "d1/t0/1/2"),
            fact("CompanyA", "2020", "Revenue", "110", "d1/t0/1/3"),
            fact("CompanyA", "2019", "Costs", "40", "d1/t0/2/2"),
            fact("CompanyB", "2019", "Revenue", "55", "d2/t0/1/1"),
        ])
    }

    #[test]
    fn fully_specified_query_puts_gold_cell_first() {
        let g = toy_graph();
        let q = Query::new("CompanyA Costs 2019");
        let cfg = RetrievalConfig::default();
        let result = retrieve(
            &g,
            None,
            &q,
            &cfg,
            &MockEmbedder::default(),
            &KeywordAnalyzer::default(),
        );
        assert!(!result.evidence.is_empty());
        assert_eq!(result.evidence[0].cell_id, "d1/t0/2/2");
        assert_eq!(result.evidence[0].value, "40");
    }

    #[test]
    fn comparison_intent_pulls_adjacent_years() {
        let g = toy_graph();
        let q = Query::new("growth of CompanyA Revenue in 2019");
        let cfg = RetrievalConfig {
            top_k: 10,
            ..RetrievalConfig::default()
        };
        let result = retrieve(
            &g,
            None,
            &q,
            &cfg,
            &MockEmbedder::default(),
            &KeywordAnalyzer::default(),
        );
        let cells: Vec<&str> = result.evidence.iter().map(|e| e.cell_id.as_str()).collect();
        assert!(cells.contains(&"d1/t0/1/2"), "focal 2019 cell present");
        assert!(cells.contains(&"d1/t0/1/1"), "2018 neighbor present: {cells:?}");
        assert!(cells.contains(&"d1/t0/1/3"), "2020 neighbor present: {cells:?}");
    }

    #[test]
    fn disabling_sne_drops_expansion_only() {
        let g = toy_graph();
        let q = Query::new("growth of Revenue in 2019");
        let base = RetrievalConfig {
            top_k: 50,
            ..RetrievalConfig::default()
        };
        let without = RetrievalConfig {
            enable_sne: false,
            ..base.clone()
        };
        let e = MockEmbedder::default();
        let a = KeywordAnalyzer::default();
        let on = retrieve(&g, None, &q, &base, &e, &a);
        let off = retrieve(&g, None, &q, &without, &e, &a);
        let on_cells: std::collections::BTreeSet<&str> =
            on.evidence.iter().map(|t| t.cell_id.as_str()).collect();
        let off_cells: std::collections::BTreeSet<&str> =
            off.evidence.iter().map(|t| t.cell_id.as_str()).collect();
        assert!(off_cells.is_subset(&on_cells));
        assert_eq!(on.evidence[0].cell_id, off.evidence[0].cell_id);
        assert!(off.evidence.iter().all(|t| t.hops == 0));
    }

    #[test]
    fn unresolvable_query_returns_empty_with_diagnostics() {
        let g = toy_graph();
        let q = Query::new("qqqq zzzz xxxx");
        let cfg = RetrievalConfig::default();
        let result = retrieve(
            &g,
            None,
            &q,
            &cfg,
            &MockEmbedder::default(),
            &KeywordAnalyzer::default(),
        );
        assert!(result.evidence.is_empty());
        assert!(!result.diagnostics.notes.is_empty());
    }

    #[test]
    fn monotone_top_k_prefix() {
        let g = toy_graph();
        let q = Query::new("CompanyA Revenue 2019");
        let e = MockEmbedder::default();
        let a = KeywordAnalyzer::default();
        let mut prev: Option<Vec<String>> = None;
        for k in 1..=6 {
            let cfg = RetrievalConfig {
                top_k: k,
                ..RetrievalConfig::default()
            };
            let ids: Vec<String> = retrieve(&g, None, &q, &cfg, &e, &a)
                .evidence
                .iter()
                .map(|t| t.cell_id.clone())
                .collect();
            if let Some(p) = &prev {
                assert_eq!(&ids[..p.len().min(ids.len())], &p[..p.len().min(ids.len())]);
            }
            prev = Some(ids);
        }
    }

    #[test]
    fn returned_keys_are_valid_in_graph() {
        let g = toy_graph();
        let q = Query::new("Revenue of CompanyB in 2019");
        let cfg = RetrievalConfig {
            top_k: 20,
            ..RetrievalConfig::default()
        };
        let result = retrieve(
            &g,
            None,
            &q,
            &cfg,
            &MockEmbedder::default(),
            &KeywordAnalyzer::default(),
        );
        assert!(!result.evidence.is_empty());
        for t in &result.evidence {
            let leaves = g.leaves_for_key(&t.key());
            assert!(leaves.iter().any(|l| l.provenance.cell_id == t.cell_id));
            assert!((0.0..=1.0).contains(&t.score));
        }
    }
}
