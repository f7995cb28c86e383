//! Candidate scoring (query ↔ composite-key similarity) and structural
//! neighbor expansion along the graph's sibling axes.

use super::{EvidenceTuple, Intent, Query};
use crate::ids::qualified_table_id;
use crate::providers::{cosine, Embedder};
use crate::sat_graph::{CompositeKey, SatGraph};
use std::collections::BTreeSet;

/// Per-hop multiplicative decay applied to expanded neighbors.
pub const NEIGHBOR_DECAY: f64 = 0.9;

fn key_text(g: &SatGraph, key: &CompositeKey) -> String {
    let s = g
        .subjects
        .get(&key.subject)
        .map(|n| n.label.as_str())
        .unwrap_or_default();
    let t = g
        .temporals
        .get(&key.temporal)
        .map(|n| n.label())
        .unwrap_or_default();
    let a = g
        .attributes
        .get(&key.attribute)
        .map(|n| n.label.as_str())
        .unwrap_or_default();
    format!("{s} {t} {a}")
}

fn tuples_for_key(g: &SatGraph, key: &CompositeKey, score: f64, hops: usize) -> Vec<EvidenceTuple> {
    let Some(leaf_ids) = g.index.get(key) else {
        return Vec::new();
    };
    leaf_ids
        .iter()
        .filter_map(|leaf_id| g.leaves.get(leaf_id))
        .map(|leaf| EvidenceTuple {
            subject: key.subject,
            temporal: key.temporal,
            attribute: key.attribute,
            value: leaf.value.clone(),
            source_table: qualified_table_id(&leaf.provenance.doc_id, &leaf.provenance.table_id),
            cell_id: leaf.provenance.cell_id.clone(),
            score: score.clamp(0.0, 1.0),
            hops,
        })
        .collect()
}

/// Score every candidate key against the query text: cosine between the
/// query embedding and the embedding of "subject temporal attribute",
/// clamped to [0, 1]. One tuple per value leaf under the key.
pub fn score_candidates(
    g: &SatGraph,
    keys: &BTreeSet<CompositeKey>,
    query: &Query,
    embedder: &dyn Embedder,
) -> Vec<EvidenceTuple> {
    if keys.is_empty() {
        return Vec::new();
    }
    let mut texts: Vec<String> = vec![query.text.clone()];
    let ordered: Vec<&CompositeKey> = keys.iter().collect();
    texts.extend(ordered.iter().map(|k| key_text(g, k)));
    let Ok(vectors) = embedder.embed(&texts) else {
        return Vec::new();
    };
    let (query_vec, key_vecs) = match vectors.split_first() {
        Some(split) => split,
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    for (key, vec) in ordered.iter().zip(key_vecs) {
        let score = cosine(query_vec, vec);
        out.extend(tuples_for_key(g, key, score, 0));
    }
    out
}

/// Expand one scored tuple along the sibling axis selected by the query
/// intent. Temporal comparison walks chronologically adjacent temporal
/// siblings within `radius` positions (hop count = position distance);
/// subject breakdown walks subject siblings at one hop. Expanded scores
/// decay by `NEIGHBOR_DECAY` per hop; point lookups never expand.
pub fn expand_neighbors(
    g: &SatGraph,
    focal: &EvidenceTuple,
    intent: Intent,
    radius: usize,
) -> Vec<EvidenceTuple> {
    match intent {
        Intent::PointLookup => Vec::new(),
        Intent::TemporalComparison => {
            let siblings = g.temporal_siblings(focal.temporal);
            let Some(pos) = siblings.iter().position(|id| *id == focal.temporal) else {
                return Vec::new();
            };
            let mut out = Vec::new();
            for (i, sibling) in siblings.iter().enumerate() {
                if i == pos {
                    continue;
                }
                let hops = pos.abs_diff(i);
                if hops > radius {
                    continue;
                }
                let key = CompositeKey {
                    subject: focal.subject,
                    temporal: *sibling,
                    attribute: focal.attribute,
                };
                let score = focal.score * NEIGHBOR_DECAY.powi(hops as i32);
                out.extend(tuples_for_key(g, &key, score, hops));
            }
            out
        }
        Intent::SubjectBreakdown => {
            let mut out = Vec::new();
            for sibling in g.subject_siblings(focal.subject) {
                if sibling == focal.subject {
                    continue;
                }
                let key = CompositeKey {
                    subject: sibling,
                    temporal: focal.temporal,
                    attribute: focal.attribute,
                };
                let score = focal.score * NEIGHBOR_DECAY;
                out.extend(tuples_for_key(g, &key, score, 1));
            }
            out
        }
    }
}
