//! Dual-path graph traversal: hint resolution, forward (subject/temporal →
//! attributes), reverse (attribute → anchors), and path intersection.

use super::RetrievalError;
use crate::ids::NodeId;
use crate::providers::{cosine, Embedder};
use crate::sat_graph::{CompositeKey, SatGraph};
use std::collections::BTreeSet;

/// Resolve a free-text hint to the best-matching node label by embedding
/// cosine. Returns the winner and its similarity, or `None` when nothing
/// reaches `tau`. Ties break on (similarity desc, label asc, id asc).
pub fn resolve_label(
    hint: &str,
    candidates: &[(NodeId, String)],
    embedder: &dyn Embedder,
    tau: f64,
) -> Option<(NodeId, f64)> {
    if candidates.is_empty() {
        return None;
    }
    let mut texts: Vec<String> = vec![hint.to_string()];
    texts.extend(candidates.iter().map(|(_, label)| label.clone()));
    let vectors = embedder.embed(&texts).ok()?;
    let (hint_vec, label_vecs) = vectors.split_first()?;

    let mut best: Option<(f64, &str, NodeId)> = None;
    for ((id, label), vec) in candidates.iter().zip(label_vecs) {
        let sim = cosine(hint_vec, vec);
        if sim < tau {
            continue;
        }
        let candidate = (sim, label.as_str(), *id);
        best = match best {
            None => Some(candidate),
            Some(cur) => {
                let better = candidate.0.total_cmp(&cur.0).then_with(|| {
                    // Prefer the smaller label, then the smaller id.
                    cur.1.cmp(candidate.1).then(cur.2.cmp(&candidate.2))
                });
                if better == std::cmp::Ordering::Greater {
                    Some(candidate)
                } else {
                    Some(cur)
                }
            }
        };
    }
    best.map(|(sim, _, id)| (id, sim))
}

/// Result of the top-down path: resolved anchors, their descendant
/// scopes, and the attributes anchored inside the scopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    pub subject: Option<(NodeId, f64)>,
    pub temporal: Option<(NodeId, f64)>,
    /// Descendants of the resolved subject (self included); `None` when
    /// the subject dimension is unconstrained.
    pub subject_scope: Option<BTreeSet<NodeId>>,
    pub temporal_scope: Option<BTreeSet<NodeId>>,
    /// Attributes with at least one anchor inside the scopes.
    pub attributes: BTreeSet<NodeId>,
}

/// Result of the bottom-up path: the resolved attribute and its full
/// anchor set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseResult {
    pub attribute: (NodeId, f64),
    pub anchors: BTreeSet<(NodeId, NodeId)>,
}

/// Top-down search. At least one hint must resolve; the scope on an
/// unresolved or absent dimension stays unconstrained.
pub fn forward_traverse(
    g: &SatGraph,
    subject_hint: Option<&str>,
    temporal_hint: Option<&str>,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<ForwardResult, RetrievalError> {
    let subject = subject_hint.and_then(|hint| {
        let candidates: Vec<(NodeId, String)> = g
            .subjects
            .values()
            .map(|n| (n.node_id, n.label.clone()))
            .collect();
        resolve_label(hint, &candidates, embedder, tau)
    });
    let temporal = temporal_hint.and_then(|hint| {
        let candidates: Vec<(NodeId, String)> = g
            .temporals
            .values()
            .map(|n| (n.node_id, n.label()))
            .collect();
        resolve_label(hint, &candidates, embedder, tau)
    });
    if subject.is_none() && temporal.is_none() {
        return Err(RetrievalError::AnchorNotResolved(format!(
            "no subject/temporal node above threshold for hints {:?}/{:?}",
            subject_hint, temporal_hint
        )));
    }

    let subject_scope = subject.map(|(id, _)| g.subject_descendants(id));
    let temporal_scope = temporal.map(|(id, _)| g.temporal_descendants(id));

    let mut attributes = BTreeSet::new();
    for attr in g.attributes.values() {
        let anchored_in_scope = attr.anchors.iter().any(|(s, t)| {
            subject_scope.as_ref().map_or(true, |scope| scope.contains(s))
                && temporal_scope.as_ref().map_or(true, |scope| scope.contains(t))
        });
        if anchored_in_scope {
            attributes.insert(attr.node_id);
        }
    }

    Ok(ForwardResult {
        subject,
        temporal,
        subject_scope,
        temporal_scope,
        attributes,
    })
}

/// Bottom-up search: resolve the attribute hint and surface its anchors.
pub fn reverse_traverse(
    g: &SatGraph,
    attribute_hint: &str,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<ReverseResult, RetrievalError> {
    let candidates: Vec<(NodeId, String)> = g
        .attributes
        .values()
        .map(|n| (n.node_id, n.label.clone()))
        .collect();
    let attribute = resolve_label(attribute_hint, &candidates, embedder, tau)
        .ok_or_else(|| {
            RetrievalError::AnchorNotResolved(format!(
                "no attribute node above threshold for hint `{attribute_hint}`"
            ))
        })?;
    let anchors = g.attributes[&attribute.0].anchors.clone();
    Ok(ReverseResult { attribute, anchors })
}

/// Candidate keys from the forward side alone: indexed keys whose
/// attribute was admitted and whose subject/temporal lie in the scopes.
pub(super) fn keys_from_forward(
    forward: Option<&ForwardResult>,
    g: &SatGraph,
) -> BTreeSet<CompositeKey> {
    let Some(f) = forward else {
        return BTreeSet::new();
    };
    g.index
        .keys()
        .filter(|k| f.attributes.contains(&k.attribute))
        .filter(|k| {
            f.subject_scope
                .as_ref()
                .map_or(true, |scope| scope.contains(&k.subject))
        })
        .filter(|k| {
            f.temporal_scope
                .as_ref()
                .map_or(true, |scope| scope.contains(&k.temporal))
        })
        .copied()
        .collect()
}

/// Candidate keys from the reverse side alone: the resolved attribute
/// combined with each of its anchors.
pub(super) fn keys_from_reverse(
    reverse: Option<&ReverseResult>,
    g: &SatGraph,
) -> BTreeSet<CompositeKey> {
    let Some(r) = reverse else {
        return BTreeSet::new();
    };
    r.anchors
        .iter()
        .map(|(s, t)| CompositeKey {
            subject: *s,
            temporal: *t,
            attribute: r.attribute.0,
        })
        .filter(|k| g.index.contains_key(k))
        .collect()
}

/// Combine the two paths into validated composite keys.
///
/// Both present: keep indexed keys whose attribute was admitted by the
/// forward path and whose (subject, temporal) appears among the reverse
/// anchors; an empty outcome is the `EmptyIntersection` signal (the
/// caller falls back to the union of single-path candidates). One side
/// present: that side's keys directly. Keys without leaves never surface.
pub fn intersect_paths(
    forward: Option<&ForwardResult>,
    reverse: Option<&ReverseResult>,
    g: &SatGraph,
) -> Result<BTreeSet<CompositeKey>, RetrievalError> {
    let keys: BTreeSet<CompositeKey> = match (forward, reverse) {
        (Some(f), Some(r)) => g
            .index
            .keys()
            .filter(|k| f.attributes.contains(&k.attribute))
            .filter(|k| r.anchors.contains(&(k.subject, k.temporal)))
            .copied()
            .collect(),
        (Some(_), None) => keys_from_forward(forward, g),
        (None, Some(_)) => keys_from_reverse(reverse, g),
        (None, None) => BTreeSet::new(),
    };
    let keys: BTreeSet<CompositeKey> = keys
        .into_iter()
        .filter(|k| g.index.get(k).is_some_and(|set| !set.is_empty()))
        .collect();
    if keys.is_empty() && forward.is_some() && reverse.is_some() {
        return Err(RetrievalError::EmptyIntersection);
    }
    Ok(keys)
}
