//! The composite fact graph.
//!
//! Facts extracted from tables are organized along three axes: a *subject*
//! forest (who/what the fact is about, hierarchical), a *temporal* forest
//! (when, with calendar containment: day under month under year, quarter
//! under year), and a flat set of *attribute* nodes (what is measured).
//! Each fact becomes a value leaf addressed by a composite key
//! (subject, temporal, attribute); the index maps every key to the set of
//! leaves carrying it, and every leaf points back to exactly one source
//! table cell.
//!
//! After construction the graph is immutable and safe to share across
//! threads for concurrent reads.

mod build;
mod lift;
mod persist;
mod validate;

pub use build::build_graph;
pub use lift::{lift_cell_group, LiftError};
pub use persist::{load_graph, save_graph, PersistError, FORMAT_VERSION};
pub use validate::{validate_graph, Finding, ValidationReport};

use crate::ids::{LeafId, NodeId};
use crate::temporal::TemporalValue;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Node of the subject forest. `(label, parent)` is unique; roots have no
/// parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectNode {
    pub node_id: NodeId,
    pub label: String,
    pub parent: Option<NodeId>,
}

/// Node of the temporal forest. Node identity is the canonical rendering
/// of `normalized`; `raw_label` keeps the (lexicographically smallest)
/// source text that mapped here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalNode {
    pub node_id: NodeId,
    pub raw_label: String,
    pub normalized: TemporalValue,
    pub parent: Option<NodeId>,
}

impl TemporalNode {
    /// Canonical display label (also the identity the node id derives from).
    pub fn label(&self) -> String {
        self.normalized.canonical_label()
    }
}

/// Attribute node: a semantic convergence point. `anchors` records every
/// (subject, temporal) pair that maps onto this attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeNode {
    pub node_id: NodeId,
    /// Display label: the lexicographically smallest variant observed.
    pub label: String,
    /// Case-folded, whitespace-collapsed form; the deduplication key.
    pub canonical: String,
    pub anchors: BTreeSet<(NodeId, NodeId)>,
}

/// Composite address of a fact: one node id per axis.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct CompositeKey {
    pub subject: NodeId,
    pub temporal: NodeId,
    pub attribute: NodeId,
}

/// Where a leaf's value came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    /// Full cell id `doc_id/table_id/row/col`.
    pub cell_id: String,
    pub table_id: String,
    pub doc_id: String,
}

/// A stored fact value, bijective with its source cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueLeaf {
    pub leaf_id: LeafId,
    pub value: String,
    pub key: CompositeKey,
    pub provenance: Provenance,
}

/// Intermediate form between a decomposed cell and graph insertion: header
/// path elements routed into subject / temporal / attribute slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactTuple {
    /// Root→leaf subject labels (may be empty; the graph then files the
    /// fact under an anonymous root).
    pub subject_path: Vec<String>,
    /// Source text of the temporal element, empty when the path had none.
    pub temporal_raw: String,
    /// Non-empty attribute label (remaining header elements joined " / ").
    pub attribute: String,
    /// Cell value, verbatim.
    pub value: String,
    /// Provenance cell id `doc_id/table_id/row/col`.
    pub cell_id: String,
}

/// Attribute label canonicalization: case-fold and collapse whitespace.
/// No stemming, so "Net income" and "net income" merge while "incomes"
/// stays distinct.
pub fn canonicalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The composite graph. Maps are ordered so iteration, serialization, and
/// equality are deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SatGraph {
    /// Hash of the corpus this graph was built from (0 if unset).
    pub corpus_hash: u64,
    pub subjects: BTreeMap<NodeId, SubjectNode>,
    pub temporals: BTreeMap<NodeId, TemporalNode>,
    pub attributes: BTreeMap<NodeId, AttributeNode>,
    pub leaves: BTreeMap<LeafId, ValueLeaf>,
    /// Composite index: exactly the inverse of the leaves' key assignment.
    pub index: BTreeMap<CompositeKey, BTreeSet<LeafId>>,
    subject_children: BTreeMap<NodeId, BTreeSet<NodeId>>,
    temporal_children: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl SatGraph {
    /// Recompute the child adjacency maps from parent pointers. Called
    /// after bulk construction or load.
    pub(crate) fn rebuild_adjacency(&mut self) {
        self.subject_children.clear();
        self.temporal_children.clear();
        for (id, node) in &self.subjects {
            if let Some(p) = node.parent {
                self.subject_children.entry(p).or_default().insert(*id);
            }
        }
        for (id, node) in &self.temporals {
            if let Some(p) = node.parent {
                self.temporal_children.entry(p).or_default().insert(*id);
            }
        }
    }

    /// Subject roots, sorted by (label, id).
    pub fn subject_roots(&self) -> Vec<NodeId> {
        let mut roots: Vec<NodeId> = self
            .subjects
            .values()
            .filter(|n| n.parent.is_none())
            .map(|n| n.node_id)
            .collect();
        roots.sort_by(|a, b| {
            self.subjects[a]
                .label
                .cmp(&self.subjects[b].label)
                .then(a.cmp(b))
        });
        roots
    }

    /// Temporal roots in chronological order (open interval first).
    pub fn temporal_roots(&self) -> Vec<NodeId> {
        let mut roots: Vec<NodeId> = self
            .temporals
            .values()
            .filter(|n| n.parent.is_none())
            .map(|n| n.node_id)
            .collect();
        roots.sort_by(|a, b| {
            self.temporals[a]
                .normalized
                .chrono_cmp(&self.temporals[b].normalized)
                .then(a.cmp(b))
        });
        roots
    }

    /// Children of a subject node, sorted by (label, id).
    pub fn subject_children(&self, id: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .subject_children
            .get(&id)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        out.sort_by(|a, b| {
            self.subjects[a]
                .label
                .cmp(&self.subjects[b].label)
                .then(a.cmp(b))
        });
        out
    }

    /// Children of a temporal node in chronological order.
    pub fn temporal_children(&self, id: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .temporal_children
            .get(&id)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        out.sort_by(|a, b| {
            self.temporals[a]
                .normalized
                .chrono_cmp(&self.temporals[b].normalized)
                .then(a.cmp(b))
        });
        out
    }

    /// The subject node and all its descendants.
    pub fn subject_descendants(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.descendants(id, &self.subject_children)
    }

    /// The temporal node and all its descendants.
    pub fn temporal_descendants(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.descendants(id, &self.temporal_children)
    }

    fn descendants(
        &self,
        id: NodeId,
        children: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    ) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if out.insert(cur) {
                if let Some(kids) = children.get(&cur) {
                    stack.extend(kids.iter().copied());
                }
            }
        }
        out
    }

    /// Sibling subjects (same parent, self included), sorted by (label, id).
    pub fn subject_siblings(&self, id: NodeId) -> Vec<NodeId> {
        let Some(node) = self.subjects.get(&id) else {
            return Vec::new();
        };
        match node.parent {
            Some(p) => self.subject_children(p),
            None => self.subject_roots(),
        }
    }

    /// Sibling temporals (same parent, self included) in chronological
    /// order, excluding the open-interval node — "undated" has no position
    /// on a timeline.
    pub fn temporal_siblings(&self, id: NodeId) -> Vec<NodeId> {
        let Some(node) = self.temporals.get(&id) else {
            return Vec::new();
        };
        let all = match node.parent {
            Some(p) => self.temporal_children(p),
            None => self.temporal_roots(),
        };
        all.into_iter()
            .filter(|n| self.temporals[n].normalized != TemporalValue::Unbounded)
            .collect()
    }

    /// Leaves under a composite key (empty if the key is unknown).
    pub fn leaves_for_key(&self, key: &CompositeKey) -> Vec<&ValueLeaf> {
        self.index
            .get(key)
            .map(|set| set.iter().filter_map(|l| self.leaves.get(l)).collect())
            .unwrap_or_default()
    }

    /// Total node count across all four sets.
    pub fn node_count(&self) -> usize {
        self.subjects.len() + self.temporals.len() + self.attributes.len() + self.leaves.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_folds_case_and_whitespace() {
        assert_eq!(canonicalize_label("Net  Income "), "net income");
        assert_eq!(canonicalize_label("net income"), "net income");
        assert_ne!(canonicalize_label("net incomes"), "net income");
    }

    #[test]
    fn empty_graph_has_no_roots() {
        let g = SatGraph::default();
        assert!(g.subject_roots().is_empty());
        assert!(g.temporal_roots().is_empty());
        assert_eq!(g.node_count(), 0);
    }
}
