//! Folding fact tuples into the composite graph.
//!
//! Construction is order-insensitive: node ids derive from content, label
//! variants resolve to the lexicographic minimum, and facts are folded in
//! cell-id order after deduplication — the same fact multiset yields the
//! same graph under any permutation.

use super::{
    AttributeNode, CompositeKey, FactTuple, Provenance, SatGraph, SubjectNode,
    TemporalNode, canonicalize_label,
};
use crate::ids::{LeafId, NodeId, parse_cell_id};
use crate::temporal::{TemporalValue, normalize_temporal};
use std::collections::BTreeMap;
use std::collections::btree_map::Entry;

/// Build a graph from lifted facts. Duplicate cell ids keep one
/// deterministic winner (smallest by value, then slots).
pub fn build_graph(facts: &[FactTuple]) -> SatGraph {
    let mut by_cell: BTreeMap<&str, &FactTuple> = BTreeMap::new();
    for fact in facts {
        match by_cell.entry(fact.cell_id.as_str()) {
            Entry::Vacant(e) => {
                e.insert(fact);
            }
            Entry::Occupied(mut e) => {
                if order_key(fact) < order_key(e.get()) {
                    e.insert(fact);
                }
            }
        }
    }
    let mut g = SatGraph::default();
    for fact in by_cell.values() {
        g.insert_fact(fact);
    }
    g.rebuild_adjacency();
    g
}

fn order_key<'a>(
    f: &'a FactTuple,
) -> (&'a str, &'a [String], &'a str, &'a str) {
    (&f.value, &f.subject_path, &f.temporal_raw, &f.attribute)
}

impl SatGraph {
    fn insert_fact(&mut self, fact: &FactTuple) {
        debug_assert!(!fact.attribute.is_empty(), "lift guarantees an attribute");
        debug_assert!(!fact.value.is_empty(), "decomposition skips empty cells");
        let subject = self.insert_subject_path(&fact.subject_path);
        let temporal = self.insert_temporal(&fact.temporal_raw);
        let attribute = self.insert_attribute(&fact.attribute);
        self.attributes
            .get_mut(&attribute)
            .expect("attribute just inserted")
            .anchors
            .insert((subject, temporal));

        let key = CompositeKey {
            subject,
            temporal,
            attribute,
        };
        let leaf_id = LeafId::from_cell_id(&fact.cell_id);
        let (doc_id, table_id, _, _) = parse_cell_id(&fact.cell_id)
            .unwrap_or_else(|| (String::new(), String::new(), 0, 0));
        self.leaves.insert(
            leaf_id,
            super::ValueLeaf {
                leaf_id,
                value: fact.value.clone(),
                key,
                provenance: Provenance {
                    cell_id: fact.cell_id.clone(),
                    table_id,
                    doc_id,
                },
            },
        );
        self.index.entry(key).or_default().insert(leaf_id);
    }

    /// Insert a root→leaf subject chain, sharing existing prefixes.
    /// An empty path files under an anonymous root node.
    fn insert_subject_path(&mut self, path: &[String]) -> NodeId {
        if path.is_empty() {
            let id = NodeId::subject("", None);
            self.subjects.entry(id).or_insert(SubjectNode {
                node_id: id,
                label: String::new(),
                parent: None,
            });
            return id;
        }
        let mut parent: Option<NodeId> = None;
        let mut last = NodeId(0);
        for label in path {
            let id = NodeId::subject(label, parent);
            self.subjects.entry(id).or_insert(SubjectNode {
                node_id: id,
                label: label.clone(),
                parent,
            });
            parent = Some(id);
            last = id;
        }
        last
    }

    /// Insert the temporal value for `raw` together with its full parent
    /// chain; empty or non-temporal text files under the open interval.
    fn insert_temporal(&mut self, raw: &str) -> NodeId {
        let raw = raw.trim();
        let value = if raw.is_empty() {
            TemporalValue::Unbounded
        } else {
            normalize_temporal(raw).unwrap_or(TemporalValue::Unbounded)
        };
        let mut chain = value.chain();
        chain.reverse(); // root first
        let mut parent: Option<NodeId> = None;
        let mut last = NodeId(0);
        for v in chain {
            let id = NodeId::temporal(&v.canonical_label());
            // The element that actually carried the source text keeps it;
            // auto-inserted ancestors use the canonical rendering.
            let raw_candidate = if v == value && !raw.is_empty() {
                raw.to_string()
            } else {
                v.canonical_label()
            };
            match self.temporals.entry(id) {
                Entry::Vacant(e) => {
                    e.insert(TemporalNode {
                        node_id: id,
                        raw_label: raw_candidate,
                        normalized: v,
                        parent,
                    });
                }
                Entry::Occupied(mut e) => {
                    let node = e.get_mut();
                    if raw_candidate < node.raw_label {
                        node.raw_label = raw_candidate;
                    }
                }
            }
            parent = Some(id);
            last = id;
        }
        last
    }

    /// Insert (or merge into) the attribute node for `label`.
    fn insert_attribute(&mut self, label: &str) -> NodeId {
        let canonical = canonicalize_label(label);
        let id = NodeId::attribute(&canonical);
        match self.attributes.entry(id) {
            Entry::Vacant(e) => {
                e.insert(AttributeNode {
                    node_id: id,
                    label: label.to_string(),
                    canonical,
                    anchors: Default::default(),
                });
            }
            Entry::Occupied(mut e) => {
                let node = e.get_mut();
                if label < node.label.as_str() {
                    node.label = label.to_string();
                }
            }
        }
        id
    }
}
