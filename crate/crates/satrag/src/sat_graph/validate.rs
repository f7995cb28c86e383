//! Structural validation: every graph invariant becomes a named check
//! whose violations are collected into a report (never panics, never
//! errors — findings are data).

use super::SatGraph;
use crate::ids::{LeafId, NodeId};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    /// Which check fired (stable machine-readable name).
    pub check: &'static str,
    pub detail: String,
}

/// Outcome of validating a graph. Empty findings == clean.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    /// Human-readable one-line-per-finding summary.
    pub fn summary(&self) -> String {
        if self.is_clean() {
            "all checks passed".to_string()
        } else {
            self.findings
                .iter()
                .map(|f| format!("[{}] {}", f.check, f.detail))
                .collect::<Vec<_>>()
                .join("\n")
        }
    }

    fn push(&mut self, check: &'static str, detail: String) {
        self.findings.push(Finding { check, detail });
    }
}

/// Validate all structural invariants. When `known_cells` is given
/// (the set of cell ids present in the corpus), leaf provenance is
/// checked against it; otherwise provenance is only checked for shape.
pub fn validate_graph(
    g: &SatGraph,
    known_cells: Option<&BTreeSet<String>>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_parent_references(g, &mut report);
    check_id_consistency(g, &mut report);
    check_acyclicity(g, &mut report);
    check_leaf_cell_bijection(g, &mut report);
    check_index_inverse(g, &mut report);
    check_key_components(g, &mut report);
    check_anchor_soundness(g, &mut report);
    check_orphan_attributes(g, &mut report);
    check_temporal_containment(g, &mut report);
    if let Some(cells) = known_cells {
        check_provenance(g, cells, &mut report);
    }
    report
}

fn check_parent_references(g: &SatGraph, report: &mut ValidationReport) {
    for node in g.subjects.values() {
        if let Some(p) = node.parent {
            if !g.subjects.contains_key(&p) {
                report.push(
                    "parent-reference",
                    format!("subject {} has unknown parent {}", node.node_id, p),
                );
            }
        }
    }
    for node in g.temporals.values() {
        if let Some(p) = node.parent {
            if !g.temporals.contains_key(&p) {
                report.push(
                    "parent-reference",
                    format!("temporal {} has unknown parent {}", node.node_id, p),
                );
            }
        }
    }
}

fn check_id_consistency(g: &SatGraph, report: &mut ValidationReport) {
    for (id, node) in &g.subjects {
        let expect = NodeId::subject(&node.label, node.parent);
        if *id != expect || node.node_id != expect {
            report.push(
                "id-consistency",
                format!("subject `{}` stored under {} expected {}", node.label, id, expect),
            );
        }
    }
    for (id, node) in &g.temporals {
        let expect = NodeId::temporal(&node.normalized.canonical_label());
        if *id != expect || node.node_id != expect {
            report.push(
                "id-consistency",
                format!("temporal `{}` stored under {} expected {}", node.label(), id, expect),
            );
        }
        let expected_parent = node
            .normalized
            .parent()
            .map(|p| NodeId::temporal(&p.canonical_label()));
        if node.parent != expected_parent {
            report.push(
                "id-consistency",
                format!("temporal `{}` parent pointer disagrees with calendar", node.label()),
            );
        }
    }
    for (id, node) in &g.attributes {
        let expect = NodeId::attribute(&node.canonical);
        if *id != expect || node.node_id != expect {
            report.push(
                "id-consistency",
                format!("attribute `{}` stored under {} expected {}", node.label, id, expect),
            );
        }
        if super::canonicalize_label(&node.label) != node.canonical {
            report.push(
                "id-consistency",
                format!("attribute `{}` canonical form mismatch", node.label),
            );
        }
    }
    for (id, leaf) in &g.leaves {
        let expect = LeafId::from_cell_id(&leaf.provenance.cell_id);
        if *id != expect || leaf.leaf_id != expect {
            report.push(
                "id-consistency",
                format!("leaf for cell `{}` stored under {}", leaf.provenance.cell_id, id),
            );
        }
    }
}

/// Kahn toposort over parent edges, anchor edges, and leaf-key edges.
fn check_acyclicity(g: &SatGraph, report: &mut ValidationReport) {
    // Nodes are u64 ids in disjoint namespaces (kind-tagged hashes);
    // leaves get their own ids. Edges point from referencing node to
    // referenced node (child → parent, attribute → anchor endpoints,
    // leaf → key components).
    let mut edges: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut nodes: BTreeSet<u64> = BTreeSet::new();
    let add_edge = |edges: &mut BTreeMap<u64, BTreeSet<u64>>, from: u64, to: u64| {
        edges.entry(from).or_default().insert(to);
    };
    for node in g.subjects.values() {
        nodes.insert(node.node_id.0);
        if let Some(p) = node.parent {
            add_edge(&mut edges, node.node_id.0, p.0);
        }
    }
    for node in g.temporals.values() {
        nodes.insert(node.node_id.0);
        if let Some(p) = node.parent {
            add_edge(&mut edges, node.node_id.0, p.0);
        }
    }
    for node in g.attributes.values() {
        nodes.insert(node.node_id.0);
        for (s, t) in &node.anchors {
            add_edge(&mut edges, node.node_id.0, s.0);
            add_edge(&mut edges, node.node_id.0, t.0);
        }
    }
    for leaf in g.leaves.values() {
        nodes.insert(leaf.leaf_id.0);
        add_edge(&mut edges, leaf.leaf_id.0, leaf.key.subject.0);
        add_edge(&mut edges, leaf.leaf_id.0, leaf.key.temporal.0);
        add_edge(&mut edges, leaf.leaf_id.0, leaf.key.attribute.0);
    }
    for targets in edges.values() {
        nodes.extend(targets.iter().copied());
    }

    let mut out_degree: BTreeMap<u64, usize> = nodes.iter().map(|n| (*n, 0)).collect();
    let mut incoming: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (from, targets) in &edges {
        *out_degree.get_mut(from).expect("from registered") = targets.len();
        for to in targets {
            incoming.entry(*to).or_default().push(*from);
        }
    }
    let mut queue: VecDeque<u64> = out_degree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| *n)
        .collect();
    let mut visited = 0usize;
    while let Some(n) = queue.pop_front() {
        visited += 1;
        if let Some(sources) = incoming.get(&n) {
            for s in sources {
                let d = out_degree.get_mut(s).expect("source registered");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(*s);
                }
            }
        }
    }
    if visited != nodes.len() {
        report.push(
            "acyclicity",
            format!(
                "topological sort visited {} of {} nodes — cycle present",
                visited,
                nodes.len()
            ),
        );
    }
}

fn check_leaf_cell_bijection(g: &SatGraph, report: &mut ValidationReport) {
    let mut seen: BTreeMap<&str, LeafId> = BTreeMap::new();
    for leaf in g.leaves.values() {
        if let Some(prev) = seen.insert(&leaf.provenance.cell_id, leaf.leaf_id) {
            report.push(
                "leaf-cell-bijection",
                format!(
                    "cell `{}` claimed by leaves {} and {}",
                    leaf.provenance.cell_id, prev, leaf.leaf_id
                ),
            );
        }
    }
    if seen.len() != g.leaves.len() {
        report.push(
            "leaf-cell-bijection",
            format!(
                "{} leaves map to {} distinct cells",
                g.leaves.len(),
                seen.len()
            ),
        );
    }
}

fn check_index_inverse(g: &SatGraph, report: &mut ValidationReport) {
    for leaf in g.leaves.values() {
        let listed = g
            .index
            .get(&leaf.key)
            .map(|set| set.contains(&leaf.leaf_id))
            .unwrap_or(false);
        if !listed {
            report.push(
                "index-inverse",
                format!("leaf {} missing from index under its key", leaf.leaf_id),
            );
        }
    }
    for (key, set) in &g.index {
        if set.is_empty() {
            report.push("index-inverse", "index entry with empty leaf set".to_string());
        }
        for leaf_id in set {
            match g.leaves.get(leaf_id) {
                None => report.push(
                    "index-inverse",
                    format!("index references unknown leaf {leaf_id}"),
                ),
                Some(leaf) if leaf.key != *key => report.push(
                    "index-inverse",
                    format!("leaf {} indexed under a foreign key", leaf_id),
                ),
                Some(_) => {}
            }
        }
    }
}

fn check_key_components(g: &SatGraph, report: &mut ValidationReport) {
    for leaf in g.leaves.values() {
        if !g.subjects.contains_key(&leaf.key.subject) {
            report.push(
                "key-components",
                format!("leaf {} references unknown subject", leaf.leaf_id),
            );
        }
        if !g.temporals.contains_key(&leaf.key.temporal) {
            report.push(
                "key-components",
                format!("leaf {} references unknown temporal", leaf.leaf_id),
            );
        }
        if !g.attributes.contains_key(&leaf.key.attribute) {
            report.push(
                "key-components",
                format!("leaf {} references unknown attribute", leaf.leaf_id),
            );
        }
    }
}

fn check_anchor_soundness(g: &SatGraph, report: &mut ValidationReport) {
    for attr in g.attributes.values() {
        for (s, t) in &attr.anchors {
            if !g.subjects.contains_key(s) || !g.temporals.contains_key(t) {
                report.push(
                    "anchor-soundness",
                    format!("attribute `{}` anchored to unknown nodes", attr.label),
                );
                continue;
            }
            let key = super::CompositeKey {
                subject: *s,
                temporal: *t,
                attribute: attr.node_id,
            };
            if g.index.get(&key).map(|set| set.is_empty()).unwrap_or(true) {
                report.push(
                    "anchor-soundness",
                    format!(
                        "attribute `{}` anchor ({}, {}) has no leaf",
                        attr.label, s, t
                    ),
                );
            }
        }
    }
}

fn check_orphan_attributes(g: &SatGraph, report: &mut ValidationReport) {
    for attr in g.attributes.values() {
        if attr.anchors.is_empty() {
            report.push(
                "orphan-attribute",
                format!("attribute `{}` has no anchors", attr.label),
            );
        }
    }
}

fn check_temporal_containment(g: &SatGraph, report: &mut ValidationReport) {
    for node in g.temporals.values() {
        if let Some(pid) = node.parent {
            if let Some(parent) = g.temporals.get(&pid) {
                if !parent.normalized.contains(&node.normalized) {
                    report.push(
                        "temporal-containment",
                        format!(
                            "`{}` not contained in parent `{}`",
                            node.label(),
                            parent.label()
                        ),
                    );
                }
            }
        }
    }
}

fn check_provenance(
    g: &SatGraph,
    known_cells: &BTreeSet<String>,
    report: &mut ValidationReport,
) {
    for leaf in g.leaves.values() {
        if !known_cells.contains(&leaf.provenance.cell_id) {
            report.push(
                "dangling-provenance",
                format!(
                    "leaf {} cites cell `{}` which no longer exists",
                    leaf.leaf_id, leaf.provenance.cell_id
                ),
            );
        }
    }
}
