//! Versioned on-disk graph format: a single JSON container holding four
//! record arrays plus a header. The composite index is NOT persisted — it
//! is reconstructed from the leaves on load and cross-checked, so a stale
//! or tampered index can never be loaded.

use super::SatGraph;
use crate::ids::LeafId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use thiserror::Error;

/// Current container format version.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("unsupported graph format version {found} (this build reads {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt graph file: {0}")]
    CorruptIndex(String),
}

#[derive(Serialize, Deserialize)]
struct GraphHeader {
    format_version: u32,
    corpus_hash: u64,
    subject_count: usize,
    temporal_count: usize,
    attribute_count: usize,
    leaf_count: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    header: GraphHeader,
    subjects: Vec<super::SubjectNode>,
    temporals: Vec<super::TemporalNode>,
    attributes: Vec<super::AttributeNode>,
    leaves: Vec<super::ValueLeaf>,
}

/// Write the graph to `path`. The write is atomic-ish: serialize to a
/// sibling temp file, then rename.
pub fn save_graph(g: &SatGraph, path: &Path) -> Result<(), PersistError> {
    let file = GraphFile {
        header: GraphHeader {
            format_version: FORMAT_VERSION,
            corpus_hash: g.corpus_hash,
            subject_count: g.subjects.len(),
            temporal_count: g.temporals.len(),
            attribute_count: g.attributes.len(),
            leaf_count: g.leaves.len(),
        },
        subjects: g.subjects.values().cloned().collect(),
        temporals: g.temporals.values().cloned().collect(),
        attributes: g.attributes.values().cloned().collect(),
        leaves: g.leaves.values().cloned().collect(),
    };
    let tmp = path.with_extension("tmp");
    let out = fs::File::create(&tmp)
        .map_err(|e| PersistError::IoFailure(format!("create {}: {e}", tmp.display())))?;
    serde_json::to_writer(BufWriter::new(out), &file)
        .map_err(|e| PersistError::IoFailure(format!("serialize: {e}")))?;
    fs::rename(&tmp, path)
        .map_err(|e| PersistError::IoFailure(format!("rename to {}: {e}", path.display())))?;
    Ok(())
}

/// Read a graph from `path`, rebuilding and verifying the composite index.
pub fn load_graph(path: &Path) -> Result<SatGraph, PersistError> {
    let file = fs::File::open(path)
        .map_err(|e| PersistError::IoFailure(format!("open {}: {e}", path.display())))?;
    let parsed: GraphFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| PersistError::IoFailure(format!("parse {}: {e}", path.display())))?;

    if parsed.header.format_version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            found: parsed.header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let counts_ok = parsed.header.subject_count == parsed.subjects.len()
        && parsed.header.temporal_count == parsed.temporals.len()
        && parsed.header.attribute_count == parsed.attributes.len()
        && parsed.header.leaf_count == parsed.leaves.len();
    if !counts_ok {
        return Err(PersistError::CorruptIndex(
            "header counts disagree with record arrays".to_string(),
        ));
    }

    let mut g = SatGraph {
        corpus_hash: parsed.header.corpus_hash,
        ..SatGraph::default()
    };
    for node in parsed.subjects {
        if g.subjects.insert(node.node_id, node).is_some() {
            return Err(PersistError::CorruptIndex(
                "duplicate subject node id".to_string(),
            ));
        }
    }
    for node in parsed.temporals {
        if g.temporals.insert(node.node_id, node).is_some() {
            return Err(PersistError::CorruptIndex(
                "duplicate temporal node id".to_string(),
            ));
        }
    }
    for node in parsed.attributes {
        if g.attributes.insert(node.node_id, node).is_some() {
            return Err(PersistError::CorruptIndex(
                "duplicate attribute node id".to_string(),
            ));
        }
    }
    let mut index: BTreeMap<super::CompositeKey, std::collections::BTreeSet<LeafId>> =
        BTreeMap::new();
    for leaf in parsed.leaves {
        if LeafId::from_cell_id(&leaf.provenance.cell_id) != leaf.leaf_id {
            return Err(PersistError::CorruptIndex(format!(
                "leaf id does not match provenance cell `{}`",
                leaf.provenance.cell_id
            )));
        }
        if !g.subjects.contains_key(&leaf.key.subject)
            || !g.temporals.contains_key(&leaf.key.temporal)
            || !g.attributes.contains_key(&leaf.key.attribute)
        {
            return Err(PersistError::CorruptIndex(format!(
                "leaf for cell `{}` references missing key components",
                leaf.provenance.cell_id
            )));
        }
        index.entry(leaf.key).or_default().insert(leaf.leaf_id);
        if g.leaves.insert(leaf.leaf_id, leaf).is_some() {
            return Err(PersistError::CorruptIndex(
                "duplicate leaf id".to_string(),
            ));
        }
    }
    g.index = index;
    g.rebuild_adjacency();
    Ok(g)
}
