//! Stable content-derived identifiers.
//!
//! Graph nodes and leaves are named by FNV-1a hashes of their defining
//! content (kind tag, label, parent id), so two builds over the same facts —
//! in any order, on any machine — produce identical ids. std's hasher is
//! explicitly not guaranteed stable across releases, which rules it out for
//! a persisted format.

use serde::{Deserialize, Serialize};
use std::fmt;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// FNV-1a over several byte slices with a 0x00 separator between them, so
/// ("ab","c") and ("a","bc") hash differently.
pub fn fnv1a64_parts(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0;
            h = h.wrapping_mul(FNV_PRIME);
        }
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Identifier of a graph node (subject, temporal, or attribute).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl NodeId {
    /// Id for a subject node: hash of the kind tag, the parent id (if any),
    /// and the label.
    pub fn subject(label: &str, parent: Option<NodeId>) -> NodeId {
        let parent_bytes = parent.map(|p| p.0.to_be_bytes());
        NodeId(fnv1a64_parts(&[
            b"S",
            parent_bytes.as_ref().map(|b| b.as_slice()).unwrap_or(b""),
            label.as_bytes(),
        ]))
    }

    /// Id for a temporal node: hash of the kind tag and the canonical label.
    /// The canonical label determines the parent, so it need not be mixed in.
    pub fn temporal(canonical_label: &str) -> NodeId {
        NodeId(fnv1a64_parts(&[b"T", canonical_label.as_bytes()]))
    }

    /// Id for an attribute node: hash of the kind tag and the canonicalized
    /// (case-folded, whitespace-collapsed) label.
    pub fn attribute(canonical_label: &str) -> NodeId {
        NodeId(fnv1a64_parts(&[b"A", canonical_label.as_bytes()]))
    }
}

/// Identifier of a value leaf, derived from its provenance cell id.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct LeafId(pub u64);

impl LeafId {
    pub fn from_cell_id(cell_id: &str) -> LeafId {
        LeafId(fnv1a64_parts(&[b"L", cell_id.as_bytes()]))
    }
}

impl fmt::Display for LeafId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Compose the canonical cell id `doc_id/table_id/row/col`.
pub fn cell_id(doc_id: &str, table_id: &str, row: usize, col: usize) -> String {
    format!("{doc_id}/{table_id}/{row}/{col}")
}

/// Compose the canonical corpus-wide passage id `doc_id/passage_id`.
pub fn qualified_passage_id(doc_id: &str, passage_id: &str) -> String {
    format!("{doc_id}/{passage_id}")
}

/// Compose the canonical corpus-wide table id `doc_id/table_id`.
pub fn qualified_table_id(doc_id: &str, table_id: &str) -> String {
    format!("{doc_id}/{table_id}")
}

/// Split a cell id back into (doc_id, table_id, row, col).
pub fn parse_cell_id(cell: &str) -> Option<(String, String, usize, usize)> {
    let parts: Vec<&str> = cell.split('/').collect();
    if parts.len() < 4 {
        return None;
    }
    // doc_id itself must not contain '/', table ids neither; the last two
    // segments are numeric coordinates.
    let col = parts[parts.len() - 1].parse().ok()?;
    let row = parts[parts.len() - 2].parse().ok()?;
    let doc = parts[..parts.len() - 3].join("/");
    let table = parts[parts.len() - 3].to_string();
    Some((doc, table, row, col))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a64_matches_reference_vectors() {
        // Reference values for the 64-bit FNV-1a parameters.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn parts_separator_distinguishes_boundaries() {
        assert_ne!(
            fnv1a64_parts(&[b"ab", b"c"]),
            fnv1a64_parts(&[b"a", b"bc"])
        );
    }

    #[test]
    fn node_ids_are_kind_tagged() {
        assert_ne!(NodeId::temporal("2019"), NodeId::attribute("2019"));
        assert_ne!(
            NodeId::subject("2019", None),
            NodeId::temporal("2019")
        );
    }

    #[test]
    fn subject_id_depends_on_parent() {
        let root = NodeId::subject("Hardware", None);
        let child = NodeId::subject("Laptop", Some(root));
        let orphan = NodeId::subject("Laptop", None);
        assert_ne!(child, orphan);
    }

    #[test]
    fn cell_id_round_trips() {
        let id = cell_id("doc-1", "t0", 3, 2);
        assert_eq!(id, "doc-1/t0/3/2");
        assert_eq!(
            parse_cell_id(&id),
            Some(("doc-1".to_string(), "t0".to_string(), 3, 2))
        );
    }
}
