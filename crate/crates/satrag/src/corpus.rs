//! Corpus store: the set of parsed documents plus per-document entity
//! annotations, with line-delimited persistence, deterministic content
//! hashing, and decomposition of every table into cell groups.

use crate::cellgroups::{
    CellGroup, DEFAULT_SNIPPET_BUDGET, decompose_table, extract_global_metadata,
};
use crate::ids::fnv1a64;
use crate::ingest::{Document, classify_headers, fallback_classification};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("malformed corpus file: {0}")]
    Malformed(String),
}

/// One persisted line: a document and its optional entity annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CorpusLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entity: Option<String>,
    document: Document,
}

/// An ordered, hashable collection of documents. Documents are kept
/// sorted by id so the serialized form — and therefore the corpus hash —
/// is independent of insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    lines: Vec<CorpusLine>,
}

impl Corpus {
    pub fn new() -> Corpus {
        Corpus::default()
    }

    /// Add a parsed document with an optional entity annotation.
    pub fn add_document(
        &mut self,
        document: Document,
        entity: Option<&str>,
    ) -> Result<(), CorpusError> {
        match self
            .lines
            .binary_search_by(|l| l.document.doc_id.as_str().cmp(&document.doc_id))
        {
            Ok(_) => Err(CorpusError::DuplicateDocument(document.doc_id)),
            Err(pos) => {
                self.lines.insert(
                    pos,
                    CorpusLine {
                        entity: entity.map(str::to_string),
                        document,
                    },
                );
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Documents in id order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.lines.iter().map(|l| &l.document)
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.lines
            .binary_search_by(|l| l.document.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|pos| &self.lines[pos].document)
    }

    pub fn entity(&self, doc_id: &str) -> Option<&str> {
        self.lines
            .binary_search_by(|l| l.document.doc_id.as_str().cmp(doc_id))
            .ok()
            .and_then(|pos| self.lines[pos].entity.as_deref())
    }

    /// Set or replace a document's entity annotation.
    pub fn set_entity(&mut self, doc_id: &str, entity: &str) -> bool {
        if let Ok(pos) = self
            .lines
            .binary_search_by(|l| l.document.doc_id.as_str().cmp(doc_id))
        {
            self.lines[pos].entity = Some(entity.to_string());
            true
        } else {
            false
        }
    }

    /// Total number of tables across all documents.
    pub fn table_count(&self) -> usize {
        self.lines.iter().map(|l| l.document.tables.len()).sum()
    }

    /// Decompose every table of every document into cell groups, in
    /// (document id, table order, row, column) order.
    pub fn cell_groups(&self, snippet_budget: usize) -> Vec<CellGroup> {
        let mut out = Vec::new();
        for line in &self.lines {
            let doc = &line.document;
            let meta =
                extract_global_metadata(doc, line.entity.as_deref(), snippet_budget);
            for table in &doc.tables {
                let classification = classify_headers(table)
                    .unwrap_or_else(|_| fallback_classification(table));
                out.extend(decompose_table(table, &classification, &meta));
            }
        }
        out
    }

    /// Cell ids of every decomposable cell — the reference set for
    /// provenance validation.
    pub fn cell_ids(&self) -> BTreeSet<String> {
        self.cell_groups(DEFAULT_SNIPPET_BUDGET)
            .into_iter()
            .map(|g| g.cell_id)
            .collect()
    }

    /// Canonical serialized form: one JSON document per line, in id order.
    pub fn to_jsonl(&self) -> Result<String, CorpusError> {
        let mut out = String::new();
        for line in &self.lines {
            let json = serde_json::to_string(line)
                .map_err(|e| CorpusError::IoFailure(format!("serialize: {e}")))?;
            out.push_str(&json);
            out.push('\n');
        }
        Ok(out)
    }

    /// Content hash over the canonical serialized form. Stable across
    /// insertion orders and machines.
    pub fn corpus_hash(&self) -> u64 {
        let text = self.to_jsonl().unwrap_or_default();
        fnv1a64(text.as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CorpusError::IoFailure(format!("create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| CorpusError::IoFailure(format!("write: {e}")))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Corpus, CorpusError> {
        let file = std::fs::File::open(path)
            .map_err(|e| CorpusError::IoFailure(format!("open {}: {e}", path.display())))?;
        let mut corpus = Corpus::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line =
                line.map_err(|e| CorpusError::IoFailure(format!("read line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CorpusLine = serde_json::from_str(&line)
                .map_err(|e| CorpusError::Malformed(format!("line {}: {e}", i + 1)))?;
            corpus.add_document(parsed.document, parsed.entity.as_deref())?;
        }
        Ok(corpus)
    }
}

/// Write cell groups as line-delimited JSON (one group per line).
pub fn save_cell_groups(groups: &[CellGroup], path: &Path) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CorpusError::IoFailure(format!("create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    for g in groups {
        let json = serde_json::to_string(g)
            .map_err(|e| CorpusError::IoFailure(format!("serialize: {e}")))?;
        writeln!(w, "{json}").map_err(|e| CorpusError::IoFailure(format!("write: {e}")))?;
    }
    Ok(())
}

/// Read cell groups from line-delimited JSON.
pub fn load_cell_groups(path: &Path) -> Result<Vec<CellGroup>, CorpusError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CorpusError::IoFailure(format!("open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line =
            line.map_err(|e| CorpusError::IoFailure(format!("read line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let group: CellGroup = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed(format!("line {}: {e}", i + 1)))?;
        out.push(group);
    }
    Ok(out)
}
