//! Flat chunk retrieval over the corpus: passages kept whole, tables
//! linearized one chunk per data row. Serves as the non-graph fallback
//! and the comparison baseline for evaluation.

use super::Query;
use crate::corpus::Corpus;
use crate::ids::{cell_id, qualified_passage_id};
use crate::ingest::{classify_headers, fallback_classification, Table};
use crate::providers::{cosine, Embedder};
use serde::{Deserialize, Serialize};

/// Where a chunk came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ChunkKind {
    Passage {
        doc_id: String,
        passage_id: String,
    },
    TableRow {
        doc_id: String,
        table_id: String,
        row: usize,
    },
}

/// One retrievable unit of the flattened corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub text: String,
    /// Data cells covered by this chunk (empty for passages).
    pub cell_ids: Vec<String>,
    pub kind: ChunkKind,
}

/// A chunk with its query similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub text: String,
    pub score: f64,
    pub cell_ids: Vec<String>,
    pub kind: ChunkKind,
}

fn row_chunk(table: &Table, header_labels: &str, row: usize, row_tiers: usize) -> Chunk {
    let mut parts: Vec<String> = Vec::new();
    if !table.caption.trim().is_empty() {
        parts.push(table.caption.trim().to_string());
    }
    if !header_labels.is_empty() {
        parts.push(header_labels.to_string());
    }
    let mut cell_ids = Vec::new();
    for col in 0..table.n_cols() {
        let content = table.effective_content(row, col).trim();
        if content.is_empty() {
            continue;
        }
        parts.push(content.to_string());
        if col >= row_tiers {
            cell_ids.push(cell_id(&table.doc_id, &table.table_id, row, col));
        }
    }
    Chunk {
        chunk_id: format!("{}/{}/row/{}", table.doc_id, table.table_id, row),
        text: parts.join(" "),
        cell_ids,
        kind: ChunkKind::TableRow {
            doc_id: table.doc_id.clone(),
            table_id: table.table_id.clone(),
            row,
        },
    }
}

fn table_chunks(table: &Table) -> Vec<Chunk> {
    let classification =
        classify_headers(table).unwrap_or_else(|_| fallback_classification(table));
    let column_tiers = classification.column_tiers();
    let row_tiers = classification.row_tiers();

    // Column-header labels in tier order, empties skipped, consecutive
    // repeats (span fills) collapsed.
    let mut labels: Vec<String> = Vec::new();
    for row in 0..column_tiers.min(table.n_rows()) {
        for col in 0..table.n_cols() {
            let content = table.effective_content(row, col).trim();
            if content.is_empty() || labels.last().is_some_and(|l| l == content) {
                continue;
            }
            labels.push(content.to_string());
        }
    }
    let header_labels = labels.join(" ");

    (column_tiers..table.n_rows())
        .map(|row| row_chunk(table, &header_labels, row, row_tiers))
        .collect()
}

/// Flatten the corpus into retrievable chunks: every passage as-is, then
/// every table data row. Order follows the corpus (documents sorted by
/// id, passages before tables within a document).
pub fn corpus_chunks(corpus: &Corpus) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    for doc in corpus.documents() {
        for passage in &doc.passages {
            chunks.push(Chunk {
                chunk_id: qualified_passage_id(&doc.doc_id, &passage.passage_id),
                text: passage.text.clone(),
                cell_ids: Vec::new(),
                kind: ChunkKind::Passage {
                    doc_id: doc.doc_id.clone(),
                    passage_id: passage.passage_id.clone(),
                },
            });
        }
        for table in &doc.tables {
            chunks.extend(table_chunks(table));
        }
    }
    chunks
}

/// Rank all corpus chunks by cosine similarity to the query and return
/// the top `k`. Ties break on chunk id ascending.
pub fn baseline_chunk_retrieve(
    corpus: &Corpus,
    query: &Query,
    embedder: &dyn Embedder,
    k: usize,
) -> Vec<ScoredChunk> {
    let chunks = corpus_chunks(corpus);
    if chunks.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut texts: Vec<String> = vec![query.text.clone()];
    texts.extend(chunks.iter().map(|c| c.text.clone()));
    let Ok(vectors) = embedder.embed(&texts) else {
        return Vec::new();
    };
    let (query_vec, chunk_vecs) = match vectors.split_first() {
        Some(split) => split,
        None => return Vec::new(),
    };
    let mut scored: Vec<ScoredChunk> = chunks
        .into_iter()
        .zip(chunk_vecs)
        .map(|(chunk, vec)| ScoredChunk {
            score: cosine(query_vec, vec).clamp(0.0, 1.0),
            chunk_id: chunk.chunk_id,
            text: chunk.text,
            cell_ids: chunk.cell_ids,
            kind: chunk.kind,
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    scored.truncate(k);
    scored
}
