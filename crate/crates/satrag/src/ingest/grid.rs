//! Structured-grid interchange format: one document per JSON file.
//!
//! Schema: `{doc_id, title, passages:[{passage_id, text}], tables:[
//! {table_id, caption, grid:[[text]], spans:[{row, col, row_span,
//! col_span}]}]}`. An optional per-table `position` (count of preceding
//! passages) is accepted and written; absent, tables sort after all
//! passages.

use super::{
    make_cell_grid, Document, IngestError, ParseWarning, ParsedDocument, Passage, Span, Table,
    TableCategory,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Serialize, Deserialize)]
struct GridDocument {
    doc_id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    passages: Vec<GridPassage>,
    #[serde(default)]
    tables: Vec<GridTable>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridPassage {
    passage_id: String,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridTable {
    table_id: String,
    #[serde(default)]
    caption: String,
    grid: Vec<Vec<String>>,
    #[serde(default)]
    spans: Vec<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<usize>,
}

pub(super) fn parse_grid_document(raw: &str) -> Result<ParsedDocument, IngestError> {
    let parsed: GridDocument = serde_json::from_str(raw)
        .map_err(|e| IngestError::MalformedInput(format!("structured grid: {e}")))?;
    let mut warnings = Vec::new();

    let mut seen_passages = BTreeSet::new();
    let mut passages = Vec::new();
    for (position, p) in parsed.passages.into_iter().enumerate() {
        if p.text.trim().is_empty() {
            return Err(IngestError::MalformedInput(format!(
                "passage {} has empty text",
                p.passage_id
            )));
        }
        if !seen_passages.insert(p.passage_id.clone()) {
            return Err(IngestError::MalformedInput(format!(
                "duplicate passage id {}",
                p.passage_id
            )));
        }
        passages.push(Passage {
            doc_id: parsed.doc_id.clone(),
            passage_id: p.passage_id,
            text: p.text,
            position,
        });
    }

    let default_position = passages.len();
    let mut seen_tables = BTreeSet::new();
    let mut tables = Vec::new();
    for t in parsed.tables {
        if !seen_tables.insert(t.table_id.clone()) {
            return Err(IngestError::MalformedInput(format!(
                "duplicate table id {}",
                t.table_id
            )));
        }
        let n_cols = t.grid.first().map(Vec::len).unwrap_or(0);
        if t.grid.is_empty() || n_cols == 0 {
            return Err(IngestError::MalformedInput(format!(
                "table {} has an empty grid",
                t.table_id
            )));
        }
        if t.grid.iter().any(|row| row.len() != n_cols) {
            return Err(IngestError::MalformedInput(format!(
                "table {} grid is not rectangular",
                t.table_id
            )));
        }
        let mut grid = t.grid;
        // Content belongs on span anchors; anything stored on covered
        // coordinates is blanked with a warning.
        for span in &t.spans {
            for r in span.row..span.row + span.row_span {
                for c in span.col..span.col + span.col_span {
                    if (r, c) == (span.row, span.col) {
                        continue;
                    }
                    if r < grid.len() && c < n_cols && !grid[r][c].is_empty() {
                        warnings.push(ParseWarning {
                            context: format!("table {}", t.table_id),
                            detail: format!(
                                "blanked span-covered content at ({r},{c})"
                            ),
                        });
                        grid[r][c].clear();
                    }
                }
            }
        }
        tables.push(Table {
            doc_id: parsed.doc_id.clone(),
            table_id: t.table_id,
            caption: t.caption,
            grid: make_cell_grid(grid),
            spans: t.spans,
            category: TableCategory::default(),
            position: t.position.unwrap_or(default_position).min(default_position),
        });
    }

    Ok(ParsedDocument {
        document: Document {
            doc_id: parsed.doc_id,
            title: parsed.title,
            passages,
            tables,
        },
        warnings,
    })
}

/// Serialize a document back to the interchange schema.
pub fn to_grid_json(doc: &Document) -> serde_json::Value {
    serde_json::json!({
        "doc_id": doc.doc_id,
        "title": doc.title,
        "passages": doc.passages.iter().map(|p| serde_json::json!({
            "passage_id": p.passage_id,
            "text": p.text,
        })).collect::<Vec<_>>(),
        "tables": doc.tables.iter().map(|t| serde_json::json!({
            "table_id": t.table_id,
            "caption": t.caption,
            "grid": t.grid.iter().map(|row| {
                row.iter().map(|c| c.content.clone()).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "spans": t.spans,
            "position": t.position,
        })).collect::<Vec<_>>(),
    })
}
