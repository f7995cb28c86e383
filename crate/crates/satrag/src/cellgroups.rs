//! Table decomposition into cell groups.
//!
//! A cell group is one data cell packaged with everything needed to read it
//! out of context: the document's global metadata, the table caption, and
//! the cell's full header path (column headers outermost-first, then row
//! headers outermost-first), with merged-cell parents resolved to their
//! anchor labels.

use crate::ids::cell_id;
use crate::ingest::{Document, HeaderClassification, HeaderType, Table};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CellGroupError {
    #[error("coordinate ({0}, {1}) is not a data cell")]
    NotADataCell(usize, usize),
}

/// Default character budget for the context snippet.
pub const DEFAULT_SNIPPET_BUDGET: usize = 512;

/// Global document metadata carried by every cell group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMetadata {
    pub doc_id: String,
    pub title: String,
    /// Central subject of the document; may be empty until entity
    /// enrichment has run.
    pub entity: String,
    /// Leading passage excerpt, truncated to the configured budget.
    pub context_snippet: String,
}

/// One element of a header path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderPathElement {
    pub label: String,
    pub header_type: HeaderType,
    pub tier: usize,
    /// Source coordinate of the header cell this label was read from.
    pub index: (usize, usize),
}

/// A decomposed cell: value plus all its context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGroup {
    pub cell_id: String,
    /// Raw cell content, untouched.
    pub value: String,
    pub doc_meta: DocumentMetadata,
    pub table_caption: String,
    /// Column-header elements by ascending tier, then row-header elements
    /// by ascending tier.
    pub header_path: Vec<HeaderPathElement>,
    pub coordinate: (usize, usize),
}

/// Extract a document's global metadata.
///
/// `entity` comes from the corpus annotation when one exists (the entity
/// enrichment step fills it in for un-annotated corpora); the context
/// snippet is the first passage truncated to `snippet_budget` characters.
pub fn extract_global_metadata(
    doc: &Document,
    entity: Option<&str>,
    snippet_budget: usize,
) -> DocumentMetadata {
    let snippet = doc
        .passages
        .first()
        .map(|p| truncate_chars(&p.text, snippet_budget))
        .unwrap_or_default();
    DocumentMetadata {
        doc_id: doc.doc_id.clone(),
        title: doc.title.clone(),
        entity: entity.unwrap_or("").to_string(),
        context_snippet: snippet,
    }
}

fn truncate_chars(text: &str, budget: usize) -> String {
    if text.chars().count() <= budget {
        return text.to_string();
    }
    text.chars().take(budget).collect()
}

/// The header path of a data cell: column tiers ascending, then row tiers
/// ascending; merged headers resolve to their anchor's label; empty header
/// labels contribute nothing.
pub fn header_path(
    table: &Table,
    classification: &HeaderClassification,
    coordinate: (usize, usize),
) -> Result<Vec<HeaderPathElement>, CellGroupError> {
    let (row, col) = coordinate;
    if row >= table.n_rows() || col >= table.n_cols() {
        return Err(CellGroupError::NotADataCell(row, col));
    }
    if classification
        .annotations
        .iter()
        .any(|a| a.row == row && a.col == col)
    {
        return Err(CellGroupError::NotADataCell(row, col));
    }

    let mut elements = Vec::new();
    let mut column_anns: Vec<_> = classification
        .annotations
        .iter()
        .filter(|a| a.header_type == HeaderType::ColumnHeader && a.col == col)
        .collect();
    column_anns.sort_by_key(|a| a.tier);
    for a in column_anns {
        let label = table.effective_content(a.row, a.col).trim().to_string();
        if !label.is_empty() {
            elements.push(HeaderPathElement {
                label,
                header_type: HeaderType::ColumnHeader,
                tier: a.tier,
                index: (a.row, a.col),
            });
        }
    }
    let mut row_anns: Vec<_> = classification
        .annotations
        .iter()
        .filter(|a| a.header_type == HeaderType::RowHeader && a.row == row)
        .collect();
    row_anns.sort_by_key(|a| a.tier);
    for a in row_anns {
        let label = table.effective_content(a.row, a.col).trim().to_string();
        if !label.is_empty() {
            elements.push(HeaderPathElement {
                label,
                header_type: HeaderType::RowHeader,
                tier: a.tier,
                index: (a.row, a.col),
            });
        }
    }
    Ok(elements)
}

/// Decompose a classified table: exactly one cell group per non-header,
/// non-empty data cell.
pub fn decompose_table(
    table: &Table,
    classification: &HeaderClassification,
    doc_meta: &DocumentMetadata,
) -> Vec<CellGroup> {
    let mut groups = Vec::new();
    for row in 0..table.n_rows() {
        for col in 0..table.n_cols() {
            let cell = &table.grid[row][col];
            if cell.content.trim().is_empty() {
                continue;
            }
            let Ok(path) = header_path(table, classification, (row, col)) else {
                continue; // header coordinate
            };
            groups.push(CellGroup {
                cell_id: cell_id(&table.doc_id, &table.table_id, row, col),
                value: cell.content.clone(),
                doc_meta: doc_meta.clone(),
                table_caption: table.caption.clone(),
                header_path: path,
                coordinate: (row, col),
            });
        }
    }
    groups
}
